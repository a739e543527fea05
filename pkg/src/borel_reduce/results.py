"""Newline-delimited JSON result files.

Layout: one ``manifest`` object, then one object per record (``trial`` or
``consistency``), then a closing ``summary`` object.  Keys are sorted and
floats are written with ``repr`` precision, so identical runs produce
identical bytes and re-reading recovers every value exactly.
"""

from __future__ import annotations

import csv
import json
import os

from . import __version__
from .errors import DataError
from .pipeline import Aggregate, SweepSummary, TrialReport, aggregate, summarize

TOOL = "borel-reduce"


def make_manifest(command, config, dataset=None, master_seed=None):
    """Run provenance.  ``created`` comes from ``SOURCE_DATE_EPOCH`` (else null) to keep output reproducible."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    return {
        "type": "manifest",
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "config": config,
        "dataset": dataset,
        "master_seed": master_seed,
        "created": int(epoch) if epoch and epoch.isdigit() else None,
    }


def _line(obj):
    return json.dumps(obj, sort_keys=True, allow_nan=False) + "\n"


def summary_record(summary: SweepSummary, extra=None):
    rec = {
        "type": "summary",
        "parameter": summary.parameter,
        "best": summary.best,
        "settings": [a.to_dict() for a in summary.aggregates],
    }
    rec.update(extra or {})
    return rec


def write_sweep(path, manifest, summary: SweepSummary):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_line(manifest))
        for report in summary.reports:
            fh.write(_line({"type": "trial", **report.to_dict()}))
        fh.write(_line(summary_record(summary)))


def write_consistency(path, manifest, table):
    settings = [aggregate(row.n, row.errors).to_dict() for row in table.rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_line(manifest))
        for row in table.rows:
            fh.write(_line({"type": "consistency", **row.to_dict()}))
        fh.write(
            _line(
                {
                    "type": "summary",
                    "parameter": "n",
                    "best": None,
                    "bayes_error": table.bayes_error,
                    "reduce": table.reduce,
                    "settings": settings,
                }
            )
        )


def write_csv(path, summary: SweepSummary):
    rows = [r.to_dict() for r in summary.reports]
    columns = list(rows[0]) if rows else []
    for r in rows:
        columns += [c for c in r if c not in columns]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def read_results(path):
    """Return ``(manifest, records, summary)`` from a result file."""
    manifest, records, summary = None, [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON: {exc.msg}", line=lineno) from None
            kind = obj.get("type") if isinstance(obj, dict) else None
            if kind == "manifest":
                if manifest is not None:
                    raise DataError("more than one manifest", line=lineno)
                manifest = obj
            elif kind == "summary":
                summary = obj
            elif kind in ("trial", "consistency"):
                records.append(obj)
            else:
                raise DataError(f"unknown record type {kind!r}", line=lineno)
    if summary is None:
        raise DataError(f"{path}: no summary record")
    if not isinstance(summary.get("settings"), list):
        raise DataError(f"{path}: summary lacks a settings list")
    for s in summary["settings"]:
        Aggregate.from_dict(s)
    return manifest, records, summary


def reaggregate(records, summary):
    """Recompute the summary block from the records of a result file."""
    if records and records[0]["type"] == "consistency":
        return [aggregate(r["n"], r["errors"]).to_dict() for r in records]
    reports = [TrialReport.from_dict({k: v for k, v in r.items() if k != "type"}) for r in records]
    settings = [s["setting"] for s in summary["settings"]]
    rebuilt = summarize(summary["parameter"], reports, settings, pick_best=summary.get("best") is not None)
    return summary_record(rebuilt)["settings"]
