"""Dataset containers, file loaders and synthetic generators."""

from __future__ import annotations

import csv
import hashlib
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ParameterError

__all__ = [
    "Dataset",
    "StepSpec",
    "load_yeast",
    "load_phoneme",
    "load",
    "synth_two_class",
    "file_checksum",
    "canonical_path",
]

YEAST_FIELDS = 10
YEAST_FEATURES = ("mcg", "gvh", "alm", "mit", "erl", "pox", "vac", "nuc")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer class labels ``1..p``.

    ``class_names[i]`` names label ``i + 1``.
    """

    name: str
    features: np.ndarray
    labels: np.ndarray
    class_names: tuple
    feature_names: tuple = ()
    dropped_columns: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if X.ndim != 2 or X.shape[0] < 1:
            raise DataError("a dataset needs at least one row of features")
        if y.shape[0] != X.shape[0]:
            raise DataError("features and labels differ in length")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or infinite values")
        p = len(self.class_names)
        if y.size and (y.min() < 1 or y.max() > p):
            raise DataError(f"labels must lie in 1..{p}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return len(self.class_names)

    def subset(self, rows) -> "Dataset":
        return Dataset(
            self.name,
            self.features[rows],
            self.labels[rows],
            self.class_names,
            self.feature_names,
            self.dropped_columns,
            dict(self.metadata),
        )


class _ClassIds:
    """Assigns ids 1, 2, ... to class names in order of first appearance."""

    def __init__(self):
        self.ids = {}

    def __call__(self, name):
        if name not in self.ids:
            self.ids[name] = len(self.ids) + 1
        return self.ids[name]

    @property
    def names(self):
        return tuple(self.ids)


def file_checksum(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _float(token, line, column):
    try:
        value = float(token)
    except ValueError:
        raise DataError(f"non-numeric value {token!r}", line=line, column=column) from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {token!r}", line=line, column=column)
    return value


def load_yeast(path) -> Dataset:
    """Read the UCI yeast table: sequence name, 8 features, localisation class."""
    classes = _ClassIds()
    rows, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != YEAST_FIELDS:
                raise DataError(
                    f"expected {YEAST_FIELDS} fields, found {len(fields)}", line=lineno
                )
            rows.append([_float(tok, lineno, col) for col, tok in enumerate(fields[1:-1], 2)])
            labels.append(classes(fields[-1]))
    if not rows:
        raise DataError(f"{path}: no records found")
    return Dataset(
        name="yeast",
        features=np.array(rows),
        labels=np.array(labels),
        class_names=classes.names,
        feature_names=YEAST_FEATURES,
        dropped_columns=("sequence name (column 1)",),
        metadata={"source": str(path), "sha256": file_checksum(path)},
    )


def load_phoneme(path) -> Dataset:
    """Read the phoneme CSV: optional row id, ``x.1``..``x.256``, ``g``, optional ``speaker``."""
    classes = _ClassIds()
    rows, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip().strip('"') for h in header]
        wave = [i for i, h in enumerate(header) if h.startswith("x.")]
        if not wave or "g" not in header:
            raise DataError("missing header: need x.* waveform columns and a 'g' class column", line=1)
        target = header.index("g")
        dropped = []
        for i, h in enumerate(header):
            if i in wave or i == target:
                continue
            dropped.append(h if h else f"unnamed column {i + 1} (row id)")
        if "speaker" not in header:
            dropped.append("speaker (absent from file)")
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DataError(
                    f"expected {len(header)} fields, found {len(record)}", line=lineno
                )
            rows.append([_float(record[i], lineno, i + 1) for i in wave])
            labels.append(classes(record[target].strip().strip('"')))
    if not rows:
        raise DataError(f"{path}: no records found")
    return Dataset(
        name="phoneme",
        features=np.array(rows),
        labels=np.array(labels),
        class_names=classes.names,
        feature_names=tuple(header[i] for i in wave),
        dropped_columns=tuple(dropped),
        metadata={"source": str(path), "sha256": file_checksum(path)},
    )


@dataclass(frozen=True)
class StepSpec:
    """Two-class law on ``[0, 1]^dims`` with ``P(Y=1 | x)`` piecewise constant in ``x[0]``.

    ``cuts`` are the interior breakpoints of ``x[0]``; ``probs`` has one more
    entry than ``cuts``.  With ``duplicate_noise`` set, every extra
    coordinate is a noisy copy of ``x[0]`` (clipped to ``[0, 1]``);
    otherwise extra coordinates are independent uniforms.
    """

    cuts: tuple = (0.5,)
    probs: tuple = (0.75, 0.25)
    dims: int = 1
    duplicate_noise: float | None = None

    def __post_init__(self):
        if len(self.probs) != len(self.cuts) + 1:
            raise ParameterError("probs needs exactly one more entry than cuts")
        if any(not 0.0 <= p <= 1.0 for p in self.probs):
            raise ParameterError("conditional probabilities must lie in [0, 1]")
        if list(self.cuts) != sorted(self.cuts) or any(not 0.0 < c < 1.0 for c in self.cuts):
            raise ParameterError("cuts must be increasing and inside (0, 1)")
        if self.dims < 1:
            raise ParameterError("dims must be >= 1")

    @property
    def bayes_error(self):
        edges = (0.0, *self.cuts, 1.0)
        return math.fsum(
            (hi - lo) * min(p, 1.0 - p) for lo, hi, p in zip(edges, edges[1:], self.probs)
        )

    @property
    def marginal(self):
        """``P(Y = 1)``."""
        edges = (0.0, *self.cuts, 1.0)
        return math.fsum((hi - lo) * p for lo, hi, p in zip(edges, edges[1:], self.probs))

    def conditional(self, x0):
        return np.asarray(self.probs)[np.searchsorted(self.cuts, x0, side="right")]


def synth_two_class(n, seed=0, spec: StepSpec | None = None) -> Dataset:
    """Draw ``n`` labelled points from ``spec``; ``Y = 0, 1`` become labels 1, 2."""
    spec = spec or StepSpec()
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    rng = np.random.default_rng(seed)
    x0 = rng.random(n)
    y = (rng.random(n) < spec.conditional(x0)).astype(np.int64)
    cols = [x0]
    for _ in range(spec.dims - 1):
        if spec.duplicate_noise is None:
            cols.append(rng.random(n))
        else:
            cols.append(np.clip(x0 + rng.normal(0.0, spec.duplicate_noise, n), 0.0, 1.0))
    return Dataset(
        name="synth",
        features=np.column_stack(cols),
        labels=y + 1,
        class_names=("0", "1"),
        feature_names=tuple(f"x{i + 1}" for i in range(spec.dims)),
        metadata={"bayes_error": spec.bayes_error, "seed": seed, "spec": repr(spec)},
    )


def load(path, fmt) -> Dataset:
    if fmt == "yeast":
        return load_yeast(path)
    if fmt == "phoneme":
        return load_phoneme(path)
    raise ParameterError(f"unknown dataset format {fmt!r}")


def canonical_path(name) -> Path | None:
    """Location of a user-supplied canonical file, if one is configured or present."""
    env = os.environ.get(f"BOREL_{name.upper()}_DATA")
    if env:
        return Path(env)
    for candidate in (Path("data") / f"{name}.data", Path("data") / f"{name}.csv"):
        if candidate.exists():
            return candidate
    return None
