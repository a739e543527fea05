"""Evaluation harness: normalize, rotate, reduce, classify, repeat.

One trial draws a seeded train/test split, fits min-max scaling on the
training rows, optionally multiplies both splits by a square matrix (and
re-fits the scaling on the transformed training rows), reduces the
dimension and scores kNN on the test rows.  Sweeps evaluate several ``k``
or bases on the very same splits so the settings are compared pairwise.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from functools import partial
from types import SimpleNamespace

import numpy as np

from . import codec, knn, linalg, preprocess
from .data import Dataset, StepSpec, synth_two_class
from .errors import DataError, ParameterError
from .seeding import splitmix64, split_indices, substream, trial_seed

__all__ = [
    "MATRIX_KINDS",
    "METHODS",
    "PipelineConfig",
    "TrialReport",
    "Aggregate",
    "SweepSummary",
    "ConsistencyRow",
    "ConsistencyTable",
    "aggregate",
    "summarize",
    "run_trial",
    "run_trials",
    "sweep_k",
    "sweep_base",
    "compare_matrices",
    "consistency_experiment",
    "k_rule",
    "default_workers",
]

MATRIX_KINDS = ("none", "identity", "permutation", "random_o", "random_so", "explicit")
METHODS = ("borel", "pca", "none")
MAX_REDRAWS = 10


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of one evaluation arm.

    ``target_dims=None`` keeps every column.  ``method`` picks the reducer:
    ``borel`` (digit interleaving), ``pca`` or ``none``.  For the random
    matrix kinds, the best of ``n_random`` candidates is chosen inside each
    trial using ``selection_trials`` validation splits of the training rows.
    ``refit_k`` (a sequence of candidate ``k``) re-selects ``k`` the same way.
    """

    target_dims: int | None = 1
    base: int = 3
    precision: int = 8
    k: int = 11
    matrix_kind: str = "identity"
    grouping_mode: str = "strided"
    split_fraction: float = 0.7
    trials: int = 100
    master_seed: int = 0
    method: str = "borel"
    normalize: bool = True
    n_random: int = 100
    rank_trials: int = 3
    selection_trials: int = 1
    refit_k: tuple | None = None
    explicit_matrix: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 < self.split_fraction < 1.0:
            raise ParameterError("split_fraction must be in (0, 1)")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.target_dims is not None and self.target_dims < 1:
            raise ParameterError("target_dims must be >= 1")
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        if self.base < 2:
            raise ParameterError("base must be >= 2")
        if self.precision < 1:
            raise ParameterError("precision must be >= 1")
        if self.matrix_kind not in MATRIX_KINDS:
            raise ParameterError(f"unknown matrix kind {self.matrix_kind!r}")
        if self.matrix_kind == "explicit" and self.explicit_matrix is None:
            raise ParameterError("matrix_kind 'explicit' needs explicit_matrix")
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}")
        if self.method == "borel" and not self.normalize:
            raise ParameterError("the digit-interleaving reducer needs normalized input")
        if self.grouping_mode not in codec.GROUPING_MODES:
            raise ParameterError(f"unknown grouping mode {self.grouping_mode!r}")
        if self.n_random < 1 or self.rank_trials < 1 or self.selection_trials < 1:
            raise ParameterError("n_random, rank_trials and selection_trials must be >= 1")

    def to_dict(self):
        d = asdict(self)
        if d["explicit_matrix"] is not None:
            d["explicit_matrix"] = [list(r) for r in d["explicit_matrix"]]
        if d["refit_k"] is not None:
            d["refit_k"] = list(d["refit_k"])
        return d


@dataclass(frozen=True)
class TrialReport:
    trial: int
    setting: object
    correct: int
    total: int
    k: int
    base: int
    matrix_kind: str
    seed: int
    n_train: int
    n_test: int
    redraws: int = 0
    selected: int | None = None
    predictions: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def accuracy(self):
        return self.correct / self.total

    def to_dict(self):
        d = {
            "trial": self.trial,
            "setting": self.setting,
            "accuracy": self.accuracy,
            "correct": self.correct,
            "total": self.total,
            "k": self.k,
            "base": self.base,
            "matrix_kind": self.matrix_kind,
            "seed": self.seed,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "redraws": self.redraws,
        }
        if self.selected is not None:
            d["selected"] = self.selected
        return d

    @classmethod
    def from_dict(cls, d):
        fields_ = {k: v for k, v in d.items() if k != "accuracy"}
        report = cls(**fields_)
        if "accuracy" in d and d["accuracy"] != report.accuracy:
            raise DataError(f"trial {report.trial}: accuracy does not equal correct/total")
        return report


@dataclass(frozen=True)
class Aggregate:
    setting: object
    n: int
    mean: float
    std: float
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        agg = cls(**d)
        if not agg.min <= agg.q1 <= agg.median <= agg.q3 <= agg.max:
            raise DataError(f"setting {agg.setting!r}: quartiles out of order")
        return agg


def aggregate(setting, accuracies) -> Aggregate:
    """Summary statistics; the mean is the exact mean of the values, rounded once."""
    acc = np.asarray(list(accuracies), dtype=np.float64)
    if acc.size == 0:
        raise ParameterError(f"no trials for setting {setting!r}")
    q1, median, q3 = np.percentile(acc, [25, 50, 75])
    std = float(np.std(acc, ddof=1)) if acc.size > 1 else 0.0
    return Aggregate(
        setting=setting,
        n=int(acc.size),
        mean=float(sum(map(Fraction, acc.tolist()), Fraction(0)) / acc.size),
        std=std,
        min=float(acc.min()),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        max=float(acc.max()),
    )


@dataclass(frozen=True)
class SweepSummary:
    """Per-setting aggregates plus the trial reports they were computed from."""

    parameter: str
    aggregates: tuple
    reports: tuple
    best: object = None

    def aggregate_for(self, setting):
        for agg in self.aggregates:
            if agg.setting == setting:
                return agg
        raise KeyError(setting)

    def means(self):
        return {a.setting: a.mean for a in self.aggregates}


def _exact_mean(reports):
    return sum((Fraction(r.correct, r.total) for r in reports), Fraction(0)) / len(reports)


def summarize(parameter, reports, settings=None, pick_best=True) -> SweepSummary:
    """Group reports by ``setting`` (in ``settings`` order) and aggregate.

    ``best`` is the smallest numeric setting with the highest exact mean.
    """
    reports = tuple(reports)
    if settings is None:
        settings = list(dict.fromkeys(r.setting for r in reports))
    groups = {s: [r for r in reports if r.setting == s] for s in settings}
    aggs = tuple(aggregate(s, [r.accuracy for r in groups[s]]) for s in settings)
    best = None
    if pick_best and settings:
        exact = {s: _exact_mean(groups[s]) for s in settings}
        top = max(exact.values())
        best = min(s for s in settings if exact[s] == top)
    return SweepSummary(parameter, aggs, reports, best)


def default_workers():
    try:
        return max(1, int(os.environ.get("BOREL_REDUCE_WORKERS", "1")))
    except ValueError:
        raise ParameterError("BOREL_REDUCE_WORKERS must be an integer") from None


def _map(fn, items, workers):
    workers = default_workers() if workers is None else max(1, int(workers))
    items = list(items)
    if workers == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# --- single trial ------------------------------------------------------------


def _candidate_matrices(cfg, n):
    """The shared pool of random candidates for the random matrix kinds."""
    if cfg.matrix_kind not in ("random_o", "random_so"):
        return None
    pool = []
    for j in range(cfg.n_random):
        q = linalg.random_orthogonal(n, seed=splitmix64(splitmix64(cfg.master_seed) + j + 1))
        pool.append(linalg.force_special(q) if cfg.matrix_kind == "random_so" else q)
    return pool


def _transform(train_X, test_X, matrix, cfg, base):
    """Matrix step, re-normalization and reduction for already-scaled inputs."""
    n = train_X.shape[1]
    if matrix is not None:
        train_X = linalg.apply_matrix(train_X, matrix)
        test_X = linalg.apply_matrix(test_X, matrix)
        if cfg.normalize:
            model = preprocess.fit(train_X)
            train_X = preprocess.apply(model, train_X)
            test_X = preprocess.apply(model, test_X)
    m = n if cfg.target_dims is None else cfg.target_dims
    if m > n:
        raise ParameterError(f"target_dims={m} exceeds the {n} available columns")
    if cfg.method == "borel":
        plan = codec.make_plan(n, m, base, cfg.precision, cfg.grouping_mode)
        return codec.reduce_matrix(train_X, plan), codec.reduce_matrix(test_X, plan)
    if cfg.method == "pca" and cfg.target_dims is not None:
        model = linalg.pca_fit(train_X)
        return linalg.pca_project(model, train_X, m), linalg.pca_project(model, test_X, m)
    return train_X, test_X


def _inner_accuracy(X, y, matrix, cfg, k, base, seed):
    """Mean validation accuracy over ``cfg.selection_trials`` splits of the training rows."""
    correct = total = 0
    for s in range(cfg.selection_trials):
        tr, va = split_indices(X.shape[0], cfg.split_fraction, substream(seed, s))
        a, b = _transform(X[tr], X[va], matrix, cfg, base)
        pred = knn.predict(knn.LabeledPoints(a, y[tr]), b, min(k, tr.size), seed=seed)
        correct += int(np.count_nonzero(pred == y[va]))
        total += va.size
    return correct / total


def _choose_matrix(cfg, X, y, seed, candidates):
    n = X.shape[1]
    kind = cfg.matrix_kind
    if kind == "none":
        return None, None
    if kind == "identity":
        return np.eye(n), None
    if kind == "explicit":
        q = np.asarray(cfg.explicit_matrix, dtype=np.float64)
        if q.shape != (n, n):
            raise ParameterError(f"explicit matrix must be {n}x{n}, got {q.shape}")
        return q, None
    if kind == "permutation":
        view = SimpleNamespace(features=X, labels=y)
        ranking = linalg.rank_columns(view, cfg.k, cfg.rank_trials, seed, cfg.split_fraction)
        return linalg.permutation_from_ranking(ranking), None
    scores = [_inner_accuracy(X, y, q, cfg, cfg.k, cfg.base, seed) for q in candidates]
    best = int(np.argmax(scores))  # first maximum: lowest candidate index
    return candidates[best], best


def _split_for_trial(data, cfg, trial_index):
    base_seed = trial_seed(cfg.master_seed, trial_index)
    for redraw in range(MAX_REDRAWS + 1):
        seed = base_seed if redraw == 0 else splitmix64(base_seed + redraw)
        train, test = split_indices(data.n_rows, cfg.split_fraction, substream(seed, 0))
        if np.unique(data.labels[train]).size >= 2:
            return seed, redraw, train, test
    raise DataError(f"trial {trial_index}: training split has a single class after {MAX_REDRAWS} redraws")


def _trial_job(data, cfg, ks, bases, candidates, keep_predictions, trial_index):
    seed, redraws, train, test = _split_for_trial(data, cfg, trial_index)
    X_train, X_test = data.features[train], data.features[test]
    y_train, y_test = data.labels[train], data.labels[test]
    if cfg.normalize:
        model = preprocess.fit(X_train)
        X_train, X_test = preprocess.apply(model, X_train), preprocess.apply(model, X_test)

    matrix, selected = _choose_matrix(cfg, X_train, y_train, int(substream(seed, 2).integers(2**63)), candidates)
    if cfg.refit_k:
        k_seed = int(substream(seed, 3).integers(2**63))
        inner = {k: _inner_accuracy(X_train, y_train, matrix, cfg, k, cfg.base, k_seed) for k in cfg.refit_k}
        ks = [max(inner, key=lambda k: (inner[k], -k))]
    knn_seed = int(substream(seed, 1).integers(2**63))

    reports = []
    for base in bases:
        a, b = _transform(X_train, X_test, matrix, cfg, base)
        points = knn.LabeledPoints(a, y_train)
        ks_ok = [k for k in ks if k <= train.size]
        if len(ks_ok) != len(ks):
            raise ParameterError(f"k must not exceed the {train.size} training rows")
        preds = knn.predict_for_ks(points, b, ks_ok, seed=knn_seed)
        for k in ks_ok:
            reports.append(
                TrialReport(
                    trial=trial_index,
                    setting=None,
                    correct=int(np.count_nonzero(preds[k] == y_test)),
                    total=int(test.size),
                    k=int(k),
                    base=int(base),
                    matrix_kind=cfg.matrix_kind,
                    seed=int(seed),
                    n_train=int(train.size),
                    n_test=int(test.size),
                    redraws=redraws,
                    selected=selected,
                    predictions=tuple(int(p) for p in preds[k]) if keep_predictions else None,
                )
            )
    return reports


def _check_data(data):
    if np.unique(data.labels).size < 2:
        raise DataError("the dataset needs at least two classes")


def run_trial(data: Dataset, cfg: PipelineConfig, trial_index: int, keep_predictions=False) -> TrialReport:
    _check_data(data)
    candidates = _candidate_matrices(cfg, data.n_features)
    (report,) = _trial_job(data, cfg, [cfg.k], [cfg.base], candidates, keep_predictions, trial_index)
    return replace(report, setting=report.k)


def _run(data, cfg, ks, bases, workers, keep_predictions=False):
    _check_data(data)
    candidates = _candidate_matrices(cfg, data.n_features)
    job = partial(_trial_job, data, cfg, list(ks), list(bases), candidates, keep_predictions)
    return [r for batch in _map(job, range(cfg.trials), workers) for r in batch]


def run_trials(data, cfg, workers=None, keep_predictions=False) -> SweepSummary:
    """``cfg.trials`` trials at the configured ``k`` and base."""
    reports = [replace(r, setting=r.k) for r in _run(data, cfg, [cfg.k], [cfg.base], workers, keep_predictions)]
    return summarize("k", reports, pick_best=False)


def sweep_k(data, cfg, k_range, workers=None) -> SweepSummary:
    ks = sorted({int(k) for k in k_range})
    if not ks:
        raise ParameterError("k_range is empty")
    if cfg.refit_k:
        raise ParameterError("refit_k and sweep_k are mutually exclusive")
    reports = [replace(r, setting=r.k) for r in _run(data, cfg, ks, [cfg.base], workers)]
    return summarize("k", reports, ks)


def sweep_base(data, cfg, base_range, workers=None) -> SweepSummary:
    bases = sorted({int(b) for b in base_range})
    if not bases or bases[0] < 2:
        raise ParameterError("bases must be integers >= 2")
    reports = [replace(r, setting=r.base) for r in _run(data, cfg, [cfg.k], bases, workers)]
    return summarize("base", reports, bases)


def compare_matrices(data, cfg, n_random=None, kinds=("identity", "permutation", "random_so", "random_o"), workers=None) -> SweepSummary:
    """Evaluate each matrix kind on the same splits.

    Random kinds report the test accuracy of whichever of the ``n_random``
    candidates scored best on validation splits of that trial's training rows.
    """
    if n_random is not None:
        if n_random < 1:
            raise ParameterError("n_random must be >= 1")
        cfg = replace(cfg, n_random=int(n_random))
    reports = []
    for kind in kinds:
        arm = replace(cfg, matrix_kind=kind)
        reports += [replace(r, setting=kind) for r in _run(data, arm, [cfg.k], [cfg.base], workers)]
    return summarize("matrix", reports, list(kinds), pick_best=False)


# --- consistency ---------------------------------------------------------------


def k_rule(name):
    """``n -> k`` for the named rule (``sqrt`` or ``log``); callables pass through."""
    if callable(name):
        return name
    if name == "sqrt":
        return lambda n: max(1, math.ceil(math.sqrt(n)))
    if name == "log":
        return lambda n: max(1, math.ceil(math.log(n)))
    raise ParameterError(f"unknown k rule {name!r}")


@dataclass(frozen=True)
class ConsistencyRow:
    n: int
    k: int
    errors: tuple

    @property
    def mean_error(self):
        return math.fsum(self.errors) / len(self.errors)

    def to_dict(self):
        return {"n": self.n, "k": self.k, "mean_error": self.mean_error, "errors": list(self.errors)}


@dataclass(frozen=True)
class ConsistencyTable:
    bayes_error: float
    reduce: bool
    rows: tuple

    def row(self, n):
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)


def consistency_experiment(
    spec: StepSpec | None = None,
    n_grid=(100, 400, 1600, 4000),
    rule="sqrt",
    reduce=False,
    seed=0,
    n_test=2000,
    repetitions=10,
    base=2,
    precision=16,
) -> ConsistencyTable:
    """kNN test error against training-set size on a synthetic law.

    Each repetition fixes one test sample and draws a fresh training sample
    for every ``n``.  With ``reduce`` the data (at least two columns) is
    min-max scaled on the training rows and interleaved into one column.
    """
    if spec is None:
        spec = StepSpec(dims=2, duplicate_noise=0.05) if reduce else StepSpec()
    if reduce and spec.dims < 2:
        raise ParameterError("reduction needs a generator with at least two dimensions")
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ParameterError("n_grid must be strictly increasing")
    rule_fn = k_rule(rule)
    errors = {n: [] for n in n_grid}
    ks = {}
    for rep in range(repetitions):
        test = synth_two_class(n_test, seed=[seed, rep, 0], spec=spec)
        for n in n_grid:
            k = int(rule_fn(n))
            if not 1 <= k <= n:
                raise ParameterError(f"k rule gave k={k} for n={n}")
            ks[n] = k
            train = synth_two_class(n, seed=[seed, rep, n], spec=spec)
            a, b = train.features, test.features
            if reduce:
                model = preprocess.fit(a)
                plan = codec.make_plan(spec.dims, 1, base, precision, "strided")
                a = codec.reduce_matrix(preprocess.apply(model, a), plan)
                b = codec.reduce_matrix(preprocess.apply(model, b), plan)
            pred = knn.predict(knn.LabeledPoints(a, train.labels), b, k, seed=splitmix64(seed ^ rep ^ n))
            errors[n].append(float(np.count_nonzero(pred != test.labels)) / n_test)
    rows = tuple(ConsistencyRow(n, ks[n], tuple(errors[n])) for n in n_grid)
    return ConsistencyTable(spec.bayes_error, bool(reduce), rows)
