"""Brute-force k-nearest-neighbour classification.

Neighbours are the ``k`` training points with the smallest Euclidean
distance; among equidistant candidates at the boundary the lower training
index wins.  A vote tie is broken uniformly at random, using a generator
derived from ``(seed, query_index)`` so results do not depend on the order
or chunking in which queries are processed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ParameterError

__all__ = [
    "LabeledPoints",
    "Prediction",
    "squared_distances",
    "neighbor_mask",
    "neighbor_indices",
    "query_rng",
    "classify",
    "classify_batch",
    "predict",
    "predict_for_ks",
]

_CHUNK = 1024


@dataclass(frozen=True)
class LabeledPoints:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        lab = np.asarray(self.labels).reshape(-1)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ParameterError("need at least one training point")
        if lab.shape[0] != pts.shape[0]:
            raise ParameterError("points and labels differ in length")
        if not np.issubdtype(lab.dtype, np.integer):
            if not np.all(lab == np.round(lab)):
                raise ParameterError("labels must be integers")
            lab = lab.astype(np.int64)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class Prediction:
    label: int
    tied_labels: frozenset
    votes: dict = field(default_factory=dict)


def squared_distances(train_points, queries):
    """``(q, n)`` matrix of squared Euclidean distances."""
    if train_points.shape[1] == 1:
        diff = queries[:, :1] - train_points[:, 0][None, :]
        return diff * diff
    return cdist(queries, train_points, metric="sqeuclidean")


def neighbor_mask(dist, k):
    """Boolean mask selecting the ``k`` nearest columns of each row of ``dist``.

    Ties at the ``k``-th distance are resolved in favour of lower column index.
    """
    n = dist.shape[1]
    if k == n:
        return np.ones(dist.shape, dtype=bool)
    kth = np.partition(dist, k - 1, axis=1)[:, k - 1][:, None]
    less = dist < kth
    eq = dist == kth
    room = k - less.sum(axis=1)
    mask = less | eq
    # only rows with more boundary ties than free slots need trimming
    crowded = np.flatnonzero(eq.sum(axis=1) > room)
    if crowded.size:
        sub = eq[crowded]
        keep = sub & (np.cumsum(sub, axis=1) <= room[crowded, None])
        mask[crowded] = less[crowded] | keep
    return mask


def neighbor_indices(train: LabeledPoints, queries, k):
    """Indices of the ``k`` nearest neighbours, ordered by (distance, index)."""
    Q = _check_queries(train, queries)
    _check_k(train, k)
    dist = squared_distances(train.points, Q)
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def query_rng(seed, query_index):
    """Generator used to break a vote tie for one query."""
    return np.random.default_rng([int(seed), int(query_index)])


def _check_k(train, k):
    if int(k) != k or not 1 <= k <= len(train):
        raise ParameterError(f"k must be in [1, {len(train)}], got {k}")


def _check_queries(train, queries):
    Q = np.atleast_1d(np.asarray(queries, dtype=np.float64))
    if Q.ndim == 1:
        # 1-D input: a column of scalar queries for 1-D data, else one point
        Q = Q[:, None] if train.dim == 1 else Q[None, :]
    if Q.ndim != 2 or Q.shape[1] != train.dim:
        raise ParameterError(
            f"query dimension {Q.shape[-1]} does not match training dimension {train.dim}"
        )
    return Q


class _Voter:
    def __init__(self, train: LabeledPoints):
        self.train = train
        self.classes, inverse = np.unique(train.labels, return_inverse=True)
        self.onehot = np.zeros((len(train), self.classes.size))
        self.onehot[np.arange(len(train)), inverse] = 1.0

    def counts(self, mask):
        return (mask @ self.onehot).astype(np.int64)

    def decide(self, counts, dist, mask, seed, offset):
        """Winning label per row plus the tie mask over classes.

        Tied classes are listed in the order their nearest selected member
        appears (by distance, then index) before one is drawn, so the outcome
        does not depend on how the classes happen to be numbered.
        """
        top = counts.max(axis=1, keepdims=True)
        tied = counts == top
        winner = self.classes[np.argmax(counts, axis=1)]
        for row in np.flatnonzero(tied.sum(axis=1) > 1):
            chosen = np.flatnonzero(mask[row])
            chosen = chosen[np.lexsort((chosen, dist[row, chosen]))]
            tied_classes = set(self.classes[tied[row]].tolist())
            options = [c for c in dict.fromkeys(self.train.labels[chosen].tolist()) if c in tied_classes]
            pick = query_rng(seed, offset + row).integers(len(options))
            winner[row] = options[pick]
        return winner, tied


def _chunks(total):
    for start in range(0, total, _CHUNK):
        yield start, min(start + _CHUNK, total)


def predict_for_ks(train: LabeledPoints, queries, ks, seed=0):
    """Predicted labels for several ``k`` at once, sharing the distance computation."""
    Q = _check_queries(train, queries)
    ks = [int(k) for k in ks]
    for k in ks:
        _check_k(train, k)
    voter = _Voter(train)
    out = {k: np.empty(Q.shape[0], dtype=train.labels.dtype) for k in ks}
    for start, stop in _chunks(Q.shape[0]):
        dist = squared_distances(train.points, Q[start:stop])
        for k in ks:
            mask = neighbor_mask(dist, k)
            out[k][start:stop] = voter.decide(voter.counts(mask), dist, mask, seed, start)[0]
    return out


def predict(train: LabeledPoints, queries, k, seed=0) -> np.ndarray:
    return predict_for_ks(train, queries, [k], seed)[int(k)]


def classify_batch(train: LabeledPoints, queries, k, seed=0) -> list:
    """Full :class:`Prediction` records, query ``i`` drawing ties from ``query_rng(seed, i)``."""
    Q = _check_queries(train, queries)
    _check_k(train, k)
    voter = _Voter(train)
    result = []
    for start, stop in _chunks(Q.shape[0]):
        dist = squared_distances(train.points, Q[start:stop])
        mask = neighbor_mask(dist, k)
        counts = voter.counts(mask)
        winner, tied = voter.decide(counts, dist, mask, seed, start)
        for row in range(stop - start):
            result.append(
                Prediction(
                    label=int(winner[row]),
                    tied_labels=frozenset(int(c) for c in voter.classes[tied[row]]),
                    votes={int(c): int(v) for c, v in zip(voter.classes, counts[row])},
                )
            )
    return result


def classify(train: LabeledPoints, query, k, rng=None) -> Prediction:
    """Classify one point; ``rng`` (a Generator or seed) breaks vote ties."""
    Q = _check_queries(train, query)
    if Q.shape[0] != 1:
        raise ParameterError("classify takes a single query point")
    _check_k(train, k)
    voter = _Voter(train)
    dist = squared_distances(train.points, Q)
    mask = neighbor_mask(dist, k)
    counts = voter.counts(mask)
    if rng is None or isinstance(rng, np.random.Generator):
        gen = rng if rng is not None else np.random.default_rng()
    else:
        gen = np.random.default_rng(rng)
    top = counts[0] == counts[0].max()
    if top.sum() > 1:
        chosen = np.flatnonzero(mask[0])
        chosen = chosen[np.lexsort((chosen, dist[0, chosen]))]
        tied_classes = set(voter.classes[top].tolist())
        options = [c for c in dict.fromkeys(train.labels[chosen].tolist()) if c in tied_classes]
        label = options[gen.integers(len(options))]
    else:
        label = voter.classes[top][0]
    return Prediction(
        label=int(label),
        tied_labels=frozenset(int(c) for c in voter.classes[top]),
        votes={int(c): int(v) for c, v in zip(voter.classes, counts[0])},
    )
