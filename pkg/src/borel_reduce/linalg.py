"""Square-matrix tools for the preprocessing step.

Random orthogonal matrices, special-orthogonal correction, permutation
matrices built from a column ranking, and a Jacobi-rotation PCA used as a
baseline reducer.  Data rows are treated as row vectors, so a matrix ``Q``
acts on a data matrix ``X`` as ``X @ Q``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import knn
from .errors import ParameterError, SingularMatrixError
from .seeding import split_indices, substream

__all__ = [
    "ColumnRanking",
    "PcaModel",
    "gram_schmidt",
    "random_orthogonal",
    "force_special",
    "det_lu",
    "is_orthogonal",
    "apply_matrix",
    "rank_columns",
    "permutation_from_ranking",
    "jacobi_eigh",
    "pca_fit",
    "pca_project",
    "pca_reconstruct",
]

PIVOT_TOL = 1e-10


def _square(m):
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError("matrix entries must be finite")
    return a


def gram_schmidt(m) -> np.ndarray:
    """Orthonormalize the columns of ``m`` left to right.

    Each column is projected out against the previous ones twice, which keeps
    the result orthogonal to working precision even for ill-conditioned input.
    """
    a = _square(m)
    n = a.shape[0]
    q = np.zeros_like(a)
    for j in range(n):
        v = a[:, j].copy()
        for _ in range(2):
            basis = q[:, :j]
            v -= basis @ (basis.T @ v)
        norm = np.linalg.norm(v)
        if norm < PIVOT_TOL:
            raise SingularMatrixError(f"column {j} is (nearly) dependent on earlier columns")
        q[:, j] = v / norm
    return q


def random_orthogonal(n, seed=0) -> np.ndarray:
    """Haar-random element of O(n): Gram-Schmidt applied to a Gaussian matrix."""
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    for attempt in range(100):
        draw = substream(seed, attempt).standard_normal((n, n))
        try:
            return gram_schmidt(draw)
        except SingularMatrixError:
            continue
    raise SingularMatrixError("could not draw an invertible matrix")  # pragma: no cover


def is_orthogonal(m, tol=1e-10) -> bool:
    if tol <= 0:
        raise ParameterError("tol must be positive")
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    eye = np.eye(a.shape[0])
    return bool(
        np.max(np.abs(a.T @ a - eye)) <= tol and np.max(np.abs(a @ a.T - eye)) <= tol
    )


def force_special(q, tol=1e-8) -> np.ndarray:
    """Negate the first row of an orthogonal matrix whose determinant is -1."""
    a = _square(q)
    if not is_orthogonal(a, tol):
        raise ParameterError("force_special expects an orthogonal matrix")
    if np.linalg.det(a) < 0:
        a[0] = -a[0]
    return a


def det_lu(m) -> float:
    """Determinant by LU factorisation with partial pivoting."""
    a = _square(m)
    n = a.shape[0]
    det = 1.0
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if a[pivot, col] == 0.0:
            return 0.0
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            det = -det
        det *= a[col, col]
        factors = a[col + 1 :, col] / a[col, col]
        a[col + 1 :, col:] -= np.outer(factors, a[col, col:])
    return float(det)


def apply_matrix(rows, q) -> np.ndarray:
    """Right-multiply every data row by ``q``."""
    X = np.asarray(rows, dtype=np.float64)
    Q = np.asarray(q, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if Q.ndim != 2 or X.shape[1] != Q.shape[0]:
        raise ParameterError(
            f"cannot multiply rows of width {X.shape[1]} by a {Q.shape} matrix"
        )
    return X @ Q


@dataclass(frozen=True)
class ColumnRanking:
    """Single-column predictive accuracy per feature and the induced order.

    ``order[0]`` is the index of the best column.  ``degenerate`` is set when
    the scores carry no information (fewer than two classes were present).
    """

    scores: tuple
    order: tuple
    degenerate: bool = False

    @classmethod
    def from_scores(cls, scores, degenerate=False):
        scores = tuple(float(s) for s in scores)
        if any(not 0.0 <= s <= 1.0 for s in scores):
            raise ParameterError("scores must lie in [0, 1]")
        order = tuple(sorted(range(len(scores)), key=lambda j: (-scores[j], j)))
        return cls(scores, order, degenerate)


def rank_columns(data, k, trials=5, seed=0, split_fraction=0.7) -> ColumnRanking:
    """Score every column by the kNN accuracy it achieves on its own.

    ``data`` needs ``features`` and ``labels`` attributes.  Each of the
    ``trials`` random splits is shared by all columns.
    """
    if k < 1 or trials < 1:
        raise ParameterError("k and trials must be >= 1")
    X = np.asarray(data.features, dtype=np.float64)
    y = np.asarray(data.labels)
    n_cols = X.shape[1]
    if np.unique(y).size < 2:
        warnings.warn("ranking columns of a single-class dataset is meaningless", stacklevel=2)
        return ColumnRanking.from_scores([1.0] * n_cols, degenerate=True)
    correct = np.zeros(n_cols)
    total = 0
    for t in range(trials):
        rng = substream(seed, t)
        train, test = split_indices(X.shape[0], split_fraction, rng)
        kk = min(int(k), train.size)
        total += test.size
        for j in range(n_cols):
            points = knn.LabeledPoints(X[train, j : j + 1], y[train])
            pred = knn.predict(points, X[test, j : j + 1], kk, seed=int(rng.integers(2**63)))
            correct[j] += np.count_nonzero(pred == y[test])
    return ColumnRanking.from_scores(correct / total)


def permutation_from_ranking(ranking) -> np.ndarray:
    """Matrix ``P`` with ``(X @ P)[:, r] == X[:, order[r]]``.

    Accepts a :class:`ColumnRanking` or a plain order sequence.
    """
    order = ranking.order if isinstance(ranking, ColumnRanking) else tuple(ranking)
    n = len(order)
    if sorted(order) != list(range(n)):
        raise ParameterError("ranking order must be a permutation")
    p = np.zeros((n, n))
    p[list(order), list(range(n))] = 1.0
    return p


def jacobi_eigh(s, tol=1e-11, max_sweeps=100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Stops once the largest off-diagonal magnitude is at most
    ``tol * max(1, max|s|)``.  Returns ``(eigenvalues, eigenvectors)`` with
    eigenvectors in columns, unsorted.
    """
    a = _square(s)
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ParameterError("jacobi_eigh expects a symmetric matrix")
    a = (a + a.T) / 2
    n = a.shape[0]
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.abs(a).max()) if a.size else 1.0)
    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diag(a)))
        if n < 2 or off.max() <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= threshold * 1e-3:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                sn = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - sn * col_q
                a[:, q] = sn * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - sn * row_q
                a[q, :] = sn * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    return np.diag(a).copy(), v


@dataclass(frozen=True)
class PcaModel:
    means: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray


def pca_fit(features) -> PcaModel:
    """Principal axes of ``features`` from the sample covariance matrix."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ParameterError("PCA needs a 2-D array with at least two rows")
    means = X.mean(axis=0)
    centered = X - means
    cov = centered.T @ centered / (X.shape[0] - 1)
    values, vectors = jacobi_eigh(cov)
    order = np.argsort(-values, kind="stable")
    values = np.maximum(values[order], 0.0)
    vectors = vectors[:, order]
    # sign convention: the largest-magnitude entry of each component is positive
    lead = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
    vectors = vectors * np.where(lead < 0, -1.0, 1.0)
    return PcaModel(means, vectors, values)


def pca_project(model: PcaModel, features, m) -> np.ndarray:
    n = model.components.shape[0]
    if not 1 <= m <= n:
        raise ParameterError(f"m must be in [1, {n}], got {m}")
    X = np.asarray(features, dtype=np.float64)
    return (X - model.means) @ model.components[:, :m]


def pca_reconstruct(model: PcaModel, scores) -> np.ndarray:
    """Map projected scores back to the original (uncentered) coordinates."""
    S = np.asarray(scores, dtype=np.float64)
    m = S.shape[1]
    return S @ model.components[:, :m].T + model.means
