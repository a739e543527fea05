import math
import warnings
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borel_reduce import linalg
from borel_reduce.errors import ParameterError, SingularMatrixError
from borel_reduce.linalg import ColumnRanking

ROT45 = np.array([[1, 1], [-1, 1]]) / math.sqrt(2)


def exact_det(m):
    """Leibniz-free rational elimination, used as an independent check on small integer matrices."""
    a = [[Fraction(int(v)) for v in row] for row in m]
    n, det = len(a), Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


def max_dev_from_identity(q):
    return np.max(np.abs(q.T @ q - np.eye(q.shape[0])))


# --- Gram-Schmidt and random matrices ------------------------------------------


def test_gram_schmidt_hand_example():
    q = linalg.gram_schmidt(np.array([[1.0, 1.0], [0.0, 1.0]]))  # columns (1,0), (1,1)
    assert np.allclose(q, np.eye(2), atol=1e-15)


def test_gram_schmidt_fixed_point():
    q = linalg.random_orthogonal(6, seed=4)
    assert np.max(np.abs(linalg.gram_schmidt(q) - q)) <= 1e-12


def test_gram_schmidt_random_inputs():
    rng = np.random.default_rng(0)
    for _ in range(100):
        q = linalg.gram_schmidt(rng.standard_normal((8, 8)))
        assert max_dev_from_identity(q) <= 1e-10


def test_gram_schmidt_singular():
    with pytest.raises(SingularMatrixError):
        linalg.gram_schmidt([[1.0, 2.0], [2.0, 4.0]])


def test_gram_schmidt_rejects_non_square():
    with pytest.raises(ParameterError):
        linalg.gram_schmidt(np.ones((2, 3)))


def test_random_orthogonal_small_cases():
    assert linalg.random_orthogonal(1, seed=3)[0, 0] in (-1.0, 1.0)
    a = linalg.random_orthogonal(5, seed=42)
    b = linalg.random_orthogonal(5, seed=42)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, linalg.random_orthogonal(5, seed=43))


def test_random_orthogonal_determinants():
    for seed in range(100):
        q = linalg.random_orthogonal(8, seed=seed)
        assert linalg.is_orthogonal(q, 1e-10)
        assert abs(abs(linalg.det_lu(q)) - 1.0) <= 1e-8


def test_random_orthogonal_rejects_bad_order():
    with pytest.raises(ParameterError):
        linalg.random_orthogonal(0)


def test_random_orthogonal_hits_both_components():
    signs = {np.sign(linalg.det_lu(linalg.random_orthogonal(4, seed=s))) for s in range(20)}
    assert signs == {-1.0, 1.0}


# --- determinant oracle ---------------------------------------------------------


def test_det_lu_matches_exact_rational():
    rng = np.random.default_rng(9)
    for _ in range(50):
        n = int(rng.integers(1, 6))
        m = rng.integers(-5, 6, size=(n, n))
        assert linalg.det_lu(m) == pytest.approx(float(exact_det(m)), abs=1e-9)


# --- force_special ----------------------------------------------------------------


def test_force_special_swap():
    out = linalg.force_special([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(out, [[0.0, -1.0], [1.0, 0.0]])
    assert linalg.det_lu(out) == pytest.approx(1.0)


def test_force_special_noop():
    assert np.array_equal(linalg.force_special(ROT45), ROT45)


def test_force_special_random():
    for seed in range(100):
        q = linalg.force_special(linalg.random_orthogonal(8, seed=seed))
        assert linalg.is_orthogonal(q, 1e-10)
        assert abs(linalg.det_lu(q) - 1.0) <= 1e-8


def test_force_special_rejects_non_orthogonal():
    with pytest.raises(ParameterError):
        linalg.force_special(np.diag([2.0, 1.0]))


# --- is_orthogonal and apply_matrix -----------------------------------------------


def test_is_orthogonal_examples():
    assert linalg.is_orthogonal(np.eye(3))
    assert linalg.is_orthogonal(ROT45)
    assert linalg.det_lu(ROT45) == pytest.approx(1.0, abs=1e-15)
    assert not linalg.is_orthogonal(np.diag([2.0, 1.0]))
    assert not linalg.is_orthogonal(np.ones((2, 3)))
    with pytest.raises(ParameterError):
        linalg.is_orthogonal(np.eye(2), tol=0)


def test_worked_rotation_example():
    out = linalg.apply_matrix([0.7, 0.9], ROT45)[0]
    assert out == pytest.approx([-0.2 / math.sqrt(2), 1.6 / math.sqrt(2)], abs=1e-15)
    assert np.round(out, 3).tolist() == [-0.141, 1.131]


def test_apply_identity_and_mismatch():
    X = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(linalg.apply_matrix(X, np.eye(3)), X)
    with pytest.raises(ParameterError):
        linalg.apply_matrix(X, np.eye(2))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(1, 10), special=st.booleans())
def test_isometry_properties(seed, n, special):
    q = linalg.random_orthogonal(n, seed=seed)
    if special:
        q = linalg.force_special(q)
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal(n), rng.standard_normal(n)
    qx, qy = linalg.apply_matrix(x, q)[0], linalg.apply_matrix(y, q)[0]
    assert abs(np.linalg.norm(qx) - np.linalg.norm(x)) <= 1e-9 * (1 + np.linalg.norm(x))
    assert abs(qx @ qy - x @ y) <= 1e-9 * (1 + abs(x @ y))
    cos = x @ y / (np.linalg.norm(x) * np.linalg.norm(y))
    cos_q = qx @ qy / (np.linalg.norm(qx) * np.linalg.norm(qy))
    assert abs(cos_q - cos) <= 1e-9
    assert np.max(np.abs(q @ q.T - np.eye(n))) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(a=st.integers(0, 2**32), b=st.integers(0, 2**32))
def test_group_closure(a, b):
    p = linalg.random_orthogonal(7, seed=a) @ linalg.random_orthogonal(7, seed=b)
    assert linalg.is_orthogonal(p, 1e-8)


def test_neighbour_distances_invariant():
    rng = np.random.default_rng(2)
    for seed in range(20):
        X = rng.standard_normal((40, 5))
        q_pt = rng.standard_normal(5)
        Q = linalg.random_orthogonal(5, seed=seed)
        d0 = np.sort(((X - q_pt) ** 2).sum(axis=1))
        d1 = np.sort(((X @ Q - q_pt @ Q) ** 2).sum(axis=1))
        assert np.allclose(d0, d1, rtol=1e-9, atol=0)


# --- ranking and permutations --------------------------------------------------------


def test_ranking_order_from_scores():
    assert ColumnRanking.from_scores([0.3, 0.6, 0.5]).order == (1, 2, 0)
    assert ColumnRanking.from_scores([0.4] * 4).order == (0, 1, 2, 3)
    with pytest.raises(ParameterError):
        ColumnRanking.from_scores([1.2])


def test_rank_columns_finds_informative_column():
    rng = np.random.default_rng(5)
    y = rng.integers(1, 3, size=300)
    X = np.column_stack([y + rng.normal(0, 0.3, 300), rng.random(300)])
    ranking = linalg.rank_columns(SimpleNamespace(features=X, labels=y), k=5, trials=3, seed=1)
    assert ranking.order == (0, 1)
    assert ranking.scores[0] > 0.9 > ranking.scores[1]
    assert not ranking.degenerate


def test_rank_columns_single_class_warns():
    data = SimpleNamespace(features=np.random.default_rng(0).random((10, 3)), labels=np.ones(10, int))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ranking = linalg.rank_columns(data, k=3)
    assert ranking.degenerate and caught
    assert ranking.order == (0, 1, 2)


def test_rank_columns_deterministic():
    rng = np.random.default_rng(6)
    data = SimpleNamespace(features=rng.random((80, 4)), labels=rng.integers(1, 4, size=80))
    assert linalg.rank_columns(data, 3, 2, seed=9) == linalg.rank_columns(data, 3, 2, seed=9)


def test_permutation_examples():
    assert np.array_equal(linalg.permutation_from_ranking((1, 0)), [[0, 1], [1, 0]])
    assert np.array_equal(linalg.permutation_from_ranking((0, 1, 2)), np.eye(3))
    with pytest.raises(ParameterError):
        linalg.permutation_from_ranking((0, 0))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12).flatmap(lambda n: st.permutations(range(n))))
def test_permutation_reorders_columns(order):
    p = linalg.permutation_from_ranking(order)
    n = len(order)
    X = np.arange(3 * n, dtype=float).reshape(3, n)
    assert np.array_equal(X @ p, X[:, list(order)])
    assert linalg.is_orthogonal(p)
    assert np.all(p.sum(axis=0) == 1) and np.all(p.sum(axis=1) == 1)


# --- PCA ------------------------------------------------------------------------------


def test_pca_collinear_points():
    model = linalg.pca_fit([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    assert model.components[:, 0] == pytest.approx([1 / math.sqrt(2)] * 2, abs=1e-12)
    assert model.eigenvalues[1] == pytest.approx(0.0, abs=1e-12)
    assert model.eigenvalues[0] == pytest.approx(2.0, abs=1e-12)


def test_pca_reconstruction():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((60, 6)) @ rng.standard_normal((6, 6))
    model = linalg.pca_fit(X)
    scores = linalg.pca_project(model, X, 6)
    assert np.max(np.abs(linalg.pca_reconstruct(model, scores) - X)) <= 1e-8
    c = model.components
    assert np.max(np.abs(c.T @ c - np.eye(6))) <= 1e-8
    assert np.all(np.diff(model.eigenvalues) <= 0)


def test_pca_diagonal_covariance_gives_column_variances():
    rng = np.random.default_rng(10)
    X = rng.standard_normal((5000, 3)) * [3.0, 1.0, 0.2]
    # decorrelate exactly so the sample covariance is diagonal
    X = X - X.mean(axis=0)
    Q, _ = np.linalg.qr(X)
    X = Q * [3.0, 1.0, 0.2] * math.sqrt(X.shape[0] - 1)
    model = linalg.pca_fit(X)
    assert model.eigenvalues == pytest.approx(np.var(X, axis=0, ddof=1), rel=1e-9)


def test_pca_sign_convention_and_errors():
    rng = np.random.default_rng(11)
    model = linalg.pca_fit(rng.standard_normal((30, 4)))
    lead = model.components[np.argmax(np.abs(model.components), axis=0), range(4)]
    assert np.all(lead > 0)
    with pytest.raises(ParameterError):
        linalg.pca_project(model, np.zeros((2, 4)), 5)
    with pytest.raises(ParameterError):
        linalg.pca_fit([[1.0, 2.0]])


def test_jacobi_matches_numpy_eigenvalues():
    rng = np.random.default_rng(12)
    for n in (1, 2, 5, 12):
        a = rng.standard_normal((n, n))
        s = a + a.T
        values, vectors = linalg.jacobi_eigh(s)
        assert np.sort(values) == pytest.approx(np.linalg.eigvalsh(s), abs=1e-9)
        assert np.max(np.abs(s @ vectors - vectors * values)) <= 1e-9
