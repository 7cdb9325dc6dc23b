import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lapdict.exceptions import InvalidParameterError
from lapdict.sparse import (PairCode, correlation_cost_2d, correlation_cost_kron, in_simplex_type,
                            normalize_columns, omp, omp2d, omp_batch, project_simplex_type,
                            select_threshold, select_threshold_dense)
from oracles import active_set_projection, best_threshold_error


def unit_dictionary(rng, m, n):
    D = rng.standard_normal((m, n))
    return D / np.linalg.norm(D, axis=0)


# -- simplex-type projection ------------------------------------------------

def test_projection_small_example():
    # v = (3, 1, -2), ell = 0: on mu in (-2, 1) coords 0 and 2 are free,
    # (3 - mu) + (-2 - mu) = 0 gives mu = 1/2 and d = (2.5, 0, -2.5);
    # KKT: d - v = -0.5 * 1 - 0.5 * e1 with multiplier 0.5 >= 0 on d1 <= 0
    d = project_simplex_type(np.array([3.0, 1.0, -2.0]), 0)
    np.testing.assert_allclose(d, [2.5, 0.0, -2.5], atol=1e-15)


def test_projection_of_feasible_point_is_identity():
    d = np.array([-0.5, 2.0, -1.5, 0.0])
    np.testing.assert_array_equal(project_simplex_type(d, 1), d)


def test_projection_matches_active_set_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(500):
        m = int(rng.integers(1, 13))
        v = rng.standard_normal(m) * rng.choice([1e-3, 1.0, 1e3])
        ell = int(rng.integers(m))
        ref = active_set_projection(v, ell)
        worst = max(worst, np.abs(project_simplex_type(v, ell) - ref).max() / max(1.0, np.abs(v).max()))
    assert worst <= 1e-8


@settings(max_examples=300, deadline=None)
@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(-1e3, 1e3)), st.data())
def test_projection_feasible_and_idempotent(v, data):
    ell = data.draw(st.integers(0, len(v) - 1))
    d = project_simplex_type(v, ell)
    assert in_simplex_type(d, ell, tol=1e-12)
    np.testing.assert_allclose(project_simplex_type(d, ell), d, rtol=0, atol=1e-12 * max(1, np.abs(v).max()))


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(2, 10), elements=st.floats(-10, 10)), st.data())
def test_projection_variational_inequality(v, data):
    # <v - P(v), z - P(v)> <= 0 for feasible z
    ell = data.draw(st.integers(0, len(v) - 1))
    d = project_simplex_type(v, ell)
    rng = np.random.default_rng(len(v))
    for _ in range(20):
        z = project_simplex_type(rng.standard_normal(len(v)) * 5, ell)
        assert (v - d) @ (z - d) <= 1e-9


def test_projection_with_ties():
    v = np.array([1.0, 1.0, 1.0, 1.0])
    for ell in range(4):
        np.testing.assert_allclose(project_simplex_type(v, ell), active_set_projection(v, ell), atol=1e-12)


def test_projection_rejects_bad_index():
    with pytest.raises(InvalidParameterError):
        project_simplex_type(np.zeros(3), 3)


# -- thresholding -----------------------------------------------------------

def test_select_threshold_keeps_largest_magnitudes():
    code = select_threshold(np.array([0.1, -3.0, 2.0, 0.5]), 2)
    assert code.support.tolist() == [1, 2]
    np.testing.assert_array_equal(code.to_dense(), [0.0, -3.0, 2.0, 0.0])


def test_select_threshold_ties_take_lowest_index():
    assert select_threshold(np.array([1.0, -1.0, 1.0]), 2).support.tolist() == [0, 1]


def test_select_threshold_optimal_for_orthonormal_block():
    rng = np.random.default_rng(3)
    for _ in range(100):
        Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        y = rng.standard_normal(6)
        x = select_threshold(Q.T @ y, 2).to_dense()
        assert np.sum((y - Q @ x) ** 2) <= best_threshold_error(Q, y, 2) + 1e-12


def test_select_threshold_dense_matches_columnwise():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((7, 5))
    out = select_threshold_dense(X, 3)
    for j in range(5):
        np.testing.assert_array_equal(out[:, j], select_threshold(X[:, j], 3).to_dense())


def test_normalize_columns_replaces_zero_columns():
    D = np.array([[3.0, 0.0], [4.0, 0.0]])
    Dn, replaced = normalize_columns(D, np.random.default_rng(0), return_replaced=True)
    assert replaced.tolist() == [1]
    np.testing.assert_allclose(np.linalg.norm(Dn, axis=0), 1.0)
    np.testing.assert_allclose(Dn[:, 0], [0.6, 0.8])


# -- OMP --------------------------------------------------------------------

def test_omp_exact_recovery_of_sparse_signal():
    rng = np.random.default_rng(1)
    D = unit_dictionary(rng, 30, 60)
    x = np.zeros(60)
    x[[4, 17, 42]] = [1.5, -2.0, 0.7]
    code = omp(D, D @ x, 3)
    assert sorted(code.support.tolist()) == [4, 17, 42]
    np.testing.assert_allclose(code.to_dense(), x, atol=1e-10)


def test_omp_residual_orthogonal_to_selected_atoms():
    rng = np.random.default_rng(2)
    D = unit_dictionary(rng, 20, 40)
    y = rng.standard_normal(20)
    code = omp(D, y, 6)
    r = y - D @ code.to_dense()
    assert np.abs(D[:, code.support].T @ r).max() < 1e-10


def test_omp_single_atom_matches_brute_force():
    # with s = 1 OMP is exhaustive: the best single atom wins
    rng = np.random.default_rng(4)
    D = unit_dictionary(rng, 5, 9)
    for _ in range(50):
        y = rng.standard_normal(5)
        err = np.sum((y - D @ omp(D, y, 1).to_dense()) ** 2)
        assert err <= best_threshold_error(D, y, 1) + 1e-12


def test_omp_stops_on_exact_fit():
    D = np.eye(4)
    code = omp(D, np.array([0.0, 2.0, 0.0, 0.0]), 3)
    assert code.support.tolist() == [1]


def test_omp_near_ties_take_lowest_index():
    D = np.array([[1.0, -1.0], [0.0, 0.0]])
    y = np.array([1.0, 0.0]) * (1 + 1e-15)
    assert omp(D, y, 1).support.tolist() == [0]
    assert np.flatnonzero(omp_batch(D, y, 1)).tolist() == [0]


def test_omp_skips_dependent_atoms():
    D = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    code = omp(D, np.array([1.0, 0.5]), 2)
    assert code.support.tolist() == [0, 2]


def test_omp_rejects_large_s():
    with pytest.raises(InvalidParameterError):
        omp(np.eye(3), np.ones(3), 4)


def test_omp_batch_matches_omp():
    rng = np.random.default_rng(5)
    D = unit_dictionary(rng, 16, 40)
    Y = rng.standard_normal((16, 30))
    X = omp_batch(D, Y, 5)
    for j in range(30):
        np.testing.assert_allclose(X[:, j], omp(D, Y[:, j], 5).to_dense(), atol=1e-10)


def test_omp_batch_zero_signal():
    D = unit_dictionary(np.random.default_rng(0), 4, 6)
    assert not omp_batch(D, np.zeros((4, 2)), 2).any()


# -- 2-D OMP ----------------------------------------------------------------

def test_omp2d_matches_kronecker_omp():
    rng = np.random.default_rng(6)
    for _ in range(100):
        m1, m2 = rng.integers(1, 6, size=2)
        n1, n2 = rng.integers(1, 8, size=2)
        s = int(rng.integers(1, min(3, m1 * m2, n1 * n2) + 1))
        D1, D2 = unit_dictionary(rng, m1, n1), unit_dictionary(rng, m2, n2)
        Y = rng.standard_normal((m1, m2))
        pc = omp2d(D1, D2, Y, s)
        ref = omp(np.kron(D2, D1), Y.ravel(order="F"), s)
        np.testing.assert_array_equal(pc.kron_support(), ref.support)
        np.testing.assert_allclose(pc.values, ref.values, rtol=0, atol=1e-10)


def test_omp2d_reconstruction():
    rng = np.random.default_rng(8)
    D1, D2 = unit_dictionary(rng, 6, 10), unit_dictionary(rng, 5, 9)
    X = np.zeros((10, 9))
    X[2, 3], X[7, 1] = 1.0, -0.5
    pc = omp2d(D1, D2, D1 @ X @ D2.T, 2)
    np.testing.assert_allclose(pc.to_dense(), X, atol=1e-10)


def test_omp2d_correlation_cost_counter():
    rng = np.random.default_rng(9)
    m1 = m2 = 8
    n1 = n2 = 16
    counter = {}
    omp2d(unit_dictionary(rng, m1, n1), unit_dictionary(rng, m2, n2), rng.standard_normal((m1, m2)), 4,
          counter=counter)
    assert counter["iterations"] == 4
    assert counter["corr_ops"] == 4 * correlation_cost_2d(m1, m2, n1, n2)
    # n1 m1 m2 + n1 m2 n2 = 1024 + 2048 = 3072; explicit Kronecker needs 64 * 256 = 16384
    assert correlation_cost_2d(m1, m2, n1, n2) == 3072
    assert correlation_cost_kron(m1, m2, n1, n2) == 16384


def test_omp2d_cost_ratio_grows_with_size():
    ratios = [correlation_cost_kron(m, m, 2 * m, 2 * m) / correlation_cost_2d(m, m, 2 * m, 2 * m)
              for m in (4, 8, 16, 32)]
    # ratio is 4 m^2 / (6 m) = 2m/3, so it doubles with m
    np.testing.assert_allclose(ratios, [2 * m / 3 for m in (4, 8, 16, 32)])


def test_paircode_accumulates_duplicates():
    pc = PairCode([0, 0], [1, 1], [1.0, 2.0], (2, 2))
    np.testing.assert_array_equal(pc.to_dense(), [[0.0, 3.0], [0.0, 0.0]])


def test_omp2d_shape_check():
    with pytest.raises(InvalidParameterError):
        omp2d(np.eye(3), np.eye(2), np.zeros((2, 3)), 1)


def test_kron_support_layout():
    # D1 X D2^T column-stacked equals kron(D2, D1) vec(X)
    rng = np.random.default_rng(10)
    D1, D2 = rng.standard_normal((3, 4)), rng.standard_normal((2, 5))
    for a, b in itertools.product(range(4), range(5)):
        X = np.zeros((4, 5))
        X[a, b] = 1.0
        k = PairCode([a], [b], [1.0], (4, 5)).kron_support()[0]
        np.testing.assert_allclose((D1 @ X @ D2.T).ravel(order="F"), np.kron(D2, D1)[:, k])
