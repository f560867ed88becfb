import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hilbertcoresets.errors import DegenerateProblemError
from hilbertcoresets.geometry import (approximation_error, compute_diagnostics, kernel, weighted_sum)


def brute_force_diagnostics(F):
    """Direct evaluation of the definitions with explicit loops."""
    sig = [np.sqrt(sum(v * v for v in row)) for row in F]
    sigma = sum(sig)
    if sigma == 0:
        return 0.0, 0.0, 0.0
    L = np.sum(F, axis=0)
    eta2 = max(0.0, 1.0 - float(L @ L) / sigma ** 2)
    best = 0.0
    for n, m in itertools.product(range(len(F)), repeat=2):
        if sig[n] > 0 and sig[m] > 0:
            d = F[n] / sig[n] - F[m] / sig[m]
            best = max(best, float(d @ d))
    return sigma, np.sqrt(eta2), np.sqrt(best)


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
matrices = st.integers(1, 8).flatmap(
    lambda n: st.integers(1, 5).flatmap(lambda j: arrays(float, (n, j), elements=finite)))


def test_two_orthogonal_unit_rows():
    d = compute_diagnostics(np.eye(2))
    assert d.sigma == pytest.approx(2.0)
    assert d.eta == pytest.approx(np.sqrt(0.5), abs=1e-12)
    assert d.eta_bar == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert brute_force_diagnostics(np.eye(2)) == pytest.approx((2.0, np.sqrt(0.5), np.sqrt(2.0)))
    assert not d.approximate


def test_identical_rows_are_aligned():
    F = np.tile([[0.3, -1.7, 2.2]], (5, 1))
    d = compute_diagnostics(F)
    assert d.eta == pytest.approx(0.0, abs=1e-12)
    assert d.eta_bar == 0.0


def test_single_row():
    d = compute_diagnostics([[1.5, -2.0]])
    assert (d.eta, d.eta_bar) == (0.0, 0.0)
    assert d.sigma == pytest.approx(2.5)


def test_zero_matrix_is_degenerate():
    with pytest.raises(DegenerateProblemError, match="degenerate problem"):
        compute_diagnostics(np.zeros((3, 2)))


def test_zero_rows_excluded_from_eta_bar():
    F = np.array([[1.0, 0.0], [0.0, 0.0], [2.0, 0.0]])
    d = compute_diagnostics(F)
    assert d.sigma_n[1] == 0
    assert d.eta_bar == 0.0


def test_nonfinite_rejected():
    with pytest.raises(ValueError, match="non-finite"):
        compute_diagnostics([[1.0, np.nan]])


def test_sampled_eta_bar_is_flagged_and_close():
    rng = np.random.default_rng(0)
    F = rng.standard_normal((300, 3))
    exact = compute_diagnostics(F)
    approx = compute_diagnostics(F, exact_pair_limit=100, seed=1)
    assert approx.approximate
    assert approx.eta == exact.eta
    assert approx.eta_bar <= exact.eta_bar + 1e-12
    assert approx.eta_bar == pytest.approx(exact.eta_bar, rel=0.05)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_matches_brute_force(F):
    sigma, eta, eta_bar = brute_force_diagnostics(F)
    if sigma == 0:
        return
    d = compute_diagnostics(F)
    assert d.sigma == pytest.approx(sigma, rel=1e-9)
    assert d.sigma == pytest.approx(d.sigma_n.sum(), rel=1e-9)
    assert d.eta == pytest.approx(eta, abs=1e-6)
    assert d.eta_bar == pytest.approx(eta_bar, abs=1e-6)
    assert 0 <= d.eta <= 1 and 0 <= d.eta_bar <= 2


def test_eta_at_most_eta_bar_over_sqrt2():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        N, J = rng.integers(1, 30), rng.integers(1, 8)
        F = rng.standard_normal((N, J)) + rng.uniform(-2, 2, size=J)
        d = compute_diagnostics(F)
        assert d.eta <= d.eta_bar / np.sqrt(2) + 1e-9


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    F = rng.standard_normal((20, 4))
    a, b = compute_diagnostics(F), compute_diagnostics(F[rng.permutation(20)])
    assert a.sigma == pytest.approx(b.sigma, rel=1e-12)
    assert a.eta == pytest.approx(b.eta, rel=1e-9)
    assert a.eta_bar == pytest.approx(b.eta_bar, rel=1e-12)


def test_weighted_sum_examples():
    F = np.arange(12.0).reshape(4, 3)
    np.testing.assert_array_equal(weighted_sum(F, np.ones(4)), F.sum(axis=0))
    np.testing.assert_array_equal(weighted_sum(F, np.zeros(4)), np.zeros(3))
    np.testing.assert_array_equal(weighted_sum(F, [1, 0, 0, 0]), F[0])
    with pytest.raises(ValueError):
        weighted_sum(F, np.ones(3))


def test_approximation_error_examples():
    assert approximation_error(np.eye(2), np.ones(2)) == 0.0
    assert approximation_error([[3.0, 4.0]], [1.0]) == 0.0
    assert approximation_error(np.eye(2), [2.0, 0.0]) == pytest.approx(np.sqrt(2.0))


def test_kernel_examples():
    np.testing.assert_allclose(kernel(np.eye(3)), np.eye(3))
    K = kernel([[1.0, 2.0], [1.0, 2.0]])
    assert np.linalg.matrix_rank(K) == 1
    np.testing.assert_array_equal(K[0], K[1])
    rng = np.random.default_rng(4)
    F = rng.standard_normal((3, 2))
    loop = np.array([[sum(F[i, k] * F[j, k] for k in range(2)) for j in range(3)] for i in range(3)])
    np.testing.assert_allclose(kernel(F), loop, rtol=1e-12)
    with pytest.raises(ValueError, match="streaming|stream"):
        kernel(np.ones((10, 2)), limit=5)


@settings(max_examples=200, deadline=None)
@given(matrices, st.data())
def test_quadratic_form_matches_error(F, data):
    w = data.draw(arrays(float, F.shape[0], elements=st.floats(0, 5)))
    K = kernel(F)
    q = (1 - w) @ K @ (1 - w)
    err2 = approximation_error(F, w) ** 2
    assert q == pytest.approx(err2, rel=1e-7, abs=1e-9 * (1 + np.abs(F).sum()) ** 2)


@settings(max_examples=100, deadline=None)
@given(matrices)
def test_full_weights_exact(F):
    sigma = np.linalg.norm(F, axis=1).sum()
    assert approximation_error(F, np.ones(F.shape[0])) <= 1e-9 * max(sigma, 1e-300)
