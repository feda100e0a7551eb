import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covselauc import symmat
from covselauc.errors import ConvergenceFailure, NotPositiveDefinite

from conftest import equicorrelation, random_spd


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(symmat.cholesky(np.eye(3)), np.eye(3))

    def test_two_by_two(self):
        low = symmat.cholesky([[1.0, 0.5], [0.5, 1.0]])
        assert low[0, 0] == 1.0
        assert low[1, 0] == 0.5
        assert low[1, 1] == pytest.approx(math.sqrt(0.75), abs=1e-15)
        assert low[0, 1] == 0.0

    def test_equicorrelation_boundary(self):
        symmat.cholesky(equicorrelation(5, 0.99))
        with pytest.raises(NotPositiveDefinite):
            symmat.cholesky(equicorrelation(5, 1.01))

    def test_lower_pd_boundary(self):
        # smallest eigenvalue 1 + (n-1) rho hits zero at rho = -1/(n-1)
        symmat.cholesky(equicorrelation(5, -0.24))
        with pytest.raises(NotPositiveDefinite):
            symmat.cholesky(equicorrelation(5, -0.26))

    def test_reconstruction(self, rng):
        for n in (1, 2, 5, 17, 40):
            m = random_spd(rng, n)
            low = symmat.cholesky(m)
            assert np.allclose(np.triu(low, 1), 0.0)
            assert np.max(np.abs(low @ low.T - m)) <= 1e-10 * n * np.max(np.abs(m).sum(1))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            symmat.cholesky([[1.0, 0.2], [0.1, 1.0]])


class TestEigSym:
    def test_identity(self):
        np.testing.assert_array_equal(symmat.eig_sym(np.eye(4)).eigenvalues, np.ones(4))

    def test_diagonal(self):
        np.testing.assert_array_equal(symmat.eig_sym(np.diag([2.0, 3.0])).eigenvalues, [2.0, 3.0])
        np.testing.assert_array_equal(symmat.eig_sym(np.diag([3.0, 1.0, 2.0])).eigenvalues, [1, 2, 3])

    @pytest.mark.parametrize("n,rho", [(4, 0.5), (7, 0.9), (10, -0.1), (31, 0.3)])
    def test_equicorrelation_spectrum(self, n, rho):
        lam = symmat.eig_sym(equicorrelation(n, rho)).eigenvalues
        expected = np.sort([1 - rho] * (n - 1) + [1 + (n - 1) * rho])
        np.testing.assert_allclose(lam, expected, atol=1e-13)

    @pytest.mark.parametrize("n", [1, 2, 3, 6, 9, 24, 65])
    def test_invariants_against_numpy(self, rng, n):
        x = rng.standard_normal((n, n))
        a = x + x.T
        dec = symmat.eig_sym(a)
        norm_inf = np.max(np.abs(a).sum(1))
        tol = 1e-12 * np.linalg.norm(a) * n
        assert np.all(np.diff(dec.eigenvalues) >= 0)
        resid = a @ dec.eigenvectors - dec.eigenvectors * dec.eigenvalues
        assert np.max(np.abs(resid)) <= tol * norm_inf
        v = dec.eigenvectors
        assert np.max(np.abs(v.T @ v - np.eye(n))) <= 1e-12 * n
        np.testing.assert_allclose(dec.eigenvalues, np.linalg.eigvalsh(a), atol=1e-12 * norm_inf * n)

    def test_deterministic(self, rng):
        a = random_spd(rng, 12)
        first, second = symmat.eig_sym(a), symmat.eig_sym(a)
        np.testing.assert_array_equal(first.eigenvalues, second.eigenvalues)
        np.testing.assert_array_equal(first.eigenvectors, second.eigenvectors)

    def test_convergence_failure(self, rng):
        with pytest.raises(ConvergenceFailure):
            symmat.eig_sym(random_spd(rng, 8), max_sweeps=1)

    def test_does_not_mutate_input(self, rng):
        a = random_spd(rng, 6)
        before = a.copy()
        symmat.eig_sym(a)
        np.testing.assert_array_equal(a, before)


class TestInverseLogDet:
    def test_inverse_simple(self):
        np.testing.assert_array_equal(symmat.inverse(np.eye(3)), np.eye(3))
        np.testing.assert_allclose(symmat.inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))

    def test_inverse_product(self):
        m = equicorrelation(3, 0.5)
        assert np.max(np.abs(m @ symmat.inverse(m) - np.eye(3))) <= 1e-8 * 3

    def test_inverse_not_pd(self):
        with pytest.raises(NotPositiveDefinite):
            symmat.inverse(equicorrelation(3, -0.6))

    def test_log_det_identity(self):
        assert symmat.log_det(np.eye(6)) == 0.0

    @pytest.mark.parametrize("n,rho", [(4, 0.5), (9, 0.9), (30, 0.1), (5, -0.2)])
    def test_log_det_equicorrelation(self, n, rho):
        expected = math.log((n - 1) * rho + 1) + (n - 1) * math.log(1 - rho)
        assert symmat.log_det(equicorrelation(n, rho)) == pytest.approx(expected, abs=1e-12)

    def test_log_det_spot(self):
        assert symmat.log_det(equicorrelation(4, 0.5)) == pytest.approx(
            math.log(2.5) + 3 * math.log(0.5), abs=1e-14)


@st.composite
def symmetric_matrices(draw):
    n = draw(st.integers(1, 8))
    seed = draw(st.integers(0, 2**32 - 1))
    shift = draw(st.floats(-1.5, 1.5))
    x = np.random.default_rng(seed).standard_normal((n, n))
    a = x @ x.T / n
    # shift pushes some matrices out of the PD cone
    return a + shift * np.eye(n)


@settings(max_examples=150, deadline=None)
@given(symmetric_matrices())
def test_pd_tests_agree(a):
    lam = symmat.eig_sym(a).eigenvalues
    # skip the razor-thin band where the two tests legitimately differ by roundoff
    if abs(lam[0] - symmat.PD_TOLERANCE) < 1e-9:
        return
    try:
        symmat.cholesky(a)
        chol_ok = True
    except NotPositiveDefinite:
        chol_ok = False
    assert chol_ok == bool(np.all(lam > symmat.PD_TOLERANCE))


@settings(max_examples=100, deadline=None)
@given(symmetric_matrices())
def test_log_det_and_double_inverse(a):
    lam = symmat.eig_sym(a).eigenvalues
    if lam[0] < 1e-3:
        return
    n = a.shape[0]
    assert abs(symmat.log_det(a) - np.sum(np.log(lam))) <= 1e-8 * n
    assert np.max(np.abs(symmat.inverse(symmat.inverse(a)) - a)) <= 1e-7 * n
