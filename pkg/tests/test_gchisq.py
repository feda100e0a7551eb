import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy import stats

from covselauc import gchisq
from covselauc.errors import QuadratureFailure


def two_term_sf(a, ha, b, hb, x):
    """Pr(a*X + b*Y > x) for X ~ chi2(ha), Y ~ chi2(hb), a > 0, by convolution."""
    def integrand(y):
        return stats.chi2.pdf(y, hb) * stats.chi2.sf((x - b * y) / a, ha)
    # split at the kink of the inner sf and near the pdf singularity at 0
    cuts = sorted({0.0, 1.0, *([x / b] if x / b > 0 else [])}) + [np.inf]
    val = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val += sp_integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=500)[0]
    return val


class TestGaussKronrod:
    @pytest.mark.parametrize("degree", range(0, 23))
    def test_kronrod_exact(self, degree):
        val, _ = gchisq.gauss_kronrod(lambda t: t ** degree, np.array([0.0]), np.array([1.0]))
        assert val[0] == pytest.approx(1.0 / (degree + 1), rel=1e-13)

    @pytest.mark.parametrize("degree", range(0, 14))
    def test_gauss_part_exact(self, degree):
        # the error estimate is |K15 - G7|, zero while both rules are exact
        _, err = gchisq.gauss_kronrod(lambda t: t ** degree, np.array([-0.3]), np.array([1.7]))
        assert err[0] <= 1e-13

    def test_gauss_inexact_beyond(self):
        _, err = gchisq.gauss_kronrod(lambda t: t ** 14, np.array([0.0]), np.array([1.0]))
        assert err[0] > 1e-10

    def test_many_intervals(self):
        a = np.array([0.0, 1.0, 2.0])
        val, _ = gchisq.gauss_kronrod(np.exp, a, a + 1)
        np.testing.assert_allclose(val, np.exp(a + 1) - np.exp(a), rtol=1e-14)


class TestIntegrate:
    def test_sine(self):
        val, err = gchisq.integrate(np.sin, [0.0, math.pi], tol=1e-12)
        assert val == pytest.approx(2.0, abs=1e-12)
        assert err <= 1e-12

    def test_endpoint_singularity(self):
        val, _ = gchisq.integrate(np.sqrt, [0.0, 0.5, 1.0], tol=1e-10)
        assert val == pytest.approx(2.0 / 3.0, abs=1e-10)

    def test_interval_limit(self):
        with pytest.raises(QuadratureFailure):
            gchisq.integrate(lambda t: np.sin(1.0 / (t + 1e-9)), [0.0, 1.0], tol=1e-14, max_intervals=8)


class TestGroupWeights:
    def test_prune_and_sort(self):
        w, h = gchisq.group_weights([0.3, 1e-15, -0.2, 0.0])
        np.testing.assert_array_equal(w, [-0.2, 0.3])
        np.testing.assert_array_equal(h, [1, 1])

    def test_merge(self):
        w, h = gchisq.group_weights([0.5, 0.5 + 1e-13, -0.1, 0.5])
        np.testing.assert_allclose(w, [-0.1, 0.5])
        np.testing.assert_array_equal(h, [1, 3])

    def test_dof_carried(self):
        _, h = gchisq.group_weights([2.0, 2.0], dof=[3, 4])
        np.testing.assert_array_equal(h, [7])

    def test_distinct_kept(self):
        w, _ = gchisq.group_weights([1.0, 1.0 + 1e-6])
        assert w.size == 2


class TestSf:
    def test_zero_weights(self):
        assert gchisq.sf([0.0, 0.0]) == 0.5
        assert gchisq.sf([], -1.0) == 1.0
        assert gchisq.sf([1e-16], 0.3) == 0.0

    @pytest.mark.parametrize("w,h,x", [(0.7, 1, 0.4), (2.0, 5, 9.0), (-0.5, 2, -1.3), (-1.0, 3, 0.5)])
    def test_single_group_exact(self, w, h, x):
        y = x / w
        expected = stats.chi2.sf(y, h) if w > 0 else stats.chi2.cdf(y, h)
        assert gchisq.sf([w] * h, x) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("a,b", [(0.3, 0.2), (1.0, 1.0), (5.0, 0.01), (0.01, 3.0), (0.25, 0.5)])
    def test_difference_of_two_closed_form(self, a, b):
        # a*X - b*Y > 0 iff F(1,1) > b/a, and Pr = (2/pi) arctan(sqrt(a/b))
        expected = 2.0 / math.pi * math.atan(math.sqrt(a / b))
        assert gchisq.sf([a, -b]) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("a", [0.01, 0.5, 3.0])
    def test_symmetric_is_half(self, a):
        assert gchisq.sf([a, -a, 2 * a, -2 * a]) == pytest.approx(0.5, abs=1e-10)

    @pytest.mark.parametrize("a,ha,b,hb,x", [
        (0.5, 1, 0.2, 1, 0.3),
        (0.5, 3, -0.3, 2, 0.7),
        (0.5, 3, -0.3, 2, -0.7),
        (1.0, 1, 0.25, 4, 12.0),
        (0.05, 2, -2.0, 1, 0.0),
        (0.8, 2, 0.1, 6, 0.05),
    ])
    def test_against_convolution(self, a, ha, b, hb, x):
        expected = two_term_sf(a, ha, b, hb, x)
        value, err = gchisq.sf([a, b], x, dof=[ha, hb], return_error=True)
        assert value == pytest.approx(expected, abs=2e-9)
        assert err <= 1e-9

    def test_dof_equals_repetition(self):
        w = [0.4, -0.15, 0.05]
        via_dof = gchisq.sf(w, 0.2, dof=[2, 3, 1])
        via_repeat = gchisq.sf([0.4, 0.4, -0.15, -0.15, -0.15, 0.05], 0.2)
        assert via_dof == pytest.approx(via_repeat, abs=1e-12)

    def test_near_equal_weights_approach_chi2(self):
        w = [1.0, 1.0 + 1e-7, 1.0 + 2e-7]
        assert gchisq.sf(w, 2.5) == pytest.approx(stats.chi2.sf(2.5, 3), abs=1e-6)

    @pytest.mark.parametrize("x", [-3.0, -0.5, 0.0, 0.5, 2.0, 10.0])
    def test_against_monte_carlo(self, x):
        rng = np.random.default_rng(7)
        w = np.array([0.9, 0.35, -0.2, -0.6, 0.05])
        m = 400_000
        q = (rng.standard_normal((m, w.size)) ** 2) @ w
        p_mc = np.mean(q > x)
        se = math.sqrt(max(p_mc * (1 - p_mc), 1e-6) / m)
        assert abs(gchisq.sf(w, x) - p_mc) <= 4.5 * se

    def test_monotone_in_threshold(self):
        w = [0.5, -0.2, 0.1, -0.05]
        values = [gchisq.sf(w, x) for x in np.linspace(-4, 6, 41)]
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    def test_many_weights(self):
        rng = np.random.default_rng(3)
        w = rng.uniform(-1, 1, 400) * 0.01
        value, err = gchisq.sf(w, 0.0, return_error=True)
        assert 0.0 <= value <= 1.0
        assert err <= 1e-9

    def test_cdf_complement(self):
        w = [0.4, -0.3]
        assert gchisq.cdf(w, 0.1) + gchisq.sf(w, 0.1) == pytest.approx(1.0, abs=1e-15)
