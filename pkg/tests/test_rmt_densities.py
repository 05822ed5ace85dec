import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from htmp_lab.errors import ConditioningError, ContractError, DomainError
from htmp_lab.rmt_densities import (INFINITE, HTMPParams, InvGammaParams, InverseParams,
                                    MPParams, ScaledParams, density_cdf, htmp_moment,
                                    htmp_moment_recurrence, htmp_pdf, inverse_law_pdf,
                                    invgamma_pdf, law_pdf, mp_pdf, quick_cdf, stieltjes,
                                    stieltjes_deriv, tail_exponents)

# HTMP density from mpmath: hyperu at negative argument, 40 digits
HTMP_REFERENCE = [
    ((0.5, 2.0, 0.3), 0.674462319496798),
    ((0.5, 2.0, 1.0), 0.32248413882156424),
    ((0.3255, 1.9, 0.05), 0.56121189458583),
    ((0.3255, 1.9, 2.5), 0.09418787714900453),
    ((0.3255, 5.5, 1.2), 0.41473195423381415),
    ((0.8, 0.5, 0.7), 0.18501289055144923),
    ((0.2, 30.0, 1.1), 0.6311705630713714),
    ((0.6, 8.0, 3.0), 0.06372089382692521),
]

GRID = [(g, k) for g in (0.2, 0.5, 0.8) for k in (0.5, 2.0, 8.0)]


def log_slope(f, x, h=1e-3):
    return (math.log(f(x * (1 + h))) - math.log(f(x * (1 - h)))) / (math.log1p(h) - math.log1p(-h))


def quad_total(f, lo, hi, points=None):
    # split at the given points and use a log substitution on each piece
    edges = [lo] + list(points or []) + [hi]
    total = 0.0
    for u, v in zip(edges[:-1], edges[1:]):
        if math.isinf(v):
            # log substitution copes with survival exponents near zero
            cuts = [math.log(u)] + [y for y in (2.0, 6.0, 20.0, 60.0, 200.0, 700.0) if y > math.log(u)]
            for y0, y1 in zip(cuts[:-1], cuts[1:]):
                total += integrate.quad(lambda y: f(math.exp(y)) * math.exp(y), y0, y1, limit=400)[0]
        elif u == 0.0:
            cuts = [y for y in (-400.0, -60.0, -20.0, -6.0, -2.0) if y < math.log(v)] + [math.log(v)]
            for y0, y1 in zip(cuts[:-1], cuts[1:]):
                total += integrate.quad(lambda y: f(math.exp(y)) * math.exp(y), y0, y1, limit=400)[0]
        else:
            total += integrate.quad(f, u, v, limit=400)[0]
    return total


class TestMP:
    def test_outside_support(self):
        assert mp_pdf(5.0, MPParams(0.25)) == 0.0

    def test_gamma_one_midpoint(self):
        assert mp_pdf(2.0, MPParams(1.0)) == pytest.approx(1.0 / (2 * math.pi), rel=1e-14)

    @pytest.mark.parametrize("g", [0.1, 0.3255, 0.5, 1.0])
    def test_normalized(self, g):
        p = MPParams(g)
        val = integrate.quad(lambda x: mp_pdf(x, p), p.lam_minus, p.lam_plus, limit=200)[0]
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_edges(self):
        p = MPParams(0.25)
        assert (p.lam_minus, p.lam_plus) == (0.25, 2.25)

    def test_domain(self):
        with pytest.raises(DomainError):
            MPParams(1.5)


class TestHTMP:
    @pytest.mark.parametrize("args, ref", HTMP_REFERENCE)
    def test_reference(self, args, ref):
        g, k, x = args
        assert htmp_pdf(x, HTMPParams(g, k)) == pytest.approx(ref, rel=1e-10)

    def test_normalized_fig_params(self):
        p = HTMPParams(0.3255, 1.9)
        assert quad_total(lambda x: htmp_pdf(x, p), 0.0, math.inf, [1.0, 10.0]) == \
            pytest.approx(1.0, abs=1e-6)

    def test_origin_slope(self):
        # kappa/2gamma - 1 - kappa/2 = 0 at (0.5, 2)
        p = HTMPParams(0.5, 2.0)
        # b = 0 here, so U carries an x ln x correction to the leading power
        for x in (1e-3, 1e-4, 1e-6):
            slope = log_slope(lambda t: htmp_pdf(t, p), x)
            assert abs(slope) <= 4.0 * x * math.log(1.0 / x)

    def test_mean_is_one(self):
        p = HTMPParams(0.4, 3.0)
        assert htmp_moment(1, p) == pytest.approx(1.0, rel=1e-7)

    def test_errors(self):
        with pytest.raises(ContractError):
            htmp_pdf(1.0, HTMPParams(0.5, INFINITE))
        with pytest.raises(DomainError):
            htmp_pdf(-1.0, HTMPParams(0.5, 2.0))
        with pytest.raises(DomainError):
            HTMPParams(1.0, 2.0)
        with pytest.raises(DomainError):
            HTMPParams(0.5, -1.0)

    def test_zero_density_at_origin_and_vectorized(self):
        p = HTMPParams(0.5, 2.0)
        x = np.array([0.3, 1.0])
        np.testing.assert_allclose(htmp_pdf(x, p), [0.674462319496798, 0.32248413882156424], rtol=1e-10)
        assert htmp_pdf(0.0, HTMPParams(0.3, 2.0)) == 0.0


class TestOtherLaws:
    def test_inverse_definition(self):
        base = MPParams(0.25)
        assert inverse_law_pdf(1 / 1.5, base) == \
            pytest.approx(1.5 ** 2 * mp_pdf(1.5, base), rel=1e-14)

    def test_inverse_normalized(self):
        p = HTMPParams(0.5, 3.0)
        assert quad_total(lambda x: inverse_law_pdf(x, p), 0.0, math.inf, [1.0, 10.0]) == \
            pytest.approx(1.0, abs=1e-6)

    def test_inverse_upper_slope(self):
        p = HTMPParams(0.5, 2.0)
        assert log_slope(lambda x: inverse_law_pdf(x, p), 1e3) == pytest.approx(-2.0, rel=0.05)

    def test_inverse_domain(self):
        with pytest.raises(DomainError):
            inverse_law_pdf(0.0, MPParams(0.5))

    def test_invgamma_examples(self):
        assert invgamma_pdf(1.0, InvGammaParams(2.0, 1.0)) == pytest.approx(math.exp(-1), rel=1e-14)
        p = InvGammaParams(3.0, 2.0)
        h = 1e-6
        mode = 2.0 / 3.0
        assert invgamma_pdf(mode + h, p) - invgamma_pdf(mode - h, p) == pytest.approx(0.0, abs=1e-10)
        p = InvGammaParams(2.5, 1.0)
        assert quad_total(lambda x: invgamma_pdf(x, p), 0.0, math.inf, [1.0]) == \
            pytest.approx(1.0, abs=1e-8)
        with pytest.raises(DomainError):
            invgamma_pdf(-1.0, p)
        with pytest.raises(DomainError):
            InvGammaParams(1.0, 1.0)


class TestNormalization:
    @pytest.mark.parametrize("g, k", GRID)
    def test_all_families(self, g, k):
        fams = [MPParams(g), HTMPParams(g, k), InverseParams(HTMPParams(g, k)),
                InvGammaParams(1.0 + k, g)]
        for p in fams:
            # survival can decay as slowly as x^(-1/16) on this grid
            assert density_cdf(p, 1e300) == pytest.approx(1.0, abs=1e-6)
            total = quad_total(lambda x: float(law_pdf(p, x)), 0.0, math.inf, [0.5, 1.0, 4.0])
            assert total == pytest.approx(1.0, abs=1e-6)


class TestCDF:
    def test_below_support(self):
        assert density_cdf(MPParams(0.25), 0.1) == 0.0
        assert density_cdf(HTMPParams(0.5, 2.0), 0.0) == 0.0

    def test_matches_quadrature(self):
        p = HTMPParams(0.3255, 5.5)
        for x in (0.3, 1.0, 2.2):
            ref = quad_total(lambda t: htmp_pdf(t, p), 0.0, x)
            assert density_cdf(p, x) == pytest.approx(ref, abs=1e-8)

    def test_mp_gamma_one_median(self):
        p = MPParams(1.0)
        lo, hi = 0.0, 4.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if integrate.quad(lambda x: mp_pdf(x, p), 0.0, mid, limit=200)[0] < 0.5:
                lo = mid
            else:
                hi = mid
        assert density_cdf(p, 0.5 * (lo + hi)) == pytest.approx(0.5, abs=1e-7)

    @given(st.sampled_from(GRID))
    @settings(max_examples=9)
    def test_monotone(self, gk):
        p = HTMPParams(*gk)
        xs = np.geomspace(1e-3, 50.0, 200)
        c = density_cdf(p, xs)
        assert np.all(np.diff(c) >= 0) and c[0] >= 0 and c[-1] <= 1

    def test_scaled_and_quick(self):
        p = HTMPParams(0.3255, 1.9)
        xs = np.array([0.2, 0.8, 1.5, 4.0])
        np.testing.assert_allclose(density_cdf(ScaledParams(p, 3.0), 3.0 * xs), density_cdf(p, xs),
                                   atol=1e-12)
        np.testing.assert_allclose(quick_cdf(p, xs), density_cdf(p, xs), atol=1e-4)

    def test_mp_limit(self):
        xs = np.linspace(0.0, 5.0, 2001)
        for g in (0.3, 0.6):
            d = np.max(np.abs(density_cdf(HTMPParams(g, 200.0), xs) - density_cdf(MPParams(g), xs)))
            assert d <= 0.02


class TestTails:
    def test_examples(self):
        t = tail_exponents(HTMPParams(0.5, 2.0))
        assert -t.upper_exponent == -2.0
        assert -t.lower_exponent == -4.0
        assert t.lower_exp_rate == 2.0
        t1 = tail_exponents(HTMPParams(1.0, INFINITE))
        assert t1.upper_exponent == 1.5
        assert tail_exponents(HTMPParams(0.5, INFINITE)).bounded_support

    @pytest.mark.parametrize("g, k", [(0.5, 2.0), (0.3255, 1.9), (0.25, 3.0), (0.6, 1.0)])
    def test_slopes(self, g, k):
        p = HTMPParams(g, k)
        t = tail_exponents(p)
        lo = log_slope(lambda x: htmp_pdf(x, p), 1e-4)
        # a zero exponent only admits an absolute check
        assert lo == pytest.approx(t.origin_exponent, rel=0.05, abs=0.01)
        up = log_slope(lambda x: inverse_law_pdf(x, p), 1e3)
        assert up == pytest.approx(-t.upper_exponent, rel=0.05)


class TestStieltjes:
    def _quad(self, p, lam):
        return quad_total(lambda x: htmp_pdf(x, p) / (x + lam), 0.0, math.inf, [1.0, 10.0])

    def test_quadrature_example(self):
        p = HTMPParams(0.4, 3.0)
        assert stieltjes(-0.7, p) == pytest.approx(self._quad(p, 0.7), rel=1e-6)

    def test_random_triples(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            g, k, lam = rng.uniform(0.1, 0.9), rng.uniform(0.5, 10.0), rng.uniform(0.05, 3.0)
            p = HTMPParams(g, k)
            assert stieltjes(-lam, p) == pytest.approx(self._quad(p, lam), rel=1e-6)

    def test_positive_and_increasing(self):
        p = HTMPParams(0.5, 2.0)
        lam = np.geomspace(1e-3, 10.0, 30)
        s = stieltjes(-lam, p)
        assert np.all(s > 0) and np.all(np.diff(s) < 0)
        assert np.all(stieltjes_deriv(-lam, p) > 0)

    def test_derivative_matches_finite_difference(self):
        p = HTMPParams(0.3, 2.5)
        for z in (-0.01, -0.3, -2.0):
            h = 1e-6 * abs(z)
            fd = (stieltjes(z + h, p) - stieltjes(z - h, p)) / (2 * h)
            assert stieltjes_deriv(z, p) == pytest.approx(fd, rel=1e-6)

    def test_large_z(self):
        p = HTMPParams(0.5, 2.0)
        assert -1e6 * stieltjes(-1e6, p) == pytest.approx(-1.0, abs=1e-5)

    def test_domain(self):
        p = HTMPParams(0.5, 2.0)
        with pytest.raises(DomainError):
            stieltjes(0.5, p)
        with pytest.raises(DomainError):
            stieltjes(-1.0 + 1.0j, p)
        with pytest.raises(ContractError):
            stieltjes(-1.0, HTMPParams(0.5, INFINITE))


class TestMoments:
    def test_zeroth(self):
        p = HTMPParams(0.5, 2.0)
        assert htmp_moment(0, p, "recurrence") == 1.0
        assert htmp_moment(0, p, "quadrature") == 1.0

    def test_recurrence_first_is_negative(self):
        p = HTMPParams(0.5, 2.0)
        assert htmp_moment(1, p, "recurrence") == pytest.approx(-2.0, rel=1e-14)
        assert htmp_moment(1, p, "quadrature") > 0

    @given(st.integers(1, 12), st.integers(1, 12), st.integers(1, 12))
    def test_second_moment_rational(self, num_k, den_g, num_g):
        kappa = Fraction(num_k, 2)
        gamma = Fraction(min(num_g, den_g), den_g + 1)
        a = kappa / 2
        b = 1 + a - kappa / (2 * gamma)
        m = htmp_moment_recurrence(2, a, b)
        assert m[1] == -(a - b + 1)
        assert m[2] == (a - b + 1) * (2 * a - b + 2)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_rescaled_recurrence_matches_quadrature(self, k):
        p = HTMPParams(0.3, 12.0)
        raw = htmp_moment(k, p, "recurrence")
        assert raw * (-1.0 / p.s) ** k == pytest.approx(htmp_moment(k, p, "quadrature"), rel=1e-6)

    def test_conditioning_limit(self):
        with pytest.raises(ConditioningError):
            htmp_moment(13, HTMPParams(0.5, 2.0), "recurrence")
