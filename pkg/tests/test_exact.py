"""Closed-form spacing laws: values, exactness, and failure modes."""
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from spacings.distributions import DistributionSpec
from spacings.exact import (
    ClosedFormValue,
    SpacingQuery,
    UnsupportedFamilyError,
    exp_expected,
    exp_normalized_expected,
    exp_spacing_density,
    exp_variance,
    expected_spacing,
    gumbel_expected,
    gumbel_expected_raw,
    gumbel_spacing_density,
    logistic_expected_exact,
    logistic_second_moment,
    logistic_spacing_density,
    logistic_variance,
    spacing_variance,
    uniform_expected,
    uniform_spacing_density,
    uniform_variance,
)
from spacings.numerics import PrecisionIssue, quad_adaptive


def q_(fam, n, i, **params) -> SpacingQuery:
    return SpacingQuery(DistributionSpec(fam, params), n, i)


# E{D^2} for logistic(0,1), frozen from an independent arbitrary-precision
# double integral of the defining two-point density (50 dps working).
LOGISTIC_M2_GOLDEN = {
    (3, 3): "3.86960440108935861883",
    (5, 2): "2.83822955737115325361",
    (5, 3): "1.23201467029786206278",
    (5, 5): "2.83822955737115325361",
    (6, 4): "0.79736267392905745890",
    (8, 5): "0.45743602541836777280",
    (10, 2): "2.35024029388062850269",
    (10, 7): "0.32230807625510331841",
    (12, 6): "0.22032379235258013421",
}


class TestSpacingQuery:
    def test_bounds(self):
        q_("uniform", 2, 2)
        with pytest.raises(ValueError):
            q_("uniform", 1, 2)
        with pytest.raises(ValueError):
            q_("uniform", 5, 1)
        with pytest.raises(ValueError):
            q_("uniform", 5, 6)

    def test_integer_typing(self):
        with pytest.raises(TypeError):
            SpacingQuery(DistributionSpec("uniform"), 5.0, 3)

    def test_family_guards(self):
        with pytest.raises(ValueError, match="requires the uniform family"):
            uniform_expected(q_("exponential", 5, 3))
        with pytest.raises(ValueError, match="requires the logistic family"):
            logistic_expected_exact(q_("gumbel", 5, 3))


class TestClosedFormValue:
    def test_exact_rational_requires_fraction(self):
        from spacings.numerics import HPFloat
        hp = HPFloat.from_number(1, 64)
        with pytest.raises(ValueError):
            ClosedFormValue("exact_rational", hp)
        with pytest.raises(ValueError):
            ClosedFormValue("roughly", hp)


class TestUniform:
    def test_expected_value(self):
        v = uniform_expected(q_("uniform", 9, 4))
        assert v.rational_part == Fraction(1, 10)
        v = uniform_expected(q_("uniform", 4, 2, a=-1.0, b=3.0))
        assert v.rational_part == Fraction(4, 5)

    def test_expected_independent_of_i(self):
        vals = {uniform_expected(q_("uniform", 7, i)).rational_part
                for i in range(2, 8)}
        assert vals == {Fraction(1, 8)}

    def test_variance(self):
        v = uniform_variance(q_("uniform", 9, 4))
        assert v.rational_part == Fraction(9, 11) * Fraction(1, 100)

    def test_density_normalizes_and_averages(self):
        q = q_("uniform", 6, 3, a=0.0, b=2.0)
        mass = quad_adaptive(
            np.vectorize(lambda y: uniform_spacing_density(q, y)), 0.0, 2.0, 1e-12)
        mean = quad_adaptive(
            np.vectorize(lambda y: y * uniform_spacing_density(q, y)), 0.0, 2.0, 1e-12)
        assert mass == pytest.approx(1.0, abs=1e-10)
        assert mean == pytest.approx(2.0 / 7.0, abs=1e-10)

    def test_density_off_support(self):
        q = q_("uniform", 6, 3)
        assert uniform_spacing_density(q, -0.1) == 0.0
        assert uniform_spacing_density(q, 1.1) == 0.0


class TestExponential:
    def test_density_is_exponential_with_collapsed_rate(self):
        q = q_("exponential", 10, 4, **{"lambda": 2.0})
        # rate lambda (n - i + 1) = 14
        assert exp_spacing_density(q, 0.0) == pytest.approx(14.0)
        assert exp_spacing_density(q, 0.2) == pytest.approx(14.0 * math.exp(-2.8))
        assert exp_spacing_density(q, -1e-9) == 0.0

    def test_expected_and_variance(self):
        q = q_("exponential", 10, 4, **{"lambda": 2.0})
        assert exp_expected(q).rational_part == Fraction(1, 14)
        assert exp_variance(q).rational_part == Fraction(1, 196)

    def test_normalized_expected_flat_across_i(self):
        vals = {exp_normalized_expected(q_("exponential", 12, i)).rational_part
                for i in range(2, 13)}
        assert vals == {Fraction(1)}


class TestLogisticExpected:
    def test_small_cases_by_hand(self):
        # n=2: single spacing, E = 2 sigma
        assert logistic_expected_exact(q_("logistic", 2, 2)).rational_part == 2
        # n=3 midpoint: 3/(1*2) with the summed form collapsing
        assert logistic_expected_exact(q_("logistic", 3, 2)).rational_part == Fraction(3, 2)

    def test_scales_linearly_in_sigma(self):
        base = logistic_expected_exact(q_("logistic", 8, 3)).rational_part
        scaled = logistic_expected_exact(q_("logistic", 8, 3, sigma=2.5)).rational_part
        assert scaled == base * Fraction(5, 2)

    def test_symmetry_i_to_reflected_index(self):
        # spacing law is symmetric: (n, i) and (n, n - i + 2) agree
        for n, i in [(7, 2), (9, 4), (12, 5)]:
            a = logistic_expected_exact(q_("logistic", n, i)).rational_part
            b = logistic_expected_exact(q_("logistic", n, n - i + 2)).rational_part
            assert a == b


class TestLogisticDensity:
    def test_matches_direct_integral(self):
        # definitional two-point integral, folded to the real line
        q = q_("logistic", 5, 3)
        n, i = q.n, q.i
        from spacings.distributions import cdf, pdf
        pref = math.factorial(n) / (math.factorial(i - 2) * math.factorial(n - i))

        def direct(y: float) -> float:
            def g(x):
                return (cdf(q.spec, x) ** (i - 2)
                        * (1.0 - cdf(q.spec, x + y)) ** (n - i)
                        * pdf(q.spec, x) * pdf(q.spec, x + y))
            return pref * quad_adaptive(g, -math.inf, math.inf, 1e-13)

        for y in (0.05, 0.5, 1.0, 3.0):
            got = float(logistic_spacing_density(q, y))
            assert got == pytest.approx(direct(y), rel=1e-10)

    def test_normalizes(self):
        q = q_("logistic", 6, 2)
        mass = quad_adaptive(
            np.vectorize(lambda y: float(logistic_spacing_density(q, y))),
            0.0, math.inf, 1e-10)
        assert mass == pytest.approx(1.0, rel=1e-9)

    def test_rejects_negative_gap(self):
        with pytest.raises(ValueError):
            logistic_spacing_density(q_("logistic", 5, 3), -0.1)

    def test_continuous_through_argument_branch_point(self):
        # the hypergeometric evaluation changes route near y/sigma = ln 2;
        # the density must not jump there
        q = q_("logistic", 10, 4)
        eps = 1e-7
        lo = float(logistic_spacing_density(q, math.log(2.0) - eps))
        hi = float(logistic_spacing_density(q, math.log(2.0) + eps))
        assert abs(hi - lo) < 1e-5 * abs(lo)


class TestLogisticSecondMoment:
    @pytest.mark.parametrize("n,i", sorted(LOGISTIC_M2_GOLDEN))
    def test_golden_values(self, n, i):
        got, _ = logistic_second_moment(q_("logistic", n, i))
        with mpmath.workprec(120):
            ref = mpmath.mpf(LOGISTIC_M2_GOLDEN[(n, i)])
        # default series cutoff targets 1e-10 relative
        assert got.rel_diff(ref) < 1e-10

    def test_sigma_scales_quadratically(self):
        base, _ = logistic_second_moment(q_("logistic", 6, 4))
        scaled, _ = logistic_second_moment(q_("logistic", 6, 4, sigma=3.0))
        assert scaled.rel_diff(base * 9) < 1e-12

    def test_terms_diagnostics(self):
        _, terms = logistic_second_moment(q_("logistic", 8, 5))
        assert terms.k_terms_used >= 3
        assert terms.residual_bound >= 0.0
        assert isinstance(terms.out1, Fraction)
        assert isinstance(terms.out3C_term, Fraction)

    def test_rel_tol_validated(self):
        with pytest.raises(ValueError):
            logistic_second_moment(q_("logistic", 5, 3), rel_tol=0.5)

    def test_variance_nonnegative_and_consistent(self):
        q = q_("logistic", 9, 5)
        var = logistic_variance(q)
        m2, _ = logistic_second_moment(q)
        e = logistic_expected_exact(q).rational_part
        assert float(var) > 0.0
        assert var.rel_diff(m2 - e * e) < 1e-12


class TestGumbelDensity:
    def test_normalizes(self):
        q = q_("gumbel", 7, 3)
        mass = quad_adaptive(
            np.vectorize(lambda y: gumbel_spacing_density(q, y)),
            0.0, math.inf, 1e-10)
        assert mass == pytest.approx(1.0, rel=1e-9)

    def test_mean_matches_expected(self):
        q = q_("gumbel", 7, 3)
        mean = quad_adaptive(
            np.vectorize(lambda y: y * gumbel_spacing_density(q, y)),
            0.0, math.inf, 1e-10)
        assert mean == pytest.approx(float(gumbel_expected(q)), rel=1e-8)

    def test_rejects_negative_gap(self):
        with pytest.raises(ValueError):
            gumbel_spacing_density(q_("gumbel", 5, 3), -0.5)


class TestGumbelExpected:
    def test_top_spacing_of_two_is_two_ln_two(self):
        got = gumbel_expected(q_("gumbel", 2, 2))
        with mpmath.workprec(120):
            assert got.rel_diff(2 * mpmath.ln(2)) < 1e-25

    def test_three_draw_value(self):
        # n=3, i=2: 6 ln 2 - 3 ln 3
        got = gumbel_expected(q_("gumbel", 3, 2))
        with mpmath.workprec(120):
            ref = 6 * mpmath.ln(2) - 3 * mpmath.ln(3)
        assert got.rel_diff(ref) < 1e-25

    def test_scales_linearly_in_sigma(self):
        a = gumbel_expected(q_("gumbel", 9, 4))
        b = gumbel_expected(q_("gumbel", 9, 4, sigma=2.0))
        assert b.rel_diff(a * 2) < 1e-25

    def test_two_forms_agree_at_high_precision(self):
        for n, i in [(5, 2), (10, 6), (15, 15), (20, 11)]:
            fin = gumbel_expected(q_("gumbel", n, i), bits=256)
            raw = gumbel_expected_raw(q_("gumbel", n, i), bits=256)
            assert fin.rel_diff(raw) < 1e-30

    def test_raw_form_degrades_at_low_precision(self):
        # the alternating factorial sum loses ~n bits to cancellation; by
        # n = 40 a 64-bit evaluation keeps no correct digits at mid indices
        q = q_("gumbel", 40, 10)
        ref = gumbel_expected(q, bits=1024)
        raw64 = gumbel_expected_raw(q, bits=64)
        assert ref.rel_diff(raw64) > 1e-4

    def test_final_form_refuses_starved_precision(self):
        with pytest.raises(PrecisionIssue):
            gumbel_expected(q_("gumbel", 40, 2), bits=64)


class TestDispatchers:
    def test_expected_routes(self):
        assert expected_spacing(q_("uniform", 5, 3)).rational_part == Fraction(1, 6)
        assert expected_spacing(q_("exponential", 5, 3)).rational_part == Fraction(1, 3)
        assert expected_spacing(q_("logistic", 5, 3)).rational_part == Fraction(5, 6)
        g = expected_spacing(q_("gumbel", 5, 3))
        assert g.kind == "high_precision" and g.to_float() > 0

    def test_expected_rejects_families_without_forms(self):
        for fam in ("cauchy", "pareto", "rayleigh", "weibull", "frechet", "laplace"):
            with pytest.raises(UnsupportedFamilyError):
                expected_spacing(q_(fam, 5, 3))

    def test_variance_routes(self):
        assert spacing_variance(q_("uniform", 5, 3)).kind == "exact_rational"
        assert spacing_variance(q_("exponential", 5, 3)).kind == "exact_rational"
        assert spacing_variance(q_("logistic", 5, 3)).kind == "high_precision"
        with pytest.raises(UnsupportedFamilyError):
            spacing_variance(q_("gumbel", 5, 3))
