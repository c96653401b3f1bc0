"""Closed-form spacing laws for the four tractable families.

Uniform and exponential spacings have elementary densities and rational
moments.  The logistic family needs a Gauss hypergeometric density, an
exact-rational expected value, and a second moment assembled from finite
rational sums plus pi^2 / ln 2 pieces and one slowly-converging alternating
series.  The Gumbel family has a log-series expected value in two
algebraically equal but numerically very different forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import mpmath

from .distributions import DistributionSpec
from .numerics import (
    HPFloat,
    PrecisionIssue,
    PrecisionPolicy,
    SeriesConvergenceError,
    hyp2f1,
    ln2_bits,
    pi_squared_bits,
)

__all__ = [
    "SpacingQuery",
    "ClosedFormValue",
    "LogisticSecondMomentTerms",
    "UnsupportedFamilyError",
    "uniform_spacing_density",
    "uniform_expected",
    "uniform_variance",
    "exp_spacing_density",
    "exp_expected",
    "exp_variance",
    "exp_normalized_expected",
    "logistic_spacing_density",
    "logistic_expected_exact",
    "logistic_second_moment",
    "logistic_variance",
    "gumbel_spacing_density",
    "gumbel_expected",
    "gumbel_expected_raw",
    "expected_spacing",
    "spacing_variance",
]


class UnsupportedFamilyError(ValueError):
    """Raised when no closed form exists for the requested family."""


@dataclass(frozen=True)
class SpacingQuery:
    """A distribution plus the pair (n, i): n points drawn, spacing between
    order statistics i-1 and i.  Indices below 2 are rejected outright because
    every closed form here contains (i-2)!."""

    spec: DistributionSpec
    n: int
    i: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or not isinstance(self.i, int):
            raise TypeError("n and i must be integers")
        if self.n < 2:
            raise ValueError(f"need n >= 2, got n={self.n}")
        if not 2 <= self.i <= self.n:
            raise ValueError(f"need 2 <= i <= n, got i={self.i}, n={self.n}")


@dataclass(frozen=True)
class ClosedFormValue:
    """A closed-form result: exact rational when the formula allows it,
    always carrying a working-precision float rendering."""

    kind: str  # "exact_rational" | "high_precision"
    hp_value: HPFloat
    rational_part: Optional[Fraction] = None

    def __post_init__(self) -> None:
        if self.kind not in ("exact_rational", "high_precision"):
            raise ValueError(f"bad kind {self.kind!r}")
        if self.kind == "exact_rational" and self.rational_part is None:
            raise ValueError("exact_rational requires rational_part")

    def to_float(self) -> float:
        return self.hp_value.to_float()


@dataclass(frozen=True)
class LogisticSecondMomentTerms:
    """Diagnostic decomposition of the logistic E{D^2} assembly.

    All five term fields are the brace contributions in unit-scale (sigma=1)
    form; the full second moment is
        prefactor * sigma^2 * (out1 + out2_sum + out3_series
                               + (pi^2/6) * out3C_term + out3D_term)
    with prefactor = 2 n! / ((i-2)! (n-i+1)!).
    """

    out1: Fraction
    out2_sum: Fraction
    out3_series: HPFloat
    out3C_term: Fraction
    out3D_term: HPFloat
    k_terms_used: int
    residual_bound: float


def _require(q: SpacingQuery, family: str) -> None:
    if q.spec.family != family:
        raise ValueError(f"operation requires the {family} family, got {q.spec.family}")


def _bits_for(q: SpacingQuery, bits: Optional[int]) -> int:
    if bits is not None:
        return max(64, int(bits))
    return PrecisionPolicy.from_env().working_bits(q.n)


def _frac_mpf(fr: Fraction) -> mpmath.mpf:
    return mpmath.mpf(fr.numerator) / fr.denominator


# ---------------------------------------------------------------------------
# uniform

def uniform_spacing_density(q: SpacingQuery, y: float) -> float:
    """Density of the i-th spacing of n uniform draws; independent of i."""
    _require(q, "uniform")
    a, b = q.spec.param("a"), q.spec.param("b")
    width = b - a
    if y < 0.0 or y > width:
        return 0.0
    return (q.n / width) * ((width - y) / width) ** (q.n - 1)


def uniform_expected(q: SpacingQuery) -> ClosedFormValue:
    _require(q, "uniform")
    width = Fraction(q.spec.param("b")) - Fraction(q.spec.param("a"))
    return _exact_value(width / (q.n + 1), _bits_for(q, None))


def uniform_variance(q: SpacingQuery) -> ClosedFormValue:
    _require(q, "uniform")
    width = Fraction(q.spec.param("b")) - Fraction(q.spec.param("a"))
    v = Fraction(q.n, q.n + 2) * (width / (q.n + 1)) ** 2
    return _exact_value(v, _bits_for(q, None))


# ---------------------------------------------------------------------------
# exponential

def exp_spacing_density(q: SpacingQuery, y: float) -> float:
    """The i-th spacing of exponentials is itself exponential with rate
    lambda (n-i+1)."""
    _require(q, "exponential")
    if y < 0.0:
        return 0.0
    rate = q.spec.param("lambda") * (q.n - q.i + 1)
    return rate * math.exp(-rate * y)


def exp_expected(q: SpacingQuery) -> ClosedFormValue:
    _require(q, "exponential")
    e = 1 / (Fraction(q.spec.param("lambda")) * (q.n - q.i + 1))
    return _exact_value(e, _bits_for(q, None))


def exp_variance(q: SpacingQuery) -> ClosedFormValue:
    _require(q, "exponential")
    e = 1 / (Fraction(q.spec.param("lambda")) * (q.n - q.i + 1))
    return _exact_value(e * e, _bits_for(q, None))


def exp_normalized_expected(q: SpacingQuery) -> ClosedFormValue:
    """Expected spacing scaled by (n-i+1); constant 1/lambda across i."""
    _require(q, "exponential")
    return _exact_value(1 / Fraction(q.spec.param("lambda")), _bits_for(q, None))


# ---------------------------------------------------------------------------
# logistic

def logistic_spacing_density(q: SpacingQuery, y: float, bits: Optional[int] = None) -> HPFloat:
    """Density of the i-th spacing for logistic draws.

    Hypergeometric argument 1 - e^{y/sigma} <= 0, routed through the stable
    transformed evaluation inside hyp2f1; valid for all y >= 0 including the
    region beyond y/sigma = ln 2 where the untransformed series diverges.
    """
    _require(q, "logistic")
    if y < 0.0:
        raise ValueError(f"spacing density needs y >= 0, got {y}")
    wb = _bits_for(q, bits)
    n, i = q.n, q.i
    sigma = q.spec.param("sigma")
    work = wb + 16
    with mpmath.workprec(work):
        w = mpmath.mpf(y) / mpmath.mpf(sigma)
        z = -mpmath.expm1(w)  # 1 - e^{y/sigma}, exact small-y behavior
        f = hyp2f1(i, n - i + 2, n + 2, z, bits=work)
        pref = _frac_mpf(Fraction((n - i + 1) * (i - 1), n + 1)) / mpmath.mpf(sigma)
        val = pref * mpmath.e**w * f.value
    return HPFloat(val, wb)


def logistic_expected_exact(q: SpacingQuery) -> ClosedFormValue:
    """Expected logistic spacing, by exact rational summation.

    The alternating-free sum collapses to sigma * n / ((i-1)(n-i+1)); the
    full summed form is evaluated here and the collapse is a test invariant,
    not an implementation shortcut.
    """
    _require(q, "logistic")
    n, i = q.n, q.i
    sigma = Fraction(q.spec.param("sigma"))
    inner = Fraction(1, (i - 1)) ** 2
    inner -= sum(
        Fraction(math.factorial(n - i - k) * math.factorial(i - 2), math.factorial(n - k))
        for k in range(1, n - i + 1))
    pref = Fraction(math.factorial(n), math.factorial(i - 2) * math.factorial(n - i + 1))
    return _exact_value(sigma * pref * inner, _bits_for(q, None))


def _exact_value(fr: Fraction, bits: int) -> ClosedFormValue:
    with mpmath.workprec(bits):
        hp = HPFloat(_frac_mpf(fr), bits)
    return ClosedFormValue("exact_rational", hp, fr)


def logistic_second_moment(
    q: SpacingQuery, rel_tol: float = 1e-10, bits: Optional[int] = None,
) -> tuple[HPFloat, LogisticSecondMomentTerms]:
    """Second moment E{D^2} of the logistic spacing.

    Assembled from: two finite rational sums; a pi^2 term with rational
    coefficient 2^{1-i}/(i-1); a ln 2 / pi^2 double-sum block; and an
    infinite alternating series over k whose summand changes form at
    k = i-1.  The series suffers heavy interior cancellation (rational part
    against (H - ln 2) part, both growing like k^{i-1} while the term decays
    like k^{-4}), so every k-term is evaluated at a padded precision that
    absorbs the worst case up to the term cap.
    """
    _require(q, "logistic")
    if not 1e-30 < rel_tol < 1e-3:
        raise ValueError(f"rel_tol must lie in (1e-30, 1e-3), got {rel_tol}")
    n, i = q.n, q.i
    wb = _bits_for(q, bits)
    sigma2 = Fraction(q.spec.param("sigma")) ** 2

    pref = Fraction(2 * math.factorial(n), math.factorial(i - 2) * math.factorial(n - i + 1))

    # finite rational blocks
    out1 = -sum(Fraction(1, k) for k in range(1, n - i + 1)) * Fraction(1, i - 1) ** 2
    out2 = Fraction(0)
    c = Fraction(1, (i - 1) * i)  # m! (i-2)! / (m+i)! at m=0
    prefix = c
    for k in range(2, n - i + 1):
        out2 += Fraction(1, k) * prefix
        m = k - 1
        c = c * Fraction(m, m + i)
        prefix += c
    out3c = Fraction(1, (i - 1) * 2 ** (i - 1))

    # exact rational ingredients of the ln2/pi^2 block and the k-series
    harm = sum(Fraction(1, j) for j in range(1, i - 1))  # H_{i-2}
    half_pow = [Fraction(0)] * (i - 1)  # half_pow[t] = sum_{r<=t} 1/(r 2^r)
    for t in range(1, i - 1):
        half_pow[t] = half_pow[t - 1] + Fraction(1, t * 2**t)
    d_sum = -sum(Fraction(1, m) * half_pow[m - 1] for m in range(1, i - 1))
    h_geom = sum(Fraction(1, j * 2**j) for j in range(1, i))  # H of the k-series

    # Padded working precision: absorbs k^{i+1}-scale cancellation inside the
    # series terms for any k up to the cap (log2(1e5) < 17).
    pwork = wb + 17 * i + 96
    cap = 100_000
    with mpmath.workprec(pwork):
        ln2 = ln2_bits(pwork)
        pi2 = pi_squared_bits(pwork)
        delta = _frac_mpf(h_geom) - ln2  # H - ln 2, in (-0.20, 0)

        # out3D = (1/2) I_D = (1/(1-i)) (-pi^2/12 + H_{i-2} ln2 + d_sum)
        out3d = (-pi2 / 12 + _frac_mpf(harm) * ln2 + _frac_mpf(d_sum)) / (1 - i)

        # Everything outside the k-series; the stop threshold must track the
        # scale of the assembled total, not of the series alone, because the
        # brace pieces cancel far below the series magnitude for mid-range i.
        rest = (_frac_mpf(out1 + out2) + pi2 / 6 * _frac_mpf(out3c) + out3d)

        c_a2 = mpmath.mpf((-1) ** i) / math.factorial(i - 1)
        c_b = mpmath.mpf(1) / math.factorial(i - 1)

        pre_b = -mpmath.mpf(math.factorial(i - 1))  # (-1)^k (i+k-2)!/(k-1)! at k=1
        j_b = mpmath.mpf(0)
        pre_a2 = mpmath.mpf(0)
        j_a2 = mpmath.mpf(0)
        # case-1 prefactor k!(i-k-2)!/2^{i-1} and its bracket, advanced per k
        if i >= 3:
            pre_a1 = _frac_mpf(Fraction(math.factorial(i - 3), 2 ** (i - 1)))  # k=1
            t_a1 = _frac_mpf(Fraction(2 ** (i - 1) - 1, math.factorial(i - 1))
                             - Fraction(1, math.factorial(i - 2)))  # j=1 term removed

        series = mpmath.mpf(0)
        quiet = 0
        resid = 0.0
        k_used = 0
        term = mpmath.mpf(0)
        for k in range(1, cap + 1):
            # B_k, every k
            if k >= 2:
                j_b += mpmath.mpf((-1) ** k * math.factorial(k - 2)) / math.factorial(i + k - 2)
                pre_b *= -mpmath.mpf(i + k - 2) / (k - 1)
            b_k = pre_b * (j_b / 2 ** (i - 1) + c_b * delta)

            if k < i - 1:
                a_k = pre_a1 * t_a1
                # advance case-1 state to k+1
                if k + 1 < i - 1:
                    pre_a1 *= mpmath.mpf(k + 1) / (i - k - 2)
                    t_a1 -= mpmath.mpf(1) / (
                        math.factorial(k + 1) * math.factorial(i - k - 2))
            else:
                if k == i - 1:
                    pre_a2 = mpmath.mpf((-1) ** (i - 1) * math.factorial(i - 1))
                else:
                    pre_a2 *= -mpmath.mpf(k) / (k + 1 - i)
                    j_a2 += mpmath.mpf((-1) ** k * math.factorial(k - i)) / math.factorial(k)
                a_k = pre_a2 * (j_a2 / 2 ** (i - 1) + c_a2 * delta)

            term = mpmath.mpf((-1) ** k) / (k * k) * (b_k - a_k)
            series += term
            k_used = k
            threshold = rel_tol * min(abs(series), abs(rest + series)) / 10
            if abs(term) <= threshold:
                quiet += 1
                resid = max(resid, abs(term))
                if quiet >= 3:
                    break
            else:
                quiet = 0
                resid = 0.0
        else:
            raise SeriesConvergenceError(
                f"spacing second-moment series hit the {cap}-term cap at "
                f"rel_tol={rel_tol} (n={n}, i={i})",
                terms_used=k_used, last_term=float(term), partial=float(series))

        braces = rest + series
        total = _frac_mpf(pref * sigma2) * braces

    terms = LogisticSecondMomentTerms(
        out1=out1, out2_sum=out2, out3_series=HPFloat(series, wb),
        out3C_term=out3c, out3D_term=HPFloat(out3d, wb),
        k_terms_used=k_used, residual_bound=float(resid))
    return HPFloat(total, wb), terms


def logistic_variance(
    q: SpacingQuery, rel_tol: float = 1e-10, bits: Optional[int] = None,
) -> HPFloat:
    """Var D = E{D^2} - (E D)^2, the only route available here: no direct
    closed form for the logistic spacing variance exists."""
    m2, _ = logistic_second_moment(q, rel_tol=rel_tol, bits=bits)
    e = logistic_expected_exact(q).rational_part
    wb = _bits_for(q, bits)
    with mpmath.workprec(wb + 64):
        v = m2.value - _frac_mpf(e * e)
    return HPFloat(v, wb)


# ---------------------------------------------------------------------------
# Gumbel

def gumbel_spacing_density(q: SpacingQuery, y: float) -> float:
    """Density of the i-th spacing for Gumbel draws; finite alternating sum."""
    _require(q, "gumbel")
    if y < 0.0:
        raise ValueError(f"spacing density needs y >= 0, got {y}")
    n, i = q.n, q.i
    sigma = q.spec.param("sigma")
    ew = math.exp(y / sigma)
    m = n - i
    terms = [
        (-1) ** k * math.comb(m, k) / (ew * (i - 1) + m + 1 - k) ** 2
        for k in range(m + 1)
    ]
    pref = math.factorial(n) / (math.factorial(i - 2) * math.factorial(m))
    return pref * (ew / sigma) * (-1) ** m * math.fsum(terms)


def _gumbel_final_sum(n: int, i: int, sigma, prec: int) -> mpmath.mpf:
    with mpmath.workprec(prec):
        m = n - i
        acc = mpmath.mpf(0)
        if i > 2:
            acc -= mpmath.log(mpmath.mpf(i - 1)) / (m + 1)
        for k in range(m + 1):
            acc += ((-1) ** k * math.comb(m, k)) * mpmath.log(mpmath.mpf(i + k)) / (1 + k)
        return i * math.comb(n, i) * mpmath.mpf(sigma) * acc


def gumbel_expected(q: SpacingQuery, bits: Optional[int] = None) -> HPFloat:
    """Expected Gumbel spacing via the regrouped log-series.

    Evaluated twice (at bits and bits+64); if the regrouped form were ever
    precision-starved the two would disagree and that is reported rather
    than returned.
    """
    _require(q, "gumbel")
    wb = _bits_for(q, bits)
    n, i = q.n, q.i
    sigma = q.spec.param("sigma")
    lo = _gumbel_final_sum(n, i, sigma, wb)
    hi = _gumbel_final_sum(n, i, sigma, wb + 64)
    if hi != 0 and abs(lo - hi) / abs(hi) > 1e-9:
        raise PrecisionIssue(
            f"expected-spacing sum unstable at {wb} bits for n={n}, i={i}: "
            f"{mpmath.nstr(lo, 20)} vs {mpmath.nstr(hi, 20)} at +64 bits")
    return HPFloat(lo, wb)


def gumbel_expected_raw(q: SpacingQuery, bits: Optional[int] = None) -> HPFloat:
    """Expected Gumbel spacing in the pre-regrouping form.

    Carries a factorial prefactor against an alternating log sum, so it
    loses roughly n bits to cancellation as n grows; retained as an
    independent cross-check for small n, deliberately without the stability
    guard of gumbel_expected.
    """
    _require(q, "gumbel")
    wb = _bits_for(q, bits)
    n, i = q.n, q.i
    sigma = q.spec.param("sigma")
    m = n - i
    with mpmath.workprec(wb):
        acc = mpmath.mpf(0)
        for k in range(m + 1):
            acc += ((-1) ** k * math.comb(m, k) / mpmath.mpf(m + 1 - k)) * (
                mpmath.log(mpmath.mpf(n - k)) - mpmath.log(mpmath.mpf(i - 1)))
        pref = Fraction((-1) ** m * math.factorial(n),
                        math.factorial(i - 2) * math.factorial(m) * (i - 1))
        val = _frac_mpf(pref) * mpmath.mpf(sigma) * acc
    return HPFloat(val, wb)


# ---------------------------------------------------------------------------
# dispatchers

_NO_CLOSED_FORM = (
    "no closed form; use oracle or estimator")


def expected_spacing(
    q: SpacingQuery, rel_tol: float = 1e-10, bits: Optional[int] = None,
) -> ClosedFormValue:
    """Route to the family-specific expected spacing."""
    fam = q.spec.family
    if fam == "uniform":
        return uniform_expected(q)
    if fam == "exponential":
        return exp_expected(q)
    if fam == "logistic":
        return logistic_expected_exact(q)
    if fam == "gumbel":
        return ClosedFormValue("high_precision", gumbel_expected(q, bits=bits))
    raise UnsupportedFamilyError(f"{fam}: {_NO_CLOSED_FORM}")


def spacing_variance(
    q: SpacingQuery, rel_tol: float = 1e-10, bits: Optional[int] = None,
) -> ClosedFormValue:
    """Route to the family-specific spacing variance (three families only)."""
    fam = q.spec.family
    if fam == "uniform":
        return uniform_variance(q)
    if fam == "exponential":
        return exp_variance(q)
    if fam == "logistic":
        return ClosedFormValue(
            "high_precision", logistic_variance(q, rel_tol=rel_tol, bits=bits))
    raise UnsupportedFamilyError(f"{fam}: {_NO_CLOSED_FORM}")
