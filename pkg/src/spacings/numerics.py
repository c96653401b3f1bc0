"""Exact-rational and high-precision building blocks.

Everything downstream leans on four things: exact rationals for the
factorial series that cancel catastrophically, a precision-tagged float
for the terms that are genuinely transcendental, special functions
(integer beta, Gauss hypergeometric with continuation, dilogarithm), and
an adaptive Gauss-Kronrod quadrature used as ground truth.
"""

from __future__ import annotations

import heapq
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Union

import mpmath
import numpy as np

# Exact rational arithmetic. fractions.Fraction already guarantees lowest
# terms, positive denominator, and exactness, which is the whole contract.
BigRational = Fraction

Rational = Union[int, Fraction]

#: Hard ceiling on series terms; in-scope arguments converge in far fewer.
TERM_CAP = 100_000

_MAX_PANELS = 8192


class SeriesConvergenceError(ArithmeticError):
    """A series hit the term cap before meeting its tolerance."""

    def __init__(self, msg: str, terms_used: int, last_term: float, partial: float):
        super().__init__(
            f"{msg} (terms_used={terms_used}, last_term={last_term}, partial={partial})"
        )
        self.terms_used = terms_used
        self.last_term = last_term
        self.partial = partial


class QuadratureError(ArithmeticError):
    """Adaptive refinement exhausted before reaching the requested tolerance."""

    def __init__(self, msg: str, estimate: float, achieved_tol: float):
        super().__init__(f"{msg} (estimate={estimate}, achieved_tol={achieved_tol})")
        self.estimate = estimate
        self.achieved_tol = achieved_tol


class PrecisionIssue(ArithmeticError):
    """A result failed its own re-evaluation-at-higher-precision check."""


@dataclass(frozen=True)
class HPFloat:
    """A float with its working precision as part of its identity.

    Wraps an mpmath value. Arithmetic between two HPFloats is carried out
    at the larger of the two precisions; mixing with ints, Fractions, or
    machine floats keeps the HPFloat's own precision.
    """

    value: mpmath.mpf
    precision_bits: int

    def __post_init__(self):
        if self.precision_bits < 64:
            raise ValueError("precision_bits must be at least 64")

    @classmethod
    def from_number(cls, x, bits: int) -> "HPFloat":
        with mpmath.workprec(bits):
            if isinstance(x, Fraction):
                v = mpmath.mpf(x.numerator) / x.denominator
            else:
                v = +mpmath.mpf(x)
        return cls(v, bits)

    def to_float(self) -> float:
        return float(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def _coerce(self, other, bits):
        if isinstance(other, HPFloat):
            return other.value, max(bits, other.precision_bits)
        if isinstance(other, Fraction):
            with mpmath.workprec(bits):
                return mpmath.mpf(other.numerator) / other.denominator, bits
        if isinstance(other, (int, float)):
            return mpmath.mpf(other), bits
        return NotImplemented, bits

    def _binop(self, other, op, swap=False):
        ov, bits = self._coerce(other, self.precision_bits)
        if ov is NotImplemented:
            return NotImplemented
        with mpmath.workprec(bits):
            a, b = (ov, self.value) if swap else (self.value, ov)
            return HPFloat(op(a, b), bits)

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: a - b, swap=True)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binop(other, lambda a, b: a / b, swap=True)

    def __neg__(self):
        return HPFloat(-self.value, self.precision_bits)

    def __abs__(self):
        return HPFloat(abs(self.value), self.precision_bits)

    def _cmp_value(self, other):
        if isinstance(other, HPFloat):
            return other.value
        if isinstance(other, mpmath.mpf):
            return other  # already exact; re-wrapping would round to mp.prec
        if isinstance(other, Fraction):
            with mpmath.workprec(max(self.precision_bits, 64)):
                return mpmath.mpf(other.numerator) / other.denominator
        if isinstance(other, (int, float)):
            return mpmath.mpf(other)
        return NotImplemented

    def __lt__(self, other):
        ov = self._cmp_value(other)
        return NotImplemented if ov is NotImplemented else self.value < ov

    def __le__(self, other):
        ov = self._cmp_value(other)
        return NotImplemented if ov is NotImplemented else self.value <= ov

    def __gt__(self, other):
        ov = self._cmp_value(other)
        return NotImplemented if ov is NotImplemented else self.value > ov

    def __ge__(self, other):
        ov = self._cmp_value(other)
        return NotImplemented if ov is NotImplemented else self.value >= ov

    def rel_diff(self, other) -> float:
        """|self - other| / max(|self|, |other|, tiny), as a machine float."""
        ov = self._cmp_value(other)
        with mpmath.workprec(max(self.precision_bits, 64)):
            denom = max(abs(self.value), abs(ov), mpmath.mpf(1e-300))
            return float(abs(self.value - ov) / denom)


@dataclass(frozen=True)
class PrecisionPolicy:
    """How many working bits an (n)-sized problem gets.

    Series terms in the cancellation-prone sums grow like 10^(n/3), about
    1.11 n bits, while the final values are O(1); the default doubles that
    slope and adds fixed headroom.
    """

    base_bits: int = 128
    per_n_bits: Fraction = Fraction(2)

    def __post_init__(self):
        if self.per_n_bits < 0:
            raise ValueError("per_n_bits must be nonnegative")

    def working_bits(self, n: int) -> int:
        return max(64, self.base_bits + math.ceil(self.per_n_bits * n))

    @classmethod
    def from_env(cls, environ=None) -> "PrecisionPolicy":
        """Default policy, with SPACING_PRECISION_BITS overriding base_bits."""
        env = os.environ if environ is None else environ
        raw = env.get("SPACING_PRECISION_BITS")
        if raw is None:
            return cls()
        try:
            base = int(raw)
        except ValueError as exc:
            raise ValueError(f"SPACING_PRECISION_BITS must be an integer, got {raw!r}") from exc
        if base < 0:
            raise ValueError("SPACING_PRECISION_BITS must be nonnegative")
        return cls(base_bits=base)


@lru_cache(maxsize=None)
def ln2_bits(bits: int) -> mpmath.mpf:
    """ln 2 rounded to the given precision (cached per precision level)."""
    with mpmath.workprec(bits + 8):
        v = mpmath.ln(2)
    with mpmath.workprec(bits):
        return +v


@lru_cache(maxsize=None)
def pi_squared_bits(bits: int) -> mpmath.mpf:
    """pi^2 rounded to the given precision (cached per precision level)."""
    with mpmath.workprec(bits + 8):
        v = mpmath.pi ** 2
    with mpmath.workprec(bits):
        return +v


def beta_int(a: int, b: int) -> Fraction:
    """Beta function at positive integer arguments, exactly.

    B(a, b) = (a-1)! (b-1)! / (a+b-1)!.
    """
    if not isinstance(a, int) or not isinstance(b, int) or a < 1 or b < 1:
        raise ValueError(f"beta_int needs positive integers, got ({a}, {b})")
    return Fraction(math.factorial(a - 1) * math.factorial(b - 1),
                    math.factorial(a + b - 1))


def _mpf_from_rational(q: Fraction) -> mpmath.mpf:
    return mpmath.mpf(q.numerator) / q.denominator


def _gauss_series(a, b, c, z):
    """Sum the Gauss series at the current working precision; |z| < 1.

    Terminates early for nonpositive-integer a or b (polynomial case).
    Returns (sum, peak) where peak is the largest term magnitude seen,
    so callers can detect how many bits internal cancellation cost.
    """
    term = mpmath.mpf(1)
    total = mpmath.mpf(1)
    peak = mpmath.mpf(1)
    eps = mpmath.ldexp(1, -(mpmath.mp.prec + 4))
    quiet = 0
    for k in range(TERM_CAP):
        term = term * (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if abs(term) > peak:
            peak = abs(term)
        if abs(term) <= eps * abs(total):
            quiet += 1
            if quiet >= 2:
                return total, peak
        else:
            quiet = 0
    raise SeriesConvergenceError(
        "Gauss series did not converge", TERM_CAP, float(term), float(total)
    )


def _harmonic(j: int) -> Fraction:
    return sum(Fraction(1, t) for t in range(1, j + 1))


def _hyp2f1_near_unit_int(a: int, b: int, c: int, s, ln_s):
    """2F1(a, b; c; 1-s) for integer parameters and small s in (0, 1/2].

    Logarithmic-case expansion around argument 1; c - a - b may be any
    integer (negative values are folded through the Euler transform).
    Digammas of integers reduce to harmonic numbers, so every coefficient
    is rational and only ln(s) is transcendental. Returns (value, peak)
    where peak bounds the largest intermediate contribution.
    """
    m = c - a - b
    if m < 0:
        v, peak = _hyp2f1_near_unit_int(c - a, c - b, c, s, ln_s)
        front = mpmath.power(s, m)
        return front * v, abs(front) * peak
    if a < 1 or b < 1:
        # Terminating polynomial; the plain series is exact at any argument.
        return _gauss_series(a, b, c, 1 - s)

    eps = mpmath.ldexp(1, -(mpmath.mp.prec + 4))
    peak = mpmath.mpf(0)

    if m > 0:
        pref1 = Fraction(math.factorial(m - 1) * math.factorial(c - 1),
                         math.factorial(a + m - 1) * math.factorial(b + m - 1))
        p1 = _mpf_from_rational(pref1)
        finite = mpmath.mpf(0)
        coeff = Fraction(1)
        s_pow = mpmath.mpf(1)
        for k in range(m):
            piece = _mpf_from_rational(coeff) * s_pow
            finite += piece
            if abs(p1 * piece) > peak:
                peak = abs(p1 * piece)
            if k + 1 < m:
                # (a)_k (b)_k (m-1-k)! (-1)^k / (k! (m-1)!) stepped incrementally
                coeff = coeff * Fraction(-(a + k) * (b + k), (k + 1) * (m - 1 - k))
                s_pow *= s
        part1 = p1 * finite

        pref2 = Fraction(math.factorial(c - 1),
                         math.factorial(a - 1) * math.factorial(b - 1))
        p2 = _mpf_from_rational(pref2)
        r = Fraction(1, math.factorial(m))
        h_k = Fraction(0)
        h_km = _harmonic(m)
        h_ak = _harmonic(a + m - 1)
        h_bk = _harmonic(b + m - 1)
        s_pow = mpmath.power(s, m)
        total = mpmath.mpf(0)
        quiet = 0
        for k in range(TERM_CAP):
            bracket = ln_s + _mpf_from_rational(-h_k - h_km + h_ak + h_bk)
            term = _mpf_from_rational(r) * s_pow * bracket
            total += term
            if abs(p2 * term) > peak:
                peak = abs(p2 * term)
            if abs(term) <= eps * (abs(total) + abs(part1) / (1 + abs(p2))):
                quiet += 1
                if quiet >= 2:
                    break
            else:
                quiet = 0
            r = r * Fraction((a + m + k) * (b + m + k), (k + 1) * (k + m + 1))
            h_k += Fraction(1, k + 1)
            h_km += Fraction(1, k + m + 1)
            h_ak += Fraction(1, a + m + k)
            h_bk += Fraction(1, b + m + k)
            s_pow *= s
        else:
            raise SeriesConvergenceError(
                "near-unit 2F1 expansion did not converge", TERM_CAP,
                float(term), float(part1 + total)
            )
        sign = -1 if m % 2 else 1
        return part1 - sign * p2 * total, peak

    # m == 0
    pref = Fraction(math.factorial(c - 1),
                    math.factorial(a - 1) * math.factorial(b - 1))
    p = _mpf_from_rational(pref)
    r = Fraction(1)
    h_k = Fraction(0)
    h_ak = _harmonic(a - 1)
    h_bk = _harmonic(b - 1)
    s_pow = mpmath.mpf(1)
    total = mpmath.mpf(0)
    quiet = 0
    for k in range(TERM_CAP):
        bracket = _mpf_from_rational(2 * h_k - h_ak - h_bk) - ln_s
        term = _mpf_from_rational(r) * s_pow * bracket
        total += term
        if abs(p * term) > peak:
            peak = abs(p * term)
        if abs(term) <= eps * abs(total):
            quiet += 1
            if quiet >= 2:
                return p * total, peak
        else:
            quiet = 0
        r = r * Fraction((a + k) * (b + k), (k + 1) * (k + 1))
        h_k += Fraction(1, k + 1)
        h_ak += Fraction(1, a + k)
        h_bk += Fraction(1, b + k)
        s_pow *= s
    raise SeriesConvergenceError(
        "near-unit 2F1 expansion (balanced case) did not converge", TERM_CAP,
        float(term), float(total)
    )


def _is_int(x) -> bool:
    return isinstance(x, int) or (isinstance(x, float) and x.is_integer())


def hyp2f1(a, b, c, z, bits: int) -> HPFloat:
    """Gauss hypergeometric 2F1(a, b; c; z) for real z <= 1.

    Arguments in [0, 1) use the series directly. Negative z goes through
    the Pfaff transform, which maps it into [0, 1); when the transformed
    argument lands close to 1 (deep negative z) and the parameters are
    integers, a near-unit-argument expansion takes over, since the plain
    series would stall there.
    """
    if _is_int(c) and c <= 0:
        raise ValueError(f"hyp2f1 undefined for nonpositive integer c={c}")
    if not (z <= 1):
        raise ValueError(f"hyp2f1 requires z <= 1, got z={z}")
    work = bits + 24
    for _attempt in range(4):
        with mpmath.workprec(work):
            zm = mpmath.mpf(z)
            if z == 1:
                if not (c - a - b > 0):
                    raise ValueError("hyp2f1 diverges at z=1 unless c > a + b")
                val = (mpmath.gamma(c) * mpmath.gamma(c - a - b)
                       / (mpmath.gamma(c - a) * mpmath.gamma(c - b)))
                peak = abs(val)
            elif z >= 0:
                val, peak = _gauss_series(a, b, c, zm)
            else:
                # Pfaff: 2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1))
                zeta = zm / (zm - 1)
                b2 = c - b
                front = mpmath.power(1 - zm, -a)
                all_int = _is_int(a) and _is_int(b2) and _is_int(c)
                if all_int and zeta > 0.5 and int(a) >= 1 and int(b2) >= 1:
                    s = 1 / (1 - zm)
                    ln_s = -mpmath.ln(1 - zm)
                    val, peak = _hyp2f1_near_unit_int(int(a), int(b2), int(c), s, ln_s)
                else:
                    val, peak = _gauss_series(a, b2, c, zeta)
                val = front * val
                peak = abs(front) * peak
            # Bits lost to cancellation: how far the result sits below the
            # largest intermediate contribution.
            if val != 0 and peak > abs(val):
                lost = mpmath.log(peak / abs(val), 2)
            else:
                lost = 0
        if work - lost >= bits + 8:
            break
        work = bits + int(math.ceil(float(lost))) + 32
    with mpmath.workprec(bits):
        return HPFloat(+val, bits)


def _dilog_series(x) -> mpmath.mpf:
    """Direct power series sum_{k>=1} x^k / k^2 for |x| <= 1/2."""
    total = mpmath.mpf(0)
    x_pow = mpmath.mpf(1)
    eps = mpmath.ldexp(1, -(mpmath.mp.prec + 4))
    for k in range(1, TERM_CAP + 1):
        x_pow *= x
        term = x_pow / (k * k)
        total += term
        if abs(term) <= eps * abs(total) and k > 2:
            return total
    raise SeriesConvergenceError(
        "dilogarithm series did not converge", TERM_CAP, float(term), float(total)
    )


def dilog(x: float, bits: int) -> HPFloat:
    """Dilogarithm on [-1, 0], the only range the spacing series need.

    For x in (-1/2, 0] the power series converges fast already; further
    out, the Landen reflection li2(x) = -li2(x/(x-1)) - ln(1-x)^2 / 2
    moves the argument into (0, 1/2].
    """
    if not (-1 <= x <= 0):
        raise ValueError(f"dilog implemented on [-1, 0] only, got {x}")
    work = bits + 24
    with mpmath.workprec(work):
        xm = mpmath.mpf(x)
        if xm == 0:
            val = mpmath.mpf(0)
        elif xm > -0.5:
            val = _dilog_series(xm)
        else:
            u = xm / (xm - 1)
            l = mpmath.ln(1 - xm)
            val = -_dilog_series(u) - l * l / 2
    with mpmath.workprec(bits):
        return HPFloat(+val, bits)


# 15-point Kronrod abscissae (nonnegative half) and weights, with the
# embedded 7-point Gauss weights, standard values.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate((-_XGK[:-1], _XGK[::-1]))          # 15 ascending
_KW = np.concatenate((_WGK[:-1], _WGK[::-1]))               # Kronrod weights
_GW = np.zeros(15)
_GW[1:14:2] = np.concatenate((_WG[:-1], _WG[::-1]))         # Gauss-7 weights

Integrand = Callable[[np.ndarray], np.ndarray]


def _panel(f: Integrand, a: float, b: float):
    h = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + h * _NODES), dtype=float)
    k = h * float(_KW @ fx)
    g = h * float(_GW @ fx)
    return k, abs(k - g)


def quad_adaptive(f: Integrand, lo: float, hi: float, abs_tol: float) -> float:
    """Adaptive Gauss-Kronrod (G7/K15) integration of a vectorized integrand.

    f must map a 1-D numpy array of abscissae to same-shape values.
    Panels are bisected worst-error-first until the summed local error
    estimates drop below abs_tol. Semi-infinite ranges are folded onto
    (0, 1] by x = lo - ln t (exponential-tail assumption; integrands with
    power-law tails should be pre-transformed by the caller). Endpoints
    are never evaluated.

    Raises QuadratureError if the panel budget runs out first.
    """
    if not (abs_tol > 0):
        raise ValueError("abs_tol must be positive")
    if lo == hi:
        return 0.0
    if lo > hi:
        return -quad_adaptive(f, hi, lo, abs_tol)
    if math.isinf(lo) and math.isinf(hi):
        return (quad_adaptive(f, lo, 0.0, abs_tol / 2)
                + quad_adaptive(f, 0.0, hi, abs_tol / 2))
    if math.isinf(hi):
        def g(t, _lo=lo):
            return f(_lo - np.log(t)) / t
        return quad_adaptive(g, 0.0, 1.0, abs_tol)
    if math.isinf(lo):
        def g(t, _hi=hi):
            return f(_hi + np.log(t)) / t
        return quad_adaptive(g, 0.0, 1.0, abs_tol)

    val, err = _panel(f, lo, hi)
    total_val = val
    total_err = err
    heap = [(-err, 0, lo, hi, val)]
    counter = 1
    while total_err > abs_tol and counter < _MAX_PANELS:
        neg_err, _, a, b, old_val = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            # Panel narrower than float spacing: cannot refine further.
            heapq.heappush(heap, (neg_err, counter, a, b, old_val))
            counter += 1
            break
        lv, le = _panel(f, a, mid)
        rv, re = _panel(f, mid, b)
        total_val += lv + rv - old_val
        total_err += le + re + neg_err
        heapq.heappush(heap, (-le, counter, a, mid, lv))
        counter += 1
        heapq.heappush(heap, (-re, counter, mid, b, rv))
        counter += 1
    if total_err > abs_tol:
        raise QuadratureError(
            "quadrature could not reach requested tolerance",
            total_val, total_err,
        )
    return total_val
