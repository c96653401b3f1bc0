"""Quantile-derivative estimator of the expected spacing.

Places n probability levels evenly, maps them through the quantile function,
and estimates the i-th spacing either as a difference of adjacent mapped
levels or as quantile-derivative times grid step.  Each family's simplified
closed form is provided separately so the two routes can be compared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .distributions import DistributionSpec, inv_cdf, inv_cdf_deriv
from .exact import SpacingQuery

__all__ = [
    "QuantileGrid",
    "EstimatorValue",
    "estimate_closed",
    "estimate_derivative",
    "estimate_finite_difference",
]

# Families whose support has no finite lower end; their quantile function
# diverges at p=0, which rules out the plain finite-difference form at i=2.
_UNBOUNDED_BELOW = frozenset({"logistic", "gumbel", "laplace", "cauchy"})

# Lower support endpoint, as a function of the parameter record, for the
# families where inv_cdf(p) has a finite limit as p -> 0.
_SUPPORT_LO = {
    "uniform": lambda g: g["a"],
    "exponential": lambda g: 0.0,
    "pareto": lambda g: g["b"],
    "rayleigh": lambda g: 0.0,
    "weibull": lambda g: 0.0,
    "frechet": lambda g: g["mu"],
}


@dataclass(frozen=True)
class QuantileGrid:
    """Evenly spaced probability levels for n points.

    Generic rule: p(i) = (i-1)/n with step 1/n, so p(1) = 0 sits at the
    support edge and only i >= 2 is evaluable.  The uniform family is bounded
    on both sides and spreads its n points over n+1 equal gaps instead:
    p(i) = i/(n+1) with step 1/(n+1).
    """

    n: int
    uniform_family: bool = False

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")

    def p(self, i: int) -> Fraction:
        if not 1 <= i <= self.n:
            raise ValueError(f"grid index must lie in [1, {self.n}], got {i}")
        if self.uniform_family:
            return Fraction(i, self.n + 1)
        return Fraction(i - 1, self.n)

    @property
    def dp(self) -> Fraction:
        return Fraction(1, self.n + 1) if self.uniform_family else Fraction(1, self.n)


@dataclass(frozen=True)
class EstimatorValue:
    """An estimated expected spacing; rational is set when the closed form
    is rational in the parameters, enabling exact-equality comparisons."""

    value: float
    form: str  # closed_form | finite_difference | derivative_times_dp
    rational: Optional[Fraction] = None

    def __post_init__(self) -> None:
        if self.form not in ("closed_form", "finite_difference", "derivative_times_dp"):
            raise ValueError(f"bad form {self.form!r}")


def _grid(q: SpacingQuery) -> QuantileGrid:
    return QuantileGrid(q.n, uniform_family=(q.spec.family == "uniform"))


def estimate_closed(q: SpacingQuery) -> EstimatorValue:
    """Per-family simplified estimator (quantile derivative times grid step,
    algebra already carried out)."""
    n, i = q.n, q.i
    g = q.spec.params
    fam = q.spec.family
    rational: Optional[Fraction] = None
    if fam == "uniform":
        rational = (Fraction(g["b"]) - Fraction(g["a"])) / (n + 1)
        value = float(rational)
    elif fam == "exponential":
        rational = 1 / (Fraction(g["lambda"]) * (n - i + 1))
        value = float(rational)
    elif fam == "logistic":
        rational = Fraction(g["sigma"]) * n / ((i - 1) * (n - i + 1))
        value = float(rational)
    elif fam == "laplace":
        if 2 * (i - 1) <= n:  # p <= 1/2: left branch
            rational = Fraction(g["sigma"]) / (i - 1)
        else:
            rational = Fraction(g["sigma"]) / (n - i + 1)
        value = float(rational)
    elif fam == "gumbel":
        value = -g["sigma"] / ((i - 1) * math.log((i - 1) / n))
    elif fam == "cauchy":
        value = (math.pi * g["sigma"] / n) / math.cos(math.pi * ((i - 1) / n - 0.5)) ** 2
    elif fam == "pareto":
        a, b = g["a"], g["b"]
        value = (b / a) * n ** (1 / a) * (n - i + 1) ** (-(a + 1) / a)
    elif fam == "rayleigh":
        value = (g["sigma"] / (n - i + 1)) * math.sqrt(-1 / (2 * math.log((n - i + 1) / n)))
    elif fam == "weibull":
        a, b = g["a"], g["b"]
        value = (b / a) * (1 / (n - i + 1)) * (-1 / math.log((n - i + 1) / n)) ** ((a - 1) / a)
    else:  # frechet
        lam, s = g["lambda"], g["sigma"]
        value = (s / lam) * (1 / (i - 1)) * (-1 / math.log((i - 1) / n)) ** ((lam + 1) / lam)
    return EstimatorValue(value, "closed_form", rational)


def estimate_derivative(q: SpacingQuery) -> EstimatorValue:
    """Generic route: quantile derivative at p(i), scaled by the grid step."""
    grid = _grid(q)
    p = grid.p(q.i)
    value = inv_cdf_deriv(q.spec, float(p)) * float(grid.dp)
    return EstimatorValue(value, "derivative_times_dp")


def estimate_finite_difference(q: SpacingQuery) -> EstimatorValue:
    """Difference of adjacent mapped grid levels, F^{-1}(p_i) - F^{-1}(p_{i-1}).

    Partial: at i=2 the lower level is p(1)=0, which lies outside the
    quantile domain for families unbounded below.
    """
    grid = _grid(q)
    p_hi = float(grid.p(q.i))
    p_lo = float(grid.p(q.i - 1))
    fam = q.spec.family
    if p_lo == 0.0:
        if fam in _UNBOUNDED_BELOW:
            raise ValueError(
                f"p(1)=0 is outside the quantile domain for {fam} "
                "(support unbounded below); use the derivative form")
        lo = _SUPPORT_LO[fam](q.spec.params)
    else:
        lo = inv_cdf(q.spec, p_lo)
    value = inv_cdf(q.spec, p_hi) - lo
    return EstimatorValue(value, "finite_difference")
