"""Ground truth for spacing moments: quadrature of the definitional
integrals, plus a seeded Monte Carlo harness with reproducible parallelism.

The quadrature path transforms the inner integral to the unit interval via
u = F(x) and maps the outer y-integral to a bounded domain with a tail
substitution matched to the family's decay (exponential-rate families get
t = e^{-c y}, power-tail families get t = 1/(1 + y/s)).

The Monte Carlo path partitions trials into fixed 2^16-trial chunks, gives
every chunk its own counter-derived substream keyed by (seed, chunk index),
and merges chunk statistics in chunk-index order, so results are bitwise
identical for any worker count.
"""
from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .distributions import DistributionSpec, cdf, pdf, _inv_cdf_unchecked
from .estimator import estimate_closed
from .exact import SpacingQuery
from .numerics import QuadratureError, quad_adaptive

__all__ = [
    "SimConfig",
    "SpacingAccumulator",
    "ErrorCurve",
    "MinErrFit",
    "DegenerateFitError",
    "run_simulation",
    "integrate_expected",
    "integrate_second_moment",
    "error_curve",
    "fit_min_error",
    "CHUNK_TRIALS",
]

CHUNK_TRIALS = 1 << 16


class DegenerateFitError(ValueError):
    """Raised when the minimum-error fit has no usable scale variation."""


# ---------------------------------------------------------------------------
# quadrature oracle

# Nominal exponential decay rates of the left/right density tails, as a
# function of the parameter record.  None marks a non-exponential tail:
# super-exponential on the left column (bounded or doubly-exponential
# support edge, no y-decay constraint) and power-law where both are None.
_TAIL_RATES = {
    "exponential": (None, lambda g: g["lambda"]),
    "logistic": (lambda g: 1 / g["sigma"], lambda g: 1 / g["sigma"]),
    "gumbel": (lambda g: 1 / g["sigma"], lambda g: 1 / g["sigma"]),
    "laplace": (lambda g: 1 / g["sigma"], lambda g: 1 / g["sigma"]),
    "rayleigh": (None, lambda g: 1 / g["sigma"]),
    "weibull": (None, lambda g: 1 / g["b"]),
}

_POWER_TAIL_SCALE = {
    "cauchy": lambda g: g["sigma"],
    "pareto": lambda g: g["b"],
    "frechet": lambda g: g["sigma"],
}


_LOG_U_FLOOR = math.log(5e-324)
_U_CEIL = np.nextafter(1.0, 0.0)


def _quad_segments(fn, cuts, lo: float, hi: float, abs_tol: float):
    """Integrate fn over [lo, hi], split at the anchor cuts.

    Returns (value, uncertified_leftover). A segment that stalls short of
    its share keeps its best estimate and reports the shortfall instead of
    raising: the budget handed down by an outer integral divides by that
    integral's jacobian, so near a folded tail it can demand absolute
    tolerances no refinement can certify in float64, and only the caller
    knows the outer weight that decides whether the leftover matters.
    """
    cs = sorted({lo, hi, *(min(hi, max(lo, c)) for c in cuts)})
    segs = [(a, b) for a, b in zip(cs, cs[1:]) if b > a]
    if not segs:
        return 0.0, 0.0
    tol = abs_tol / len(segs)
    vals: list[float] = []
    leftover = 0.0
    for a, b in segs:
        try:
            vals.append(quad_adaptive(fn, a, b, tol))
        except QuadratureError as err:
            vals.append(err.estimate)
            leftover += err.achieved_tol
    return math.fsum(vals), leftover


def _rungs(center: float, count: int = 7):
    # Geometric ladder around an anchor: rung widths grow 4x, keeping any
    # exponential ramp within a bounded dynamic range of one panel's nodes,
    # so the G7/K15 estimate can never miss it entirely.
    for k in range(count):
        off = 0.5 * 4.0**k
        yield center - off
        yield center + off


def _inner_integral(q: SpacingQuery, y: float, abs_tol: float):
    """Integral over the lower point's location at fixed gap y, with the
    substitution u = F(x) collapsing one density factor, carried out in
    s = ln u.

    For large y the mass sits in a multiplicatively narrow window around
    u = F(z* - y), far below the node spacing of any panel on [0, 1]: a
    fixed-node error estimate is blind to it.  In log space that window has
    O(1) width, and splitting at s* = ln F(z* - y) anchors it to segment
    endpoints that bisection resolves geometrically.

    Returns (value, uncertified_leftover); see _quad_segments.
    """
    spec, n, i = q.spec, q.n, q.i

    def g_low(ss: np.ndarray) -> np.ndarray:
        u = np.minimum(np.exp(ss), _U_CEIL)
        x = _inv_cdf_unchecked(spec, u)
        xy = x + y
        up = 1.0 - cdf(spec, xy)
        # u^{i-2} du = u^{i-1} ds, as exp to avoid 0^0 at the floor
        return np.exp(ss * (i - 1)) * up ** (n - i) * pdf(spec, xy)

    z_typ = float(_inv_cdf_unchecked(spec, np.array([i / (n + 1.0)]))[0])
    u_spike = float(cdf(spec, np.array([z_typ - y]))[0])
    u_bulk = (i - 1) / (n + 1.0)
    s_bulk = math.log(u_bulk)

    bulk_cuts = [s_bulk, *(s_bulk - 0.5 * 4.0**k for k in range(5))]
    if spec.family == "uniform":
        # the upper factor vanishes beyond x + y = b; anchor that edge too
        u_edge = float(cdf(spec, np.array([spec.param("b") - y]))[0])
        if 0.0 < u_edge < 1.0:
            bulk_cuts.append(math.log(u_edge))

    if not 0.0 < u_spike < 1e-3 * u_bulk:
        # spike merged with the bulk (or carrying no representable mass):
        # one s-space pass over the whole unit interval
        s_spike = math.log(u_spike) if u_spike > 0.0 else _LOG_U_FLOOR
        cuts = [*bulk_cuts, s_spike, *_rungs(s_spike)]
        return _quad_segments(g_low, cuts, _LOG_U_FLOOR, 0.0, abs_tol)

    # Scales separated. In s the spike's internal structure is compressed
    # by ds/dz = f/F at the far left: harmless for exponential left tails
    # (f/F -> const), but a power-law left tail squeezes the companion
    # point's whole O(1)-wide profile into an s-window ~1/y that narrows
    # out from under any fixed ladder. Integrate the spike region in the
    # companion coordinate v = ln F(x + y), where its width is O(1) at
    # every y, and keep the bulk region in s. Seam at the geometric-mean
    # valley; the two pieces partition x exactly.
    u_mid = math.sqrt(u_spike * u_bulk)
    bulk_val, bulk_left = _quad_segments(
        g_low, bulk_cuts, math.log(u_mid), 0.0, abs_tol / 2.0)

    def g_high(vv: np.ndarray) -> np.ndarray:
        w = np.minimum(np.exp(vv), _U_CEIL)
        x = _inv_cdf_unchecked(spec, w) - y
        # F(x)^{i-2} (1-w)^{n-i} f(x) dw, with dw = e^v dv and 1-e^v via
        # expm1 to keep the near-unit sliver exact
        return (np.exp(vv) * (-np.expm1(vv)) ** (n - i)
                * cdf(spec, x) ** (i - 2) * pdf(spec, x))

    z_floor = float(_inv_cdf_unchecked(spec, np.array([5e-324]))[0])
    w_lo = float(cdf(spec, np.array([z_floor + y]))[0])
    w_hi = float(cdf(spec, np.array([float(_inv_cdf_unchecked(
        spec, np.array([u_mid]))[0]) + y]))[0])
    v_lo = math.log(w_lo) if w_lo > 0.0 else _LOG_U_FLOOR
    v_hi = math.log(min(w_hi, _U_CEIL)) if w_hi > 0.0 else _LOG_U_FLOOR
    if v_hi <= v_lo:
        return bulk_val, bulk_left

    v_peak = math.log(i / (n + 1.0))
    spike_cuts = [v_peak, *_rungs(v_peak),
                  *(v_hi - 0.5 * 4.0**k for k in range(5))]
    spike_val, spike_left = _quad_segments(
        g_high, spike_cuts, v_lo, v_hi, abs_tol / 2.0)
    return bulk_val + spike_val, bulk_left + spike_left


def _integrate_moment(q: SpacingQuery, abs_tol: float, power: int) -> float:
    spec, n, i = q.spec, q.n, q.i
    pref = float(Fraction(math.factorial(n),
                          math.factorial(i - 2) * math.factorial(n - i)))
    inner_budget = abs_tol / 10.0

    def point(y: float, w: float = 1.0) -> float:
        # Pointwise error is kept below inner_budget so the outer
        # quadrature sees an integrand biased by at most abs_tol/10
        # overall. An inner that stalls short of its demand is still
        # accepted in two honest cases: the uncertified leftover, carried
        # through this point's weight, stays within a small multiple of
        # that slice (deep-tail nodes whose outer measure is tiny), or the
        # leftover sits at the inner's own float64 noise floor (1e-9 of
        # its value) where no refinement could certify more anyway; the
        # second case bounds the induced error at 1e-9 relative, which is
        # what a positive integrand propagates to the outer value. Past
        # both bars it raises: the request genuinely cannot be certified.
        wt = w * pref * max(y**power, 1e-12)
        tol = max(inner_budget / wt, 1e-300)
        val, leftover = _inner_integral(q, y, tol)
        if (leftover > 0.0 and wt * leftover > 32.0 * inner_budget
                and leftover > 1e-9 * abs(val)):
            raise QuadratureError(
                "inner integral stalled beyond its share of the error budget",
                val, leftover)
        return w * pref * y**power * val

    fam, g = spec.family, spec.params
    if fam == "uniform":
        hi: Optional[float] = spec.param("b") - spec.param("a")
    elif fam in _TAIL_RATES and not (fam == "weibull" and g["a"] < 1.0):
        # truncate where the integrand, decaying at least like e^{-r y},
        # contributes a tail provably under a tenth of the budget
        left, right = _TAIL_RATES[fam]
        r = (n - i + 1) * right(g)
        if left is not None:
            r = min(r, (i - 1) * left(g))
        hi = (2.0 * power + 6.0) / r
        for _ in range(200):
            t_val = point(hi)
            if 8.0 * t_val / r <= abs_tol / 10.0:
                break
            hi *= 1.6
        else:
            raise QuadratureError(
                "could not locate an integrable tail", t_val, abs_tol)
    else:
        # power-law (or slower-than-exponential) gap decay: fold [0, inf)
        # by t = 1/(1 + y/s); polynomial tails stay polynomial in t
        hi = None
        s = _POWER_TAIL_SCALE.get(fam, lambda g: g.get("b", 1.0))(g)

    if hi is not None:
        def outer(ys: np.ndarray) -> np.ndarray:
            out = np.empty_like(ys)
            for k, y in enumerate(ys):
                out[k] = point(float(y))
            return out

        return quad_adaptive(outer, 0.0, hi, 0.8 * abs_tol)

    def outer_t(ts: np.ndarray) -> np.ndarray:
        out = np.empty_like(ts)
        for k, t in enumerate(ts):
            y = s * (1.0 - t) / t
            out[k] = point(y, w=s / (t * t))
        return out

    return quad_adaptive(outer_t, 0.0, 1.0, 0.9 * abs_tol)


def integrate_expected(q: SpacingQuery, abs_tol: float = 1e-9) -> float:
    """E{D_i} by nested adaptive quadrature of the definitional integral."""
    return _integrate_moment(q, abs_tol, power=1)


def integrate_second_moment(q: SpacingQuery, abs_tol: float = 1e-9) -> float:
    """E{D_i^2} by nested adaptive quadrature."""
    return _integrate_moment(q, abs_tol, power=2)


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True)
class SimConfig:
    spec: DistributionSpec
    n: int
    trials: int
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if self.trials < 1:
            raise ValueError(f"need trials >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.workers < 1:
            raise ValueError(f"need workers >= 1, got {self.workers}")


@dataclass
class SpacingAccumulator:
    """Streaming mean/M2 for the n-1 spacings, mergeable in fixed order."""

    n: int
    count: int
    mean: np.ndarray  # shape (n-1,), index j <-> spacing i = j + 2
    m2: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "SpacingAccumulator":
        return cls(n, 0, np.zeros(n - 1), np.zeros(n - 1))

    def merge(self, other: "SpacingAccumulator") -> "SpacingAccumulator":
        if other.n != self.n:
            raise ValueError("cannot merge accumulators of different n")
        ca, cb = self.count, other.count
        if ca == 0:
            return SpacingAccumulator(self.n, cb, other.mean.copy(), other.m2.copy())
        if cb == 0:
            return SpacingAccumulator(self.n, ca, self.mean.copy(), self.m2.copy())
        tot = ca + cb
        delta = other.mean - self.mean
        mean = self.mean + delta * (cb / tot)
        m2 = self.m2 + other.m2 + delta * delta * (ca * cb / tot)
        return SpacingAccumulator(self.n, tot, mean, m2)

    def se(self) -> np.ndarray:
        """Standard error of each mean spacing."""
        if self.count < 2:
            return np.full(self.n - 1, np.nan)
        return np.sqrt(self.m2 / (self.count * (self.count - 1.0)))


def _chunk_stats(spec: DistributionSpec, n: int, seed: int, chunk_index: int,
                 m: int) -> SpacingAccumulator:
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence((seed, chunk_index))))
    u = rng.random((m, n))
    u.sort(axis=1)
    np.clip(u, 5e-324, np.nextafter(1.0, 0.0), out=u)
    x = _inv_cdf_unchecked(spec, u)
    d = x[:, 1:] - x[:, :-1]
    mean = d.mean(axis=0)
    m2 = np.einsum("ij,ij->j", d - mean, d - mean)
    return SpacingAccumulator(n, m, mean, m2)


def _chunk_worker(args) -> tuple[int, SpacingAccumulator]:
    spec, n, seed, ci, m = args
    return ci, _chunk_stats(spec, n, seed, ci, m)


def run_simulation(cfg: SimConfig) -> SpacingAccumulator:
    """Accumulate spacing means/M2 over cfg.trials sorted samples.

    Output is a pure function of (spec, n, trials, seed): chunk substreams
    are derived from (seed, chunk index) and partial results merge in chunk
    order no matter how many workers computed them.
    """
    n_chunks = (cfg.trials + CHUNK_TRIALS - 1) // CHUNK_TRIALS
    sizes = [CHUNK_TRIALS] * (n_chunks - 1)
    sizes.append(cfg.trials - CHUNK_TRIALS * (n_chunks - 1))
    jobs = [(cfg.spec, cfg.n, cfg.seed, ci, m) for ci, m in enumerate(sizes)]

    acc = SpacingAccumulator.empty(cfg.n)
    if cfg.workers == 1 or n_chunks == 1:
        for job in jobs:
            acc = acc.merge(_chunk_worker(job)[1])
        return acc

    results: dict[int, SpacingAccumulator] = {}
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=ctx) as pool:
        for ci, part in pool.map(_chunk_worker, jobs):
            results[ci] = part
    for ci in range(n_chunks):
        acc = acc.merge(results[ci])
    return acc


# ---------------------------------------------------------------------------
# error curves and the minimum-error fit

@dataclass(frozen=True)
class ErrorCurve:
    """Per-index comparison of the closed-form estimator against simulation."""

    spec: DistributionSpec
    n: int
    trials: int
    seed: int
    i_values: np.ndarray
    simulated_mean: np.ndarray
    simulated_se: np.ndarray
    estimator_value: np.ndarray
    abs_error: np.ndarray
    signed_error: np.ndarray  # estimator - simulated mean


def error_curve(cfg: SimConfig) -> ErrorCurve:
    acc = run_simulation(cfg)
    i_values = np.arange(2, cfg.n + 1)
    est = np.array([
        estimate_closed(SpacingQuery(cfg.spec, cfg.n, int(i))).value
        for i in i_values
    ])
    signed = est - acc.mean
    return ErrorCurve(
        spec=cfg.spec, n=cfg.n, trials=cfg.trials, seed=cfg.seed,
        i_values=i_values, simulated_mean=acc.mean.copy(),
        simulated_se=acc.se(), estimator_value=est,
        abs_error=np.abs(signed), signed_error=signed)


@dataclass(frozen=True)
class MinErrFit:
    """Power-law summary of how the minimum approximation error shrinks
    with n: min_i |error| ~ value_coeff * n^slope (slope near -2), argmin
    near location_coeff * n."""

    family: str
    params_label: str
    n_list: tuple[int, ...]
    slope: float
    fit_residual: float
    value_coeff: float
    location_coeff: float
    argmin_per_n: Mapping[int, int]


def fit_min_error(curves: Sequence[ErrorCurve]) -> MinErrFit:
    """Least-squares slope of log(min abs error) against log n.

    For the Cauchy family the edge indices i=2 and i=n are excluded from the
    minimum: the true spacing means there are infinite, so their sampled
    errors are tail noise, not estimator behavior.
    """
    if len(curves) < 3:
        raise ValueError("need at least 3 error curves for a slope fit")
    fams = {c.spec.family for c in curves}
    labels = {c.spec.params_label() for c in curves}
    if len(fams) != 1 or len(labels) != 1:
        raise ValueError("all curves must share one family and parameter set")
    ns = [c.n for c in curves]
    if len(set(ns)) != len(ns):
        raise ValueError("curves must have distinct n")
    fam = curves[0].spec.family

    minima = []
    argmins: dict[int, int] = {}
    for c in sorted(curves, key=lambda c: c.n):
        idx = c.i_values
        err = c.abs_error
        if fam == "cauchy":
            keep = (idx >= 3) & (idx <= c.n - 1)
            idx, err = idx[keep], err[keep]
        j = int(np.argmin(err))
        minima.append(float(err[j]))
        argmins[c.n] = int(idx[j])

    minima_arr = np.array(minima)
    ns_sorted = np.array(sorted(ns), dtype=float)
    if minima_arr.min() <= 0 or minima_arr.max() / minima_arr.min() < 2.0:
        raise DegenerateFitError(
            "minimum errors do not vary enough across n for a slope fit "
            f"(minima {minima_arr.tolist()}); likely at the simulation noise floor")
    logn, logm = np.log(ns_sorted), np.log(minima_arr)
    slope, intercept = np.polyfit(logn, logm, 1)
    resid = float(np.sqrt(np.mean((logm - (slope * logn + intercept)) ** 2)))
    # min_err ~ value_coeff * n^slope; with slope near -2 this is the c of
    # the inverse-square law c / n^2
    value_coeff = float(np.exp(intercept))
    location_coeff = float(np.mean([argmins[int(n)] / n for n in ns_sorted]))
    return MinErrFit(
        family=fam, params_label=curves[0].spec.params_label(),
        n_list=tuple(int(n) for n in ns_sorted), slope=float(slope),
        fit_residual=resid, value_coeff=value_coeff,
        location_coeff=location_coeff, argmin_per_n=argmins)
