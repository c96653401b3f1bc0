"""Command-line surface: closed forms, the quantile estimator, quadrature
oracles, seeded simulations, error curves, and the minimum-error fit,
emitted as CSV or JSON rows suitable for tables and plots.

Exit codes: 0 success; 2 usage or domain error (bad flags, unknown family,
index out of range, no closed form, failed numerics); 3 unwritable output.
Identical invocations produce identical output bytes.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .distributions import DistributionSpec, parse_distribution
from .estimator import estimate_closed
from .exact import (
    SpacingQuery,
    UnsupportedFamilyError,
    expected_spacing,
    spacing_variance,
)
from .numerics import PrecisionIssue, QuadratureError, SeriesConvergenceError
from .simulate import (
    DegenerateFitError,
    SimConfig,
    error_curve,
    fit_min_error,
    integrate_expected,
    run_simulation,
)

CSV_HEADER = ("family,params,n,i,estimator,exact,oracle,"
              "simulated_mean,simulated_se,abs_error")
_FIELDS = CSV_HEADER.split(",")

_EXACT_FAMILIES = frozenset({"uniform", "exponential", "logistic", "gumbel"})


def _fmt(x: Optional[float]) -> str:
    """17-significant-digit scientific rendering; NA for absent values."""
    return "NA" if x is None else f"{x:.16e}"


def _fmt_console(x: float) -> str:
    return f"{x:.15g}"


def _record(spec: DistributionSpec, n: int, i: int, estimator: float,
            exact: Optional[float] = None, oracle: Optional[float] = None,
            simulated_mean: Optional[float] = None,
            simulated_se: Optional[float] = None,
            abs_error: Optional[float] = None) -> dict:
    return {
        "family": spec.family,
        "params": spec.params_label(),
        "n": str(n),
        "i": str(i),
        "estimator": _fmt(estimator),
        "exact": _fmt(exact),
        "oracle": _fmt(oracle),
        "simulated_mean": _fmt(simulated_mean),
        "simulated_se": _fmt(simulated_se),
        "abs_error": _fmt(abs_error),
    }


def _emit(records: list[dict], out: Optional[str], fmt: str) -> None:
    if fmt == "json":
        body = json.dumps(records, indent=2) + "\n"
    else:
        lines = [CSV_HEADER]
        lines.extend(",".join(rec[k] for k in _FIELDS) for rec in records)
        body = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(body)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
    except OSError as exc:
        raise _OutputError(f"cannot write {out}: {exc}") from exc


class _OutputError(Exception):
    """Unwritable output destination; mapped to exit code 3."""


class _DomainError(Exception):
    """Well-formed request that cannot be satisfied; mapped to exit code 2."""


def _indices(args: argparse.Namespace, n: int) -> list[int]:
    if getattr(args, "all_i", False):
        return list(range(2, n + 1))
    if args.i is None:
        raise _DomainError("one of --i or --all-i is required")
    return [args.i]


def _parse_spec(text: str) -> DistributionSpec:
    try:
        return parse_distribution(text)
    except ValueError as exc:
        raise _DomainError(str(exc)) from exc


def _query(spec: DistributionSpec, n: int, i: int) -> SpacingQuery:
    try:
        return SpacingQuery(spec, n, i)
    except (TypeError, ValueError) as exc:
        raise _DomainError(str(exc)) from exc


def _wants_records(args: argparse.Namespace) -> bool:
    return args.out is not None or args.format is not None


def _cmd_exact(args: argparse.Namespace) -> int:
    spec = _parse_spec(args.dist)
    idx = _indices(args, args.n)
    records = []
    console = []
    for i in idx:
        q = _query(spec, args.n, i)
        try:
            e = expected_spacing(q, rel_tol=args.tol, bits=args.precision_bits)
        except UnsupportedFamilyError as exc:
            raise _DomainError(str(exc)) from exc
        e_float = e.to_float()
        v = None
        try:
            v = spacing_variance(q, rel_tol=args.tol, bits=args.precision_bits)
        except UnsupportedFamilyError:
            pass
        est = estimate_closed(q)
        records.append(_record(spec, args.n, i, est.value, exact=e_float,
                               abs_error=abs(est.value - e_float)))
        if len(idx) > 1:
            console.append(f"i = {i}")
        console.append(f"exact = {_fmt_console(e_float)}")
        if args.rational and e.rational_part is not None:
            r = e.rational_part
            console.append(f"exact_rational = {r.numerator}/{r.denominator}")
        if v is not None:
            console.append(f"variance = {_fmt_console(v.to_float())}")
            if args.rational and v.rational_part is not None:
                r = v.rational_part
                console.append(
                    f"variance_rational = {r.numerator}/{r.denominator}")
    if _wants_records(args):
        _emit(records, args.out, args.format or "csv")
    else:
        sys.stdout.write("\n".join(console) + "\n")
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    spec = _parse_spec(args.dist)
    idx = _indices(args, args.n)
    records = []
    console = []
    for i in idx:
        q = _query(spec, args.n, i)
        est = estimate_closed(q)
        records.append(_record(spec, args.n, i, est.value))
        if len(idx) > 1:
            console.append(f"i = {i}")
        console.append(f"estimator = {_fmt_console(est.value)}")
        if args.rational and est.rational is not None:
            console.append(
                f"estimator_rational = "
                f"{est.rational.numerator}/{est.rational.denominator}")
    if _wants_records(args):
        _emit(records, args.out, args.format or "csv")
    else:
        sys.stdout.write("\n".join(console) + "\n")
    return 0


def _cmd_integrate(args: argparse.Namespace) -> int:
    spec = _parse_spec(args.dist)
    idx = _indices(args, args.n)
    records = []
    console = []
    for i in idx:
        q = _query(spec, args.n, i)
        oracle = integrate_expected(q, abs_tol=args.tol)
        est = estimate_closed(q)
        records.append(_record(spec, args.n, i, est.value, oracle=oracle,
                               abs_error=abs(est.value - oracle)))
        if len(idx) > 1:
            console.append(f"i = {i}")
        console.append(f"oracle = {_fmt_console(oracle)}")
    if _wants_records(args):
        _emit(records, args.out, args.format or "csv")
    else:
        sys.stdout.write("\n".join(console) + "\n")
    return 0


def _exact_or_none(q: SpacingQuery) -> Optional[float]:
    if q.spec.family not in _EXACT_FAMILIES:
        return None
    return expected_spacing(q).to_float()


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = _parse_spec(args.dist)
    cfg = SimConfig(spec=spec, n=args.n, trials=args.trials,
                    seed=args.seed, workers=args.workers)
    acc = run_simulation(cfg)
    se = acc.se()
    records = []
    for j, i in enumerate(range(2, args.n + 1)):
        q = SpacingQuery(spec, args.n, i)
        est = estimate_closed(q)
        records.append(_record(spec, args.n, i, est.value,
                               exact=_exact_or_none(q),
                               simulated_mean=float(acc.mean[j]),
                               simulated_se=float(se[j])))
    _emit(records, args.out, args.format or "csv")
    return 0


def _cmd_error_curve(args: argparse.Namespace) -> int:
    spec = _parse_spec(args.dist)
    cfg = SimConfig(spec=spec, n=args.n, trials=args.trials,
                    seed=args.seed, workers=args.workers)
    curve = error_curve(cfg)
    records = []
    for j, i in enumerate(curve.i_values):
        q = SpacingQuery(spec, args.n, int(i))
        records.append(_record(
            spec, args.n, int(i), float(curve.estimator_value[j]),
            exact=_exact_or_none(q),
            simulated_mean=float(curve.simulated_mean[j]),
            simulated_se=float(curve.simulated_se[j]),
            abs_error=float(curve.abs_error[j])))
    _emit(records, args.out, args.format or "csv")
    return 0


def _cmd_fit_min_error(args: argparse.Namespace) -> int:
    if args.format == "csv":
        raise _DomainError(
            "fit-min-error emits a single JSON object; csv is not available")
    spec = _parse_spec(args.dist)
    try:
        n_list = [int(tok) for tok in args.n_list.split(",") if tok]
    except ValueError as exc:
        raise _DomainError(f"bad --n-list: {exc}") from exc
    if len(n_list) < 3:
        raise _DomainError("--n-list needs at least 3 distinct n values")
    curves = [
        error_curve(SimConfig(spec=spec, n=n, trials=args.trials,
                              seed=args.seed, workers=args.workers))
        for n in n_list
    ]
    try:
        fit = fit_min_error(curves)
    except (DegenerateFitError, ValueError) as exc:
        raise _DomainError(str(exc)) from exc
    payload = {
        "family": fit.family,
        "params": fit.params_label,
        "n_list": list(fit.n_list),
        "slope": fit.slope,
        "fit_residual": fit.fit_residual,
        "value_coeff": fit.value_coeff,
        "location_fraction": fit.location_coeff,
        "argmin_per_n": {str(n): fit.argmin_per_n[n] for n in fit.n_list},
    }
    body = json.dumps(payload, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(body)
    else:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(body)
        except OSError as exc:
            raise _OutputError(f"cannot write {args.out}: {exc}") from exc
    return 0


def _add_index_flags(p: argparse.ArgumentParser) -> None:
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--i", type=int, default=None,
                     help="spacing index in [2, n]")
    grp.add_argument("--all-i", action="store_true",
                     help="every index from 2 through n")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output file path")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="spacings",
        description="Order-statistic spacing moments: exact forms, the "
                    "quantile estimator, quadrature oracles, simulation.")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="closed-form expected spacing/variance")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    _add_index_flags(p)
    p.add_argument("--precision-bits", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-10,
                   help="relative tolerance for series-backed values")
    p.add_argument("--rational", action="store_true")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("estimate", help="quantile-derivative estimator")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    _add_index_flags(p)
    p.add_argument("--rational", action="store_true")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("integrate", help="quadrature oracle for E{D_i}")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    _add_index_flags(p)
    p.add_argument("--tol", type=float, default=1e-9,
                   help="absolute quadrature tolerance")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_integrate)

    p = sub.add_parser("simulate", help="seeded Monte Carlo spacing means")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    _add_sim_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("error-curve",
                       help="estimator-vs-simulation error per index")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    _add_sim_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_error_curve)

    p = sub.add_parser("fit-min-error",
                       help="power-law fit of the minimum error across n")
    p.add_argument("--dist", required=True)
    p.add_argument("--n-list", required=True,
                   help="comma-separated n values, e.g. 10,25,50")
    _add_sim_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_fit_min_error)

    return top


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, UnsupportedFamilyError, PrecisionIssue,
            QuadratureError, SeriesConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
