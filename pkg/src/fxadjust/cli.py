"""Command line front end.

Exit codes: 0 ok, 1 consistency/Monte Carlo check failed, 2 parse or
validation error, 3 invalid model (correlation matrix not PSD, nonpositive
latent variance), 4 domain violation in ``check`` rows.

Exchange rates are quoted as debt-currency units per asset-currency unit, so
a borrower defaults when ``F(1) * A(1) <= D``.
"""
from __future__ import annotations

import argparse
import contextlib
import math
import sys
from pathlib import Path
from typing import Iterator, Sequence, TextIO

from .errors import DomainError, FxAdjustError, ModelValidityError
from .model import (
    FxParams,
    PairParams,
    adjust_pair,
    consistency_residual,
    fx_drift_for_unit_mean,
    homogeneous_adjusted_correlation,
    joint_default_probability,
    rho_star_gap,
)
from .numerics import CorrMatrix3
from .portfolio import (
    InputError,
    Portfolio,
    load_portfolio,
    parse_key_values,
    read_table,
    write_csv,
)
from .simulation import (
    SimConfig,
    correlation_standard_error,
    equivalent_pair,
    simulate_gbm_paths,
    simulate_reduced,
    standard_error,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_MODEL = 3
EXIT_DOMAIN = 4

ADJUST_HEADER = ("id1", "id2", "p1", "p2", "rho", "p1_star", "p2_star", "rho_star")
CHECK_COLUMNS = ("p1", "p2", "p1_star", "p2_star", "rho", "rho_star")


class ModelInputError(FxAdjustError):
    """Model-validity failure tied to a specific pair of the portfolio."""


def _error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


@contextlib.contextmanager
def _open_output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def resolve_fx(portfolio: Portfolio, args: argparse.Namespace) -> FxParams:
    """FX parameters from the ``[fx]`` section, overridden by flags."""
    tau = args.tau if args.tau is not None else portfolio.fx.get("tau")
    if tau is None:
        raise InputError("tau: not given in the [fx] section or via --tau", portfolio.path)
    if args.unit_mean_fx:
        if args.nu is not None:
            raise InputError("nu: --nu and --unit-mean-fx are mutually exclusive")
        nu = fx_drift_for_unit_mean(tau)
    else:
        nu = args.nu if args.nu is not None else portfolio.fx.get("nu", 0.0)
    try:
        return FxParams(nu, tau)
    except DomainError as exc:
        raise InputError(str(exc), portfolio.path) from None


def build_pairs(portfolio: Portfolio, fx: FxParams) -> list[tuple[str, str, PairParams]]:
    out = []
    for row in portfolio.pairs:
        b1 = portfolio.borrowers[row.id1]
        b2 = portfolio.borrowers[row.id2]
        try:
            pair = PairParams(b1.params, b2.params, row.rho, fx)
        except ModelValidityError as exc:
            raise ModelInputError(
                f"{portfolio.path}:{row.line}: pair {row.id1},{row.id2}: {exc}"
            ) from None
        out.append((row.id1, row.id2, pair))
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_adjust(args: argparse.Namespace) -> int:
    portfolio = load_portfolio(args.portfolio)
    fx = resolve_fx(portfolio, args)
    rows = []
    for id1, id2, pair in build_pairs(portfolio, fx):
        try:
            adj = adjust_pair(pair)
        except ModelValidityError as exc:
            raise ModelInputError(f"pair {id1},{id2}: {exc}") from None
        rows.append((id1, id2, pair.b1.pd, pair.b2.pd, pair.rho,
                     adj.pd1_star, adj.pd2_star, adj.rho_star))
    with _open_output(args.output) as out:
        write_csv(out, ADJUST_HEADER, rows)
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    path = args.adjusted
    rows = read_table(Path(path).read_text(), CHECK_COLUMNS, ("id1", "id2"), path)
    results = []
    n_fail = n_domain = 0
    for lineno, row in rows:
        values = {}
        for col in CHECK_COLUMNS:
            try:
                values[col] = float(row[col])
            except ValueError:
                raise InputError(f"{col}: not a number: {row[col]!r}", path, lineno) from None
        ids = (row.get("id1", f"line{lineno}"), row.get("id2", ""))
        args_ = [values[c] for c in CHECK_COLUMNS]
        try:
            res = consistency_residual(*args_)
            gap = rho_star_gap(*args_)
        except DomainError as exc:
            n_domain += 1
            _error(f"{path}:{lineno}: {exc}")
            results.append((*ids, "", "", "domain"))
            continue
        ok = abs(res) <= args.tolerance
        n_fail += not ok
        results.append((*ids, res, gap, "ok" if ok else "fail"))
    with _open_output(args.output) as out:
        write_csv(out, ("id1", "id2", "residual", "rho_star_gap", "status"), results)
    if n_domain:
        return EXIT_DOMAIN
    return EXIT_CHECK_FAILED if n_fail else EXIT_OK


def curve_grid(p: float, points: int) -> list[float]:
    """``points`` equally spaced adjusted PDs strictly inside (p, 0.5)."""
    step = (0.5 - p) / (points + 1)
    return [p + k * step for k in range(1, points + 1)]


def _curve_spec(args: argparse.Namespace) -> tuple[float, float, list[float]]:
    spec: dict[str, str] = {}
    source = args.spec
    if source is not None:
        spec = parse_key_values(Path(source).read_text(), ("p", "rho", "grid", "points"), source)
    for key in ("p", "rho", "grid", "points"):
        value = getattr(args, key)
        if value is not None:
            spec[key] = str(value)
    for key in ("p", "rho"):
        if key not in spec:
            raise InputError(f"{key}: required (flag --{key} or spec file)", source)
    try:
        p = float(spec["p"])
        rho = float(spec["rho"])
    except ValueError as exc:
        raise InputError(f"p/rho: {exc}", source) from None
    if not 0.0 < p < 0.5:
        raise InputError(f"p: must lie in (0, 0.5), got {p!r}", source)
    if not -1.0 <= rho < 1.0:
        raise InputError(f"rho: must lie in [-1, 1), got {rho!r}", source)
    if "grid" in spec:
        try:
            grid = [float(x) for x in spec["grid"].split(",") if x.strip()]
        except ValueError as exc:
            raise InputError(f"grid: {exc}", source) from None
        if not grid:
            raise InputError("grid: empty", source)
    else:
        try:
            points = int(spec.get("points", "99"))
        except ValueError:
            raise InputError(f"points: not an integer: {spec['points']!r}", source) from None
        if points < 1:
            raise InputError(f"points: must be >= 1, got {points}", source)
        grid = curve_grid(p, points)
    for i, x in enumerate(grid):
        if not p < x < 0.5:
            raise InputError(f"grid: point {i} = {x!r} outside the open interval ({p!r}, 0.5)", source)
        if i and x <= grid[i - 1]:
            raise InputError(f"grid: not strictly increasing at point {i} ({x!r})", source)
    return p, rho, grid


def cmd_curve(args: argparse.Namespace) -> int:
    p, rho, grid = _curve_spec(args)
    rows = [(x, homogeneous_adjusted_correlation(p, rho, x)) for x in grid]
    with _open_output(args.output) as out:
        write_csv(out, ("p_star", "rho_star"), rows)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    portfolio = load_portfolio(args.portfolio)
    fx = resolve_fx(portfolio, args)
    try:
        cfg = SimConfig(args.n, args.seed, args.mode, args.n_steps, args.workers)
    except DomainError as exc:
        raise InputError(str(exc)) from None
    if cfg.mode == "gbm_path":
        for row in portfolio.pairs:
            for bid in (row.id1, row.id2):
                b = portfolio.borrowers[bid]
                if b.asset is None:
                    raise InputError("a0: process columns a0,mu,debt,f0 required for --mode gbm_path",
                                     portfolio.path, b.line)
    rows = []
    all_pass = True
    for id1, id2, pair in build_pairs(portfolio, fx):
        try:
            if cfg.mode == "gbm_path":
                b1, b2 = portfolio.borrowers[id1], portfolio.borrowers[id2]
                corr = CorrMatrix3(pair.b1.r, pair.b2.r, pair.rho)
                debts = (b1.debt, b2.debt)
                pair = equivalent_pair(b1.asset, b2.asset, debts, fx, corr)
                est = simulate_gbm_paths(b1.asset, b2.asset, debts, fx, corr, cfg)
            else:
                est = simulate_reduced(pair, cfg)
            adj = adjust_pair(pair)
        except (ModelValidityError, DomainError) as exc:
            raise ModelInputError(f"pair {id1},{id2}: {exc}") from None
        joint = joint_default_probability(adj)
        n = est.n_samples
        checks = (
            ("pd1", adj.pd1_star, est.pd1_hat, standard_error(adj.pd1_star, n)),
            ("pd2", adj.pd2_star, est.pd2_hat, standard_error(adj.pd2_star, n)),
            ("rho", adj.rho_star, est.rho_hat, correlation_standard_error(adj.rho_star, n)),
            ("joint", joint, est.joint_default_hat, standard_error(joint, n)),
        )
        for name, closed, value, se in checks:
            ok = abs(value - closed) <= 3.0 * se
            all_pass &= ok
            rows.append((id1, id2, name, closed, value, se, "PASS" if ok else "FAIL"))
    with _open_output(args.output) as out:
        write_csv(out, ("id1", "id2", "quantity", "closed_form", "estimate", "std_error", "status"), rows)
    return EXIT_OK if all_pass else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _count(text: str) -> int:
    value = float(text)
    if not math.isfinite(value) or value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def _add_fx_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nu", type=float, help="mean of the one-year log FX change (default: [fx] nu or 0)")
    p.add_argument("--tau", type=float, help="FX volatility (default: [fx] tau)")
    p.add_argument("--unit-mean-fx", action="store_true",
                   help="set nu = -tau^2/2 so that the expected FX ratio F(1)/F0 is 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fxadjust",
        description="Adjust PDs and asset correlations for exchange-rate risk.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("adjust", help="adjusted PDs and asset correlation for every pair")
    p.add_argument("portfolio")
    _add_fx_flags(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("check", help="volatility-free consistency check of adjusted rows")
    p.add_argument("adjusted")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("curve", help="adjusted correlation as a function of adjusted PD (homogeneous pair)")
    p.add_argument("spec", nargs="?", help="optional key = value file with p, rho, grid or points")
    p.add_argument("--p", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--grid", help="comma separated adjusted PDs in (p, 0.5)")
    p.add_argument("--points", type=int, help="number of equally spaced grid points (default 99)")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("simulate", help="Monte Carlo check of the closed forms")
    p.add_argument("portfolio")
    _add_fx_flags(p)
    p.add_argument("--n", type=_count, default=1_000_000, help="number of samples per pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("reduced", "gbm_path"), default="reduced")
    p.add_argument("--n-steps", type=int, default=1, help="time steps per path (gbm_path)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelInputError as exc:
        _error(str(exc))
        return EXIT_MODEL
    except ModelValidityError as exc:
        _error(str(exc))
        return EXIT_MODEL
    except (InputError, DomainError) as exc:
        _error(str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _error(f"{exc.filename}: {exc.strerror}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
