"""Command-line entry point: ``odebound {oracle,surrogate,bound,experiment}``.

Exit codes: 0 success, 1 hard error, 2 soft flag (non-convergence or a
bound that is only valid on part of the domain).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments, oracle
from .approx import (
    BoundCurve,
    NonConvergenceError,
    approximate_bound_pipeline,
    check_convergence,
    loose_bound,
    select_order,
    tight_bound,
)
from .grid import TimeGrid
from .io import (
    ConfigError,
    RunConfig,
    build_config,
    read_key_values,
    read_surrogate_csv,
    write_columns,
    write_constants,
    write_curve_csv,
    write_orders_csv,
    write_rows,
    write_surrogate_csv,
)
from .models import OdeModel, custom_riccati, get_model, loss
from .riccati import BoundInapplicableError, exact_bound, exact_constants, select_J_for_tolerance
from .series import EtaSeries
from .surrogates import perturbed_oracle

log = logging.getLogger("odebound")

EXIT_OK, EXIT_ERROR, EXIT_FLAGGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is reserved for soft flags here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- configuration ---------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value settings file; flags override it")
    p.add_argument("--model", help="population, cosmology, or riccati (with A, B, C, t0, u0, t_end in the config)")
    p.add_argument("--grid", help="'N' or 't_start,t_end,N' (default: model domain, 10001 nodes)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default: $ODEBOUND_OUT or ./odebound-out)")


def _add_surrogate_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scale", type=float, help="perturbation sup-norm of the factory surrogate (default 1e-5)")
    p.add_argument("--mode-count", type=int)
    p.add_argument("--surrogate-csv", help="read v and dv from a t,v,dv CSV instead")


def _add_tolerances(p: argparse.ArgumentParser) -> None:
    for which in ("p", "j"):
        p.add_argument(f"--eps-abs-{which}", type=float)
        p.add_argument(f"--eps-rel-{which}", type=float)
    p.add_argument("--max-order", type=int)
    p.add_argument("--eps", type=float, help="tail tolerance for the exact bound (default 1e-8)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="odebound", description="A-posteriori error bounds for approximate ODE solutions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("oracle", help="reference solution to oracle.csv")
    _add_common(p)

    p = sub.add_parser("surrogate", help="factory surrogate to surrogate.csv")
    _add_common(p)
    _add_surrogate_source(p)

    p = sub.add_parser("bound", help="bound curve, series orders and constants")
    _add_common(p)
    _add_surrogate_source(p)
    _add_tolerances(p)
    p.add_argument("--kind", choices=("loose", "tight", "exact"))
    p.add_argument("--order", type=int, help="fix J instead of selecting it")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG figure")

    p = sub.add_parser("experiment", help="loss ladder replica with every bound variant")
    p.add_argument("figure", choices=("approx", "exact"))
    _add_common(p)
    _add_tolerances(p)
    p.add_argument("--scales", help="comma-separated, strictly decreasing ladder scales")
    p.add_argument("--mode-count", type=int)
    p.add_argument("--no-figures", action="store_true", help="skip the PNG figure")
    return parser


_NOT_SETTINGS = {"command", "verbose", "config", "no_figures", "figure", "scales"}


def resolve_config(args: argparse.Namespace, **defaults) -> RunConfig:
    values: dict[str, str] = dict(defaults)
    if args.config:
        values.update(read_key_values(args.config))
    for key, value in vars(args).items():
        if key not in _NOT_SETTINGS and value is not None:
            values[key] = str(value)
    return build_config(values)


def build_model(cfg: RunConfig) -> OdeModel:
    if cfg.model == "riccati":
        r = cfg.riccati
        return custom_riccati(r["a"], r["b"], r["c"], float(r["t0"]), float(r["u0"]), cfg.t_end)
    return get_model(cfg.model)


def build_grid(cfg: RunConfig, model: OdeModel) -> TimeGrid:
    t_start = model.t0 if cfg.t_start is None else cfg.t_start
    t_end = model.t_end if cfg.t_end is None else cfg.t_end
    return TimeGrid(t_start, t_end, cfg.n_points)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands ---------------------------------------------------------------


def cmd_oracle(cfg: RunConfig) -> int:
    model = build_model(cfg)
    sol = oracle.solve(model, build_grid(cfg, model))
    path = write_columns(_out_dir(cfg) / "oracle.csv", {"t": sol.grid.t, "u": sol.u.values, "du": sol.du.values})
    print(f"wrote {path} ({sol.stats['accepted']} steps)")
    return EXIT_OK


def _surrogate(cfg: RunConfig, model: OdeModel, grid: TimeGrid):
    if cfg.surrogate_csv:
        return read_surrogate_csv(cfg.surrogate_csv, grid)
    return perturbed_oracle(model, grid, cfg.scale, cfg.mode_count, cfg.seed)


def cmd_surrogate(cfg: RunConfig) -> int:
    model = build_model(cfg)
    s = _surrogate(cfg, model, build_grid(cfg, model))
    path = write_surrogate_csv(_out_dir(cfg) / "surrogate.csv", s)
    print(f"wrote {path} (loss {loss(model, s):.6e})")
    return EXIT_OK


def _approx_curve(cfg: RunConfig, model, surrogate, series: EtaSeries) -> BoundCurve:
    tol = cfg.tol
    if cfg.kind == "tight" and cfg.order is None:
        return approximate_bound_pipeline(model, surrogate, tol, series)
    converged = True
    if cfg.order is None:
        try:
            J = select_order(series, tol, "J")
        except NonConvergenceError as exc:
            log.warning("%s", exc)
            J, converged = tol.max_order, False
    else:
        J = cfg.order
    if cfg.kind == "loose":
        curve = loose_bound(series, J)
        P = None
    else:
        try:
            P = min(select_order(series, tol, "P"), J)
        except NonConvergenceError as exc:
            log.warning("%s", exc)
            P, converged = min(exc.best_order, J), False
        curve = tight_bound(series, P, J)
    converged = converged and check_convergence(series, J)
    return BoundCurve(cfg.kind, series.grid, curve.values, J=J, P=P, converged=converged)


def cmd_bound(cfg: RunConfig, figures: bool = True) -> int:
    model = build_model(cfg)
    grid = build_grid(cfg, model)
    surrogate = _surrogate(cfg, model, grid)
    series = EtaSeries(model, surrogate, max_order=cfg.tol.max_order)

    riccati = model.taylor_degree is not None and model.taylor_degree <= 2
    constants = exact_constants(model, surrogate, series.residual) if riccati else None
    if cfg.kind == "exact":
        if constants is None:
            raise BoundInapplicableError(f"kind=exact needs a Riccati model, got {model.name}", math.nan)
        J = select_J_for_tolerance(constants, cfg.eps) if cfg.order is None else cfg.order
        curve = exact_bound(model, surrogate, J, series, constants)
    else:
        curve = _approx_curve(cfg, model, surrogate, series)

    out = _out_dir(cfg)
    write_curve_csv(out / "bound_curve.csv", curve)
    write_orders_csv(out / "orders.csv", series, curve.J)
    values = {
        "model": model.name,
        "kind": curve.kind,
        "R": constants.R if constants else math.nan,
        "K": constants.K if constants else math.nan,
        "P": "none" if curve.P is None else curve.P,
        "J": curve.J,
        "converged": int(curve.converged),
        "fully_valid": int(curve.fully_valid),
        "loss": loss(model, surrogate),
    }
    if cfg.kind == "exact":
        values.update(eps=cfg.eps, tail_sup=curve.constants["tail_sup"], rk_span=constants.rk_span)
    write_constants(out / "constants.txt", values)
    if figures:
        from .report import plot_bound

        plot_bound(out / "bound.png", curve, partial_sum=series.partial_sum(curve.J))

    flagged = not (curve.converged and curve.fully_valid)
    P = "-" if curve.P is None else curve.P
    print(f"{curve.kind} bound: P={P} J={curve.J} sup={np.nanmax(curve.values):.6e} -> {out}")
    if flagged:
        print("flagged: " + ("not converged" if not curve.converged else "bound valid on part of the domain only"))
    return EXIT_FLAGGED if flagged else EXIT_OK


def _parse_scales(text: str | None):
    if text is None:
        return None
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError([f"scales: expected comma-separated numbers, got {text!r}"]) from None


def cmd_experiment(cfg: RunConfig, figure: str, scales=None, figures: bool = True) -> int:
    model = build_model(cfg)
    grid = build_grid(cfg, model)
    if figure == "approx":
        records = experiments.run_approx(
            cfg.seed, scales or experiments.APPROX_SCALES, cfg.tol, model, grid, cfg.mode_count
        )
    else:
        records = experiments.run_exact(cfg.seed, scales or experiments.EXACT_SCALES, cfg.eps, model, grid, cfg.mode_count)

    out = _out_dir(cfg)
    for rec in records:
        write_curve_csv(out / f"{figure}_rung{rec.rung}_{rec.label}.csv", rec.curve, rec.abs_error)
    rows = [rec.summary_row(figure, cfg.seed) for rec in records]
    write_rows(out / f"{figure}_summary.csv", rows)
    if figures:
        from .report import plot_experiment

        plot_experiment(out / f"{figure}.png", records, title=f"{model.name}, seed {cfg.seed}")

    for row in rows:
        print(
            f"rung {row['rung']} scale {row['scale']:.0e} {row['bound']:<10} P={row['P'] if row['P'] != '' else '-'} "
            f"J={row['J']} coverage={row['coverage']:.4f}"
        )
    flagged = any(not (r.curve.converged and r.curve.fully_valid) for r in records)
    return EXIT_FLAGGED if flagged else EXIT_OK


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    try:
        if args.command == "experiment":
            default_model = "population" if args.figure == "approx" else "cosmology"
            cfg = resolve_config(args, model=default_model, kind="exact" if args.figure == "exact" else "tight")
            return cmd_experiment(cfg, args.figure, _parse_scales(args.scales), not args.no_figures)
        cfg = resolve_config(args)
        if args.command == "oracle":
            return cmd_oracle(cfg)
        if args.command == "surrogate":
            return cmd_surrogate(cfg)
        return cmd_bound(cfg, not args.no_figures)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # single-line diagnostic for every hard failure
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
