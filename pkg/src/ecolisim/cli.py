"""Command-line interface.

Subcommands: ``run`` (PDE simulation), ``kinetics`` (well-mixed ODE
reduction), ``validate-model`` (assumption report), ``blowup-scan``
(mass/width phase table for the parabolic-elliptic model),
``emit-plot`` (plain-text panels from stored snapshots), and
``eigencheck`` (pure-diffusion decay-rate verification).

Exit codes: 0 success (for ``run``: reached t_end or steady state),
2 blow-up detected, 1 any error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _kernels, io
from .config import FieldIC, RunConfig, build_initial_state, parse_config
from .diagnostics import blow_up_threshold, estimate_decay_rate, moment_weight
from .errors import EcolisimError, ConfigurationError
from .grid import Field, first_neumann_eigenvalue
from .kinetics import KineticState, integrate_to_steady
from .models import (
    ModelParams,
    NonlinearitySpec,
    constant_death,
    linear_sensitivity,
    validate_assumptions,
    zero_growth,
)
from .stepper import Schedule, SimState, StepControl, run_simulation

logger = logging.getLogger(__name__)

BLOWUP_EXIT = 2


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("-c", "--config", type=Path, default=None, help="INI run configuration")
    p.add_argument("--preset", default=None, help="named parameter preset (e.g. fig2)")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a single config value (repeatable)",
    )


def _load_config(args, default_text: str | None = None) -> RunConfig:
    if args.config is None and args.preset is None and default_text is not None:
        return parse_config(text=default_text, overrides=args.overrides)
    return parse_config(args.config, preset=args.preset, overrides=args.overrides)


def _resolve_output(args, cfg: RunConfig) -> Path:
    out = getattr(args, "output", None) or cfg.output
    if out is None:
        raise ConfigurationError("no output directory; set [run] output or pass --output")
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc}") from None
    return out


def _fit_payload(fit):
    if fit is None:
        return None
    return {
        "rate": fit.rate,
        "t_start": fit.t_start,
        "t_end": fit.t_end,
        "samples": fit.samples,
    }


def _threshold_or_none(cfg: RunConfig):
    sens = cfg.params.nonlinearities.sensitivity
    if sens.kind == "linear" and sens.chi0 > 0.0 and cfg.params.alpha > 0.0:
        return blow_up_threshold(cfg.params.alpha, sens.chi0)
    return None


def _check_model(cfg: RunConfig):
    report = validate_assumptions(cfg.params.nonlinearities)
    if report.status == "fail":
        raise ConfigurationError("model assumptions failed:\n" + report.format())
    if report.status == "warn":
        logger.warning("model assumption warnings:\n%s", report.format())
    return report


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = _resolve_output(args, cfg)
    _check_model(cfg)
    state = build_initial_state(cfg)
    weight = None
    if cfg.moment is not None:
        q, r1, r2 = cfg.moment
        weight = moment_weight(cfg.grid, q, r1, r2)

    result = run_simulation(
        state,
        cfg.params,
        cfg.control,
        cfg.schedule,
        stop=cfg.stop,
        elliptic=cfg.elliptic,
        moment_weight=weight,
    )

    (out / "config_echo.cfg").write_text(cfg.echo())
    io.write_series_csv(out / "series.csv", result.series)
    snap_dir = out / io.SNAPSHOT_DIR
    snap_dir.mkdir(exist_ok=True)
    for idx, snap_state in enumerate(result.snapshots):
        io.write_snapshot(snap_dir / f"snapshot_{idx:05d}.snp", snap_state)

    totals = result.series.column("total")
    drift = float(np.max(np.abs(totals - totals[0]))) / max(abs(totals[0]), 1e-300)
    final = result.series.records[-1]
    payload = {
        "cause": result.cause,
        "detail": result.detail,
        "t_final": result.state.t,
        "steps": result.steps,
        "clip_count": result.clip_count,
        "final": {
            "m_u": final.m_u,
            "m_c": final.m_c,
            "m_n": final.m_n,
            "m_w": final.m_w,
            "total": final.total,
            "sup_u": final.sup_u,
            "sup_c": final.sup_c,
            "sup_w": result.state.w.sup(),
        },
        "conservation_drift": drift,
        "n_inf_estimate": final.m_n / cfg.grid.volume,
        "decay_rates": {k: _fit_payload(v) for k, v in result.rates.items()},
        "blow_up_threshold": _threshold_or_none(cfg),
        "kernel_backend": _kernels.BACKEND,
    }
    if result.cause == "blow_up":
        payload["t_detect"] = result.state.t
    io.write_summary(out / "summary.json", payload)

    print(f"{result.cause}: t = {result.state.t:g}, steps = {result.steps} ({result.detail})")
    print(f"output written to {out}")
    return BLOWUP_EXIT if result.cause == "blow_up" else 0


def cmd_kinetics(args) -> int:
    cfg = _load_config(args)
    if "kinetics" not in cfg.sections_seen:
        raise ConfigurationError("the kinetics command needs a [kinetics] section")
    _check_model(cfg)
    kr = cfg.kinetics
    state = KineticState(kr.u0, kr.c0, kr.n0, kr.w0)
    res = integrate_to_steady(state, cfg.params, tol=kr.tol, t_max=kr.t_max, dt=kr.dt)

    s = res.state
    print(
        f"t = {s.t:g}: u = {s.u:.6g}, c = {s.c:.6g}, n = {s.n:.6g}, w = {s.w:.6g} "
        f"({'converged' if res.converged else 'did not converge by t_max'})"
    )
    if res.rate is not None:
        print(f"fitted u decay rate: {res.rate.rate:.6g} over [{res.rate.t_start:g}, {res.rate.t_end:g}]")
    else:
        print("fitted u decay rate: not available")
    print(f"invariant drift: {res.conservation_residual:.3g}")

    if getattr(args, "output", None) or cfg.output:
        out = _resolve_output(args, cfg)
        io.write_table_csv(
            out / "kinetics.csv",
            ["t", "u", "c", "n", "w"],
            [res.times, res.series["u"], res.series["c"], res.series["n"], res.series["w"]],
        )
        print(f"series written to {out / 'kinetics.csv'}")
    return 0


def cmd_validate_model(args) -> int:
    cfg = _load_config(args)
    report = validate_assumptions(cfg.params.nonlinearities)
    print(report.format())
    return 0 if report.ok else 1


def cmd_blowup_scan(args) -> int:
    cfg = _load_config(args)
    scan = cfg.scan
    if not scan.masses or not scan.widths:
        raise ConfigurationError("blowup-scan needs [blowup_scan] masses and widths")
    if cfg.control.mode != "parabolic_elliptic":
        raise ConfigurationError(
            "blowup-scan requires stepping mode = parabolic_elliptic (threshold theory)"
        )
    if cfg.grid.dim != 2:
        raise ConfigurationError("blowup-scan requires a 2D grid")
    sens = cfg.params.nonlinearities.sensitivity
    if sens.kind != "linear":
        raise ConfigurationError(
            "blowup-scan requires linear sensitivity; the saturating form has no "
            "finite critical mass"
        )
    out = _resolve_output(args, cfg)
    threshold = blow_up_threshold(cfg.params.alpha, sens.chi0)

    center = cfg.ics["u0"].center or tuple(L / 2.0 for L in cfg.grid.extents)
    if cfg.moment is not None:
        q, r1, r2 = cfg.moment
    else:
        q = center
        wall = min(
            q[0], cfg.grid.extents[0] - q[0], q[1], cfg.grid.extents[1] - q[1]
        )
        r1, r2 = 0.25 * wall, 0.5 * wall
    weight = moment_weight(cfg.grid, q, r1, r2)

    cols = {"mass": [], "width": [], "cause": [], "t_final": [], "I0": [], "threshold": []}
    for mass in scan.masses:
        for width in scan.widths:
            ics = dict(cfg.ics)
            ics["u0"] = FieldIC(kind="gaussian", center=center, width=width, mass=mass)
            state = build_initial_state(replace(cfg, ics=ics))
            result = run_simulation(
                state,
                cfg.params,
                cfg.control,
                cfg.schedule,
                stop=cfg.stop,
                elliptic=cfg.elliptic,
                moment_weight=weight,
            )
            i0 = result.series.records[0].moment
            cols["mass"].append(mass)
            cols["width"].append(width)
            cols["cause"].append(result.cause)
            cols["t_final"].append(result.state.t)
            cols["I0"].append(i0)
            cols["threshold"].append(threshold)
            print(
                f"mass = {mass:g}, width = {width:g}: {result.cause} at t = "
                f"{result.state.t:g} (I0 = {i0:g}, threshold = {threshold:g})"
            )
    io.write_table_csv(
        out / "scan.csv",
        list(cols.keys()),
        [cols["mass"], cols["width"], cols["cause"], cols["t_final"], cols["I0"], cols["threshold"]],
    )
    print(f"phase table written to {out / 'scan.csv'}")
    return 0


def cmd_emit_plot(args) -> int:
    paths = io.emit_plot_data(args.run_dir, args.time, args.out)
    for p in paths:
        print(p)
    return 0


_EIGEN_DEFAULT = """
[grid]
dim = 1
lx = 1.0
nx = 400

[model]
d_c = 10.0
beta = 1.0
"""


def _pure_diffusion_params(cfg: RunConfig) -> ModelParams:
    return ModelParams(
        d_c=cfg.params.d_c,
        d_n=1.0,
        alpha=0.0,
        beta=cfg.params.beta,
        gamma=1.0,
        nonlinearities=NonlinearitySpec(
            zero_growth(), constant_death(0.0), linear_sensitivity(0.0)
        ),
    )


def _decay_rate_run(cfg: RunConfig, which: str) -> float:
    """Evolve a first cosine mode in u or c alone and fit its decay."""
    grid = cfg.grid
    params = _pure_diffusion_params(cfg)
    lam = first_neumann_eigenvalue(grid)
    target = lam if which == "u" else params.d_c * lam + params.beta
    dt = min(cfg.control.dt_max, 0.01 / target)
    t_end = math.log(1e3) / target  # three decades of decay
    x = grid.axis_centers(0)
    mode = np.cos(math.pi * x / grid.extents[0])
    zero = Field.zeros(grid)
    if which == "u":
        state = SimState(Field(grid, mode.copy()), zero.copy(), zero.copy(), zero.copy())
    else:
        state = SimState(zero.copy(), Field(grid, mode.copy()), zero.copy(), zero.copy())
    control = StepControl(
        dt_init=dt, dt_min=1e-15, dt_max=dt, mode="parabolic_parabolic",
        enforce_nonnegativity=False,
    )
    schedule = Schedule(t_end=t_end, series_interval=t_end / 400.0)
    result = run_simulation(state, params, control, schedule)
    series = result.series
    fit = estimate_decay_rate(series.times(), series.column(f"sup_{which}"))
    if fit is None:
        raise EcolisimError(f"decay fit unavailable for {which} mode")
    return fit.rate


def cmd_eigencheck(args) -> int:
    cfg = _load_config(args, default_text=_EIGEN_DEFAULT)
    if cfg.grid.dim != 1:
        raise ConfigurationError("eigencheck runs on a 1D grid")
    lam = first_neumann_eigenvalue(cfg.grid)
    params = _pure_diffusion_params(cfg)
    target_u = lam
    target_c = params.d_c * lam + params.beta

    fit_u = _decay_rate_run(cfg, "u")
    fit_c = _decay_rate_run(cfg, "c")
    err_u = abs(fit_u - target_u) / target_u
    err_c = abs(fit_c - target_c) / target_c

    print(f"first nonzero Neumann eigenvalue: {lam:.10g}")
    print(f"u mode: fitted {fit_u:.6g}, target {target_u:.6g}, rel err {err_u:.3%}")
    print(f"c mode: fitted {fit_c:.6g}, target {target_c:.6g}, rel err {err_c:.3%}")
    ok = err_u <= 0.02 and err_c <= 0.02
    print("eigencheck " + ("passed" if ok else "FAILED") + " (tolerance 2%)")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecolisim",
        description="Chemotaxis-growth colony simulator and verification harness",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="verbose logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a PDE simulation")
    _add_config_args(p)
    p.add_argument("-o", "--output", type=Path, default=None, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("kinetics", help="integrate the well-mixed reduction")
    _add_config_args(p)
    p.add_argument("-o", "--output", type=Path, default=None, help="output directory")
    p.set_defaults(func=cmd_kinetics)

    p = sub.add_parser("validate-model", help="check model assumptions")
    _add_config_args(p)
    p.set_defaults(func=cmd_validate_model)

    p = sub.add_parser("blowup-scan", help="mass/width phase table (parabolic-elliptic)")
    _add_config_args(p)
    p.add_argument("-o", "--output", type=Path, default=None, help="output directory")
    p.set_defaults(func=cmd_blowup_scan)

    p = sub.add_parser("emit-plot", help="write u and u+w panels from a stored snapshot")
    p.add_argument("run_dir", type=Path, help="run output directory")
    p.add_argument("--time", type=float, required=True, help="snapshot time to extract")
    p.add_argument("--out", type=Path, default=None, help="panel output directory")
    p.set_defaults(func=cmd_emit_plot)

    p = sub.add_parser("eigencheck", help="verify decay rates against the slowest mode")
    _add_config_args(p)
    p.set_defaults(func=cmd_eigencheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except EcolisimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
