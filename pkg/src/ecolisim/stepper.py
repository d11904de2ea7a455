"""Time integration of the four-component chemotaxis-growth system.

One first-order IMEX step treats diffusion implicitly (backward Euler;
direct tridiagonal solve in 1D, approximate-factorization ADI in 2D)
and chemotaxis plus reactions explicitly. The nutrient-to-cells and
cells-to-immobilized transfers are each computed once per step and
applied with opposite signs to both participating fields, so the
weighted total  int u + (1/gamma) int n + int w  is conserved to
rounding regardless of step size; the chemotactic term is a face-flux
divergence and the implicit diffusion matrices have zero column sums,
so neither moves the total either.

The parabolic-elliptic variant replaces the c evolution with the
stationary balance (beta - Lap) c = alpha u, solved by diagonally
preconditioned conjugate gradients warm-started from the previous c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels as K
from .diagnostics import DiagnosticsSeries, MomentWeight, estimate_decay_rate, masses, moment
from .errors import ConfigurationError, NumericsError, SolverError
from .grid import Field, Grid
from .models import (
    ModelParams,
    death_rate_at_zero,
    eval_death,
    eval_growth,
    eval_sensitivity,
    growth_bound,
)

__all__ = [
    "SimState",
    "StepControl",
    "StopRules",
    "Schedule",
    "EllipticSolveSettings",
    "StepStats",
    "RunResult",
    "compute_stable_dt",
    "step_parabolic_parabolic",
    "step_parabolic_elliptic",
    "solve_elliptic_c",
    "run_simulation",
]

MODES = ("parabolic_parabolic", "parabolic_elliptic")

# negativity slack: undershoots above this are clipped to zero,
# anything below aborts the run
NEG_SLACK = 1e-10


@dataclass
class SimState:
    """Fields (u, c, n, w) on one grid at time t."""

    u: Field
    c: Field
    n: Field
    w: Field
    t: float = 0.0

    def __post_init__(self):
        g = self.u.grid
        for name in ("c", "n", "w"):
            if getattr(self, name).grid != g:
                raise ConfigurationError(f"field {name} lives on a different grid")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def copy(self) -> "SimState":
        return SimState(self.u.copy(), self.c.copy(), self.n.copy(), self.w.copy(), self.t)


@dataclass(frozen=True)
class StepControl:
    """Step-size policy and stepping mode."""

    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 0.1
    cfl_advective: float = 0.25
    reaction_safety: float = 0.2
    u_blowup_threshold: float = 1e6
    mode: str = "parabolic_parabolic"
    enforce_nonnegativity: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ConfigurationError("need 0 < dt_min <= dt_init <= dt_max")
        if not (0.0 < self.cfl_advective <= 1.0) or not (0.0 < self.reaction_safety <= 1.0):
            raise ConfigurationError("CFL and reaction safety factors must be in (0, 1]")
        if self.u_blowup_threshold <= 0.0:
            raise ConfigurationError("blow-up threshold must be > 0")


@dataclass(frozen=True)
class StopRules:
    """Steady-state detection and step budget."""

    eps_steady: float = 1e-8
    steady_window: int = 50
    max_steps: int = 5_000_000

    def __post_init__(self):
        if self.eps_steady <= 0.0:
            raise ConfigurationError("eps_steady must be > 0")
        if self.steady_window < 2:
            raise ConfigurationError("steady_window must be >= 2")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be >= 1")


@dataclass(frozen=True)
class Schedule:
    """Output schedule; intervals land exactly (dt is clamped to hit them)."""

    t_end: float
    series_interval: float = 0.1
    snapshot_interval: Optional[float] = None

    def __post_init__(self):
        if self.t_end <= 0.0:
            raise ConfigurationError("t_end must be > 0")
        if self.series_interval <= 0.0:
            raise ConfigurationError("series interval must be > 0")
        if self.snapshot_interval is not None and self.snapshot_interval <= 0.0:
            raise ConfigurationError("snapshot interval must be > 0 when set")


@dataclass(frozen=True)
class EllipticSolveSettings:
    residual_tol: float = 1e-10
    max_iterations: int = 5000


@dataclass
class StepStats:
    clipped: int = 0


def _nonneg_views(state: SimState, control: StepControl):
    """Model functions are defined on [0, inf); when nonnegativity is
    not being enforced (diagnostic runs with signed data) clamp the
    evaluation inputs."""
    if control.enforce_nonnegativity:
        return state.u.values, state.c.values, state.n.values
    return (
        np.maximum(state.u.values, 0.0),
        np.maximum(state.c.values, 0.0),
        np.maximum(state.n.values, 0.0),
    )


def compute_stable_dt(state: SimState, params: ModelParams, control: StepControl) -> tuple[float, bool]:
    """dt = min(dt_max, cfl * h / max|v|, reaction_safety / max(G0 ||n||_inf, B0)).

    The advective speed v is the face-wise gradient of chi(c). Returns
    (dt, underflow); when the formula falls below dt_min the clamped
    dt_min is returned with the underflow flag set.
    """
    g = state.grid
    nl = params.nonlinearities
    _, c_eval, n_eval = _nonneg_views(state, control)
    s = np.asarray(eval_sensitivity(nl.sensitivity, c_eval)[0])
    if g.dim == 1:
        vmax = K.max_face_speed_1d(s, g.spacing[0])
    else:
        vmax = K.max_face_speed_2d(s, g.spacing[0], g.spacing[1])
    dt = control.dt_max
    if vmax > 0.0:
        dt = min(dt, control.cfl_advective * min(g.spacing) / vmax)
    rate = max(growth_bound(nl.growth) * float(np.max(n_eval, initial=0.0)),
               death_rate_at_zero(nl.death))
    if rate > 0.0:
        dt = min(dt, control.reaction_safety / rate)
    if dt < control.dt_min:
        return control.dt_min, True
    return dt, False


def _diffusion_diagonals(n: int, r: float):
    """Diagonals of I - r * T where T is the mirror-closed second
    difference (row sums of T are zero, so the matrix has unit row sums)."""
    dl = np.full(n, -r)
    du = np.full(n, -r)
    dl[0] = 0.0
    du[-1] = 0.0
    d = np.full(n, 1.0 + 2.0 * r)
    d[0] = 1.0 + r
    d[-1] = 1.0 + r
    return dl, d, du


def _implicit_diffuse(values: np.ndarray, grid: Grid, coeff: float, dt: float) -> np.ndarray:
    """Backward-Euler diffusion solve; ADI factorization in 2D."""
    if coeff == 0.0 or dt == 0.0:
        return values.copy()
    if grid.dim == 1:
        h = grid.spacing[0]
        dl, d, du = _diffusion_diagonals(grid.cells[0], dt * coeff / (h * h))
        return np.asarray(K.tridiag_solve(dl, d, du, values))
    hx, hy = grid.spacing
    nx, ny = grid.cells
    dlx, dx, dux = _diffusion_diagonals(nx, dt * coeff / (hx * hx))
    tmp = np.asarray(K.tridiag_solve(dlx, dx, dux, np.ascontiguousarray(values.T)))
    dly, dy, duy = _diffusion_diagonals(ny, dt * coeff / (hy * hy))
    return np.asarray(K.tridiag_solve(dly, dy, duy, np.ascontiguousarray(tmp.T)))


def _chemo_divergence(u: np.ndarray, s: np.ndarray, grid: Grid) -> np.ndarray:
    if grid.dim == 1:
        return np.asarray(K.chemo_div_1d(u, s, grid.spacing[0]))
    return np.asarray(K.chemo_div_2d(u, s, grid.spacing[0], grid.spacing[1]))


def _apply_floor(arr: np.ndarray, what: str, t: float, stats: Optional[StepStats]) -> np.ndarray:
    lo = float(arr.min())
    if math.isnan(lo):
        raise NumericsError(f"{what} became non-finite at t = {t:g}")
    if lo >= 0.0:
        return arr
    if lo < -NEG_SLACK:
        raise NumericsError(
            f"{what} reached {lo:g} at t = {t:g}, beyond the negativity slack "
            f"{-NEG_SLACK:g}; reduce the step size"
        )
    mask = arr < 0.0
    if stats is not None:
        stats.clipped += int(np.count_nonzero(mask))
    arr[mask] = 0.0
    return arr


def _explicit_sources(state: SimState, params: ModelParams, dt: float, control: StepControl,
                      c_for_transport: np.ndarray):
    """Explicit chemotaxis and reactions shared by both stepping modes.

    Returns (u_star, n_star, w_new): u after transport and transfers,
    n after consumption, w after accumulation. The consumption transfer
    is limited to the available nutrient, keeping n nonnegative without
    breaking the exact transfer balance.
    """
    nl = params.nonlinearities
    u0 = state.u.values
    n0 = state.n.values
    w0 = state.w.values
    u_eval, _, n_eval = _nonneg_views(state, control)

    s = np.asarray(eval_sensitivity(nl.sensitivity, c_for_transport)[0])
    adv = _chemo_divergence(u0, s, state.grid)

    gv = np.asarray(eval_growth(nl.growth, u_eval))
    bv = np.asarray(eval_death(nl.death, n_eval))
    transfer = dt * gv * n_eval * u_eval
    np.minimum(transfer, n_eval / params.gamma, out=transfer)
    removal = dt * bv * u_eval

    u_star = u0 - dt * adv + transfer - removal
    n_star = n0 - params.gamma * transfer
    w_new = w0 + removal
    return u_star, n_star, w_new


def step_parabolic_parabolic(
    state: SimState,
    params: ModelParams,
    dt: float,
    *,
    control: Optional[StepControl] = None,
    stats: Optional[StepStats] = None,
) -> SimState:
    """One IMEX step of the fully parabolic system."""
    if dt <= 0.0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    control = control or StepControl()
    g = state.grid
    c0 = state.c.values
    _, c_eval, _ = _nonneg_views(state, control)

    u_star, n_star, w_new = _explicit_sources(state, params, dt, control, c_eval)
    c_star = c0 + dt * (params.alpha * state.u.values - params.beta * c0)

    t1 = state.t + dt
    u_new = _implicit_diffuse(u_star, g, 1.0, dt)
    c_new = _implicit_diffuse(c_star, g, params.d_c, dt)
    n_new = _implicit_diffuse(n_star, g, params.d_n, dt)

    if control.enforce_nonnegativity:
        u_new = _apply_floor(u_new, "u", t1, stats)
        c_new = _apply_floor(c_new, "c", t1, stats)
        n_new = _apply_floor(n_new, "n", t1, stats)
    elif not np.isfinite(u_new).all():
        raise NumericsError(f"u became non-finite at t = {t1:g}")

    return SimState(Field(g, u_new), Field(g, c_new), Field(g, n_new), Field(g, w_new), t=t1)


def solve_elliptic_c(
    u: Field,
    params: ModelParams,
    settings: Optional[EllipticSolveSettings] = None,
    x0: Optional[np.ndarray] = None,
) -> Field:
    """Solve (beta - Lap) c = alpha u with zero-flux boundaries.

    Diagonally preconditioned conjugate gradients; convergence when the
    residual 2-norm drops below residual_tol times ||alpha u||_2. The
    optional x0 warm-starts the iteration (the previous c during time
    stepping). Exceeding max_iterations raises SolverError.
    """
    settings = settings or EllipticSolveSettings()
    if params.beta <= 0.0:
        raise ConfigurationError("the stationary c balance needs beta > 0")
    g = u.grid
    rhs = params.alpha * u.values
    bnorm = math.sqrt(float(np.dot(rhs.ravel(), rhs.ravel())))
    if bnorm == 0.0:
        return Field(g, np.zeros(g.shape))

    if g.dim == 1:
        h = g.spacing[0]
        inv = (1.0 / (h * h),)
        diag = params.beta + 2.0 * inv[0]
    else:
        hx, hy = g.spacing
        inv = (1.0 / (hx * hx), 1.0 / (hy * hy))
        diag = params.beta + 2.0 * (inv[0] + inv[1])

    def apply_op(x):
        if g.dim == 1:
            lap = np.asarray(K.laplacian_1d(x, inv[0]))
        else:
            lap = np.asarray(K.laplacian_2d(x, inv[0], inv[1]))
        return params.beta * x - lap

    x = np.array(x0, dtype=np.float64, copy=True) if x0 is not None else np.zeros(g.shape)
    r = rhs - apply_op(x)
    tol = settings.residual_tol * bnorm

    def rnorm():
        return math.sqrt(float(np.dot(r.ravel(), r.ravel())))

    z = r / diag
    p = z.copy()
    rz = float(np.dot(r.ravel(), z.ravel()))
    res = rnorm()
    for _ in range(settings.max_iterations):
        if res <= tol:
            return Field(g, x)
        ap = apply_op(p)
        alpha = rz / float(np.dot(p.ravel(), ap.ravel()))
        x = x + alpha * p
        r = r - alpha * ap
        res = rnorm()
        z = r / diag
        rz_new = float(np.dot(r.ravel(), z.ravel()))
        p = z + (rz_new / rz) * p
        rz = rz_new
    if res <= tol:
        return Field(g, x)
    raise SolverError(
        f"stationary c solve did not reach residual {settings.residual_tol:g} "
        f"within {settings.max_iterations} iterations (relative residual {res / bnorm:g})"
    )


def step_parabolic_elliptic(
    state: SimState,
    params: ModelParams,
    dt: float,
    *,
    control: Optional[StepControl] = None,
    settings: Optional[EllipticSolveSettings] = None,
    stats: Optional[StepStats] = None,
) -> SimState:
    """One IMEX step with c slaved to u through the stationary balance.

    c is refreshed from the current u first; u and n then advance using
    that c. The returned state carries the refreshed c.
    """
    if dt <= 0.0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    control = control or StepControl()
    g = state.grid
    c_field = solve_elliptic_c(state.u, params, settings, x0=state.c.values)
    if control.enforce_nonnegativity:
        # iterative-solve ripples may dip just below zero where c ~ 0
        c_field = Field(g, _apply_floor(c_field.values, "c", state.t, stats))
    c_state = SimState(state.u, c_field, state.n, state.w, state.t)

    _, c_eval, _ = _nonneg_views(c_state, control)
    u_star, n_star, w_new = _explicit_sources(c_state, params, dt, control, c_eval)

    t1 = state.t + dt
    u_new = _implicit_diffuse(u_star, g, 1.0, dt)
    n_new = _implicit_diffuse(n_star, g, params.d_n, dt)

    if control.enforce_nonnegativity:
        u_new = _apply_floor(u_new, "u", t1, stats)
        n_new = _apply_floor(n_new, "n", t1, stats)
    elif not np.isfinite(u_new).all():
        raise NumericsError(f"u became non-finite at t = {t1:g}")

    return SimState(Field(g, u_new), c_field, Field(g, n_new), Field(g, w_new), t=t1)


@dataclass
class RunResult:
    state: SimState
    series: DiagnosticsSeries
    snapshots: list[SimState]
    cause: str  # "t_end" | "steady_state" | "blow_up"
    detail: str
    steps: int
    clip_count: int
    rates: dict


def run_simulation(
    state: SimState,
    params: ModelParams,
    control: StepControl,
    schedule: Schedule,
    *,
    stop: Optional[StopRules] = None,
    elliptic: Optional[EllipticSolveSettings] = None,
    moment_weight: Optional[MomentWeight] = None,
) -> RunResult:
    """Advance the system until t_end, steady state, or blow-up.

    Steady state means the run was active (sup u exceeded eps_steady at
    some point), sup u has fallen back below eps_steady, and the
    nutrient integral changed relatively less than eps_steady over the
    trailing window; identically zero data therefore runs to t_end.
    Blow-up is flagged when sup u crosses the control threshold or the
    stable dt falls below dt_min. Series and snapshot times are hit
    exactly (dt is clamped to land on them), so rerunning a
    configuration reproduces output byte for byte.
    """
    stop = stop or StopRules()
    state = state.copy()
    stats = StepStats()

    series = DiagnosticsSeries()
    snapshots: list[SimState] = []

    def record():
        rec = masses(state, params)
        if moment_weight is not None:
            rec = replace(rec, moment=moment(state.u, moment_weight))
        series.append(rec)

    if control.mode == "parabolic_elliptic":
        # initial c comes from the stationary balance; incoming c is a
        # warm start only
        try:
            c0 = solve_elliptic_c(state.u, params, elliptic, x0=state.c.values)
            if control.enforce_nonnegativity:
                c0 = Field(state.grid, _apply_floor(c0.values, "c", state.t, stats))
        except (NumericsError, SolverError) as exc:
            record()
            snapshots.append(state.copy())
            return RunResult(
                state=state, series=series, snapshots=snapshots,
                cause="blow_up", detail=str(exc), steps=0,
                clip_count=stats.clipped, rates={"sup_u": None, "m_u": None},
            )
        state.c = c0

    record()
    snapshots.append(state.copy())

    t_end = schedule.t_end
    eps_t = 1e-9
    next_series = state.t + schedule.series_interval
    next_snap = state.t + schedule.snapshot_interval if schedule.snapshot_interval else None

    sup_u = state.u.sup()
    armed = sup_u > stop.eps_steady
    n_window: list[float] = []
    steps = 0
    cause = ""
    detail = ""

    while True:
        if state.t >= t_end - eps_t * max(1.0, abs(t_end)):
            cause = "t_end"
            detail = f"reached t = {state.t:g}"
            break
        if steps >= stop.max_steps:
            raise ConfigurationError(
                f"exceeded max_steps = {stop.max_steps} at t = {state.t:g}; "
                "raise the budget or loosen the step control"
            )

        dt, underflow = compute_stable_dt(state, params, control)
        if underflow:
            cause = "blow_up"
            detail = f"stable dt fell below dt_min = {control.dt_min:g} at t = {state.t:g}"
            break
        if steps == 0:
            dt = min(dt, control.dt_init)

        target = t_end
        if next_series is not None:
            target = min(target, next_series)
        if next_snap is not None:
            target = min(target, next_snap)
        if state.t + dt >= target - eps_t * dt:
            dt = target - state.t
            t_after = target
        else:
            t_after = state.t + dt

        try:
            if control.mode == "parabolic_parabolic":
                state = step_parabolic_parabolic(state, params, dt, control=control, stats=stats)
            else:
                state = step_parabolic_elliptic(
                    state, params, dt, control=control, settings=elliptic, stats=stats
                )
        except (NumericsError, SolverError) as exc:
            # numerical failures terminate the run instead of crashing it;
            # negativity beyond slack and lost solves both signal that the
            # solution has left the regime the scheme can represent
            cause = "blow_up"
            detail = str(exc)
            break
        state.t = t_after  # exact landing on schedule times
        steps += 1

        sup_u = state.u.sup()
        if not math.isfinite(sup_u):
            cause = "blow_up"
            detail = f"u became non-finite at t = {state.t:g}"
            break

        if next_series is not None and state.t == next_series:
            record()
            next_series += schedule.series_interval
        if next_snap is not None and state.t == next_snap:
            snapshots.append(state.copy())
            next_snap += schedule.snapshot_interval

        if sup_u > control.u_blowup_threshold:
            cause = "blow_up"
            detail = f"sup u = {sup_u:g} exceeded threshold {control.u_blowup_threshold:g} at t = {state.t:g}"
            break

        if sup_u > stop.eps_steady:
            armed = True
        m_n = state.n.integral()
        n_window.append(m_n)
        if len(n_window) > stop.steady_window:
            n_window.pop(0)
        if (
            armed
            and sup_u < stop.eps_steady
            and len(n_window) == stop.steady_window
        ):
            base = n_window[0]
            if abs(m_n - base) <= stop.eps_steady * max(abs(base), 1e-300):
                cause = "steady_state"
                detail = f"sup u = {sup_u:g} below {stop.eps_steady:g} with flat nutrient integral"
                break

    if not series.records or series.records[-1].t < state.t:
        record()
    if not snapshots or snapshots[-1].t < state.t:
        snapshots.append(state.copy())

    times = series.times()
    rates = {
        "sup_u": estimate_decay_rate(times, series.column("sup_u")),
        "m_u": estimate_decay_rate(times, series.column("m_u")),
    }
    return RunResult(
        state=state,
        series=series,
        snapshots=snapshots,
        cause=cause,
        detail=detail,
        steps=steps,
        clip_count=stats.clipped,
        rates=rates,
    )
