"""Spatially homogeneous (well-mixed) kinetics.

Dropping diffusion and transport leaves the reaction system

    du/dt = g(u) n u - b(n) u
    dc/dt = alpha u - beta c
    dn/dt = -gamma g(u) n u
    dw/dt = b(n) u

integrated here with classical RK4. The combination u + n/gamma + w is
a linear invariant of the right-hand side, so every Runge-Kutta stage
combination conserves it exactly (up to rounding); trajectories from
nonnegative data converge to (0, 0, n_inf, w_inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import DecayFit, estimate_decay_rate
from .errors import ConfigurationError, NumericsError
from .models import ModelParams, eval_death, eval_growth

__all__ = ["KineticState", "KineticsResult", "kinetics_rhs", "step_kinetics", "integrate_to_steady"]


@dataclass(frozen=True)
class KineticState:
    u: float
    c: float
    n: float
    w: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("u", "c", "n", "w"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ConfigurationError(f"kinetic state {name} must be finite and >= 0, got {v}")

    @property
    def total(self) -> float:
        # gamma-weighted invariant is total(gamma); plain sum kept for display
        return self.u + self.c + self.n + self.w

    def invariant(self, gamma: float) -> float:
        return self.u + self.n / gamma + self.w


def kinetics_rhs(u: float, c: float, n: float, w: float, params: ModelParams) -> tuple[float, float, float, float]:
    """Right-hand side of the well-mixed system at (u, c, n, w)."""
    nl = params.nonlinearities
    transfer = eval_growth(nl.growth, u) * n * u
    removal = eval_death(nl.death, n) * u
    du = transfer - removal
    dc = params.alpha * u - params.beta * c
    dn = -params.gamma * transfer
    dw = removal
    return du, dc, dn, dw


def _scalar_rhs(params: ModelParams):
    """Specialized closure equal to kinetics_rhs with stage clamping.

    The per-call dispatch in eval_growth/eval_death dominates the cost
    of long fixed-step integrations, so the integrator binds the model
    constants once. Tests pin this against kinetics_rhs directly.
    """
    nl = params.nonlinearities
    g = nl.growth
    b = nl.death
    alpha, beta, gamma = params.alpha, params.beta, params.gamma

    if g.kind == "tanh":
        s, k, u0 = g.scale, g.steepness, g.offset
        growth = lambda u: 0.5 * s * (1.0 + math.tanh(k * (u - u0)))
    elif g.kind == "zero":
        growth = lambda u: 0.0
    else:
        growth = lambda u: float(np.interp(u, g.table_x, g.table_v))

    if b.kind == "constant":
        death = lambda n: b.b0
    elif b.kind == "rational":
        death = lambda n: b.b0 / (1.0 + b.slope * n)
    else:
        death = lambda n: float(np.interp(n, b.table_x, b.table_v))

    def rhs(u, c, n, w):
        if u < 0.0:
            u = 0.0
        if c < 0.0:
            c = 0.0
        if n < 0.0:
            n = 0.0
        transfer = growth(u) * n * u
        removal = death(n) * u
        return transfer - removal, alpha * u - beta * c, -gamma * transfer, removal

    return rhs


_NEG_SLACK = 1e-12


def _rk4_core(u, c, n, w, t, rhs, dt) -> tuple[float, float, float, float]:
    """One RK4 update on plain floats; shared by the public entry points.

    ``rhs`` must clamp interior stages at zero itself (the model
    functions are only defined for nonnegative arguments); _scalar_rhs
    does. Tiny negative undershoots of the result (within 1e-12) are
    clipped; anything larger is a numerics error.
    """
    k1 = rhs(u, c, n, w)
    k2 = rhs(u + 0.5 * dt * k1[0], c + 0.5 * dt * k1[1], n + 0.5 * dt * k1[2], w + 0.5 * dt * k1[3])
    k3 = rhs(u + 0.5 * dt * k2[0], c + 0.5 * dt * k2[1], n + 0.5 * dt * k2[2], w + 0.5 * dt * k2[3])
    k4 = rhs(u + dt * k3[0], c + dt * k3[1], n + dt * k3[2], w + dt * k3[3])

    sixth = dt / 6.0
    out = []
    for name, v, a, b_, c_, d_ in zip("ucnw", (u, c, n, w), k1, k2, k3, k4):
        v = v + sixth * (a + 2.0 * b_ + 2.0 * c_ + d_)
        if not math.isfinite(v):
            raise NumericsError(f"kinetics produced non-finite {name} at t = {t:g}")
        if v < 0.0:
            if v < -_NEG_SLACK:
                raise NumericsError(
                    f"kinetics drove {name} to {v:g} at t = {t:g}; reduce dt"
                )
            v = 0.0
        out.append(v)
    return out[0], out[1], out[2], out[3]


def step_kinetics(state: KineticState, params: ModelParams, dt: float) -> KineticState:
    """One RK4 step returning a validated state at t + dt."""
    rhs = _scalar_rhs(params)
    u, c, n, w = _rk4_core(state.u, state.c, state.n, state.w, state.t, rhs, dt)
    return KineticState(u, c, n, w, t=state.t + dt)


@dataclass
class KineticsResult:
    state: KineticState
    rate: Optional[DecayFit]
    converged: bool
    times: list[float]
    series: dict[str, list[float]]  # keys u, c, n, w
    conservation_residual: float


def integrate_to_steady(
    state: KineticState,
    params: ModelParams,
    *,
    tol: float = 1e-8,
    t_max: float = 2000.0,
    dt: float = 0.01,
    record_every: int = 1,
) -> KineticsResult:
    """Integrate until max(u, c) < tol or t_max is reached.

    Returns the final state, a decay-rate fit of u on its trailing
    monotone window (None when inapplicable), the recorded series, and
    the worst drift of the invariant u + n/gamma + w. Non-convergence
    is reported through ``converged``, not an exception.
    """
    if dt <= 0.0 or t_max <= 0.0:
        raise ConfigurationError("kinetics integration needs dt > 0 and t_max > 0")
    u, c, n, w, t = state.u, state.c, state.n, state.w, state.t
    rhs = _scalar_rhs(params)
    times = [t]
    series = {"u": [u], "c": [c], "n": [n], "w": [w]}
    gamma = params.gamma
    inv0 = u + n / gamma + w
    worst = 0.0
    steps = 0
    converged = max(u, c) < tol
    while not converged and t < t_max - 1e-12 * t_max:
        step_dt = min(dt, t_max - t)
        u, c, n, w = _rk4_core(u, c, n, w, t, rhs, step_dt)
        t += step_dt
        steps += 1
        if steps % record_every == 0:
            times.append(t)
            series["u"].append(u)
            series["c"].append(c)
            series["n"].append(n)
            series["w"].append(w)
            worst = max(worst, abs(u + n / gamma + w - inv0))
        converged = max(u, c) < tol
    worst = max(worst, abs(u + n / gamma + w - inv0))
    fit = estimate_decay_rate(times, series["u"]) if len(times) >= 10 else None
    return KineticsResult(
        state=KineticState(u, c, n, w, t=t),
        rate=fit,
        converged=converged,
        times=times,
        series=series,
        conservation_residual=worst,
    )
