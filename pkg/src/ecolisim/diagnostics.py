"""Run diagnostics: integral tracking, moment functionals, decay fits.

The central bookkeeping quantity is the weighted total
``int u + (1/gamma) int n + int w``, which the transfer structure of the
model conserves exactly; per-record monotonicity of the nutrient and
immobilized-mass integrals is checked against per-step tolerances. For
concentration (blow-up) detection the second-moment functional
``I(t) = int u(x, t) phi(x - q) dx`` uses a C^1 weight phi that grows
like r^2 near q and is constant far away, so I stays finite and its
collapse toward zero witnesses concentration at q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import Field, Grid, laplacian_neumann

if TYPE_CHECKING:  # pragma: no cover
    from .models import ModelParams
    from .stepper import SimState

__all__ = [
    "MassRecord",
    "DiagnosticsSeries",
    "MomentWeight",
    "DecayFit",
    "MonotonicityReport",
    "masses",
    "moment_weight",
    "moment",
    "blow_up_threshold",
    "estimate_decay_rate",
    "check_monotonicity",
]


@dataclass(frozen=True)
class MassRecord:
    """Integrals and sup norms at one instant."""

    t: float
    m_u: float
    m_c: float
    m_n: float
    m_w: float
    total: float  # m_u + m_n / gamma + m_w
    sup_u: float
    sup_c: float
    moment: Optional[float] = None


@dataclass
class DiagnosticsSeries:
    """Time-ordered list of :class:`MassRecord`; times strictly increase."""

    records: list[MassRecord] = field(default_factory=list)

    def append(self, rec: MassRecord):
        if self.records and rec.t <= self.records[-1].t:
            raise ConfigurationError(
                f"series times must strictly increase ({rec.t} after {self.records[-1].t})"
            )
        self.records.append(rec)

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.records)


def masses(state: "SimState", params: "ModelParams") -> MassRecord:
    """Integrals, conserved total, and sup norms of the current state."""
    m_u = state.u.integral()
    m_c = state.c.integral()
    m_n = state.n.integral()
    m_w = state.w.integral()
    return MassRecord(
        t=state.t,
        m_u=m_u,
        m_c=m_c,
        m_n=m_n,
        m_w=m_w,
        total=m_u + m_n / params.gamma + m_w,
        sup_u=state.u.sup(),
        sup_c=state.c.sup(),
    )


@dataclass(frozen=True)
class MomentWeight:
    """Sampled moment weight phi(|x - q|) on a 2D grid.

    phi is r^2 inside r1, the matched quadratic
    a1 r^2 + a2 r + a3 between r1 and r2, and the constant r1*r2
    outside; it is C^1 with Laplacian 4 inside r1 and <= 2 beyond.
    """

    grid: Grid
    q: tuple[float, float]
    r1: float
    r2: float
    values: np.ndarray

    @property
    def coefficients(self) -> tuple[float, float, float]:
        dr = self.r2 - self.r1
        return (-self.r1 / dr, 2.0 * self.r1 * self.r2 / dr, -self.r1**2 * self.r2 / dr)

    def sampled_laplacian(self) -> np.ndarray:
        """Discrete Laplacian of the sampled weight.

        Equals 4 inside the r1 ball to O(h^2) and stays below 4 plus an
        O(h^2) margin everywhere at least a couple of cells away from
        the profile kinks at r1 and r2, where phi is only C^1.
        """
        return laplacian_neumann(Field(self.grid, self.values)).values


def _phi_profile(r: np.ndarray, r1: float, r2: float) -> np.ndarray:
    dr = r2 - r1
    a1 = -r1 / dr
    a2 = 2.0 * r1 * r2 / dr
    a3 = -(r1**2) * r2 / dr
    return np.where(
        r <= r1,
        r * r,
        np.where(r >= r2, r1 * r2, a1 * r * r + a2 * r + a3),
    )


def moment_weight(grid: Grid, q: Sequence[float], r1: float, r2: float) -> MomentWeight:
    """Build the concentration weight centered at q.

    Requires a 2D grid and 0 < r1 < r2 < dist(q, boundary), so the
    constant outer region reaches every wall and the weight carries no
    boundary flux.
    """
    if grid.dim != 2:
        raise ConfigurationError("moment weight requires a 2D grid")
    qx, qy = (float(q[0]), float(q[1]))
    Lx, Ly = grid.extents
    if not (0.0 < qx < Lx and 0.0 < qy < Ly):
        raise ConfigurationError(f"moment center {q} lies outside the domain")
    wall = min(qx, Lx - qx, qy, Ly - qy)
    if not (0.0 < r1 < r2 < wall):
        raise ConfigurationError(
            f"moment radii must satisfy 0 < r1 < r2 < {wall:g} (distance to the "
            f"boundary), got r1 = {r1:g}, r2 = {r2:g}"
        )
    X, Y = grid.meshgrid()
    r = np.hypot(X - qx, Y - qy)
    return MomentWeight(grid=grid, q=(qx, qy), r1=float(r1), r2=float(r2),
                        values=_phi_profile(r, float(r1), float(r2)))


def moment(u: Field, weight: MomentWeight) -> float:
    """I = int u * phi dx on the weight's grid."""
    if u.grid != weight.grid:
        raise ConfigurationError("field and moment weight live on different grids")
    return float(np.sum(u.values * weight.values)) * u.grid.cell_volume


def blow_up_threshold(alpha: float, chi0: float) -> float:
    """Critical mass 8*pi / (alpha * chi0) for the linear-sensitivity
    parabolic-elliptic model in 2D."""
    if not (alpha > 0.0) or not (chi0 > 0.0):
        raise DomainError(f"threshold needs alpha > 0 and chi0 > 0, got {alpha}, {chi0}")
    return 8.0 * math.pi / (alpha * chi0)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of -log(value) against t on a trailing window."""

    rate: float
    t_start: float
    t_end: float
    samples: int


def estimate_decay_rate(
    times: Sequence[float],
    values: Sequence[float],
    *,
    min_samples: int = 10,
    min_decades: float = 1.0,
) -> Optional[DecayFit]:
    """Fit an exponential decay rate on the trailing monotone window.

    Walks back from the end of the series while values are positive and
    nonincreasing; fits only if the window holds at least
    ``min_samples`` points and spans at least ``min_decades`` decades of
    decrease. Returns None when no admissible window exists (constant
    series, growth at the tail, too few samples).
    """
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.shape != v.shape or t.ndim != 1:
        raise ConfigurationError("times and values must be 1D arrays of equal length")
    n = t.size
    if n < min_samples:
        return None
    if not (v[-1] > 0.0) or not np.isfinite(v[-1]):
        return None
    start = n - 1
    while start > 0 and v[start - 1] >= v[start] and v[start - 1] > 0.0 and np.isfinite(v[start - 1]):
        start -= 1
    count = n - start
    if count < min_samples:
        return None
    if v[start] < v[-1] * 10.0**min_decades:
        return None
    tw = t[start:]
    logs = -np.log(v[start:])
    rate = float(np.polyfit(tw, logs, 1)[0])
    return DecayFit(rate=rate, t_start=float(tw[0]), t_end=float(tw[-1]), samples=int(count))


@dataclass(frozen=True)
class MonotonicityReport:
    n_nonincreasing: bool
    w_nondecreasing: bool
    total_conserved: bool
    worst_n_rise: float
    worst_w_drop: float
    worst_total_drift: float

    @property
    def ok(self) -> bool:
        return self.n_nonincreasing and self.w_nondecreasing and self.total_conserved


def check_monotonicity(
    records: Sequence[MassRecord],
    *,
    step_tol: float = 1e-12,
    conservation_tol: float = 1e-10,
) -> MonotonicityReport:
    """Check int n nonincreasing, int w nondecreasing, total conserved.

    Per-step tolerances scale with the magnitude of the tracked
    quantity; the conservation tolerance is relative to the initial
    total. Needs at least two records.
    """
    if len(records) < 2:
        raise ConfigurationError("monotonicity check needs at least 2 records")
    m_n = np.array([r.m_n for r in records])
    m_w = np.array([r.m_w for r in records])
    tot = np.array([r.total for r in records])

    n_scale = max(float(np.max(np.abs(m_n))), 1.0)
    w_scale = max(float(np.max(np.abs(m_w))), 1.0)
    t_scale = max(abs(float(tot[0])), 1e-300)

    worst_n_rise = float(np.max(np.diff(m_n)))
    worst_w_drop = float(-np.min(np.diff(m_w)))
    worst_total_drift = float(np.max(np.abs(tot - tot[0]))) / t_scale

    return MonotonicityReport(
        n_nonincreasing=worst_n_rise <= step_tol * n_scale,
        w_nondecreasing=worst_w_drop <= step_tol * w_scale,
        total_conserved=worst_total_drift <= conservation_tol,
        worst_n_rise=worst_n_rise,
        worst_w_drop=worst_w_drop,
        worst_total_drift=worst_total_drift,
    )
