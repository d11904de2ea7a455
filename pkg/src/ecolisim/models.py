"""Model nonlinearities and parameters.

The reaction model couples a cell density u, a chemoattractant c, a
nutrient n, and an immobilized density w through three user-selectable
functions: a growth response g(u) (switch-like in u), a death/conversion
rate b(n) (positive, nonincreasing in n), and a chemotactic sensitivity
chi(c). Constructors enforce only structural sanity; the mathematical
assumptions (g(0) = 0, g monotone and bounded, b(0) > 0, ...) are
checked by :func:`validate_assumptions`, which reports pass/warn/fail
per clause instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "GrowthSpec",
    "DeathSpec",
    "SensitivitySpec",
    "NonlinearitySpec",
    "ModelParams",
    "tanh_growth",
    "zero_growth",
    "tabulated_growth",
    "constant_death",
    "rational_death",
    "tabulated_death",
    "linear_sensitivity",
    "saturating_sensitivity",
    "eval_growth",
    "eval_death",
    "eval_sensitivity",
    "growth_bound",
    "death_rate_at_zero",
    "validate_assumptions",
    "ValidationReport",
    "Finding",
]

ArrayLike = Union[float, np.ndarray]


def _as_table(xs, vs, what: str) -> tuple[tuple[float, ...], tuple[float, ...]]:
    xs = tuple(float(x) for x in xs)
    vs = tuple(float(v) for v in vs)
    if len(xs) != len(vs) or len(xs) < 2:
        raise ConfigurationError(f"{what} table needs >= 2 matching (x, value) pairs")
    if any(not math.isfinite(x) for x in xs) or any(not math.isfinite(v) for v in vs):
        raise ConfigurationError(f"{what} table contains non-finite entries")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ConfigurationError(f"{what} table abscissae must be strictly increasing")
    if xs[0] < 0.0:
        raise ConfigurationError(f"{what} table abscissae must be nonnegative")
    return xs, vs


@dataclass(frozen=True)
class GrowthSpec:
    """Growth response g(u). Kinds: 'tanh', 'zero', 'tabulated'."""

    kind: str
    scale: float = 1.0
    steepness: float = 1.0
    offset: float = 0.0
    table_x: tuple[float, ...] = field(default=())
    table_v: tuple[float, ...] = field(default=())


@dataclass(frozen=True)
class DeathSpec:
    """Death/conversion rate b(n). Kinds: 'constant', 'rational', 'tabulated'."""

    kind: str
    b0: float = 0.0
    slope: float = 0.0
    table_x: tuple[float, ...] = field(default=())
    table_v: tuple[float, ...] = field(default=())


@dataclass(frozen=True)
class SensitivitySpec:
    """Chemotactic sensitivity chi(c). Kinds: 'linear', 'saturating'."""

    kind: str
    chi0: float
    k: float = 0.0


def tanh_growth(scale: float, steepness: float, offset: float) -> GrowthSpec:
    """g(u) = scale/2 * (1 + tanh(steepness * (u - offset)))."""
    for name, v in (("scale", scale), ("steepness", steepness), ("offset", offset)):
        if not math.isfinite(v):
            raise ConfigurationError(f"tanh growth {name} must be finite, got {v}")
    return GrowthSpec("tanh", scale=float(scale), steepness=float(steepness), offset=float(offset))


def zero_growth() -> GrowthSpec:
    return GrowthSpec("zero", scale=0.0)


def tabulated_growth(xs, values) -> GrowthSpec:
    """Piecewise-linear g from samples; clamped outside the table range."""
    xs, vs = _as_table(xs, values, "growth")
    return GrowthSpec("tabulated", table_x=xs, table_v=vs)


def constant_death(b0: float) -> DeathSpec:
    if not math.isfinite(b0) or b0 < 0.0:
        raise ConfigurationError(f"death rate must be finite and >= 0, got {b0}")
    return DeathSpec("constant", b0=float(b0))


def rational_death(b0: float, slope: float) -> DeathSpec:
    """b(n) = b0 / (1 + slope * n), nonincreasing for slope >= 0."""
    if not math.isfinite(b0) or b0 < 0.0:
        raise ConfigurationError(f"death rate must be finite and >= 0, got {b0}")
    if not math.isfinite(slope) or slope < 0.0:
        raise ConfigurationError(f"death slope must be finite and >= 0, got {slope}")
    return DeathSpec("rational", b0=float(b0), slope=float(slope))


def tabulated_death(xs, values) -> DeathSpec:
    xs, vs = _as_table(xs, values, "death")
    return DeathSpec("tabulated", table_x=xs, table_v=vs)


def linear_sensitivity(chi0: float) -> SensitivitySpec:
    """chi(c) = chi0 * c."""
    if not math.isfinite(chi0) or chi0 < 0.0:
        raise ConfigurationError(f"chi0 must be finite and >= 0, got {chi0}")
    return SensitivitySpec("linear", chi0=float(chi0))


def saturating_sensitivity(chi0: float, k: float) -> SensitivitySpec:
    """chi(c) = chi0 * c^2 / (c^2 + k); chi'(c) = 2 chi0 k c / (c^2 + k)^2."""
    if not math.isfinite(chi0) or chi0 < 0.0:
        raise ConfigurationError(f"chi0 must be finite and >= 0, got {chi0}")
    if not math.isfinite(k) or k <= 0.0:
        raise ConfigurationError(f"saturation constant must be > 0, got {k}")
    return SensitivitySpec("saturating", chi0=float(chi0), k=float(k))


@dataclass(frozen=True)
class NonlinearitySpec:
    growth: GrowthSpec
    death: DeathSpec
    sensitivity: SensitivitySpec


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the four-component model.

    d_c, d_n are the chemoattractant and nutrient diffusivities (the
    cell diffusivity is 1); alpha/beta are chemoattractant production
    and decay rates, gamma the nutrient consumption weight.
    """

    d_c: float
    d_n: float
    alpha: float
    beta: float
    gamma: float
    nonlinearities: NonlinearitySpec

    def __post_init__(self):
        for name in ("d_c", "d_n", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0.0:
                raise ConfigurationError(f"{name} must be finite and > 0, got {v}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ConfigurationError(f"{name} must be finite and >= 0, got {v}")


def _check_nonnegative(x: np.ndarray, what: str):
    lo = float(x.min()) if x.size else 0.0
    if lo < 0.0:
        raise DomainError(f"{what} evaluated at negative argument (min {lo:g})")


def eval_growth(spec: GrowthSpec, u: ArrayLike) -> ArrayLike:
    """Evaluate g at u (scalar or array). Negative u is a domain error."""
    if np.ndim(u) == 0:
        uf = float(u)
        if uf < 0.0:
            raise DomainError(f"growth evaluated at negative argument ({uf:g})")
        if spec.kind == "tanh":
            return 0.5 * spec.scale * (1.0 + math.tanh(spec.steepness * (uf - spec.offset)))
        if spec.kind == "zero":
            return 0.0
        return float(np.interp(uf, spec.table_x, spec.table_v))
    arr = np.asarray(u, dtype=np.float64)
    _check_nonnegative(arr, "growth")
    if spec.kind == "tanh":
        return 0.5 * spec.scale * (1.0 + np.tanh(spec.steepness * (arr - spec.offset)))
    if spec.kind == "zero":
        return np.zeros_like(arr)
    return np.interp(arr, spec.table_x, spec.table_v)


def eval_death(spec: DeathSpec, n: ArrayLike) -> ArrayLike:
    """Evaluate b at n (scalar or array). Negative n is a domain error."""
    if np.ndim(n) == 0:
        nf = float(n)
        if nf < 0.0:
            raise DomainError(f"death rate evaluated at negative argument ({nf:g})")
        if spec.kind == "constant":
            return spec.b0
        if spec.kind == "rational":
            return spec.b0 / (1.0 + spec.slope * nf)
        return float(np.interp(nf, spec.table_x, spec.table_v))
    arr = np.asarray(n, dtype=np.float64)
    _check_nonnegative(arr, "death rate")
    if spec.kind == "constant":
        return np.full_like(arr, spec.b0)
    if spec.kind == "rational":
        return spec.b0 / (1.0 + spec.slope * arr)
    return np.interp(arr, spec.table_x, spec.table_v)


def eval_sensitivity(spec: SensitivitySpec, c: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
    """Evaluate (chi(c), chi'(c)). Negative c is a domain error."""
    scalar = np.ndim(c) == 0
    if scalar:
        cf = float(c)
        if cf < 0.0:
            raise DomainError(f"sensitivity evaluated at negative argument ({cf:g})")
        if spec.kind == "linear":
            return spec.chi0 * cf, spec.chi0
        den = cf * cf + spec.k
        return spec.chi0 * cf * cf / den, 2.0 * spec.chi0 * spec.k * cf / (den * den)
    arr = np.asarray(c, dtype=np.float64)
    _check_nonnegative(arr, "sensitivity")
    if spec.kind == "linear":
        return spec.chi0 * arr, np.full_like(arr, spec.chi0)
    den = arr * arr + spec.k
    return spec.chi0 * arr * arr / den, 2.0 * spec.chi0 * spec.k * arr / (den * den)


def growth_bound(spec: GrowthSpec) -> float:
    """Supremum of g over [0, inf) (0 if g is nonpositive)."""
    if spec.kind == "tanh":
        return max(spec.scale, 0.0)
    if spec.kind == "zero":
        return 0.0
    return max(max(spec.table_v), 0.0)


def death_rate_at_zero(spec: DeathSpec) -> float:
    """b(0), the death rate on empty nutrient."""
    if spec.kind in ("constant", "rational"):
        return spec.b0
    return float(np.interp(0.0, spec.table_x, spec.table_v))


@dataclass(frozen=True)
class Finding:
    clause: str
    status: str  # "pass" | "warn" | "fail"
    detail: str


_STATUS_ORDER = {"pass": 0, "warn": 1, "fail": 2}


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def status(self) -> str:
        return max((f.status for f in self.findings), key=_STATUS_ORDER.get, default="pass")

    @property
    def ok(self) -> bool:
        return self.status != "fail"

    def format(self) -> str:
        lines = [f"[{f.status:4s}] {f.clause}: {f.detail}" for f in self.findings]
        lines.append(f"overall: {self.status}")
        return "\n".join(lines)


def validate_assumptions(
    spec: NonlinearitySpec,
    *,
    u_max: float = 10.0,
    n_max: float = 10.0,
    c_max: float = 10.0,
    num: int = 2001,
) -> ValidationReport:
    """Check the model assumptions on sampled arguments.

    Clauses: g(0) = 0 (|g(0)| <= 1e-6 passes, <= 1e-3 warns, else
    fails); g nonnegative, nondecreasing, and bounded on [0, u_max];
    b(0) > 0 and b positive, nonincreasing on [0, n_max]; chi and chi'
    finite on [0, c_max]. Tiny monotonicity violations (within 1e-6 of
    the function's scale) warn instead of failing.
    """
    findings: list[Finding] = []
    us = np.linspace(0.0, u_max, num)
    ns = np.linspace(0.0, n_max, num)
    cs = np.linspace(0.0, c_max, num)

    g = np.asarray(eval_growth(spec.growth, us))
    g0 = float(g[0])
    if abs(g0) <= 1e-6:
        findings.append(Finding("g(0) = 0", "pass", f"g(0) = {g0:.3g}"))
    elif abs(g0) <= 1e-3:
        findings.append(Finding("g(0) = 0", "warn", f"g(0) = {g0:.3g} exceeds 1e-6"))
    else:
        findings.append(Finding("g(0) = 0", "fail", f"g(0) = {g0:.3g} exceeds 1e-3"))

    g_scale = max(float(np.max(np.abs(g))), 1.0)
    g_min = float(g.min())
    if g_min >= -1e-12 * g_scale:
        findings.append(Finding("g >= 0", "pass", f"min g = {g_min:.3g}"))
    else:
        findings.append(Finding("g >= 0", "fail", f"min g = {g_min:.3g} on [0, {u_max:g}]"))

    drops = np.diff(g)
    worst_drop = float(-drops.min()) if drops.size else 0.0
    if worst_drop <= 1e-12 * g_scale:
        findings.append(Finding("g nondecreasing", "pass", "monotone on samples"))
    elif worst_drop <= 1e-6 * g_scale:
        findings.append(
            Finding("g nondecreasing", "warn", f"largest drop {worst_drop:.3g} within noise")
        )
    else:
        findings.append(Finding("g nondecreasing", "fail", f"largest drop {worst_drop:.3g}"))

    G0 = growth_bound(spec.growth)
    if np.all(np.isfinite(g)) and float(g.max()) <= G0 + 1e-12 * g_scale:
        findings.append(Finding("g bounded", "pass", f"sup g = {G0:g}"))
    else:
        findings.append(Finding("g bounded", "fail", "g exceeds its declared bound"))

    b = np.asarray(eval_death(spec.death, ns))
    b0 = float(b[0])
    if b0 > 0.0:
        findings.append(Finding("b(0) > 0", "pass", f"b(0) = {b0:g}"))
    else:
        findings.append(Finding("b(0) > 0", "fail", f"b(0) = {b0:g}"))

    b_min = float(b.min())
    if b_min > 0.0:
        findings.append(Finding("b > 0", "pass", f"min b = {b_min:.3g}"))
    else:
        findings.append(Finding("b > 0", "fail", f"min b = {b_min:.3g} on [0, {n_max:g}]"))

    b_scale = max(float(np.max(np.abs(b))), 1.0)
    rises = np.diff(b)
    worst_rise = float(rises.max()) if rises.size else 0.0
    if worst_rise <= 1e-12 * b_scale:
        findings.append(Finding("b nonincreasing", "pass", "monotone on samples"))
    elif worst_rise <= 1e-6 * b_scale:
        findings.append(
            Finding("b nonincreasing", "warn", f"largest rise {worst_rise:.3g} within noise")
        )
    else:
        findings.append(Finding("b nonincreasing", "fail", f"largest rise {worst_rise:.3g}"))

    chi, dchi = eval_sensitivity(spec.sensitivity, cs)
    chi = np.asarray(chi)
    dchi = np.asarray(dchi)
    if np.all(np.isfinite(chi)) and np.all(np.isfinite(dchi)):
        findings.append(
            Finding("chi smooth", "pass", f"sup |chi'| = {float(np.max(np.abs(dchi))):.3g}")
        )
    else:
        findings.append(Finding("chi smooth", "fail", "non-finite chi or chi'"))

    return ValidationReport(tuple(findings))
