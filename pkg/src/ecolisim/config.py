"""INI run configuration: schema, defaults, presets, validation.

A run file is standard INI (``configparser`` dialect, ``#``/``;``
comments). Every key has a documented default; the resolution order is
defaults, then a named preset, then the file, then ``--set`` overrides.
Unknown sections or keys are rejected with the offending line number;
type and range errors cite section, key, and line.

The ``fig2`` preset carries the colony-pattern parameter set (chemo
diffusivity 10, nutrient diffusivity 2, unit alpha/beta/gamma,
switch-like tanh growth at threshold 0.05 with steepness 100,
saturating sensitivity 0.053 with half-saturation constant 0.0625,
constant death 0.05) on a 16 x 16 domain at 128 x 128 cells with a
centered unit-mass Gaussian inoculum on uniform nutrient.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .grid import Grid, Field, build_grid
from .models import (
    ModelParams,
    NonlinearitySpec,
    constant_death,
    linear_sensitivity,
    rational_death,
    saturating_sensitivity,
    tabulated_death,
    tabulated_growth,
    tanh_growth,
    zero_growth,
)
from .stepper import (
    EllipticSolveSettings,
    Schedule,
    SimState,
    StepControl,
    StopRules,
)

__all__ = [
    "RunConfig",
    "FieldIC",
    "KineticsRun",
    "ScanSpec",
    "parse_config",
    "build_initial_state",
    "PRESETS",
]

_IC_FIELDS = ("u0", "c0", "n0", "w0")


def _ic_schema(name: str, value: str) -> dict:
    return {
        name: "constant",
        f"{name}_value": value,
        f"{name}_center": "",
        f"{name}_width": "0.5",
        f"{name}_mass": "1.0",
        f"{name}_components": "",
        f"{name}_file": "",
        f"{name}_perturb": "0.0",
    }


SCHEMA: dict[str, dict[str, str]] = {
    "run": {"preset": "", "seed": "0", "output": ""},
    "grid": {"dim": "1", "lx": "1.0", "ly": "1.0", "nx": "100", "ny": "100"},
    "model": {"d_c": "1.0", "d_n": "1.0", "alpha": "1.0", "beta": "1.0", "gamma": "1.0"},
    "growth": {
        "kind": "zero",
        "scale": "1.0",
        "steepness": "100.0",
        "offset": "0.05",
        "file": "",
    },
    "death": {"kind": "constant", "b0": "0.05", "slope": "1.0", "file": ""},
    "sensitivity": {"kind": "linear", "chi0": "0.0", "k": "0.0625"},
    "ic": {
        **_ic_schema("u0", "0.0"),
        **_ic_schema("c0", "0.0"),
        **_ic_schema("n0", "1.0"),
        **_ic_schema("w0", "0.0"),
    },
    "stepping": {
        "mode": "parabolic_parabolic",
        "dt_init": "1e-3",
        "dt_min": "1e-12",
        "dt_max": "0.1",
        "cfl_advective": "0.25",
        "reaction_safety": "0.2",
        "u_blowup_threshold": "1e6",
        "enforce_nonnegativity": "true",
    },
    "stopping": {"eps_steady": "1e-8", "steady_window": "50", "max_steps": "5000000"},
    "elliptic": {"residual_tol": "1e-10", "max_iterations": "5000"},
    "schedule": {"t_end": "100.0", "series_interval": "0.1", "snapshot_interval": "0.0"},
    "diagnostics": {"moment_center": "", "moment_r1": "0.0", "moment_r2": "0.0"},
    "kinetics": {
        "u0": "0.0",
        "c0": "0.0",
        "n0": "1.0",
        "w0": "0.0",
        "dt": "0.01",
        "t_max": "2000.0",
        "tol": "1e-8",
    },
    "blowup_scan": {"masses": "", "widths": ""},
}

PRESETS: dict[str, dict[str, dict[str, str]]] = {
    "fig2": {
        "grid": {"dim": "2", "lx": "16.0", "ly": "16.0", "nx": "128", "ny": "128"},
        "model": {"d_c": "10.0", "d_n": "2.0", "alpha": "1.0", "beta": "1.0", "gamma": "1.0"},
        "growth": {"kind": "tanh", "scale": "1.0", "steepness": "100.0", "offset": "0.05"},
        "death": {"kind": "constant", "b0": "0.05"},
        "sensitivity": {"kind": "saturating", "chi0": "0.053", "k": "0.0625"},
        "ic": {
            "u0": "gaussian",
            "u0_width": "0.5",
            "u0_mass": "1.0",
            "n0": "constant",
            "n0_value": "1.0",
        },
        "stepping": {"dt_max": "0.05"},
        "schedule": {"t_end": "300.0", "series_interval": "0.5", "snapshot_interval": "25.0"},
    }
}


@dataclass(frozen=True)
class FieldIC:
    kind: str  # constant | gaussian | gaussians | tabulated
    value: float = 0.0
    center: Optional[tuple[float, ...]] = None
    width: float = 0.5
    mass: float = 1.0
    components: tuple[tuple[float, ...], ...] = ()
    file: Optional[Path] = None
    perturb: float = 0.0


@dataclass(frozen=True)
class KineticsRun:
    u0: float
    c0: float
    n0: float
    w0: float
    dt: float
    t_max: float
    tol: float


@dataclass(frozen=True)
class ScanSpec:
    masses: tuple[float, ...]
    widths: tuple[float, ...]


@dataclass
class RunConfig:
    grid: Grid
    params: ModelParams
    control: StepControl
    stop: StopRules
    schedule: Schedule
    elliptic: EllipticSolveSettings
    ics: dict
    seed: int
    output: Optional[Path]
    moment: Optional[tuple[tuple[float, ...], float, float]]
    kinetics: KineticsRun
    scan: ScanSpec
    preset: str
    sections_seen: frozenset
    resolved: dict

    def echo(self) -> str:
        """Resolved configuration as INI text (defaults included)."""
        lines = ["# resolved configuration"]
        for sec, keys in SCHEMA.items():
            lines.append(f"[{sec}]")
            for key in keys:
                lines.append(f"{key} = {self.resolved[sec][key]}")
            lines.append("")
        return "\n".join(lines)


class _Resolver:
    """Typed access to resolved string values with source-line context."""

    def __init__(self, resolved, linemap):
        self.resolved = resolved
        self.linemap = linemap

    def _where(self, sec, key):
        ln = self.linemap.get((sec, key))
        return f" (line {ln})" if ln else ""

    def raw(self, sec, key) -> str:
        return self.resolved[sec][key]

    def fail(self, sec, key, reason):
        raise ConfigurationError(
            f"[{sec}] {key} = {self.raw(sec, key)!r}: {reason}{self._where(sec, key)}"
        )

    def str_(self, sec, key, choices=None) -> str:
        v = self.raw(sec, key).strip()
        if choices is not None and v not in choices:
            self.fail(sec, key, f"expected one of {', '.join(choices)}")
        return v

    def float_(self, sec, key) -> float:
        try:
            return float(self.raw(sec, key))
        except ValueError:
            self.fail(sec, key, "not a number")

    def int_(self, sec, key) -> int:
        try:
            return int(self.raw(sec, key))
        except ValueError:
            self.fail(sec, key, "not an integer")

    def bool_(self, sec, key) -> bool:
        v = self.raw(sec, key).strip().lower()
        if v in ("true", "1", "yes", "on"):
            return True
        if v in ("false", "0", "no", "off"):
            return False
        self.fail(sec, key, "not a boolean")

    def floats(self, sec, key) -> tuple[float, ...]:
        raw = self.raw(sec, key).strip()
        if not raw:
            return ()
        try:
            return tuple(float(p) for p in raw.split(","))
        except ValueError:
            self.fail(sec, key, "not a comma-separated list of numbers")

    def center(self, sec, key, dim) -> Optional[tuple[float, ...]]:
        vals = self.floats(sec, key)
        if not vals:
            return None
        if len(vals) != dim:
            self.fail(sec, key, f"expected {dim} coordinates")
        return vals

    def components(self, sec, key, dim) -> tuple[tuple[float, ...], ...]:
        raw = self.raw(sec, key).strip()
        if not raw:
            return ()
        out = []
        want = 2 + dim  # mass, width, center...
        for part in raw.split(";"):
            part = part.strip()
            if not part:
                continue
            try:
                nums = tuple(float(p) for p in part.split(","))
            except ValueError:
                self.fail(sec, key, "components must be numeric")
            if len(nums) != want:
                self.fail(sec, key, f"each component needs mass, width, {dim} center coordinates")
            out.append(nums)
        if not out:
            self.fail(sec, key, "no components given")
        return tuple(out)


_SECTION_RE = re.compile(r"^\s*\[\s*([^]]+?)\s*\]\s*(?:[#;].*)?$")
_KEY_RE = re.compile(r"^\s*([^=:\s][^=:]*?)\s*[=:]")


def _scan_lines(text: str):
    """Map sections and (section, key) pairs to 1-based line numbers."""
    section_lines = {}
    key_lines = {}
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1)
            section_lines.setdefault(current, i)
            continue
        m = _KEY_RE.match(line)
        if m and current is not None:
            key_lines.setdefault((current, m.group(1)), i)
    return section_lines, key_lines


def _apply_overrides(resolved, overrides, linemap):
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} must look like section.key=value")
        target, value = item.split("=", 1)
        if "." not in target:
            raise ConfigurationError(f"override {item!r} must name section.key")
        sec, key = target.split(".", 1)
        sec, key = sec.strip(), key.strip()
        if sec not in SCHEMA:
            raise ConfigurationError(f"override names unknown section [{sec}]")
        if key not in SCHEMA[sec]:
            raise ConfigurationError(f"override names unknown key {key!r} in [{sec}]")
        resolved[sec][key] = value.strip()
        linemap.pop((sec, key), None)  # value no longer comes from the file


def parse_config(
    path=None,
    *,
    preset: Optional[str] = None,
    overrides: Sequence[str] = (),
    text: Optional[str] = None,
) -> RunConfig:
    """Parse, resolve, and validate a run configuration.

    ``path`` or ``text`` supplies the INI body (both optional when a
    preset plus overrides specify the whole run); ``preset`` may also
    come from the file's [run] preset key. Raises ConfigurationError
    with section/key/line context on any problem.
    """
    if path is not None and text is not None:
        raise ConfigurationError("pass either a config path or literal text, not both")
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigurationError(f"config file not found: {p}")
        text = p.read_text()
    text = text or ""

    section_lines, key_lines = _scan_lines(text)
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), strict=True
    )
    cp.optionxform = str  # keys are case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from None

    for sec in cp.sections():
        if sec not in SCHEMA:
            ln = section_lines.get(sec)
            where = f" (line {ln})" if ln else ""
            raise ConfigurationError(f"unknown section [{sec}]{where}")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                ln = key_lines.get((sec, key))
                where = f" (line {ln})" if ln else ""
                raise ConfigurationError(f"unknown key {key!r} in [{sec}]{where}")

    # resolution order: defaults, preset, file, overrides
    resolved = {sec: dict(keys) for sec, keys in SCHEMA.items()}
    file_preset = cp.get("run", "preset", fallback="").strip()
    chosen = preset or file_preset
    if chosen:
        if chosen not in PRESETS:
            raise ConfigurationError(
                f"unknown preset {chosen!r}; available: {', '.join(sorted(PRESETS))}"
            )
        for sec, keys in PRESETS[chosen].items():
            resolved[sec].update(keys)
        resolved["run"]["preset"] = chosen
    for sec in cp.sections():
        for key, value in cp[sec].items():
            resolved[sec][key] = value.strip()
    linemap = dict(key_lines)
    _apply_overrides(resolved, overrides, linemap)

    return _build(resolved, linemap, frozenset(cp.sections()))


def _build(resolved, linemap, sections_seen) -> RunConfig:
    r = _Resolver(resolved, linemap)

    dim = r.int_("grid", "dim")
    if dim not in (1, 2):
        r.fail("grid", "dim", "dim must be 1 or 2")
    extents = [r.float_("grid", "lx")]
    cells = [r.int_("grid", "nx")]
    if dim == 2:
        extents.append(r.float_("grid", "ly"))
        cells.append(r.int_("grid", "ny"))
    grid = build_grid(dim, extents, cells)

    growth_kind = r.str_("growth", "kind", ("tanh", "zero", "tabulated"))
    if growth_kind == "tanh":
        growth = tanh_growth(
            r.float_("growth", "scale"),
            r.float_("growth", "steepness"),
            r.float_("growth", "offset"),
        )
    elif growth_kind == "zero":
        growth = zero_growth()
    else:
        growth = _load_table(r, "growth", tabulated_growth)

    death_kind = r.str_("death", "kind", ("constant", "rational", "tabulated"))
    if death_kind == "constant":
        death = constant_death(r.float_("death", "b0"))
    elif death_kind == "rational":
        death = rational_death(r.float_("death", "b0"), r.float_("death", "slope"))
    else:
        death = _load_table(r, "death", tabulated_death)

    sens_kind = r.str_("sensitivity", "kind", ("linear", "saturating"))
    chi0 = r.float_("sensitivity", "chi0")
    if not (math.isfinite(chi0) and chi0 >= 0.0):
        r.fail("sensitivity", "chi0", "must be finite and >= 0")
    if sens_kind == "linear":
        sens = linear_sensitivity(chi0)
    else:
        k = r.float_("sensitivity", "k")
        if not (math.isfinite(k) and k > 0.0):
            r.fail("sensitivity", "k", "must be finite and > 0")
        sens = saturating_sensitivity(chi0, k)

    params = ModelParams(
        d_c=r.float_("model", "d_c"),
        d_n=r.float_("model", "d_n"),
        alpha=r.float_("model", "alpha"),
        beta=r.float_("model", "beta"),
        gamma=r.float_("model", "gamma"),
        nonlinearities=NonlinearitySpec(growth, death, sens),
    )

    try:
        control = StepControl(
            dt_init=r.float_("stepping", "dt_init"),
            dt_min=r.float_("stepping", "dt_min"),
            dt_max=r.float_("stepping", "dt_max"),
            cfl_advective=r.float_("stepping", "cfl_advective"),
            reaction_safety=r.float_("stepping", "reaction_safety"),
            u_blowup_threshold=r.float_("stepping", "u_blowup_threshold"),
            mode=r.str_("stepping", "mode", ("parabolic_parabolic", "parabolic_elliptic")),
            enforce_nonnegativity=r.bool_("stepping", "enforce_nonnegativity"),
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"[stepping]: {exc}") from None
    try:
        stop = StopRules(
            eps_steady=r.float_("stopping", "eps_steady"),
            steady_window=r.int_("stopping", "steady_window"),
            max_steps=r.int_("stopping", "max_steps"),
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"[stopping]: {exc}") from None
    snap = r.float_("schedule", "snapshot_interval")
    try:
        schedule = Schedule(
            t_end=r.float_("schedule", "t_end"),
            series_interval=r.float_("schedule", "series_interval"),
            snapshot_interval=snap if snap > 0.0 else None,
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"[schedule]: {exc}") from None
    elliptic = EllipticSolveSettings(
        residual_tol=r.float_("elliptic", "residual_tol"),
        max_iterations=r.int_("elliptic", "max_iterations"),
    )
    if elliptic.residual_tol <= 0.0:
        r.fail("elliptic", "residual_tol", "must be > 0")
    if elliptic.max_iterations < 1:
        r.fail("elliptic", "max_iterations", "must be >= 1")

    ics = {}
    for name in _IC_FIELDS:
        kind = r.str_("ic", name, ("constant", "gaussian", "gaussians", "tabulated"))
        value = r.float_("ic", f"{name}_value")
        if kind == "constant" and value < 0.0:
            r.fail("ic", f"{name}_value", "initial data must be >= 0")
        width = r.float_("ic", f"{name}_width")
        mass = r.float_("ic", f"{name}_mass")
        if kind == "gaussian":
            if width <= 0.0:
                r.fail("ic", f"{name}_width", "must be > 0")
            if mass < 0.0:
                r.fail("ic", f"{name}_mass", "must be >= 0")
        perturb = r.float_("ic", f"{name}_perturb")
        if not (0.0 <= perturb < 1.0):
            r.fail("ic", f"{name}_perturb", "must lie in [0, 1)")
        file_raw = r.raw("ic", f"{name}_file").strip()
        ics[name] = FieldIC(
            kind=kind,
            value=value,
            center=r.center("ic", f"{name}_center", dim),
            width=width,
            mass=mass,
            components=r.components("ic", f"{name}_components", dim),
            file=Path(file_raw) if file_raw else None,
            perturb=perturb,
        )
        if kind == "tabulated" and ics[name].file is None:
            r.fail("ic", f"{name}_file", f"tabulated {name} needs a file")

    moment = None
    r1 = r.float_("diagnostics", "moment_r1")
    r2 = r.float_("diagnostics", "moment_r2")
    if r1 > 0.0 or r2 > 0.0:
        if dim != 2:
            r.fail("diagnostics", "moment_r1", "the concentration moment needs a 2D grid")
        if not (0.0 < r1 < r2):
            r.fail("diagnostics", "moment_r2", "need 0 < moment_r1 < moment_r2")
        q = r.center("diagnostics", "moment_center", dim)
        if q is None:
            q = _default_center(grid, ics["u0"])
        moment = (q, r1, r2)

    kinetics = KineticsRun(
        u0=r.float_("kinetics", "u0"),
        c0=r.float_("kinetics", "c0"),
        n0=r.float_("kinetics", "n0"),
        w0=r.float_("kinetics", "w0"),
        dt=r.float_("kinetics", "dt"),
        t_max=r.float_("kinetics", "t_max"),
        tol=r.float_("kinetics", "tol"),
    )
    for key in ("u0", "c0", "n0", "w0"):
        if getattr(kinetics, key) < 0.0:
            r.fail("kinetics", key, "must be >= 0")
    if kinetics.dt <= 0.0:
        r.fail("kinetics", "dt", "must be > 0")
    if kinetics.t_max <= 0.0:
        r.fail("kinetics", "t_max", "must be > 0")
    if kinetics.tol <= 0.0:
        r.fail("kinetics", "tol", "must be > 0")

    scan = ScanSpec(
        masses=r.floats("blowup_scan", "masses"),
        widths=r.floats("blowup_scan", "widths"),
    )
    for key, values in (("masses", scan.masses), ("widths", scan.widths)):
        if any(v <= 0.0 for v in values):
            r.fail("blowup_scan", key, "entries must be > 0")

    output_raw = r.raw("run", "output").strip()
    return RunConfig(
        grid=grid,
        params=params,
        control=control,
        stop=stop,
        schedule=schedule,
        elliptic=elliptic,
        ics=ics,
        seed=r.int_("run", "seed"),
        output=Path(output_raw) if output_raw else None,
        moment=moment,
        kinetics=kinetics,
        scan=scan,
        preset=r.raw("run", "preset").strip(),
        sections_seen=sections_seen,
        resolved=resolved,
    )


def _load_table(r: _Resolver, section: str, factory):
    raw = r.raw(section, "file").strip()
    if not raw:
        r.fail(section, "file", f"tabulated {section} needs a two-column file")
    p = Path(raw)
    if not p.is_file():
        r.fail(section, "file", f"table file not found: {p}")
    try:
        data = np.loadtxt(p, ndmin=2)
    except ValueError as exc:
        r.fail(section, "file", f"unreadable table: {exc}")
    if data.shape[1] != 2:
        r.fail(section, "file", f"expected two columns, got {data.shape[1]}")
    try:
        return factory(data[:, 0], data[:, 1])
    except ConfigurationError as exc:
        r.fail(section, "file", str(exc))


def _default_center(grid: Grid, u0: FieldIC) -> tuple[float, ...]:
    if u0.kind == "gaussian" and u0.center is not None:
        return u0.center
    return tuple(L / 2.0 for L in grid.extents)


def _gaussian_bump(grid: Grid, center, width: float, mass: float) -> np.ndarray:
    if center is None:
        center = tuple(L / 2.0 for L in grid.extents)
    coords = grid.meshgrid()
    if grid.dim == 1:
        r2 = (coords[0] - center[0]) ** 2
    else:
        r2 = (coords[0] - center[0]) ** 2 + (coords[1] - center[1]) ** 2
    vals = np.exp(-r2 / (2.0 * width * width))
    total = float(vals.sum()) * grid.cell_volume
    if total <= 0.0:
        raise ConfigurationError(
            f"gaussian of width {width:g} vanishes on this grid; refine the mesh"
        )
    return vals * (mass / total)


def _build_field(grid: Grid, spec: FieldIC, name: str) -> np.ndarray:
    if spec.kind == "constant":
        return np.full(grid.shape, spec.value)
    if spec.kind == "gaussian":
        return _gaussian_bump(grid, spec.center, spec.width, spec.mass)
    if spec.kind == "gaussians":
        if not spec.components:
            raise ConfigurationError(f"{name}: sum-of-gaussians needs components")
        out = np.zeros(grid.shape)
        for comp in spec.components:
            mass, width = comp[0], comp[1]
            if width <= 0.0 or mass < 0.0:
                raise ConfigurationError(f"{name}: component mass/width out of range")
            out += _gaussian_bump(grid, comp[2:], width, mass)
        return out
    # tabulated: whitespace-separated cell values, row-major, grid-sized
    try:
        data = np.loadtxt(spec.file).ravel()
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"{name}: cannot read {spec.file}: {exc}") from None
    want = int(np.prod(grid.shape))
    if data.size != want:
        raise ConfigurationError(
            f"{name}: file holds {data.size} values, grid needs {want}"
        )
    return data.reshape(grid.shape)


def build_initial_state(cfg: RunConfig) -> SimState:
    """Construct the initial fields; perturbations draw from the run seed."""
    rng = np.random.default_rng(cfg.seed)
    fields = {}
    for name in _IC_FIELDS:
        spec = cfg.ics[name]
        vals = _build_field(cfg.grid, spec, name)
        if spec.perturb > 0.0:
            vals = vals * (1.0 + spec.perturb * rng.uniform(-1.0, 1.0, size=cfg.grid.shape))
        lo = float(vals.min())
        if lo < 0.0:
            raise ConfigurationError(f"initial {name} has negative values (min {lo:g})")
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError(f"initial {name} has non-finite values")
        fields[name] = Field(cfg.grid, vals)
    return SimState(fields["u0"], fields["c0"], fields["n0"], fields["w0"], t=0.0)
