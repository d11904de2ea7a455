"""On-disk formats: snapshots, series CSV, summaries, plot panels.

Snapshot layout (all little-endian): the magic bytes ``ECOLISNP``, a
u32 format version (currently 1), u32 dim/nx/ny, f64 hx/hy/time, a u32
field count, a name table of u32-length-prefixed UTF-8 names, then one
row-major float64 block per field in table order (u, c, n, w for
simulation states). 1D snapshots store ny = 1 and hy = 0. Values are
written verbatim from memory, so a read/write cycle is bit-exact.

Series CSV columns are t, M_u, M_c, M_n, M_w, total, sup_u, sup_c and
optionally I (the concentration moment); every float is rendered with
17 significant digits so parsing recovers the exact binary value.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .diagnostics import DiagnosticsSeries
from .errors import ConfigurationError, SnapshotFormatError

__all__ = [
    "Snapshot",
    "write_snapshot",
    "read_snapshot",
    "write_series_csv",
    "read_series_csv",
    "write_table_csv",
    "write_summary",
    "list_snapshots",
    "emit_plot_data",
]

MAGIC = b"ECOLISNP"
VERSION = 1
_HEADER = struct.Struct("<8sIIIIdddI")  # magic, version, dim, nx, ny, hx, hy, time, nfields
_U32 = struct.Struct("<I")

SNAPSHOT_DIR = "snapshots"
SNAPSHOT_PATTERN = "snapshot_*.snp"


@dataclass(frozen=True)
class Snapshot:
    dim: int
    nx: int
    ny: int
    hx: float
    hy: float
    time: float
    fields: dict  # name -> float64 array, insertion-ordered


def write_snapshot(path, state) -> Path:
    """Write a simulation state; fields go out in u, c, n, w order."""
    g = state.u.grid
    if g.dim == 1:
        nx, ny = g.cells[0], 1
        hx, hy = g.spacing[0], 0.0
    else:
        nx, ny = g.cells
        hx, hy = g.spacing
    names = ("u", "c", "n", "w")
    arrays = [getattr(state, name).values for name in names]
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, g.dim, nx, ny, hx, hy, state.t, len(names)))
        for name in names:
            raw = name.encode("utf-8")
            fh.write(_U32.pack(len(raw)))
            fh.write(raw)
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return path


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise SnapshotFormatError(f"truncated snapshot: expected {count} bytes of {what}")
    return data


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    with open(path, "rb") as fh:
        head = _read_exact(fh, _HEADER.size, "header")
        magic, version, dim, nx, ny, hx, hy, time, nfields = _HEADER.unpack(head)
        if magic != MAGIC:
            raise SnapshotFormatError(f"{path.name}: bad magic {magic!r}")
        if version != VERSION:
            raise SnapshotFormatError(f"{path.name}: unsupported version {version}")
        if dim not in (1, 2) or nx <= 0 or ny <= 0 or nfields == 0 or nfields > 64:
            raise SnapshotFormatError(f"{path.name}: implausible header")
        names = []
        for _ in range(nfields):
            (ln,) = _U32.unpack(_read_exact(fh, 4, "name length"))
            if ln > 4096:
                raise SnapshotFormatError(f"{path.name}: implausible name length {ln}")
            names.append(_read_exact(fh, ln, "field name").decode("utf-8"))
        count = nx * ny
        fields = {}
        for name in names:
            raw = _read_exact(fh, 8 * count, f"field {name}")
            arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
            fields[name] = arr.reshape((ny, nx)) if dim == 2 else arr
        if fh.read(1):
            raise SnapshotFormatError(f"{path.name}: trailing bytes after field data")
    return Snapshot(dim=dim, nx=nx, ny=ny, hx=hx, hy=hy, time=time, fields=fields)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_series_csv(path, series: DiagnosticsSeries) -> Path:
    """Series table; the moment column appears iff the records carry one."""
    path = Path(path)
    if not series.records:
        raise ConfigurationError("cannot write an empty series")
    with_moment = series.records[0].moment is not None
    header = ["t", "M_u", "M_c", "M_n", "M_w", "total", "sup_u", "sup_c"]
    if with_moment:
        header.append("I")
    lines = [",".join(header)]
    for r in series.records:
        row = [r.t, r.m_u, r.m_c, r.m_n, r.m_w, r.total, r.sup_u, r.sup_c]
        if with_moment:
            if r.moment is None:
                raise ConfigurationError("series mixes records with and without moments")
            row.append(r.moment)
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_series_csv(path) -> dict:
    """Columns as float64 arrays keyed by header name."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ConfigurationError(f"{path}: empty series file")
    names = lines[0].split(",")
    cols = {n: [] for n in names}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(names):
            raise ConfigurationError(f"{path}: ragged series row")
        for n, p in zip(names, parts):
            cols[n].append(float(p))
    return {n: np.array(v) for n, v in cols.items()}


def write_table_csv(path, names: Sequence[str], columns: Sequence[Sequence]) -> Path:
    path = Path(path)
    if len(names) != len(columns):
        raise ConfigurationError("one name per column required")
    rows = zip(*columns) if columns else []
    lines = [",".join(names)]
    for row in rows:
        lines.append(",".join(x if isinstance(x, str) else _fmt(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_summary(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def list_snapshots(run_dir) -> list[tuple[float, Path]]:
    """(time, path) pairs for every snapshot under a run directory."""
    snap_dir = Path(run_dir) / SNAPSHOT_DIR
    out = []
    if snap_dir.is_dir():
        for p in sorted(snap_dir.glob(SNAPSHOT_PATTERN)):
            out.append((read_snapshot(p).time, p))
    return out


def _write_panel(path: Path, snap: Snapshot, values: np.ndarray):
    xs = (np.arange(snap.nx) + 0.5) * snap.hx
    lines = []
    if snap.dim == 1:
        for i in range(snap.nx):
            lines.append(f"{_fmt(xs[i])} {_fmt(values[i])}")
    else:
        ys = (np.arange(snap.ny) + 0.5) * snap.hy
        for j in range(snap.ny):
            for i in range(snap.nx):
                lines.append(f"{_fmt(xs[i])} {_fmt(ys[j])} {_fmt(values[j, i])}")
            lines.append("")  # blank line between scan rows
    path.write_text("\n".join(lines).rstrip("\n") + "\n")


def emit_plot_data(run_dir, time: float, out_dir=None) -> list[Path]:
    """Write plain-text panels of u and u + w at a snapshot time.

    The time must match an existing snapshot (within rounding); the
    error for a missing time lists what is available.
    """
    run_dir = Path(run_dir)
    available = list_snapshots(run_dir)
    if not available:
        raise ConfigurationError(f"no snapshots found under {run_dir}")
    match = None
    for t, p in available:
        if math.isclose(t, time, rel_tol=1e-9, abs_tol=1e-12):
            match = p
            break
    if match is None:
        times = ", ".join(f"{t:g}" for t, _ in available)
        raise ConfigurationError(
            f"no snapshot at t = {time:g}; available times: {times}"
        )
    snap = read_snapshot(match)
    for need in ("u", "w"):
        if need not in snap.fields:
            raise SnapshotFormatError(f"{match.name}: snapshot lacks field {need!r}")
    out_dir = Path(out_dir) if out_dir is not None else run_dir / "plots"
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = f"{snap.time:g}".replace(".", "p").replace("-", "m")
    u_path = out_dir / f"u_t{stamp}.dat"
    uw_path = out_dir / f"u_plus_w_t{stamp}.dat"
    _write_panel(u_path, snap, snap.fields["u"])
    _write_panel(uw_path, snap, snap.fields["u"] + snap.fields["w"])
    return [u_path, uw_path]
