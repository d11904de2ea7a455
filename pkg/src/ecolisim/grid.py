"""Cell-centered grids, fields, and spatial operators.

Rectangular domains are discretized with uniform cell-centered grids in
one or two dimensions. Zero-flux (homogeneous Neumann) boundaries are
realized with mirror ghost cells, which keeps the discrete Laplacian
symmetric and exactly sum-preserving; the chemotactic transport term is
written in conservative face-flux form so its total is exactly zero on
every field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .errors import ConfigurationError

__all__ = [
    "Grid",
    "Field",
    "build_grid",
    "laplacian_neumann",
    "chemotactic_divergence",
    "first_neumann_eigenvalue",
]


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on a rectangle.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    extents : tuple of float
        Side lengths (Lx,) or (Lx, Ly).
    cells : tuple of int
        Cell counts (nx,) or (nx, ny).

    Notes
    -----
    Two-dimensional field arrays are indexed ``[j, i]`` (row-major, y
    outer), with shape ``(ny, nx)``. Cell centers along an axis sit at
    ``(k + 1/2) * h``.
    """

    dim: int
    extents: tuple[float, ...]
    cells: tuple[int, ...]

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extents, self.cells))

    @property
    def shape(self) -> tuple[int, ...]:
        # array shape: (nx,) in 1D, (ny, nx) in 2D
        if self.dim == 1:
            return (self.cells[0],)
        return (self.cells[1], self.cells[0])

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def volume(self) -> float:
        return math.prod(self.extents)

    def axis_centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along ``axis`` (0 = x, 1 = y)."""
        h = self.spacing[axis]
        n = self.cells[axis]
        return (np.arange(n) + 0.5) * h

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcast to ``self.shape``."""
        if self.dim == 1:
            return (self.axis_centers(0),)
        X, Y = np.meshgrid(self.axis_centers(0), self.axis_centers(1))
        return X, Y


def build_grid(dim: int, extents: Sequence[float], cells: Sequence[int]) -> Grid:
    """Validate and construct a :class:`Grid`.

    Raises
    ------
    ConfigurationError
        If ``dim`` is not 1 or 2, any extent is not positive and finite,
        or any cell count is below 3 (stencils need an interior).
    """
    if dim not in (1, 2):
        raise ConfigurationError(f"grid dim must be 1 or 2, got {dim}")
    extents = tuple(float(L) for L in extents)
    cells = tuple(int(n) for n in cells)
    if len(extents) != dim or len(cells) != dim:
        raise ConfigurationError(
            f"expected {dim} extents and cell counts, got {len(extents)} and {len(cells)}"
        )
    for L in extents:
        if not math.isfinite(L) or L <= 0.0:
            raise ConfigurationError(f"grid extents must be positive, got {L}")
    for n in cells:
        if n < 3:
            raise ConfigurationError(f"grid cells per axis must be >= 3, got {n}")
    return Grid(dim=dim, extents=extents, cells=cells)


@dataclass
class Field:
    """A scalar field sampled at cell centers of a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != self.grid.shape:
            raise ConfigurationError(
                f"field shape {arr.shape} does not match grid shape {self.grid.shape}"
            )
        self.values = np.ascontiguousarray(arr)

    @classmethod
    def full(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls.full(grid, 0.0)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def integral(self) -> float:
        """Integral over the domain (cell sum times cell volume)."""
        return float(self.values.sum()) * self.grid.cell_volume

    def sup(self) -> float:
        return float(np.max(self.values))

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def _check_same_grid(*fields: Field) -> Grid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ConfigurationError("fields live on different grids")
    return g


def laplacian_neumann(f: Field) -> Field:
    """Second-order discrete Laplacian with zero-flux boundaries.

    The mirror-ghost closure makes the operator matrix symmetric with
    zero column sums, so the cell sum of the output vanishes to
    rounding for any input.
    """
    g = f.grid
    if g.dim == 1:
        h = g.spacing[0]
        out = K.laplacian_1d(f.values, 1.0 / (h * h))
    else:
        hx, hy = g.spacing
        out = K.laplacian_2d(f.values, 1.0 / (hx * hx), 1.0 / (hy * hy))
    return Field(g, out)


def chemotactic_divergence(u: Field, c: Field, chi: Callable[[np.ndarray], np.ndarray]) -> Field:
    """Conservative divergence of the chemotactic flux u * grad(chi(c)).

    The face velocity is the centered difference of ``chi(c)``; the face
    value of ``u`` is the arithmetic average unless the face Peclet
    number |v| h / 2 exceeds 1, in which case the donor cell is used.
    Boundary faces carry zero flux, so the output sums to zero.

    Parameters
    ----------
    u, c : Field
        Density and chemoattractant on the same grid.
    chi : callable
        Sensitivity evaluated elementwise on the ``c`` values.
    """
    g = _check_same_grid(u, c)
    s = np.asarray(chi(c.values), dtype=np.float64)
    if s.shape != c.values.shape:
        raise ConfigurationError("sensitivity must return one value per cell")
    if g.dim == 1:
        out = K.chemo_div_1d(u.values, s, g.spacing[0])
    else:
        hx, hy = g.spacing
        out = K.chemo_div_2d(u.values, s, hx, hy)
    return Field(g, out)


def first_neumann_eigenvalue(grid: Grid) -> float:
    """Smallest nonzero Neumann Laplacian eigenvalue, (pi / L_max)^2.

    On a rectangle the slowest non-constant mode varies along the
    longest side, so the decay rate floor is set by ``max(extents)``.
    """
    L = max(grid.extents)
    return (math.pi / L) ** 2
