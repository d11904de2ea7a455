"""Shared fixtures: parameter sets and small state builders."""

import numpy as np
import pytest

from ecolisim.grid import Field, build_grid
from ecolisim.models import (
    ModelParams,
    NonlinearitySpec,
    constant_death,
    linear_sensitivity,
    saturating_sensitivity,
    tanh_growth,
    zero_growth,
)
from ecolisim.stepper import SimState


def colony_nonlinearities() -> NonlinearitySpec:
    """Switch-like growth, constant death, saturating sensitivity."""
    return NonlinearitySpec(
        growth=tanh_growth(scale=1.0, steepness=100.0, offset=0.05),
        death=constant_death(0.05),
        sensitivity=saturating_sensitivity(0.053, 0.0625),
    )


def decay_nonlinearities(b0: float = 0.05) -> NonlinearitySpec:
    """No growth, constant death, linear sensitivity; the simplest
    parameter family with nontrivial transport and mass transfer."""
    return NonlinearitySpec(
        growth=zero_growth(),
        death=constant_death(b0),
        sensitivity=linear_sensitivity(0.053),
    )


@pytest.fixture
def colony_params() -> ModelParams:
    return ModelParams(d_c=10.0, d_n=2.0, alpha=1.0, beta=1.0, gamma=1.0,
                       nonlinearities=colony_nonlinearities())


@pytest.fixture
def decay_params() -> ModelParams:
    return ModelParams(d_c=10.0, d_n=2.0, alpha=1.0, beta=1.0, gamma=1.0,
                       nonlinearities=decay_nonlinearities())


def flat_state(grid, u=0.0, c=0.0, n=0.0, w=0.0, t=0.0) -> SimState:
    return SimState(
        u=Field.full(grid, u),
        c=Field.full(grid, c),
        n=Field.full(grid, n),
        w=Field.full(grid, w),
        t=t,
    )


def random_state(grid, rng, scale=1.0) -> SimState:
    """Strictly positive random fields, useful for exercising operators."""
    def draw():
        return Field(grid, rng.uniform(0.1, 1.0, grid.shape) * scale)
    return SimState(u=draw(), c=draw(), n=draw(), w=draw())


def gaussian_state(grid, mass, width, center=None, n_value=1.0) -> SimState:
    """Gaussian cell bump over uniform nutrient, everything else zero."""
    coords = grid.meshgrid()
    if center is None:
        center = tuple(L / 2.0 for L in grid.extents)
    if grid.dim == 1:
        r2 = (coords[0] - center[0]) ** 2
    else:
        r2 = (coords[0] - center[0]) ** 2 + (coords[1] - center[1]) ** 2
    vals = np.exp(-r2 / (2.0 * width * width))
    vals *= mass / (vals.sum() * grid.cell_volume)
    return SimState(
        u=Field(grid, vals),
        c=Field.zeros(grid),
        n=Field.full(grid, n_value),
        w=Field.zeros(grid),
    )


def make_grid_1d(n=32, length=1.0):
    return build_grid(1, (length,), (n,))


def make_grid_2d(nx=16, ny=16, lx=1.0, ly=1.0):
    return build_grid(2, (lx, ly), (nx, ny))
