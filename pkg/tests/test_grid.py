"""Grid geometry, fields, and the discrete Neumann operators."""

import math

import numpy as np
import pytest

from conftest import make_grid_1d, make_grid_2d
from ecolisim.errors import ConfigurationError
from ecolisim.grid import (
    Field,
    build_grid,
    chemotactic_divergence,
    first_neumann_eigenvalue,
    laplacian_neumann,
)


def test_build_grid_rejects_bad_arguments():
    with pytest.raises(ConfigurationError):
        build_grid(3, (1.0, 1.0, 1.0), (8, 8, 8))
    with pytest.raises(ConfigurationError):
        build_grid(1, (0.0,), (8,))
    with pytest.raises(ConfigurationError):
        build_grid(1, (1.0,), (2,))
    with pytest.raises(ConfigurationError):
        build_grid(2, (1.0,), (8, 8))
    with pytest.raises(ConfigurationError):
        build_grid(1, (float("inf"),), (8,))


def test_grid_geometry_1d():
    g = build_grid(1, (2.0,), (8,))
    assert g.spacing == (0.25,)
    assert g.shape == (8,)
    assert g.cell_volume == pytest.approx(0.25)
    assert g.volume == pytest.approx(2.0)
    centers = g.axis_centers(0)
    assert centers[0] == pytest.approx(0.125)
    assert centers[-1] == pytest.approx(2.0 - 0.125)
    assert np.all(np.diff(centers) > 0)


def test_grid_geometry_2d():
    """Arrays are indexed [j, i] with y on the slow axis."""
    g = build_grid(2, (4.0, 2.0), (16, 8))
    assert g.shape == (8, 16)
    assert g.spacing == (0.25, 0.25)
    assert g.cell_volume == pytest.approx(0.0625)
    X, Y = g.meshgrid()
    assert X.shape == g.shape and Y.shape == g.shape
    assert X[0, 0] == pytest.approx(0.125)
    assert X[0, -1] == pytest.approx(4.0 - 0.125)
    assert Y[-1, 0] == pytest.approx(2.0 - 0.125)


def test_field_shape_mismatch_rejected():
    g = make_grid_1d(8)
    with pytest.raises(ConfigurationError):
        Field(g, np.zeros(9))


def test_field_integral_sup_and_copy():
    g = make_grid_2d(12, 4, 3.0, 1.0)
    f = Field.full(g, 2.5)
    assert f.integral() == pytest.approx(2.5 * 3.0)
    assert f.sup() == 2.5
    assert Field(g, -np.ones(g.shape)).sup_abs() == 1.0
    cp = f.copy()
    cp.values[0, 0] = 99.0
    assert f.values[0, 0] == 2.5


def test_laplacian_of_constant_vanishes():
    for g in (make_grid_1d(17, 2.0), make_grid_2d(9, 7, 1.5, 1.0)):
        lap = laplacian_neumann(Field.full(g, 3.7))
        assert np.all(lap.values == 0.0)


def test_laplacian_zero_flux_conserves_mass():
    """The Neumann Laplacian moves mass between cells without creating
    any: its cell sum telescopes to zero."""
    rng = np.random.default_rng(11)
    for trial in range(20):
        if trial % 2 == 0:
            g = make_grid_1d(int(rng.integers(3, 40)), float(rng.uniform(0.5, 4.0)))
        else:
            g = make_grid_2d(int(rng.integers(3, 20)), int(rng.integers(3, 20)),
                             float(rng.uniform(0.5, 4.0)), float(rng.uniform(0.5, 4.0)))
        f = Field(g, rng.normal(size=g.shape))
        lap = laplacian_neumann(f)
        scale = np.abs(lap.values).sum() + 1.0
        assert abs(lap.values.sum()) <= 1e-12 * scale


def test_laplacian_is_self_adjoint():
    rng = np.random.default_rng(5)
    for _ in range(10):
        g = make_grid_2d(int(rng.integers(4, 14)), int(rng.integers(4, 14)))
        f = rng.normal(size=g.shape)
        h = rng.normal(size=g.shape)
        lf = laplacian_neumann(Field(g, f)).values
        lh = laplacian_neumann(Field(g, h)).values
        a = float(np.sum(lf * h))
        b = float(np.sum(f * lh))
        assert a == pytest.approx(b, rel=1e-11, abs=1e-11)


def test_laplacian_exact_on_interior_quadratic():
    g1 = make_grid_1d(32, 2.0)
    x = g1.axis_centers(0)
    lap = laplacian_neumann(Field(g1, x * x)).values
    np.testing.assert_allclose(lap[1:-1], 2.0, rtol=1e-11)

    g2 = make_grid_2d(24, 18, 3.0, 2.0)
    X, Y = g2.meshgrid()
    lap2 = laplacian_neumann(Field(g2, X * X + Y * Y)).values
    np.testing.assert_allclose(lap2[1:-1, 1:-1], 4.0, rtol=1e-11)


def test_laplacian_second_order_on_neumann_mode():
    """cos(pi x / L) satisfies the zero-flux condition exactly, so the
    discrete residual against -(pi/L)^2 cos shrinks like h^2."""
    L = 1.0
    lam = (math.pi / L) ** 2
    errs = []
    for n in (32, 64, 128):
        g = make_grid_1d(n, L)
        x = g.axis_centers(0)
        f = np.cos(math.pi * x / L)
        lap = laplacian_neumann(Field(g, f)).values
        errs.append(np.max(np.abs(lap + lam * f)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_chemotactic_divergence_conserves_mass():
    rng = np.random.default_rng(23)
    for trial in range(20):
        if trial % 2 == 0:
            g = make_grid_1d(int(rng.integers(3, 40)))
        else:
            g = make_grid_2d(int(rng.integers(3, 24)), int(rng.integers(3, 24)))
        u = Field(g, rng.uniform(0.0, 2.0, g.shape))
        c = Field(g, rng.uniform(0.0, 3.0, g.shape))
        div = chemotactic_divergence(u, c, lambda v: 0.1 * v)
        scale = np.abs(div.values).sum() + 1.0
        assert abs(div.values.sum()) <= 1e-12 * scale


def test_chemotactic_divergence_flat_signal_is_zero():
    g = make_grid_2d(10, 12)
    rng = np.random.default_rng(2)
    u = Field(g, rng.uniform(0.0, 2.0, g.shape))
    c = Field.full(g, 1.3)
    div = chemotactic_divergence(u, c, lambda v: v * v / (v * v + 0.0625))
    assert np.all(div.values == 0.0)


def test_chemotactic_divergence_interior_for_uniform_density():
    """With u constant and a linear signal the interior flux divergence
    telescopes to zero; only the zero-flux walls contribute."""
    g = make_grid_1d(20, 1.0)
    x = g.axis_centers(0)
    u = Field.full(g, 1.0)
    c = Field(g, 0.05 * x)
    div = chemotactic_divergence(u, c, lambda v: v)
    np.testing.assert_allclose(div.values[1:-1], 0.0, atol=1e-14)
    assert div.values[0] != 0.0 and div.values[-1] != 0.0


def test_chemotactic_divergence_grid_mismatch():
    u = Field.zeros(make_grid_1d(8))
    c = Field.zeros(make_grid_1d(9))
    with pytest.raises(ConfigurationError):
        chemotactic_divergence(u, c, lambda v: v)


def test_first_neumann_eigenvalue_uses_longest_side():
    g = build_grid(2, (4.0, 2.0), (8, 8))
    assert first_neumann_eigenvalue(g) == pytest.approx((math.pi / 4.0) ** 2, rel=1e-12)
    g1 = make_grid_1d(8, 10.0)
    assert first_neumann_eigenvalue(g1) == pytest.approx((math.pi / 10.0) ** 2, rel=1e-12)
