"""NumPy reference implementations of the hot kernels.

These mirror the compiled versions in ``_speedups.pyx`` exactly; the
package selects one set at import time. All functions assume float64
arrays and cell-centered grids with mirror (zero-flux) ghost closure.
"""

import numpy as np
from scipy.linalg import solve_banded

BACKEND = "numpy"


def tridiag_solve(dl, d, du, rhs):
    """Solve a tridiagonal system along axis 0 of ``rhs``.

    ``dl``/``d``/``du`` are the sub-, main, and super-diagonals of an
    (n, n) matrix; ``dl[0]`` and ``du[-1]`` are ignored. ``rhs`` may be
    (n,) or (n, m); every column is solved against the same matrix.
    """
    n = d.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = du[:-1]
    ab[1, :] = d
    ab[2, :-1] = dl[1:]
    return solve_banded((1, 1), ab, rhs, overwrite_ab=True, check_finite=False)


def laplacian_1d(f, inv_h2):
    out = np.empty_like(f)
    out[1:-1] = f[:-2] - 2.0 * f[1:-1] + f[2:]
    # mirror ghosts: f[-1] == f[0], f[n] == f[n-1]
    out[0] = f[1] - f[0]
    out[-1] = f[-2] - f[-1]
    out *= inv_h2
    return out


def laplacian_2d(f, inv_hx2, inv_hy2):
    out = np.empty_like(f)
    out[:, 1:-1] = (f[:, :-2] - 2.0 * f[:, 1:-1] + f[:, 2:]) * inv_hx2
    out[:, 0] = (f[:, 1] - f[:, 0]) * inv_hx2
    out[:, -1] = (f[:, -2] - f[:, -1]) * inv_hx2
    out[1:-1, :] += (f[:-2, :] - 2.0 * f[1:-1, :] + f[2:, :]) * inv_hy2
    out[0, :] += (f[1, :] - f[0, :]) * inv_hy2
    out[-1, :] += (f[-2, :] - f[-1, :]) * inv_hy2
    return out


def _face_flux(v, ul, ur, h):
    """Flux v*u at interior faces; central average unless the face
    Peclet number |v|h/2 exceeds 1, then donor-cell upwind."""
    central = 0.5 * (ul + ur)
    donor = np.where(v > 0.0, ul, ur)
    return v * np.where(np.abs(v) * (0.5 * h) > 1.0, donor, central)


def chemo_div_1d(u, s, h):
    """div(u * grad(s)) with zero-flux boundary faces; s = chi(c)."""
    v = (s[1:] - s[:-1]) / h
    flux = _face_flux(v, u[:-1], u[1:], h)
    out = np.zeros_like(u)
    out[:-1] = flux
    out[1:] -= flux
    out /= h
    return out


def chemo_div_2d(u, s, hx, hy):
    vx = (s[:, 1:] - s[:, :-1]) / hx
    fx = _face_flux(vx, u[:, :-1], u[:, 1:], hx)
    gx = np.zeros_like(u)
    gx[:, :-1] = fx
    gx[:, 1:] -= fx

    vy = (s[1:, :] - s[:-1, :]) / hy
    fy = _face_flux(vy, u[:-1, :], u[1:, :], hy)
    gy = np.zeros_like(u)
    gy[:-1, :] = fy
    gy[1:, :] -= fy

    return gx / hx + gy / hy


def max_face_speed_1d(s, h):
    """Largest |d(s)/dx| over interior faces (advective CFL input)."""
    if s.shape[0] < 2:
        return 0.0
    return float(np.max(np.abs(s[1:] - s[:-1]))) / h


def max_face_speed_2d(s, hx, hy):
    vx = np.max(np.abs(s[:, 1:] - s[:, :-1])) / hx if s.shape[1] > 1 else 0.0
    vy = np.max(np.abs(s[1:, :] - s[:-1, :])) / hy if s.shape[0] > 1 else 0.0
    return float(max(vx, vy))
