"""Direction grids and surface quadrature on the unit sphere S^{n-1}.

Grids are antipodally closed: the node set is mapped onto itself by
u -> -u, with an explicit index permutation kept on the grid.  For n = 2
the rule is the equiangular trapezoid rule (equal weights); for n = 3 it
is a product rule, Gauss-Legendre in the polar variable (mirrored per
hemisphere so that the equator never splits a panel) times equiangular
longitudes.  Resolution is the accuracy knob throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre

from .errors import GridError

TWO_PI = 2.0 * math.pi


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n, pi^(n/2) / Gamma(n/2 + 1)."""
    if n < 1:
        raise GridError("dimension must be >= 1")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sphere_area(n: int) -> float:
    """Surface measure of S^(n-1) in R^n, equal to n * omega_n."""
    return n * unit_ball_volume(n)


@dataclass(frozen=True)
class SphereGrid:
    """Quadrature nodes and weights on S^(n-1).

    nodes are unit vectors, shape (N, dim); weights are positive and sum
    to the sphere area.  antipode[i] is the index of -nodes[i].  For
    dim == 3 the product structure (phis ascending, equally spaced lons)
    is kept for interpolation; thetas plays that role for dim == 2.
    """

    dim: int
    resolution: int
    nodes: np.ndarray
    weights: np.ndarray
    antipode: np.ndarray
    thetas: np.ndarray | None = None
    phis: np.ndarray | None = None
    lons: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def max_spacing(self) -> float:
        """Largest angular gap between neighbouring nodes."""
        if self.dim == 2:
            return TWO_PI / self.size
        gaps = np.diff(self.phis)
        return float(max(gaps.max(), self.phis[0], math.pi - self.phis[-1]))

    def angles_of(self, dirs: np.ndarray):
        """Intrinsic coordinates of unit directions (theta, or (phi, theta))."""
        dirs = np.asarray(dirs, dtype=float)
        if self.dim == 2:
            return np.mod(np.arctan2(dirs[..., 1], dirs[..., 0]), TWO_PI)
        phi = np.arccos(np.clip(dirs[..., 2], -1.0, 1.0))
        theta = np.mod(np.arctan2(dirs[..., 1], dirs[..., 0]), TWO_PI)
        return phi, theta


def make_grid(dim: int, resolution: int) -> SphereGrid:
    """Build the quadrature grid on S^(dim-1).

    dim == 2: `resolution` equiangular nodes (rounded up to even so the
    set is antipodally closed), all weights 2*pi/M.

    dim == 3: `resolution` Gauss-Legendre latitude rows (mirrored across
    the equator) times 2*resolution equiangular longitudes; weights are
    the product weights and sum to 4*pi.
    """
    if dim not in (2, 3):
        raise GridError(f"unsupported dimension {dim}")
    if resolution < 8:
        raise GridError("resolution must be >= 8")

    if dim == 2:
        m = resolution + (resolution % 2)
        thetas = TWO_PI * np.arange(m) / m
        nodes = np.column_stack([np.cos(thetas), np.sin(thetas)])
        weights = np.full(m, TWO_PI / m)
        antipode = (np.arange(m) + m // 2) % m
        return SphereGrid(2, m, nodes, weights, antipode, thetas=thetas)

    n_lat = resolution + (resolution % 2)
    half = n_lat // 2
    t, w = roots_legendre(half)
    # map to x = cos(phi) in (0, 1), then mirror for the south rows
    x_half = (t + 1.0) / 2.0
    w_half = w / 2.0
    order = np.argsort(-x_half)
    x_north = x_half[order]
    w_north = w_half[order]
    x_all = np.concatenate([x_north, -x_north[::-1]])
    w_lat = np.concatenate([w_north, w_north[::-1]])
    phis = np.arccos(x_all)

    m_lon = 2 * n_lat
    lons = TWO_PI * np.arange(m_lon) / m_lon
    w_lon = TWO_PI / m_lon

    sin_phi = np.sqrt(1.0 - x_all**2)
    # row-major layout: node index = lat_row * m_lon + lon_col
    cos_t, sin_t = np.cos(lons), np.sin(lons)
    nodes = np.empty((n_lat * m_lon, 3))
    nodes[:, 0] = np.outer(sin_phi, cos_t).ravel()
    nodes[:, 1] = np.outer(sin_phi, sin_t).ravel()
    nodes[:, 2] = np.repeat(x_all, m_lon)
    weights = np.repeat(w_lat * w_lon, m_lon)

    rows = np.arange(n_lat)[:, None]
    cols = np.arange(m_lon)[None, :]
    antipode = ((n_lat - 1 - rows) * m_lon + (cols + m_lon // 2) % m_lon).ravel()
    return SphereGrid(3, n_lat, nodes, weights, antipode,
                      phis=phis, lons=lons)


def integrate(grid: SphereGrid, f) -> float:
    """Quadrature sum of f over the grid (f: callable on nodes, or values)."""
    values = f(grid.nodes) if callable(f) else np.asarray(f, dtype=float)
    if values.shape != (grid.size,):
        raise GridError("integrand values do not match the grid")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite integrand values")
    return float(grid.weights @ values)


class RadialField:
    """Scalar field sampled on a grid, evaluable at arbitrary directions.

    order "cubic" (dim 2 only) interpolates with a periodic cubic spline;
    "linear" uses periodic piecewise-linear (dim 2) or bilinear in
    (phi, theta) with polar-cap blending toward the row mean (dim 3).
    """

    def __init__(self, grid: SphereGrid, values: np.ndarray, order: str):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.size,):
            raise GridError("field values do not match the grid")
        if order not in ("cubic", "linear"):
            raise GridError(f"unknown interpolation order {order!r}")
        if order == "cubic" and grid.dim != 2:
            raise GridError("cubic interpolation is only wired up for dim 2")
        self.grid = grid
        self.values = values
        self.order = order
        if grid.dim == 2:
            if order == "cubic":
                th = np.append(grid.thetas, TWO_PI)
                vv = np.append(values, values[0])
                self._spline = CubicSpline(th, vv, bc_type="periodic")
        else:
            m = grid.lons.size
            self._table = values.reshape(grid.phis.size, m)
            self._pole_lo = float(self._table[0].mean())
            self._pole_hi = float(self._table[-1].mean())

    def at_angles(self, theta):
        """dim 2 only: evaluate at polar angles."""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        if self.order == "cubic":
            return self._spline(theta)
        m = self.grid.size
        pos = theta / (TWO_PI / m)
        i0 = np.floor(pos).astype(int) % m
        frac = pos - np.floor(pos)
        v = self.values
        return v[i0] * (1.0 - frac) + v[(i0 + 1) % m] * frac

    def derivative_at_angles(self, theta):
        """dim 2 only: d rho / d theta of the interpolant."""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        if self.order == "cubic":
            return self._spline(theta, 1)
        m = self.grid.size
        step = TWO_PI / m
        i0 = np.floor(theta / step).astype(int) % m
        v = self.values
        return (v[(i0 + 1) % m] - v[i0]) / step

    def _row_eval(self, rows, theta):
        m = self.grid.lons.size
        pos = theta / (TWO_PI / m)
        i0 = np.floor(pos).astype(int) % m
        frac = pos - np.floor(pos)
        tab = self._table
        return tab[rows, i0] * (1.0 - frac) + tab[rows, (i0 + 1) % m] * frac

    def at_dirs(self, dirs: np.ndarray) -> np.ndarray:
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        if self.grid.dim == 2:
            return self.at_angles(np.arctan2(dirs[:, 1], dirs[:, 0]))
        phi, theta = self.grid.angles_of(dirs)
        phis = self.grid.phis
        j = np.searchsorted(phis, phi)
        out = np.empty(phi.shape)

        lo = j == 0
        hi = j == phis.size
        mid = ~(lo | hi)
        if np.any(mid):
            jm = j[mid]
            f = (phi[mid] - phis[jm - 1]) / (phis[jm] - phis[jm - 1])
            va = self._row_eval(jm - 1, theta[mid])
            vb = self._row_eval(jm, theta[mid])
            out[mid] = va * (1.0 - f) + vb * f
        if np.any(lo):
            f = phi[lo] / phis[0]
            out[lo] = self._pole_lo * (1.0 - f) + self._row_eval(0, theta[lo]) * f
        if np.any(hi):
            f = (math.pi - phi[hi]) / (math.pi - phis[-1])
            out[hi] = (self._pole_hi * (1.0 - f)
                       + self._row_eval(phis.size - 1, theta[hi]) * f)
        return out

    def __call__(self, dirs):
        return self.at_dirs(dirs)
