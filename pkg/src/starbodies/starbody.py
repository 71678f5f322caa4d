"""Star bodies in R^n and the operators on them.

A body is stored as radial samples on a fixed sphere grid together with
an inner radius r_in: the body is star shaped with respect to the ball
of that radius.  Between nodes the radial function is interpolated
(periodic cubic spline for n = 2, bilinear in latitude/longitude for
n = 3), and every operator below acts on that interpolated body, so the
sample resolution is the single accuracy knob.

Steiner symmetrization is organized around a reusable chord-length
profile (SteinerPlan): the plan tabulates, once per body and direction,
the total chord length of the body against the base coordinate, and can
then resample the body whose slices are centred intervals of r times the
original chord length.  r = 1 is the Euclidean symmetral; the spherical
and hyperbolic layers reuse the same plan with r chosen by a measure
residual.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (BracketError, DegenerateNormal, GridMismatch,
                     InvalidBody)
from .grids import RadialField, SphereGrid, TWO_PI, unit_ball_volume
from .numerics import bisect_vec

LIPSCHITZ_SLACK = 2.0
DEGENERATE_DOT = 1e-6
CORNER_FLAG_ANGLE = 0.1


class StarBody:
    """Radial samples of a star body on a sphere grid.

    Parameters
    ----------
    grid : SphereGrid
    rho : array of positive radial values at the grid nodes
    r_in : float
        Radius of a ball the body is star shaped with respect to.  The
        constructor rejects samples below r_in and radial jumps between
        neighbouring nodes beyond the Lipschitz budget that r_in allows.
    interp : "auto", "cubic" or "linear"
    """

    def __init__(self, grid: SphereGrid, rho, r_in: float, interp: str = "auto"):
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (grid.size,):
            raise GridMismatch("radial samples do not match the grid")
        if not np.all(np.isfinite(rho)):
            raise InvalidBody("non-finite radial samples")
        if r_in <= 0:
            raise InvalidBody("r_in must be positive")
        if np.any(rho < r_in * (1.0 - 1e-9)):
            raise InvalidBody("radial sample below the inner radius")
        if interp == "auto":
            interp = "cubic" if grid.dim == 2 else "linear"

        self.grid = grid
        self.rho = rho
        self.r_in = float(r_in)
        self.interp = interp
        self._check_lipschitz()
        self.field = RadialField(grid, rho, interp)
        if interp == "cubic":
            mid = grid.thetas + math.pi / grid.size
            if self.field.at_angles(mid).min() < 0.35 * self.r_in:
                raise InvalidBody("interpolant dips far below the inner radius")
        self._normals = None
        self._support = None

    # -- validation --------------------------------------------------------

    def _check_lipschitz(self):
        # a body star shaped w.r.t. B(r) has |grad_S rho| <= rho*sqrt(rho^2-r^2)/r
        rho, r = self.rho, self.r_in
        rmax = rho.max()
        budget = LIPSCHITZ_SLACK * rmax * math.sqrt(max(rmax**2 - r**2, 0.0)) / r + 1e-9
        g = self.grid
        if g.dim == 2:
            gaps = np.abs(np.diff(np.append(rho, rho[0])))
            if np.any(gaps > budget * (TWO_PI / g.size)):
                raise InvalidBody("radial jump exceeds the Lipschitz budget")
            return
        table = rho.reshape(g.phis.size, g.lons.size)
        dlon = TWO_PI / g.lons.size
        sin_phi = np.sin(g.phis)[:, None]
        lon_gaps = np.abs(np.diff(table, axis=1, append=table[:, :1]))
        if np.any(lon_gaps > budget * dlon * np.maximum(sin_phi, 1e-3) + 1e-12):
            raise InvalidBody("radial jump exceeds the Lipschitz budget")
        lat_gaps = np.abs(np.diff(table, axis=0))
        dphi = np.diff(g.phis)[:, None]
        if np.any(lat_gaps > budget * dphi + 1e-12):
            raise InvalidBody("radial jump exceeds the Lipschitz budget")

    # -- evaluation --------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.grid.dim

    def radial(self, dirs) -> np.ndarray:
        """Radial function at unit directions."""
        return self.field.at_dirs(dirs)

    def radial_at(self, points) -> np.ndarray:
        """Degree -1 homogeneous extension: rho(x) = rho(x/|x|)/|x|."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        norms = np.linalg.norm(points, axis=-1)
        if np.any(norms == 0):
            raise ValueError("radial function is undefined at the origin")
        return self.field.at_dirs(points / norms[:, None]) / norms

    def membership(self, points) -> np.ndarray:
        """Boolean test |x| <= rho(x/|x|) on the interpolated body."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        norms = np.linalg.norm(points, axis=-1)
        inside = np.ones(norms.shape, dtype=bool)
        nz = norms > 0
        if np.any(nz):
            dirs = points[nz] / norms[nz, None]
            inside[nz] = norms[nz] <= self.field.at_dirs(dirs) * (1.0 + 1e-12)
        return inside

    def with_samples(self, rho, r_in=None) -> "StarBody":
        return StarBody(self.grid, rho, self.r_in if r_in is None else r_in,
                        self.interp)


def ball(grid: SphereGrid, radius: float) -> StarBody:
    return StarBody(grid, np.full(grid.size, float(radius)),
                    radius * (1.0 - 1e-12))


def scale_body(body: StarBody, c: float) -> StarBody:
    if c <= 0:
        raise InvalidBody("scale factor must be positive")
    return StarBody(body.grid, c * body.rho, c * body.r_in, body.interp)


def rotate_body(body: StarBody, rot: np.ndarray) -> StarBody:
    """Samples of the rotated body: rho_{RK}(u) = rho_K(R^T u)."""
    samples = body.radial(body.grid.nodes @ rot)
    return StarBody(body.grid, samples, body.r_in * (1.0 - 1e-9), body.interp)


# ---------------------------------------------------------------------------
# normals

def _normals_dim2(body: StarBody):
    g = body.grid
    h = TWO_PI / g.size
    th = g.thetas
    rho = body.rho
    fwd = (body.field.at_angles(th + h) - rho) / h
    bwd = (rho - body.field.at_angles(th - h)) / h
    der = body.field.derivative_at_angles(th)

    e_r = g.nodes
    e_t = np.column_stack([-np.sin(th), np.cos(th)])

    def unit_normal(d):
        raw = rho[:, None] * e_r - d[:, None] * e_t
        return raw / np.linalg.norm(raw, axis=1)[:, None]

    nu = unit_normal(der)
    ang = np.arccos(np.clip(np.sum(unit_normal(fwd) * unit_normal(bwd), axis=1),
                            -1.0, 1.0))
    u_dot_nu = np.sum(e_r * nu, axis=1)
    return nu, u_dot_nu, ang > CORNER_FLAG_ANGLE


def _normals_dim3(body: StarBody):
    g = body.grid
    n_lat, n_lon = g.phis.size, g.lons.size
    h_phi = float(np.diff(g.phis).max())
    h_lon = TWO_PI / n_lon
    phi = np.repeat(g.phis, n_lon)
    th = np.tile(g.lons, n_lat)
    rho = body.rho

    def at(p, t):
        p = np.clip(p, 1e-9, math.pi - 1e-9)
        sp = np.sin(p)
        dirs = np.column_stack([sp * np.cos(t), sp * np.sin(t), np.cos(p)])
        return body.field.at_dirs(dirs)

    # shrink the latitude step near the poles so the stencil stays on-chart
    step_f = np.minimum(h_phi, math.pi - phi - 1e-7)
    step_b = np.minimum(h_phi, phi - 1e-7)
    dphi_f = (at(phi + step_f, th) - rho) / step_f
    dphi_b = (rho - at(phi - step_b, th)) / step_b
    dth_f = (at(phi, th + h_lon) - rho) / h_lon
    dth_b = (rho - at(phi, th - h_lon)) / h_lon

    sin_phi = np.sin(phi)
    e_r = g.nodes
    e_phi = np.column_stack([np.cos(phi) * np.cos(th),
                             np.cos(phi) * np.sin(th), -sin_phi])
    e_th = np.column_stack([-np.sin(th), np.cos(th), np.zeros_like(th)])

    def unit_normal(dp, dt):
        raw = (rho[:, None] * e_r - dp[:, None] * e_phi
               - (dt / sin_phi)[:, None] * e_th)
        return raw / np.linalg.norm(raw, axis=1)[:, None]

    nu = unit_normal(0.5 * (dphi_f + dphi_b), 0.5 * (dth_f + dth_b))
    ang = np.arccos(np.clip(np.sum(unit_normal(dphi_f, dth_f)
                                   * unit_normal(dphi_b, dth_b), axis=1),
                            -1.0, 1.0))
    u_dot_nu = np.sum(e_r * nu, axis=1)
    return nu, u_dot_nu, ang > CORNER_FLAG_ANGLE


def node_normals(body: StarBody):
    """Outward unit normals at the boundary points rho(u_i) u_i.

    Uses central finite differences of the interpolated radial function at
    grid-spacing step; where the two one-sided estimates disagree by more
    than 0.1 rad the node is flagged as a corner (the central average is
    still used for integrands).  Returns (nu, u_dot_nu, corner_flags).
    """
    if body._normals is None:
        body._normals = (_normals_dim2(body) if body.dim == 2
                         else _normals_dim3(body))
    return body._normals


def boundary_normal(body: StarBody, u) -> np.ndarray:
    """Outward unit normal at the boundary point in direction u."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    if body.dim == 2:
        th = math.atan2(u[1], u[0])
        rho = float(body.field.at_angles(np.array([th]))[0])
        der = float(body.field.derivative_at_angles(np.array([th]))[0])
        e_t = np.array([-math.sin(th), math.cos(th)])
        raw = rho * u - der * e_t
    else:
        g = body.grid
        h_phi = float(np.diff(g.phis).max())
        h_lon = TWO_PI / g.lons.size
        phi = math.acos(max(-1.0, min(1.0, u[2])))
        th = math.atan2(u[1], u[0])

        def at(p, t):
            p = min(max(p, 1e-9), math.pi - 1e-9)
            sp = math.sin(p)
            d = np.array([[sp * math.cos(t), sp * math.sin(t), math.cos(p)]])
            return float(body.field.at_dirs(d)[0])

        rho = at(phi, th)
        sf = min(h_phi, math.pi - phi - 1e-7)
        sb = min(h_phi, phi - 1e-7)
        dphi = (at(phi + sf, th) - at(phi - sb, th)) / (sf + sb)
        dth = (at(phi, th + h_lon) - at(phi, th - h_lon)) / (2 * h_lon)
        sp = math.sin(phi)
        e_phi = np.array([math.cos(phi) * math.cos(th),
                          math.cos(phi) * math.sin(th), -sp])
        e_th = np.array([-math.sin(th), math.cos(th), 0.0])
        raw = rho * u - dphi * e_phi - (dth / max(sp, 1e-9)) * e_th
    nu = raw / np.linalg.norm(raw)
    if float(nu @ u) <= DEGENERATE_DOT:
        raise DegenerateNormal("normal nearly orthogonal to the ray")
    return nu


# ---------------------------------------------------------------------------
# measures

def volume(body: StarBody) -> float:
    """Lebesgue volume (1/n) * integral of rho^n over directions."""
    g = body.grid
    return float(g.weights @ body.rho**g.dim) / g.dim


def perimeter_detail(body: StarBody):
    """Boundary measure and the count of excluded degenerate nodes."""
    nu, udn, _ = node_normals(body)
    good = udn > DEGENERATE_DOT
    g = body.grid
    vals = body.rho[good] ** (g.dim - 1) / udn[good]
    return float(g.weights[good] @ vals), int((~good).sum())


def perimeter(body: StarBody) -> float:
    value, excluded = perimeter_detail(body)
    if excluded:
        warnings.warn(f"perimeter quadrature skipped {excluded} degenerate nodes")
    return value


def rearrangement(body: StarBody) -> StarBody:
    """Centred ball with the same volume (symmetric rearrangement)."""
    n = body.dim
    radius = (volume(body) / unit_ball_volume(n)) ** (1.0 / n)
    return ball(body.grid, radius)


# ---------------------------------------------------------------------------
# support functions and polarity

@dataclass
class SupportProfile:
    """Support function samples h(u_i) > 0 on a grid."""

    grid: SphereGrid
    h: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        if self.h.shape != (self.grid.size,):
            raise GridMismatch("support samples do not match the grid")
        if np.any(~np.isfinite(self.h)) or np.any(self.h <= 0):
            raise InvalidBody("support samples must be positive and finite")
        self._field = None

    def at_dirs(self, dirs) -> np.ndarray:
        if self._field is None:
            self._field = RadialField(self.grid, self.h, "linear")
        return self._field.at_dirs(dirs)


def support_profile(body: StarBody, refine_rounds: int = 2) -> SupportProfile:
    """Support function h(u) = max_v rho(v) (u . v) sampled at all nodes.

    The node maximum is sharpened by a dense local search around the
    winning node (refine_rounds successive window shrinks).
    """
    g = body.grid
    gains = (g.nodes @ g.nodes.T) * body.rho[None, :]
    best = np.argmax(gains, axis=1)
    h = gains[np.arange(g.size), best]

    if g.dim == 2:
        th_axis = g.thetas
        centers = th_axis[best]
        width = TWO_PI / g.size
        for _ in range(refine_rounds):
            offs = np.linspace(-width, width, 33)
            cand = centers[:, None] + offs[None, :]
            vals = (body.field.at_angles(cand.ravel()).reshape(cand.shape)
                    * np.cos(cand - th_axis[:, None]))
            k = np.argmax(vals, axis=1)
            centers = cand[np.arange(g.size), k]
            h = np.maximum(h, vals[np.arange(g.size), k])
            width /= 8.0
        return SupportProfile(g, h)

    phis = np.repeat(g.phis, g.lons.size)
    lons = np.tile(g.lons, g.phis.size)
    c_phi, c_lon = phis[best], lons[best]
    w_phi = float(np.diff(g.phis).max())
    w_lon = TWO_PI / g.lons.size
    m = 9
    for _ in range(refine_rounds):
        op = np.linspace(-w_phi, w_phi, m)
        ol = np.linspace(-w_lon, w_lon, m)
        pp = np.clip(c_phi[:, None, None] + op[None, :, None], 1e-9,
                     math.pi - 1e-9)
        tt = c_lon[:, None, None] + ol[None, None, :]
        pp, tt = np.broadcast_arrays(pp, tt)
        sp = np.sin(pp)
        dirs = np.stack([sp * np.cos(tt), sp * np.sin(tt), np.cos(pp)],
                        axis=-1)
        flat = dirs.reshape(-1, 3)
        vals = (body.field.at_dirs(flat).reshape(pp.shape)
                * np.einsum("ijkl,il->ijk", dirs, g.nodes))
        v2 = vals.reshape(g.size, -1)
        k = np.argmax(v2, axis=1)
        h = np.maximum(h, v2[np.arange(g.size), k])
        c_phi = pp.reshape(g.size, -1)[np.arange(g.size), k]
        c_lon = tt.reshape(g.size, -1)[np.arange(g.size), k]
        w_phi /= 4.0
        w_lon /= 4.0
    return SupportProfile(g, h)


def support(body: StarBody, u) -> float:
    """Support value in a single direction."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    gains = body.rho * (body.grid.nodes @ u)
    if body.dim == 2:
        th_u = math.atan2(u[1], u[0])
        best = float(body.grid.thetas[np.argmax(gains)])
        width = TWO_PI / body.grid.size
        h = gains.max()
        for _ in range(3):
            cand = best + np.linspace(-width, width, 65)
            vals = body.field.at_angles(cand) * np.cos(cand - th_u)
            k = int(np.argmax(vals))
            best, h = cand[k], max(h, float(vals[k]))
            width /= 16.0
        return h
    prof = support_profile(body)
    return float(prof.at_dirs(u[None, :])[0])


def subadditivity_witness(profile: SupportProfile, rng=None, pairs: int = 128,
                          tol: float = 1e-9) -> bool:
    """Spot-check h(u+v) <= h(u) + h(v) on random node pairs."""
    rng = rng or np.random.default_rng(0)
    g = profile.grid
    i = rng.integers(0, g.size, pairs)
    j = rng.integers(0, g.size, pairs)
    w = g.nodes[i] + g.nodes[j]
    norms = np.linalg.norm(w, axis=1)
    ok = norms > 1e-9
    lhs = profile.at_dirs(w[ok] / norms[ok, None]) * norms[ok]
    return bool(np.all(lhs <= profile.h[i][ok] + profile.h[j][ok] + tol))


def convexity_witness(body: StarBody, tol: float = 1e-3) -> bool:
    """True when the radial function agrees with its convex hull's.

    A body is convex iff it coincides with the intersection of the half
    spaces cut out by its support function; the hull radial function is
    min_w h(w) / (u . w) over w with positive dot.
    """
    prof = support_profile(body, refine_rounds=1)
    dots = body.grid.nodes @ body.grid.nodes.T
    with np.errstate(divide="ignore"):
        ratios = np.where(dots > 1e-9, prof.h[None, :] / dots, np.inf)
    hull = ratios.min(axis=1)
    return bool(np.all(body.rho >= hull * (1.0 - tol) - 1e-12))


def polar(body: StarBody) -> StarBody:
    """Polar body via rho_{K*} = 1/h_K (support taken of the given body).

    For non-convex bodies this is the polar of the convex hull, which is
    the standard convention adopted here.
    """
    h = support_profile(body).h
    rho = 1.0 / h
    return StarBody(body.grid, rho, 0.999 * rho.min(), body.interp)


def star_from_support(profile: SupportProfile) -> StarBody:
    """Convex body with the given support function, via double polarity."""
    rho = 1.0 / profile.h
    inner = StarBody(profile.grid, rho, 0.999 * rho.min())
    return polar(inner)


# ---------------------------------------------------------------------------
# projection body

def projection_body(body: StarBody) -> SupportProfile:
    """Petty projection body support: h(z) = (1/2) * int_bdK |nu . z| dS."""
    if body.dim == 2:
        return SupportProfile(body.grid, _projection_support_dim2(body))
    return SupportProfile(body.grid, _projection_support_dim3(body))


def _projection_support_dim2(body: StarBody) -> np.ndarray:
    """Silhouette-exact planar projection support.

    With N(t) = (rho cos t + rho' sin t, rho sin t - rho' cos t) the
    signed integrand z . N has the exact antiderivative z . A,
    A(t) = (rho sin t, -rho cos t), so the integral of |z . N| telescopes
    into sum_arcs |z . (A_next - A_this)| over arcs delimited by the sign
    changes of z . N. Only the root locations need numerics (vectorized
    bisection on the interpolant), so the result is accurate to the
    radial interpolant rather than to the grid quadrature.
    """
    g = body.grid
    th = g.thetas
    step = TWO_PI / g.size
    rho = body.rho
    der = body.field.derivative_at_angles(th)
    co, si = np.cos(th), np.sin(th)
    carriers = np.column_stack([rho * co + der * si, rho * si - der * co])

    f = g.nodes @ carriers.T
    f = np.where(f == 0.0, 1e-300, f)
    cross = f * f[:, np.roll(np.arange(g.size), -1)] < 0.0
    rows, cols = np.nonzero(cross)
    # a row without sign changes means the negative excursion (if any)
    # hides inside one panel; the plain weighted sum is the best left
    no_cross = ~cross.any(axis=1)

    z = g.nodes[rows]
    sign_lo = np.sign(f[rows, cols])
    lo = th[cols]
    hi = lo + step
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        rm = body.field.at_angles(mid)
        dm = body.field.derivative_at_angles(mid)
        cm, sm = np.cos(mid), np.sin(mid)
        fm = z[:, 0] * (rm * cm + dm * sm) + z[:, 1] * (rm * sm - dm * cm)
        right = fm * sign_lo <= 0.0
        hi = np.where(right, mid, hi)
        lo = np.where(right, lo, mid)
    roots = 0.5 * (lo + hi)

    rr = body.field.at_angles(roots)
    anti = np.column_stack([rr * np.sin(roots), -rr * np.cos(roots)])
    # cyclic successor of each root within its row (rows arrive sorted)
    idx = np.arange(rows.size)
    nxt = idx + 1
    last = np.nonzero(np.diff(rows, append=-1) != 0)[0]
    first = np.concatenate([[0], last[:-1] + 1])
    nxt[last] = first
    seg = np.abs(np.sum(z * (anti[nxt] - anti), axis=1))
    h = np.zeros(g.size)
    np.add.at(h, rows, seg)
    if np.any(no_cross):
        h[no_cross] = step * np.abs(f[no_cross]).sum(axis=1)
    return 0.5 * h


def _projection_support_dim3(body: StarBody) -> np.ndarray:
    """Projection support by weighted sums of |z . carrier| over nodes.

    In the radial parametrization the surface element is
    rho^(n-1) / (u . nu) du; degenerate-normal nodes carry zero weight.
    The kink of the absolute value wherever z is orthogonal to the
    normal costs the plain sum an O(h^2) wobble; a panel correction from
    the piecewise-linear model of the signed integrand along each
    latitude ring removes the in-ring part of it.
    """
    nu, udn, _ = node_normals(body)
    good = udn > DEGENERATE_DOT
    g = body.grid
    factors = np.zeros(g.size)
    factors[good] = g.weights[good] * body.rho[good] ** (g.dim - 1) / udn[good]
    carriers = factors[:, None] * nu
    m_lon = g.lons.size
    idx = np.arange(g.size)
    ring_next = idx + 1
    ring_next[idx % m_lon == m_lon - 1] -= m_lon
    h = np.empty(g.size)
    block = max(1, int(2.5e7 // g.size))
    for start in range(0, g.size, block):
        stop = min(start + block, g.size)
        dots = g.nodes[start:stop] @ carriers.T
        absdots = np.abs(dots)
        nxt = absdots[:, ring_next]
        cross = dots * dots[:, ring_next] < 0.0
        with np.errstate(invalid="ignore", divide="ignore"):
            delta = np.where(cross, absdots * nxt / (absdots + nxt), 0.0)
        h[start:stop] = 0.5 * (absdots.sum(axis=1) - delta.sum(axis=1))
    return h


# ---------------------------------------------------------------------------
# slicing

@dataclass
class IntervalSlice:
    """Intersection of a body with a line: disjoint closed intervals."""

    base: np.ndarray
    direction: np.ndarray
    intervals: np.ndarray  # shape (k, 2), sorted, disjoint

    def __post_init__(self):
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if iv.size:
            if np.any(iv[:, 1] < iv[:, 0] - 1e-12):
                raise InvalidBody("interval with negative length")
            if np.any(iv[1:, 0] < iv[:-1, 1] - 1e-12):
                raise InvalidBody("intervals out of order")
        self.intervals = iv

    @property
    def total_length(self) -> float:
        return float((self.intervals[:, 1] - self.intervals[:, 0]).sum()) \
            if self.intervals.size else 0.0

    @property
    def empty(self) -> bool:
        return self.intervals.size == 0


def chord_slice(body: StarBody, u, base, n_scan: int | None = None,
                tol: float = 1e-10) -> IntervalSlice:
    """Slice of the body along direction u through a base point.

    The line is scanned at step R/N_scan (R = max rho, N_scan defaulting
    to 4x the grid resolution) for membership changes and each boundary
    crossing is refined by bisection.  Star-body Lipschitz bounds keep
    lobes wider than the scan step; thinner features can be missed, which
    is the documented resolution limit of the scan.
    """
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    base = np.asarray(base, dtype=float) - (np.asarray(base, dtype=float) @ u) * u
    if n_scan is None:
        n_scan = 4 * body.grid.resolution
    r = float(body.rho.max()) * (1.0 + 1e-9)
    ts = np.linspace(-r, r, 2 * n_scan + 1)
    inside = body.membership(base[None, :] + ts[:, None] * u[None, :])
    flips = np.nonzero(inside[:-1] != inside[1:])[0]
    if flips.size == 0:
        return IntervalSlice(base, u, np.empty((0, 2)))

    lo, hi = ts[flips], ts[flips + 1]
    lo_inside = inside[flips]
    for _ in range(int(math.ceil(math.log2((ts[1] - ts[0]) / tol)))):
        mid = 0.5 * (lo + hi)
        m_in = body.membership(base[None, :] + mid[:, None] * u[None, :])
        same = m_in == lo_inside
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    cross = 0.5 * (lo + hi)
    # runs of inside start at False->True flips and end at True->False
    return IntervalSlice(base, u, cross.reshape(-1, 2))


# ---------------------------------------------------------------------------
# Steiner symmetrization

class SteinerPlan:
    """Chord-length profile of a body along a direction.

    For dim 2 the boundary curve is traced once at 4x node density and
    chord lengths against the base coordinate come from refined level
    crossings of the curve.  For dim 3 the chord length is tabulated per
    grid node along the node's own base ray by membership scans.
    resample(r) then roots, per node, the radial value of the body whose
    slice at base point x' is the centred interval of length r * L(x').
    """

    def __init__(self, body: StarBody, u, n_base: int = 16384):
        u = np.asarray(u, dtype=float)
        self.u = u / np.linalg.norm(u)
        self.body = body
        self.rho_max = float(body.rho.max())
        if body.dim == 2:
            self._build_dim2(n_base)
        else:
            self._build_dim3()

    # -- dim 2 --------------------------------------------------------------

    def _build_dim2(self, n_base: int):
        body, u = self.body, self.u
        v = np.array([u[1], -u[0]])
        self.v = v
        g = body.grid
        n_fine = 4 * g.size
        th = TWO_PI * (np.arange(n_fine) + 0.5) / n_fine
        rho = body.field.at_angles(th)
        e = np.column_stack([np.cos(th), np.sin(th)])
        s = rho * (e @ v)
        t = rho * (e @ u)

        # parabolic sharpening of the two silhouette extrema of s(theta)
        smax = 0.0
        for sign in (1.0, -1.0):
            k = int(np.argmax(sign * s))
            ths = th[k] + np.array([-1.0, 0.0, 1.0]) * (TWO_PI / n_fine)
            rr = body.field.at_angles(ths)
            vals = sign * rr * (np.column_stack([np.cos(ths), np.sin(ths)]) @ v)
            denom = vals[0] - 2 * vals[1] + vals[2]
            if denom < -1e-300:
                off = 0.5 * (vals[0] - vals[2]) / denom
                peak = vals[1] - 0.25 * (vals[0] - vals[2]) * off
            else:
                peak = vals[1]
            smax = max(smax, float(peak))
        self.s_max = smax * (1.0 + 1e-12)

        tau = np.linspace(-math.pi / 2, math.pi / 2, n_base + 1)
        sq = self.s_max * np.sin(tau)

        def curve_s(ang):
            rr = body.field.at_angles(ang)
            return rr * (np.cos(ang) * v[0] + np.sin(ang) * v[1])

        # panel endpoints: the fine sweep, with the panels flanking each
        # discrete extremum of s subdivided, since a level near an extremum
        # can cross a panel twice without being bracketed by its endpoints
        step = TWO_PI / n_fine
        ds = np.diff(np.append(s, s[0]))
        at_extremum = np.nonzero(ds * np.roll(ds, 1) <= 0)[0]
        refine = np.unique(np.concatenate([(at_extremum - 1) % n_fine,
                                           at_extremum]))
        keep = np.setdiff1d(np.arange(n_fine), refine)
        micro = 128
        sub = (th[refine][:, None]
               + np.linspace(0.0, step, micro + 1)[None, :])
        th0_arr = np.concatenate([th[keep], sub[:, :-1].ravel()])
        th1_arr = np.concatenate([th[keep] + step, sub[:, 1:].ravel()])
        s0_arr = np.concatenate([s[keep], curve_s(sub[:, :-1].ravel())])
        s1_arr = np.concatenate([s[(keep + 1) % n_fine],
                                 curve_s(sub[:, 1:].ravel())])

        # level crossings: a panel spans the queries between its endpoint
        # s values
        a = np.minimum(s0_arr, s1_arr)
        b = np.maximum(s0_arr, s1_arr)
        first = np.searchsorted(sq, a, side="left")
        last = np.searchsorted(sq, b, side="right")
        counts = np.maximum(last - first, 0)
        panels = np.repeat(np.arange(th0_arr.size), counts)
        offsets = np.repeat(first, counts)
        ranks = np.arange(panels.size) - np.repeat(
            np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
        queries = offsets + ranks
        levels = sq[queries]

        # refine each crossing on the interpolated curve by secant steps
        th0 = th0_arr[panels]
        th1 = th1_arr[panels]
        f0 = s0_arr[panels] - levels
        f1 = s1_arr[panels] - levels
        x0, x1 = th0.copy(), th1.copy()
        for _ in range(5):
            denom = np.where(np.abs(f1 - f0) > 1e-300, f1 - f0, 1.0)
            step = np.where(np.abs(f1 - f0) > 1e-300,
                            f1 * (x1 - x0) / denom, 0.0)
            x2 = np.clip(x1 - step, th0, th1)
            f2 = curve_s(x2) - levels
            x0, f0, x1, f1 = x1, f1, x2, f2
        th_cross = x1
        rr = body.field.at_angles(th_cross)
        t_cross = rr * (np.cos(th_cross) * self.u[0] + np.sin(th_cross) * self.u[1])

        order = np.lexsort((t_cross, queries))
        qs = queries[order]
        tc = t_cross[order]
        group_counts = np.bincount(qs, minlength=sq.size)
        starts = np.concatenate([[0], np.cumsum(group_counts)[:-1]])
        local = np.arange(tc.size) - np.repeat(starts, group_counts)
        paired = local < 2 * (np.repeat(group_counts, group_counts) // 2)
        sign = np.where(local % 2 == 1, 1.0, -1.0) * paired
        length = np.zeros(sq.size)
        np.add.at(length, qs, sign * tc)
        length = np.maximum(length, 0.0)
        length[0] = length[-1] = 0.0
        self.sq = sq
        self.length = length
        self.l_max = float(length.max())

    # -- dim 3 --------------------------------------------------------------

    def _build_dim3(self, n_sigma: int = 48, chunk: int = 256):
        body, u = self.body, self.u
        g = body.grid
        nodes = g.nodes
        tcomp = nodes @ u
        base_vec = nodes - tcomp[:, None] * u[None, :]
        b = np.linalg.norm(base_vec, axis=1)
        rays = np.where(b[:, None] > 1e-12, base_vec / np.maximum(b, 1e-12)[:, None],
                        0.0)
        self.a = np.abs(tcomp)
        self.b = b

        reach = self.rho_max * (1.0 + 1e-9)
        tau = np.linspace(0.0, math.pi / 2, n_sigma)
        sigma = reach * np.sin(tau)
        self.sigma = sigma
        t_half = np.sqrt(np.maximum(reach**2 * (1 + 1e-6) - sigma**2, 0.0)) + 1e-9
        n_t = 4 * g.resolution + 1

        table = np.zeros((g.size, n_sigma))
        for start in range(0, g.size, chunk):
            idx = slice(start, min(start + chunk, g.size))
            r_chunk = rays[idx]
            nc = r_chunk.shape[0]
            # points: (node, sigma, t, 3)
            base_pts = sigma[None, :, None, None] * r_chunk[:, None, None, :]
            frac = np.linspace(-1.0, 1.0, n_t)
            ts = t_half[None, :, None] * frac[None, None, :]
            pts = base_pts + ts[:, :, :, None] * u[None, None, None, :]
            inside = body.membership(pts.reshape(-1, 3)).reshape(nc, n_sigma, n_t)
            inside[..., 0] = False
            inside[..., -1] = False

            flips = inside[..., :-1] != inside[..., 1:]
            w_idx, s_idx, t_idx = np.nonzero(flips)
            if w_idx.size == 0:
                continue
            lo = ts[0, s_idx, t_idx]
            hi = ts[0, s_idx, t_idx + 1]
            lo_in = inside[w_idx, s_idx, t_idx]
            base_flat = sigma[s_idx, None] * r_chunk[w_idx]
            step0 = float(ts[0, 0, 1] - ts[0, 0, 0])
            for _ in range(max(1, int(math.ceil(math.log2(step0 / 1e-11))))):
                mid = 0.5 * (lo + hi)
                m_in = body.membership(base_flat + mid[:, None] * u[None, :])
                same = m_in == lo_in
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
            cross = 0.5 * (lo + hi)
            # each (node, sigma) row has an even flip count; row-major order
            # pairs consecutive crossings into inside runs
            contrib = cross * np.where(lo_in, 1.0, -1.0)
            np.add.at(table, (w_idx + start, s_idx), contrib)
        self.table = np.maximum(table, 0.0)
        self.l_max = float(self.table.max())
        # interpolate the table against the ball chord profile rather than
        # raw length: exact for balls, flatter for everything near one
        self._ball_chord = 2.0 * np.sqrt(np.maximum(reach**2 - sigma**2, 0.0))
        gtab = self.table[:, :-1] / self._ball_chord[None, :-1]
        tip = np.maximum(2.0 * gtab[:, -1] - gtab[:, -2], 0.0)
        self.gtab = np.column_stack([gtab, tip])
        self.reach = reach

    # -- resampling ---------------------------------------------------------

    def chord_length(self, s) -> np.ndarray:
        """Chord length profile L at base coordinates (dim 2 plans)."""
        return np.interp(np.asarray(s, dtype=float), self.sq, self.length,
                         left=0.0, right=0.0)

    def _chord_dim3(self, sig) -> np.ndarray:
        k = np.clip(np.searchsorted(self.sigma, sig) - 1, 0,
                    self.sigma.size - 2)
        s0, s1 = self.sigma[k], self.sigma[k + 1]
        f = np.clip((sig - s0) / np.maximum(s1 - s0, 1e-300), 0.0, 1.0)
        rows = np.arange(self.gtab.shape[0])
        g = self.gtab[rows, k] * (1 - f) + self.gtab[rows, k + 1] * f
        ball_chord = 2.0 * np.sqrt(np.maximum(self.reach**2 - sig**2, 0.0))
        return np.where(sig <= self.sigma[-1], g * ball_chord, 0.0)

    def resample(self, r: float = 1.0, cell_average: bool = True) -> StarBody:
        """Star body whose slice at x' is the centred interval of r*L(x').

        The symmetral radial has kinks where the slice topology of the
        body changes, and sampling it at the node angles loses volume at
        the kink cells (about 1e-6 relative per step at resolution 720).
        For dim 2 the default is therefore to solve at three Gauss points
        per angular cell and store the rms value, which integrates the
        kinked profile to the accuracy of the chord table. Callers that
        restore measure afterwards by their own root solve can pass
        cell_average=False and keep the plain per-node solve.
        """
        body = self.body
        g = body.grid
        hi0 = math.hypot(self.rho_max, r * self.l_max / 2.0) * (1.0 + 1e-9)
        if g.dim == 2:
            if cell_average:
                off = (math.pi / g.size) * math.sqrt(3.0 / 5.0)
                th = (g.thetas[:, None]
                      + np.array([-off, 0.0, off])[None, :]).ravel()
                e = np.column_stack([np.cos(th), np.sin(th)])
            else:
                e = g.nodes
            a = np.abs(e @ self.u)
            bco = e @ self.v

            def residual(rho):
                return rho * a - 0.5 * r * self.chord_length(rho * bco)
        else:
            a, bco = self.a, self.b

            def residual(rho):
                return rho * a - 0.5 * r * self._chord_dim3(rho * bco)

        lo = np.full(a.size, 1e-12)
        hi = np.full(a.size, hi0)
        samples = bisect_vec(residual, lo, hi, iters=52)
        if g.dim == 2 and cell_average:
            w = np.array([5.0, 8.0, 5.0]) / 18.0
            samples = np.sqrt((samples.reshape(g.size, 3) ** 2) @ w)
        r_in = min(body.r_in * min(r, 1.0), float(samples.min())) * (1.0 - 1e-9)
        return StarBody(g, samples, r_in, body.interp)


def steiner(body: StarBody, u) -> StarBody:
    """Euclidean Steiner symmetral: every chord along u recentred.

    No correction root follows (the continuum map preserves volume), so
    in dim 2 the level table is built finer than the curved kernels use:
    its interpolation error otherwise leaks straight into the per-step
    measure drift.
    """
    n_base = 65536 if body.dim == 2 else 16384
    return SteinerPlan(body, u, n_base=n_base).resample(1.0)


# ---------------------------------------------------------------------------
# distances

def radial_distance(a: StarBody, b: StarBody) -> float:
    """max_u |rho_K - rho_L| over the common grid."""
    _require_same_grid(a, b)
    return float(np.max(np.abs(a.rho - b.rho)))


def hausdorff_distance(a: StarBody, b: StarBody, n_samples: int = 1440) -> float:
    """Hausdorff distance between boundaries, from dense boundary clouds."""
    _require_same_grid(a, b)
    pa = _boundary_cloud(a, n_samples)
    pb = _boundary_cloud(b, n_samples)
    d2 = np.sum((pa[:, None, :] - pb[None, :, :]) ** 2, axis=-1)
    return float(max(np.sqrt(d2.min(axis=1)).max(),
                     np.sqrt(d2.min(axis=0)).max()))


def _boundary_cloud(body: StarBody, n_samples: int) -> np.ndarray:
    if body.dim == 2:
        th = TWO_PI * np.arange(n_samples) / n_samples
        rho = body.field.at_angles(th)
        return rho[:, None] * np.column_stack([np.cos(th), np.sin(th)])
    return body.rho[:, None] * body.grid.nodes


def _require_same_grid(a: StarBody, b: StarBody):
    if a.grid is b.grid:
        return
    if (a.grid.dim != b.grid.dim or a.grid.size != b.grid.size
            or np.abs(a.grid.nodes - b.grid.nodes).max() > 1e-12):
        raise GridMismatch("bodies live on different grids")
