"""Hyperbolic star bodies through the Poincare disk and its radial chart.

Hyperbolic space is the open unit ball with the conformal metric
4 |dx|^2 / (1 - |x|^2)^2. The radial chart y = 2x / (1 - |x|^2) maps the
disk onto all of R^n, and bodies are stored as StarBody values on the
chart side. Hyperbolic volume pulls back to the chart density
(1 + |y|^2)^(-1/2), so measures are weighted chart sums with the kernel
G_n, the closed-form radial antiderivative of that density.

Direction-wise the chart map is a scalar monotone change of radius:

    rho_chart = 2 rho_disk / (1 - rho_disk^2)
    rho_disk  = rho_chart / (1 + sqrt(1 + rho_chart^2))

Unlike the spherical chart there is no reflection anywhere: the polar of
a chart-convex body is the plain chart polar body.
"""

import warnings

import numpy as np

from .errors import BodyTooLarge, BracketError, InvalidBody, StarBodyError
from .grids import sphere_area, unit_ball_volume
from .numerics import (
    adaptive_quad,
    bisect,
    hyperbolic_measure_antiderivative,
    hyperbolic_profile,
    illinois_root,
    profile_inverse,
)
from .spherical import ChainCheck, PettyRun
from .starbody import (
    StarBody,
    SteinerPlan,
    _boundary_cloud,
    ball,
    perimeter,
    polar,
    projection_body,
    rotate_body,
    scale_body,
    star_from_support,
)

CLAMP = 1e-6

_F_CACHE = {}


def _f_profile(n: int):
    if n not in _F_CACHE:
        _F_CACHE[n] = hyperbolic_profile(n)
    return _F_CACHE[n]


# ---------------------------------------------------------------------------
# chart maps

def phi(x) -> np.ndarray:
    """Radial chart map of the Poincare disk, y = 2x / (1 - |x|^2)."""
    x = np.asarray(x, dtype=float)
    nsq = np.sum(x * x, axis=-1, keepdims=True)
    if np.any(nsq >= 1.0):
        raise InvalidBody("chart map needs points inside the open unit disk")
    return 2.0 * x / (1.0 - nsq)


def phi_inverse(y) -> np.ndarray:
    """Inverse chart map, x = y / (1 + sqrt(1 + |y|^2))."""
    y = np.asarray(y, dtype=float)
    nsq = np.sum(y * y, axis=-1, keepdims=True)
    return y / (1.0 + np.sqrt(1.0 + nsq))


def chart_radius(disk_radius):
    """Scalar radius dictionary, disk to chart."""
    disk_radius = np.asarray(disk_radius, dtype=float)
    out = 2.0 * disk_radius / (1.0 - disk_radius**2)
    return out if out.shape else float(out)


def disk_radius(chart_radius):
    """Scalar radius dictionary, chart to disk."""
    chart_radius = np.asarray(chart_radius, dtype=float)
    out = chart_radius / (1.0 + np.sqrt(1.0 + chart_radius**2))
    return out if out.shape else float(out)


def poincare_geodesic(x, y) -> np.ndarray:
    """Hyperbolic distance between disk points (broadcasts)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dsq = np.sum((x - y) ** 2, axis=-1)
    ax = 1.0 - np.sum(x * x, axis=-1)
    ay = 1.0 - np.sum(y * y, axis=-1)
    return np.arccosh(1.0 + 2.0 * dsq / (ax * ay))


# ---------------------------------------------------------------------------
# the body type

class HyperbolicBody:
    """A hyperbolic star body held by its chart StarBody.

    delta_disk keeps the disk-side body away from the ideal boundary:
    every disk radius must stay below 1 - delta_disk, which bounds the
    chart radius by 2(1-d)/(d(2-d)).
    """

    def __init__(self, chart: StarBody, delta_disk: float = 0.02):
        if not 0.0 < delta_disk < 1.0:
            raise InvalidBody("delta_disk must lie in (0, 1)")
        top = 1.0 - delta_disk
        limit = 2.0 * top / (1.0 - top * top)
        if float(np.max(chart.rho)) >= limit:
            raise BodyTooLarge(
                f"chart radius reaches the disk margin (limit {limit:.6g})")
        self.chart = chart
        self.delta_disk = delta_disk
        self.r_correction = None
        self._measure = None

    @classmethod
    def from_disk(cls, grid, rho_disk, r_in_disk: float,
                  delta_disk: float = 0.02) -> "HyperbolicBody":
        """Build from disk-side radial samples; the chart image is stored."""
        rho_disk = np.asarray(rho_disk, dtype=float)
        if np.any(rho_disk >= 1.0):
            raise InvalidBody("disk radial samples must stay below 1")
        chart = StarBody(grid, chart_radius(rho_disk),
                         chart_radius(r_in_disk))
        return cls(chart, delta_disk)

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def grid(self):
        return self.chart.grid

    def disk_radial(self) -> np.ndarray:
        """Disk-side radial samples at the grid nodes."""
        return disk_radius(self.chart.rho)

    def measure(self) -> float:
        if self._measure is None:
            self._measure = mu_measure(self.chart)
        return self._measure

    def boundary_points(self, n_samples: int = 1440) -> np.ndarray:
        """Boundary samples as Poincare disk points."""
        return phi_inverse(_boundary_cloud(self.chart, n_samples))


# ---------------------------------------------------------------------------
# measure

def mu_measure(chart) -> float:
    """Hyperbolic measure of a chart body: sum_i w_i G_n(rho_i).

    Accepts a chart StarBody or a HyperbolicBody.
    """
    chart = getattr(chart, "chart", chart)
    vals = hyperbolic_measure_antiderivative(chart.dim, chart.rho)
    return float(chart.grid.weights @ vals)


def disk_measure_quad(K: HyperbolicBody) -> float:
    """Independent route: disk-side integral with the conformal kernel.

    Integrates 2^n r^(n-1) (1 - r^2)^(-n) radially per node by adaptive
    quadrature, entirely on the Poincare side. Slow; used as an oracle
    against mu_measure.
    """
    n = K.dim
    rho_d = K.disk_radial()
    vals = [adaptive_quad(
        lambda r: 2.0**n * r ** (n - 1) * (1.0 - r * r) ** (-n), 0.0, R)
        for R in rho_d]
    return float(K.grid.weights @ np.asarray(vals))


def hyperbolic_ball_measure(n: int, rho_disk: float) -> float:
    """Closed-form measure of the disk ball of Euclidean radius rho_disk.

    For n = 2 this collapses to 4 pi rho^2 / (1 - rho^2).
    """
    if not 0.0 < rho_disk < 1.0:
        raise InvalidBody("disk radius must lie in (0, 1)")
    return sphere_area(n) * float(
        hyperbolic_measure_antiderivative(n, chart_radius(rho_disk)))


def ball_body(grid, rho_disk: float, delta_disk: float = 0.02) -> HyperbolicBody:
    """Hyperbolic ball centered at the origin, given by its disk radius."""
    return HyperbolicBody(ball(grid, chart_radius(rho_disk)), delta_disk)


def ball_rearrangement(K: HyperbolicBody) -> HyperbolicBody:
    """Centered hyperbolic ball with the same measure as K."""
    n = K.dim
    target = K.measure() / sphere_area(n)

    def g(R):
        return float(hyperbolic_measure_antiderivative(n, R)) - target

    hi = 1.0
    while g(hi) < 0.0:
        hi *= 2.0
        if hi > 1e9:
            raise BracketError("rearrangement radius out of range")
    R = bisect(g, 1e-12, hi, tol=1e-14)
    return HyperbolicBody(ball(K.grid, R), K.delta_disk)


# ---------------------------------------------------------------------------
# polarity and projection body

def hyperbolic_polar(K: HyperbolicBody) -> HyperbolicBody:
    """Hyperbolic polar body: the plain chart polar, no reflection.

    Chart convexity is the caller's precondition, as for the Euclidean
    polar this reduces to.
    """
    return HyperbolicBody(polar(K.chart), K.delta_disk)


def hyperbolic_projection_body(K: HyperbolicBody) -> HyperbolicBody:
    """Projection body computed chart-side and pulled back to the disk."""
    prof = projection_body(K.chart)
    return HyperbolicBody(star_from_support(prof), K.delta_disk)


def polar_projection_measure(K: HyperbolicBody) -> float:
    """Measure of the polar projection body by the support-kernel route.

    Integrates F(h(u)) over directions with F(t) = G_n(1/t) and h the
    chart projection-body support. Because of that same identity,
    mu_measure of the materialized polar chart is the identical sum, not
    an independent check; the independent route is disk_measure_quad of
    polar_projection_body(K).
    """
    prof = projection_body(K.chart)
    F = _f_profile(K.dim)
    return float(K.grid.weights @ F(prof.h))


def polar_projection_body(K: HyperbolicBody) -> HyperbolicBody:
    """Materialized polar of the projection body (chart rho = 1/h)."""
    prof = projection_body(K.chart)
    rho = 1.0 / prof.h
    chart = StarBody(K.grid, rho, 0.999 * float(rho.min()))
    return HyperbolicBody(chart, K.delta_disk)


# ---------------------------------------------------------------------------
# Steiner symmetrization

def hyperbolic_steiner(K: HyperbolicBody, u, n_base: int = 16384) -> HyperbolicBody:
    """Steiner symmetral: chart symmetrization then one global dilation.

    The chart-side Euclidean symmetral never loses hyperbolic measure
    (the kernel is radially decreasing, so re-centering slices can only
    help), and a single scalar dilation r in (0, 1] restores it exactly.
    This is a genuinely different correction from the spherical one: the
    whole chart body shrinks, including widths orthogonal to u. The
    dilation residual is closed-form, so the root search costs almost
    nothing on top of the one symmetrization.
    """
    target = K.measure()
    plan = SteinerPlan(K.chart, u, n_base=n_base)
    # node sampling: the dilation root restores the measure anyway
    sym = plan.resample(1.0, cell_average=False)
    scale = max(1.0, abs(target))
    n = K.dim
    w = K.grid.weights

    def residual(r: float) -> float:
        return float(w @ hyperbolic_measure_antiderivative(n, r * sym.rho)) - target

    f_one = residual(1.0)
    if f_one >= 0.0:
        r = illinois_root(residual, 1e-6, 1.0, f_one, 1e-10 * scale)
    else:
        if residual(1.0 + CLAMP) < 0.0:
            raise BracketError(
                "dilation factor escapes (0, 1 + 1e-6]: measure cannot be restored")
        warnings.warn("dilation factor marginally above 1, clamped",
                      RuntimeWarning)
        r = 1.0
    chart = sym if r == 1.0 else scale_body(sym, r)
    out = HyperbolicBody(chart, K.delta_disk)
    out.r_correction = r
    out._measure = target + residual(r)
    return out


# ---------------------------------------------------------------------------
# metric

def _disk_cloud_hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    # arccosh(1 + 2q) is monotone in q = |x-y|^2 / ((1-|x|^2)(1-|y|^2)),
    # so reduce on q and take arccosh once
    na = np.sum(A * A, axis=1)
    nb = np.sum(B * B, axis=1)
    d2 = np.maximum(na[:, None] + nb[None, :] - 2.0 * (A @ B.T), 0.0)
    q = d2 / ((1.0 - na)[:, None] * (1.0 - nb)[None, :])
    worst = max(q.min(axis=1).max(), q.min(axis=0).max())
    return float(np.arccosh(1.0 + 2.0 * worst))


def hyperbolic_hausdorff(K: HyperbolicBody, L: HyperbolicBody,
                         n_samples: int = 1440) -> float:
    """Hausdorff distance of boundary clouds under the Poincare metric.

    Resolution limited, like its spherical sibling.
    """
    return _disk_cloud_hausdorff(K.boundary_points(n_samples),
                                 L.boundary_points(n_samples))


def rotate_hyperbolic(K: HyperbolicBody, rot: np.ndarray) -> HyperbolicBody:
    """Rotation about the origin, acting as an orthogonal chart map."""
    return HyperbolicBody(rotate_body(K.chart, rot), K.delta_disk)


# ---------------------------------------------------------------------------
# headline verification and chain

def verify_hyperbolic_petty(K: HyperbolicBody, directions, eps_quad: float = 1e-6,
                            equality_band: float = 1e-6,
                            track_distance: bool = True) -> PettyRun:
    """Run a symmetrization schedule and collect the inequality evidence."""
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    star = ball_rearrangement(K)
    rhs = polar_projection_measure(star)
    star_cloud = star.boundary_points()

    def dist_to_star(body):
        return _disk_cloud_hausdorff(body.boundary_points(), star_cloud)

    body = K
    measures = [K.measure()]
    trace = [polar_projection_measure(K)]
    dists = [dist_to_star(K)] if track_distance else None
    r_values = []
    for k, u in enumerate(dirs):
        try:
            body = hyperbolic_steiner(body, u)
        except StarBodyError as e:
            raise type(e)(f"iterate {k}: {e}") from e
        r_values.append(body.r_correction)
        measures.append(body.measure())
        trace.append(polar_projection_measure(body))
        if track_distance:
            dists.append(dist_to_star(body))
    return PettyRun("hyperbolic", dirs, np.asarray(r_values),
                    np.asarray(measures), np.asarray(trace),
                    None if dists is None else np.asarray(dists),
                    float(trace[0]), float(rhs), eps_quad, equality_band)


def hyperbolic_chain(K: HyperbolicBody) -> ChainCheck:
    """Evaluate the perimeter chain linking K, its rearrangement and F."""
    n = K.dim
    c0 = unit_ball_volume(n - 1) / (n * unit_ball_volume(n))
    area = sphere_area(n)
    F = _f_profile(n)
    star = ball_rearrangement(K)
    return ChainCheck(
        c0 * perimeter(star.chart),
        profile_inverse(F, polar_projection_measure(star) / area),
        profile_inverse(F, polar_projection_measure(K) / area),
        c0 * perimeter(K.chart),
    )
