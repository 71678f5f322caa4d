"""Star bodies on the open upper hemisphere, held through the gnomonic chart.

A body K inside the open upper hemisphere of S^n (a subset of R^(n+1)) is
stored as its gnomonic image, a StarBody on the tangent space at the pole.
The chart dictionary used throughout, with rho_s and h_s geodesic angles
measured from the pole:

    tan rho_s(K, v) = rho(chart K, v)      tan h_s(K, v) = h(chart K, v)

Intrinsic n-Hausdorff measure pulls back to the chart density
(1 + |x|^2)^(-(n+1)/2), so every measure below is a weighted chart sum.

Polar bodies live in the lower hemisphere; they are represented here by
their reflection through the origin, which lands back in the chart domain
and turns the polarity rule into rho_polar(-v) = 1/h(chart, v).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BodyTooLarge, BracketError, InvalidBody, StarBodyError
from .grids import sphere_area, unit_ball_volume
from .numerics import (
    adaptive_quad,
    bisect,
    gnomonic_measure_antiderivative,
    illinois_root,
    profile_inverse,
    sine_power_antiderivative,
    spherical_profile,
)
from .starbody import (
    StarBody,
    SteinerPlan,
    _boundary_cloud,
    ball,
    perimeter,
    projection_body,
    rotate_body,
    star_from_support,
    support_profile,
)

CLAMP = 1e-6

_F_CACHE = {}


def _f_profile(n: int):
    if n not in _F_CACHE:
        _F_CACHE[n] = spherical_profile(n)
    return _F_CACHE[n]


# ---------------------------------------------------------------------------
# chart maps

def gnomonic(v) -> np.ndarray:
    """Chart coordinates of points on the open upper hemisphere."""
    v = np.asarray(v, dtype=float)
    height = v[..., -1]
    if np.any(height <= 1e-12):
        raise InvalidBody("gnomonic projection needs points strictly above the equator")
    return v[..., :-1] / height[..., None]


def gnomonic_inverse(x) -> np.ndarray:
    """Lift chart points back to the unit sphere."""
    x = np.asarray(x, dtype=float)
    lifted = np.concatenate([x, np.ones(x.shape[:-1] + (1,))], axis=-1)
    return lifted / np.linalg.norm(lifted, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# the body type

class SphericalBody:
    """A star body in the open upper hemisphere, held by its chart.

    delta_pole keeps the body away from the equator: every chart radius
    must stay below tan(pi/2 - delta_pole). Bodies violating the margin
    are rejected rather than truncated.
    """

    def __init__(self, chart: StarBody, delta_pole: float = 0.05):
        if not 0.0 < delta_pole < math.pi / 4:
            raise InvalidBody("delta_pole must lie in (0, pi/4)")
        limit = math.tan(math.pi / 2 - delta_pole)
        top = float(np.max(chart.rho))
        if top >= limit:
            raise BodyTooLarge(
                f"chart radius {top:.6g} reaches the pole margin {limit:.6g}")
        self.chart = chart
        self.delta_pole = delta_pole
        self.r_correction = None
        self._measure = None

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def grid(self):
        return self.chart.grid

    def measure(self) -> float:
        if self._measure is None:
            self._measure = spherical_measure(self.chart)
        return self._measure

    def radial_angle(self, dirs) -> np.ndarray:
        """Geodesic radial function rho_s along chart directions."""
        return np.arctan(self.chart.radial(dirs))

    def boundary_points(self, n_samples: int = 1440) -> np.ndarray:
        """Boundary samples lifted to the sphere in R^(n+1)."""
        return gnomonic_inverse(_boundary_cloud(self.chart, n_samples))


# ---------------------------------------------------------------------------
# measure

def spherical_measure(chart) -> float:
    """Intrinsic measure of a chart body: sum_i w_i J_n(rho_i).

    J_n is the closed-form antiderivative of the radial chart density,
    checked against adaptive quadrature in the numerics tests; the closed
    form matters because the correction-factor search below evaluates
    this in a loop. Accepts a chart StarBody or a SphericalBody.
    """
    chart = getattr(chart, "chart", chart)
    vals = gnomonic_measure_antiderivative(chart.dim, chart.rho)
    return float(chart.grid.weights @ vals)


def sphere_measure_quad(K: SphericalBody) -> float:
    """Independent route: colatitude integral on the sphere itself.

    Integrates sin^(n-1) from 0 to arctan(rho) per node by adaptive
    quadrature, never touching the chart kernel or its closed-form
    antiderivative. Slow; used as an oracle against spherical_measure.
    """
    n = K.dim
    alphas = np.arctan(K.chart.rho)
    vals = [adaptive_quad(lambda p: math.sin(p) ** (n - 1), 0.0, a)
            for a in alphas]
    return float(K.grid.weights @ np.asarray(vals))


def cap_measure(n: int, alpha: float) -> float:
    """Closed-form measure of the geodesic cap of radius alpha about the pole."""
    if not 0.0 < alpha < math.pi / 2:
        raise InvalidBody("cap radius must lie in (0, pi/2)")
    return sphere_area(n) * float(sine_power_antiderivative(n, alpha))


def cap_radius_for_measure(n: int, target: float) -> float:
    """Invert the cap measure; target must sit strictly inside a hemisphere."""
    top = math.pi / 2 - 1e-12
    hemisphere = sphere_area(n) * float(sine_power_antiderivative(n, top))
    if not 0.0 < target < hemisphere:
        raise InvalidBody("target measure must lie strictly between 0 and a hemisphere")
    return bisect(lambda a: cap_measure(n, a) - target, 1e-12, top, tol=1e-14)


def cap_body(grid, alpha: float, delta_pole: float = 0.05) -> SphericalBody:
    """Geodesic cap of radius alpha as a chart ball of radius tan(alpha)."""
    return SphericalBody(ball(grid, math.tan(alpha)), delta_pole)


def cap_rearrangement(K: SphericalBody) -> SphericalBody:
    """Cap about the pole with the same intrinsic measure as K."""
    alpha = cap_radius_for_measure(K.dim, K.measure())
    out = cap_body(K.grid, alpha, K.delta_pole)
    return out


# ---------------------------------------------------------------------------
# polarity

def spherical_polar(K: SphericalBody) -> SphericalBody:
    """Reflected polar body, represented in the chart.

    The polar of a convex body in the upper hemisphere lives in the lower
    one; reflecting through the origin brings it back into the chart and
    the support angles turn into complementary radial angles, which reads
    rho(-v) = 1/h(v) chart-side. Convexity of the chart is the caller's
    precondition (convexity_witness / subadditivity_witness).
    """
    chart = K.chart
    prof = support_profile(chart)
    limit = math.tan(math.pi / 2 - K.delta_pole)
    if float(np.max(prof.h)) >= limit:
        raise BodyTooLarge("support reaches the pole margin, the polar would leave the chart")
    rho = 1.0 / prof.h[chart.grid.antipode]
    polar_chart = StarBody(chart.grid, rho, 0.999 * float(rho.min()))
    return SphericalBody(polar_chart, K.delta_pole)


# ---------------------------------------------------------------------------
# projection body

def spherical_projection_body(K: SphericalBody) -> SphericalBody:
    """Projection body, computed chart-side and lifted back.

    The tangent of the support angle of the spherical projection body
    equals the Euclidean projection-body support of the chart, so the
    chart of the result is the convex body with that support function.
    """
    prof = projection_body(K.chart)
    limit = math.tan(math.pi / 2 - K.delta_pole)
    if float(np.max(prof.h)) >= limit:
        raise BodyTooLarge("projection body escapes the hemisphere")
    return SphericalBody(star_from_support(prof), K.delta_pole)


def polar_projection_volume(K: SphericalBody) -> float:
    """Measure of the polar projection body, by the support-kernel route.

    Integrates F(h(v)) over directions, F(t) = integral of sin^(n-1) from
    0 to pi/2 - arctan(t), with h the chart projection-body support. No
    polar body is materialized. Note spherical_measure of
    polar_projection_body(K) is the same sum by the substitution
    F(t) = J_n(1/t), so it does not count as an independent check; the
    independent route is sphere_measure_quad of the materialized body.
    """
    prof = projection_body(K.chart)
    F = _f_profile(K.dim)
    return float(K.grid.weights @ F(prof.h))


def polar_projection_body(K: SphericalBody) -> SphericalBody:
    """Materialized reflected polar of the projection body (rho = 1/h, reflected)."""
    prof = projection_body(K.chart)
    rho = 1.0 / prof.h[K.grid.antipode]
    chart = StarBody(K.grid, rho, 0.999 * float(rho.min()))
    return SphericalBody(chart, K.delta_pole)


# ---------------------------------------------------------------------------
# Steiner symmetrization

def spherical_steiner(K: SphericalBody, u, n_base: int = 16384) -> SphericalBody:
    """Steiner symmetral about the hyperplane through the pole normal to u.

    Chart recipe: build the Euclidean Steiner slice profile of the chart,
    then shrink every slice along u by one common factor r in (0, 1] until
    the intrinsic measure matches the input. The unshrunk symmetral never
    loses intrinsic measure (Hardy-Littlewood applied slice-wise), so r is
    found by a bracketed root search on [1e-6, 1]; residuals marginally
    above 1 (within 1e-6, quadrature noise at symmetric inputs) clamp to
    r = 1 with a warning. The result records r in r_correction.
    """
    target = K.measure()
    plan = SteinerPlan(K.chart, u, n_base=n_base)
    scale = max(1.0, abs(target))
    cache = {}

    def residual(r: float) -> float:
        # node sampling: the root on r restores the measure anyway
        body = plan.resample(r, cell_average=False)
        m = spherical_measure(body)
        cache[r] = (body, m)
        return m - target

    f_one = residual(1.0)
    if f_one >= 0.0:
        r = illinois_root(residual, 1e-6, 1.0, f_one, 1e-10 * scale)
    else:
        f_clamp = residual(1.0 + CLAMP)
        if f_clamp < 0.0:
            raise BracketError(
                "correction factor escapes (0, 1 + 1e-6]: measure cannot be restored")
        warnings.warn("correction factor marginally above 1, clamped",
                      RuntimeWarning)
        r = 1.0
    chart, m = cache[r]
    out = SphericalBody(chart, K.delta_pole)
    out.r_correction = r
    out._measure = m
    return out


# ---------------------------------------------------------------------------
# metric

def _cloud_geodesic_hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    ang = np.arccos(np.clip(A @ B.T, -1.0, 1.0))
    return float(max(ang.min(axis=1).max(), ang.min(axis=0).max()))


def spherical_hausdorff(K: SphericalBody, L: SphericalBody,
                        n_samples: int = 1440) -> float:
    """Geodesic Hausdorff distance between boundary clouds.

    Resolution limited: boundaries are sampled at grid density, so values
    below the node spacing are approximations.
    """
    return _cloud_geodesic_hausdorff(K.boundary_points(n_samples),
                                     L.boundary_points(n_samples))


def rotate_spherical(K: SphericalBody, rot: np.ndarray) -> SphericalBody:
    """Rotation about the pole axis, acting as an orthogonal chart map."""
    return SphericalBody(rotate_body(K.chart, rot), K.delta_pole)


# ---------------------------------------------------------------------------
# headline verification

@dataclass
class PettyRun:
    """Per-iterate trace of a symmetrization run plus the headline check.

    lhs and rhs are the polar projection measures of the initial body and
    of its symmetric rearrangement; the inequality under test says
    lhs <= rhs with equality exactly at caps (balls). polar_projection
    holds the full per-iterate trace including the start, measures the
    per-iterate intrinsic measure, distances the per-iterate distance to
    the rearrangement when tracked.
    """

    geometry: str
    directions: np.ndarray
    r_values: np.ndarray
    measures: np.ndarray
    polar_projection: np.ndarray
    distances: object
    lhs: float
    rhs: float
    eps_quad: float
    equality_band: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.eps_quad

    @property
    def equality(self) -> bool:
        return abs(self.margin) <= self.equality_band * abs(self.rhs)

    @property
    def violations(self) -> int:
        return int(np.sum(np.diff(self.polar_projection) < -self.eps_quad))


def verify_spherical_petty(K: SphericalBody, directions, eps_quad: float = 1e-6,
                           equality_band: float = 1e-6,
                           track_distance: bool = True) -> PettyRun:
    """Run a symmetrization schedule and collect the inequality evidence."""
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    star = cap_rearrangement(K)
    rhs = polar_projection_volume(star)
    star_cloud = star.boundary_points()

    body = K
    measures = [K.measure()]
    trace = [polar_projection_volume(K)]
    dists = None
    if track_distance:
        dists = [_cloud_geodesic_hausdorff(K.boundary_points(), star_cloud)]
    r_values = []
    for k, u in enumerate(dirs):
        try:
            body = spherical_steiner(body, u)
        except StarBodyError as e:
            raise type(e)(f"iterate {k}: {e}") from e
        r_values.append(body.r_correction)
        measures.append(body.measure())
        trace.append(polar_projection_volume(body))
        if track_distance:
            dists.append(_cloud_geodesic_hausdorff(body.boundary_points(),
                                                   star_cloud))
    return PettyRun("spherical", dirs, np.asarray(r_values),
                    np.asarray(measures), np.asarray(trace),
                    None if dists is None else np.asarray(dists),
                    float(trace[0]), float(rhs), eps_quad, equality_band)


# ---------------------------------------------------------------------------
# isoperimetric chain

@dataclass
class ChainCheck:
    """Four-term isoperimetric chain evaluated at one body.

    Reading order: star_scaled_perimeter = star_inverse <= body_inverse
    <= body_scaled_perimeter, where scaled perimeter means c0 times the
    chart boundary measure and inverse means the profile inverse of the
    direction-averaged polar projection measure. The left relation is an
    equality, exact for caps/balls.
    """

    star_scaled_perimeter: float
    star_inverse: float
    body_inverse: float
    body_scaled_perimeter: float

    @property
    def left_gap(self) -> float:
        return self.star_inverse - self.star_scaled_perimeter

    @property
    def middle_slack(self) -> float:
        return self.body_inverse - self.star_inverse

    @property
    def right_slack(self) -> float:
        return self.body_scaled_perimeter - self.body_inverse


def isoperimetric_chain(K: SphericalBody) -> ChainCheck:
    """Evaluate the perimeter chain linking K, its rearrangement and F."""
    n = K.dim
    c0 = unit_ball_volume(n - 1) / (n * unit_ball_volume(n))
    area = sphere_area(n)
    F = _f_profile(n)
    star = cap_rearrangement(K)
    return ChainCheck(
        c0 * perimeter(star.chart),
        profile_inverse(F, polar_projection_volume(star) / area),
        profile_inverse(F, polar_projection_volume(K) / area),
        c0 * perimeter(K.chart),
    )
