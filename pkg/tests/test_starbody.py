import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ellipe

from starbodies.errors import GridMismatch, InvalidBody
from starbodies.grids import make_grid
from starbodies.starbody import (StarBody, SteinerPlan, ball, boundary_normal,
                                 chord_slice, convexity_witness,
                                 hausdorff_distance, perimeter,
                                 perimeter_detail, polar, projection_body,
                                 radial_distance, rearrangement, rotate_body,
                                 scale_body, star_from_support, steiner,
                                 subadditivity_witness, support,
                                 support_profile, volume)

GRID2 = make_grid(2, 720)
GRID3 = make_grid(3, 32)


def ellipse(grid, a, b):
    th = grid.thetas
    rho = a * b / np.sqrt((b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2)
    return StarBody(grid, rho, 0.98 * min(a, b))


def square(grid, half=1.0):
    th = grid.thetas
    rho = half / np.maximum(np.abs(np.cos(th)), np.abs(np.sin(th)))
    return StarBody(grid, rho, 0.98 * half)


def dumbbell(grid, depth=0.7):
    rho = 1.0 + depth * np.cos(2 * grid.thetas)
    return StarBody(grid, rho, 0.15)


def ellipsoid3(grid, axes):
    axes = np.asarray(axes, dtype=float)
    rho = 1.0 / np.sqrt(((grid.nodes / axes) ** 2).sum(axis=1))
    return StarBody(grid, rho, 0.98 * axes.min())


# -- construction ------------------------------------------------------------

def test_rejects_nonpositive_samples():
    with pytest.raises(InvalidBody):
        StarBody(GRID2, np.full(GRID2.size, -1.0), 0.5)


def test_rejects_samples_below_inner_radius():
    rho = np.ones(GRID2.size)
    rho[3] = 0.4
    with pytest.raises(InvalidBody):
        StarBody(GRID2, rho, 0.5)


def test_rejects_radial_spikes():
    rho = np.ones(GRID2.size)
    rho[100] = 3.0  # jump far beyond any star-shaped Lipschitz budget
    with pytest.raises(InvalidBody):
        StarBody(GRID2, rho, 0.9)


def test_rejects_wrong_sample_count():
    with pytest.raises(GridMismatch):
        StarBody(GRID2, np.ones(GRID2.size + 2), 0.5)


# -- measures ----------------------------------------------------------------

def test_ball_measures():
    b2 = ball(GRID2, 1.5)
    assert volume(b2) == pytest.approx(math.pi * 1.5**2, rel=1e-12)
    assert perimeter(b2) == pytest.approx(2 * math.pi * 1.5, rel=1e-12)
    b3 = ball(GRID3, 2.0)
    assert volume(b3) == pytest.approx(4 * math.pi * 8 / 3, rel=1e-12)
    assert perimeter(b3) == pytest.approx(4 * math.pi * 4, rel=1e-12)


def test_ellipse_measures():
    k = ellipse(GRID2, 2.0, 1.0)
    assert volume(k) == pytest.approx(2 * math.pi, rel=1e-10)
    # circumference 4 a E(e^2) with eccentricity^2 = 1 - (b/a)^2
    assert perimeter(k) == pytest.approx(8 * ellipe(0.75), rel=1e-8)


def test_square_measures():
    k = square(GRID2)
    assert volume(k) == pytest.approx(4.0, rel=2e-4)
    value, excluded = perimeter_detail(k)
    assert value == pytest.approx(8.0, rel=5e-3)
    assert excluded == 0


def test_ellipsoid_volume_dim3():
    k = ellipsoid3(GRID3, [1.5, 1.0, 0.75])
    expect = 4 * math.pi / 3 * 1.5 * 1.0 * 0.75
    assert volume(k) == pytest.approx(expect, rel=1e-10)


def test_sphere_perimeter_of_ellipsoid_upper_bound():
    # sanity: ellipsoid area must exceed that of the volume-equal ball
    k = ellipsoid3(GRID3, [1.5, 1.0, 0.75])
    b = rearrangement(k)
    assert perimeter(k) > perimeter(b)


# -- membership and homogeneous radial ---------------------------------------

def test_ellipse_membership():
    k = ellipse(GRID2, 2.0, 1.0)
    assert bool(k.membership(np.array([[1.9, 0.1]]))[0])
    assert not bool(k.membership(np.array([[1.9, 0.6]]))[0])


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.2, max_value=5.0),
       st.floats(min_value=0.0, max_value=2 * math.pi))
def test_radial_homogeneity(lam, theta):
    k = ellipse(GRID2, 2.0, 1.0)
    x = np.array([[math.cos(theta), math.sin(theta)]]) * 1.3
    assert k.radial_at(lam * x)[0] == pytest.approx(
        k.radial_at(x)[0] / lam, rel=1e-12)


# -- support and polarity ------------------------------------------------------

def test_ellipse_support():
    k = ellipse(GRID2, 2.0, 1.0)
    for psi in [0.0, 0.3, 1.1, 2.0, 4.4]:
        u = np.array([math.cos(psi), math.sin(psi)])
        expect = math.sqrt(4 * u[0] ** 2 + u[1] ** 2)
        assert support(k, u) == pytest.approx(expect, rel=1e-6)


def test_square_support():
    k = square(GRID2)
    assert support(k, [1.0, 0.0]) == pytest.approx(1.0, rel=1e-6)
    s = 1 / math.sqrt(2)
    assert support(k, [s, s]) == pytest.approx(math.sqrt(2), rel=1e-4)


def test_polar_of_ball():
    assert radial_distance(polar(ball(GRID2, 2.0)), ball(GRID2, 0.5)) < 1e-9


def test_polar_of_ellipse():
    k = ellipse(GRID2, 2.0, 1.0)
    th = GRID2.thetas
    expect = 1.0 / np.sqrt(4 * np.cos(th) ** 2 + np.sin(th) ** 2)
    assert np.abs(polar(k).rho - expect).max() < 1e-6


def test_polar_of_square_is_cross_polytope():
    k = square(GRID2)
    th = GRID2.thetas
    expect = 1.0 / (np.abs(np.cos(th)) + np.abs(np.sin(th)))
    assert np.abs(polar(k).rho - expect).max() < 5e-3


def test_polar_involution_smooth():
    k = ellipse(GRID2, 2.0, 1.0)
    assert radial_distance(polar(polar(k)), k) < 1e-4


def test_star_from_support_roundtrip():
    k = ellipse(GRID2, 2.0, 1.0)
    back = star_from_support(support_profile(k))
    assert radial_distance(back, k) < 1e-4


def test_subadditivity_witness():
    prof = support_profile(ellipse(GRID2, 2.0, 1.0))
    assert subadditivity_witness(prof, np.random.default_rng(7))


def test_convexity_witness():
    assert convexity_witness(ellipse(GRID2, 2.0, 1.0))
    assert not convexity_witness(dumbbell(GRID2))


# -- normals -------------------------------------------------------------------

def test_ball_normals_radial():
    from starbodies.starbody import node_normals
    nu, udn, flags = node_normals(ball(GRID2, 1.3))
    assert np.abs(nu - GRID2.nodes).max() < 1e-12
    assert np.abs(udn - 1).max() < 1e-12
    assert not flags.any()


def test_ellipse_boundary_normal():
    k = ellipse(GRID2, 2.0, 1.0)
    th = 0.7
    u = np.array([math.cos(th), math.sin(th)])
    # gradient of x^2/4 + y^2 at the boundary point rho(th) u
    rho = float(k.radial(u[None, :])[0])
    grad = np.array([rho * u[0] / 4.0, rho * u[1]])
    expect = grad / np.linalg.norm(grad)
    assert np.abs(boundary_normal(k, u) - expect).max() < 1e-4


def test_square_corner_flags():
    from starbodies.starbody import node_normals
    _, _, flags = node_normals(square(GRID2))
    assert 0 < flags.sum() <= 16  # a few nodes around each corner


# -- projection body -----------------------------------------------------------

def test_projection_of_disk():
    prof = projection_body(ball(GRID2, 1.0))
    assert np.abs(prof.h - 2.0).max() < 2e-4


def test_projection_of_sphere():
    prof = projection_body(ball(GRID3, 1.0))
    assert np.abs(prof.h - math.pi).max() / math.pi < 5e-3


def test_projection_of_ellipse():
    k = ellipse(GRID2, 2.0, 1.0)
    th = GRID2.thetas
    # shadow length on the line orthogonal to u
    expect = 2.0 * np.sqrt(4 * np.sin(th) ** 2 + np.cos(th) ** 2)
    assert np.abs(projection_body(k).h - expect).max() / 2.0 < 1e-3


def test_projection_of_square():
    k = square(GRID2)
    th = GRID2.thetas
    expect = 2.0 * (np.abs(np.cos(th)) + np.abs(np.sin(th)))
    rel = np.abs(projection_body(k).h - expect) / expect
    assert rel.max() < 1e-2


def test_projection_scaling_law():
    # h of the projection body scales like the (n-1) power of the body
    k = ellipse(GRID2, 2.0, 1.0)
    a = projection_body(scale_body(k, 2.0)).h
    b = projection_body(k).h
    assert np.abs(a / b - 2.0).max() < 1e-9


# -- slices --------------------------------------------------------------------

def test_square_slice():
    k = square(GRID2)
    s = chord_slice(k, [0.0, 1.0], [0.5, 0.0])
    assert s.intervals.shape == (1, 2)
    assert s.intervals[0] == pytest.approx([-1.0, 1.0], abs=1e-6)
    assert s.total_length == pytest.approx(2.0, abs=1e-6)


def test_empty_slice():
    k = square(GRID2)
    s = chord_slice(k, [0.0, 1.0], [5.0, 0.0])
    assert s.empty


def test_dumbbell_two_lobes():
    k = dumbbell(GRID2, 0.7)
    s = chord_slice(k, [1.0, 0.0], [0.0, 0.5])
    assert s.intervals.shape[0] == 2
    # symmetric about the axis
    assert s.intervals[0][0] == pytest.approx(-s.intervals[1][1], abs=1e-8)
    assert s.intervals[0][1] == pytest.approx(-s.intervals[1][0], abs=1e-8)


def test_dumbbell_waist_slice():
    k = StarBody(GRID2, 1.0 + 0.5 * np.cos(2 * GRID2.thetas), 0.45)
    s = chord_slice(k, [0.0, 1.0], [0.0, 0.0])
    assert s.intervals.shape == (1, 2)
    assert s.total_length == pytest.approx(1.0, abs=1e-6)


# -- Steiner symmetrization ------------------------------------------------------

def test_steiner_fixes_ball():
    b = ball(GRID2, 1.2)
    assert radial_distance(steiner(b, [0.3, 0.9]), b) < 1e-7


def test_steiner_fixes_symmetric_ellipse():
    # the stored samples are cell rms values, not node values, so the fixed
    # point is recovered to the O(h^2 * curvature) representation floor, not
    # to solver accuracy; it falls 16x at 4x the resolution
    k = ellipse(GRID2, 2.0, 1.0)
    assert radial_distance(steiner(k, [1.0, 0.0]), k) < 5e-5
    assert radial_distance(steiner(k, [0.0, 1.0]), k) < 5e-5
    g = make_grid(2, 2880)
    kf = ellipse(g, 2.0, 1.0)
    assert radial_distance(steiner(kf, [1.0, 0.0]), kf) < 3.2e-6


def test_steiner_preserves_volume_dim2():
    k = StarBody(GRID2,
                 1.0 + 0.3 * np.cos(GRID2.thetas) + 0.2 * np.sin(2 * GRID2.thetas),
                 0.3)
    v0 = volume(k)
    for u in ([1.0, 0.0], [0.6, 0.8], [-0.2, 0.97]):
        s = steiner(k, u)
        assert abs(volume(s) - v0) / v0 < 1e-6


def test_steiner_preserves_volume_two_lobes():
    # the symmetral of a two-lobe body has boundary corners where the waist
    # gap opens, so the fixed-grid volume quadrature is the accuracy limit;
    # it tightens like h^2 with resolution
    k = dumbbell(GRID2, 0.7)
    v0 = volume(k)
    s = steiner(k, [1.0, 0.0])
    assert abs(volume(s) - v0) / v0 < 2e-5
    g_fine = make_grid(2, 2880)
    kf = dumbbell(g_fine, 0.7)
    vf = volume(kf)
    sf = steiner(kf, [1.0, 0.0])
    assert abs(volume(sf) - vf) / vf < 5e-6


def test_steiner_symmetral_is_symmetric():
    k = StarBody(GRID2,
                 1.0 + 0.3 * np.cos(GRID2.thetas) + 0.2 * np.sin(2 * GRID2.thetas),
                 0.3)
    # pick u so that reflecting across the hyperplane orthogonal to u maps
    # grid nodes to grid nodes: the symmetral samples must then be equal
    beta = GRID2.thetas[50]
    u = np.array([math.cos(beta + math.pi / 2), math.sin(beta + math.pi / 2)])
    s = steiner(k, u)
    idx = np.round((2 * beta - GRID2.thetas) % (2 * math.pi)
                   / (2 * math.pi / GRID2.size)).astype(int) % GRID2.size
    assert np.abs(s.rho - s.rho[idx]).max() < 1e-12


def test_steiner_plan_resample_factor():
    k = ellipse(GRID2, 2.0, 1.0)
    plan = SteinerPlan(k, [0.0, 1.0])
    half = plan.resample(0.5)
    # halving every vertical chord of an axis-aligned ellipse halves b, and
    # halves the volume; the volume functional is what the cell-rms samples
    # are exact for, the pointwise match only holds to the representation
    # floor (the target ellipse is pointy, curvature up to a/b^2 = 8)
    assert abs(volume(half) - volume(k) / 2.0) / volume(k) < 1e-8
    expect = ellipse(GRID2, 2.0, 0.5)
    assert radial_distance(half, expect) < 2e-4


def test_steiner_preserves_volume_dim3():
    # the per-node chord tables are the accuracy limit in dim 3; the crucial
    # measure-preserving uses re-root the measure afterwards, so this only
    # documents the raw plan quality
    g = GRID3
    rho = 1.0 + 0.25 * g.nodes[:, 0] + 0.15 * g.nodes[:, 2] ** 2
    k = StarBody(g, rho, 0.5)
    v0 = volume(k)
    s = steiner(k, [0.0, 0.0, 1.0])
    assert abs(volume(s) - v0) / v0 < 1e-4
    s2 = steiner(k, [1.0, 1.0, 1.0])
    assert abs(volume(s2) - v0) / v0 < 5e-4


def test_steiner_fixes_ball_dim3():
    b = ball(GRID3, 1.0)
    assert radial_distance(steiner(b, [0.0, 0.0, 1.0]), b) < 1e-8
    assert radial_distance(steiner(b, [1.0, 1.0, 1.0]), b) < 1e-8


# -- rearrangement, distances, transforms ------------------------------------------

def test_rearrangement_matches_volume():
    k = ellipse(GRID2, 2.0, 1.0)
    b = rearrangement(k)
    assert volume(b) == pytest.approx(volume(k), rel=1e-12)
    assert np.ptp(b.rho) == 0.0


def test_radial_distance_square_vs_disk():
    assert radial_distance(square(GRID2), ball(GRID2, 1.0)) == pytest.approx(
        math.sqrt(2) - 1, abs=1e-12)


def test_hausdorff_square_vs_disk():
    d = hausdorff_distance(square(GRID2), ball(GRID2, 1.0))
    assert d == pytest.approx(math.sqrt(2) - 1, abs=2e-3)


def test_rotation_covariance():
    k = ellipse(GRID2, 2.0, 1.0)
    psi = 0.8
    rot = np.array([[math.cos(psi), -math.sin(psi)],
                    [math.sin(psi), math.cos(psi)]])
    rk = rotate_body(k, rot)
    assert volume(rk) == pytest.approx(volume(k), rel=1e-9)
    u = np.array([math.cos(1.7), math.sin(1.7)])
    assert support(rk, u) == pytest.approx(support(k, rot.T @ u), rel=1e-6)


def test_scale_body_volume():
    k = ellipse(GRID2, 2.0, 1.0)
    assert volume(scale_body(k, 3.0)) == pytest.approx(9 * volume(k), rel=1e-12)
