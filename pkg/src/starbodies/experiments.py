"""Experiment orchestration: corpora, verification runs, reports, emission.

A run takes a body spec, symmetrizes it along a direction schedule and
records the per-iterate evidence for the projection inequality of its
geometry: correction factor, intrinsic measure, polar-projection measure
and distance to the cap/ball rearrangement. Reports are emitted as a CSV
trace (byte-deterministic under fixed config and seed) plus a JSON
summary; timing lives only in the JSON so the CSV stays reproducible.

The quadrature tolerance eps_quad is not configured by hand: it is
calibrated per (geometry, dim, resolution) as 10x the residual observed
on the closed-form equality case (caps/balls), see calibrate_eps_quad.
"""

import json
import math
import os
import time
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bodies import realize
from .errors import InvalidBody, StarBodyError
from .grids import make_grid, sphere_area, unit_ball_volume
from .hyperbolic import (HyperbolicBody, ball_body, hyperbolic_chain,
                         mu_measure, phi, verify_hyperbolic_petty)
from .hyperbolic import polar_projection_body as hyp_ppb
from .hyperbolic import polar_projection_measure as hyp_ppm
from .numerics import hyperbolic_profile, spherical_profile
from .spherical import (PettyRun, SphericalBody, cap_body,
                        isoperimetric_chain, spherical_measure,
                        verify_spherical_petty)
from .spherical import polar_projection_body as sph_ppb
from .spherical import polar_projection_volume as sph_ppv
from .starbody import (StarBody, SteinerPlan, ball, hausdorff_distance,
                       projection_body, rearrangement, steiner, volume)

GEOMETRIES = ("euclidean", "spherical", "hyperbolic")


# ---------------------------------------------------------------------------
# Euclidean verification (the model case the curved runs mirror)

def euclidean_polar_projection_volume(body: StarBody) -> float:
    """Volume of the polar projection body, radial formula on 1/h."""
    prof = projection_body(body)
    n = body.dim
    return float(body.grid.weights @ prof.h ** (-float(n))) / n


def verify_euclidean_petty(body: StarBody, directions, eps_quad: float = 1e-6,
                           equality_band: float = 1e-6,
                           track_distance: bool = True) -> PettyRun:
    """Euclidean Petty run; the correction factor is identically one."""
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    star = rearrangement(body)
    rhs = euclidean_polar_projection_volume(star)

    cur = body
    measures = [volume(body)]
    trace = [euclidean_polar_projection_volume(body)]
    dists = [hausdorff_distance(body, star)] if track_distance else None
    for k, u in enumerate(dirs):
        try:
            cur = steiner(cur, u)
        except StarBodyError as e:
            raise type(e)(f"iterate {k}: {e}") from e
        measures.append(volume(cur))
        trace.append(euclidean_polar_projection_volume(cur))
        if track_distance:
            dists.append(hausdorff_distance(cur, star))
    return PettyRun("euclidean", dirs, np.ones(len(dirs)),
                    np.asarray(measures), np.asarray(trace),
                    None if dists is None else np.asarray(dists),
                    float(trace[0]), float(rhs), eps_quad, equality_band)


_VERIFY = {
    "euclidean": verify_euclidean_petty,
    "spherical": verify_spherical_petty,
    "hyperbolic": verify_hyperbolic_petty,
}


def polar_projection_of(body) -> float:
    """Kernel-route polar projection measure for any geometry wrapper."""
    if isinstance(body, SphericalBody):
        return sph_ppv(body)
    if isinstance(body, HyperbolicBody):
        return hyp_ppm(body)
    return euclidean_polar_projection_volume(body)


def two_path_gap(body) -> float:
    """Relative disagreement of the two polar-projection routes.

    Kernel route: direction integral of the profile F against the
    projection-body support. Direct route: measure of the materialized
    polar body. Euclidean geometry has a single formula, so the gap is
    defined for the curved geometries.
    """
    if isinstance(body, SphericalBody):
        a, b = sph_ppv(body), sph_ppb(body).measure()
    elif isinstance(body, HyperbolicBody):
        a, b = hyp_ppm(body), hyp_ppb(body).measure()
    else:
        raise InvalidBody("two-path check applies to spherical and hyperbolic bodies")
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------
# tolerance calibration

def _closed_form_equality_residual(geometry: str, dim: int, grid):
    # the ball/cap projection body is a ball/cap, so the polar-projection
    # measure has a closed form; the numeric value's deviation from it is
    # the raw quadrature error of the projection pipeline
    F_s = spherical_profile(dim)
    F_h = hyperbolic_profile(dim)
    if geometry == "euclidean":
        body = ball(grid, 1.0)
        h = unit_ball_volume(dim - 1)  # support of Pi(B(1))
        closed = float(sphere_area(dim)) * h ** (-float(dim)) / dim
        num = euclidean_polar_projection_volume(body)
    elif geometry == "spherical":
        body = cap_body(grid, 0.8)
        h_pi = unit_ball_volume(dim - 1) * math.tan(0.8) ** (dim - 1)
        closed = sphere_area(dim) * float(F_s(h_pi))
        num = sph_ppv(body)
    else:
        body = ball_body(grid, math.tanh(0.45))  # geodesic radius 0.9
        R = math.sinh(0.9)
        closed = sphere_area(dim) * float(
            F_h(unit_ball_volume(dim - 1) * R ** (dim - 1)))
        num = hyp_ppm(body)
    return abs(num - closed), body, closed


@lru_cache(maxsize=None)
def calibrate_eps_quad(geometry: str, dim: int, resolution: int) -> float:
    """Quadrature tolerance: 10x the observed equality-case residual.

    The equality case (a cap or ball) has closed-form measures on both
    sides of the inequality, so everything it reports beyond round-off is
    quadrature noise. Three sources are sampled: the closed-form gap of
    the polar-projection pipeline; for dim 2 the per-step wiggle of a
    short symmetrization run on the fixed point; and the raw resampling
    error of the uncorrected symmetral, which is the deficit the
    correction factor cannot remove when it lands below the target (the
    clamp path) and therefore the real per-step noise floor.
    """
    if geometry not in GEOMETRIES:
        raise InvalidBody(f"unknown geometry {geometry!r}")
    grid = make_grid(dim, resolution)
    residual, body, closed = _closed_form_equality_residual(geometry, dim, grid)
    if dim == 2:
        rng = np.random.default_rng(2025)
        dirs = _schedule(dim, 8, rng)
        chart = getattr(body, "chart", body)
        m0 = quadrature_measure(body)
        for u in dirs[:4]:
            if geometry == "euclidean":
                sym = steiner(chart, u)  # the probe is the kernel itself
            else:
                # uncorrected node-sampled symmetral: the clamp-path noise
                # floor of the curved kernels
                sym = SteinerPlan(chart, u).resample(1.0, cell_average=False)
            if isinstance(body, SphericalBody):
                m1 = spherical_measure(sym)
            elif isinstance(body, HyperbolicBody):
                m1 = mu_measure(sym)
            else:
                m1 = volume(sym)
            residual = max(residual, abs(m1 - m0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            run = _VERIFY[geometry](body, dirs, eps_quad=0.0)
        increments = np.diff(run.polar_projection)
        residual = max(residual, abs(run.margin),
                       float(max(0.0, -increments.min())))
    return 10.0 * max(residual, 1e-13 * abs(closed))


def _schedule(dim: int, count: int, rng) -> np.ndarray:
    dirs = rng.standard_normal((count, dim))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# configs and reports

@dataclass
class ExperimentConfig:
    """One experiment: a body, a geometry, a schedule, tolerances, outputs.

    schedule may be an explicit array of directions; when None, it is
    drawn uniformly on the sphere from the seed (iterations many).
    eps_quad None means calibrate from the geometry's equality case; the
    explicit value 0.0 is accepted and demonstrates why the tolerance
    exists (quadrature noise then counts as monotonicity violations).
    """

    geometry: str
    body: dict
    resolution: int = 720
    iterations: int = 20
    schedule: object = None
    seed: int = 0
    eps_quad: object = None
    root_tol: float = 1e-10
    equality_band: float = 1e-6
    measure_band: float = 1e-6
    mode: str = "verify"
    out: object = None

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise InvalidBody(f"unknown geometry {self.geometry!r}")
        if self.mode not in ("verify", "converge", "chain"):
            raise InvalidBody(f"unknown mode {self.mode!r}")
        if self.root_tol <= 0 or self.equality_band <= 0 or self.measure_band <= 0:
            raise InvalidBody("tolerances must be positive")
        if self.eps_quad is not None and self.eps_quad < 0:
            raise InvalidBody("eps_quad cannot be negative")
        if self.mode in ("verify", "converge"):
            n = self.iterations if self.schedule is None else len(self.schedule)
            if n < 1:
                raise InvalidBody("schedule must be nonempty")

    def directions(self, dim: int) -> np.ndarray:
        if self.schedule is not None:
            return np.atleast_2d(np.asarray(self.schedule, dtype=float))
        return _schedule(dim, self.iterations, np.random.default_rng(self.seed))


@dataclass
class RunReport:
    """A verification run plus the derived pass/fail verdicts."""

    config: ExperimentConfig
    petty: PettyRun
    eps_quad: float
    wall_time: float

    @property
    def measure_steps(self) -> np.ndarray:
        m = self.petty.measures
        return np.abs(np.diff(m)) / np.abs(m[:-1])

    @property
    def measure_ok(self) -> bool:
        return bool(self.measure_steps.max() <= self.config.measure_band)

    @property
    def monotone_ok(self) -> bool:
        return self.petty.violations == 0

    @property
    def distance_ratio(self) -> float:
        d = self.petty.distances
        if d is None or d[0] == 0.0:
            return math.nan
        return float(d[-1] / d[0])

    @property
    def overall_decreasing(self) -> bool:
        """Windowed distance decrease up to the convergence target.

        Window minima must be non-increasing (eps_quad slack) until the
        trace first reaches 5% of the initial distance; the floor noise
        beyond that point says nothing about convergence.
        """
        d = self.petty.distances
        if d is None:
            return True
        hit = np.nonzero(d <= 0.05 * d[0])[0]
        seg = d[: int(hit[0]) + 1] if hit.size else d
        w = max(5, seg.size // 10)
        mins = [float(seg[i:i + w].min()) for i in range(0, seg.size, w)]
        return all(mins[j + 1] <= mins[j] + self.eps_quad
                   for j in range(len(mins) - 1))

    @property
    def passed(self) -> bool:
        ok = self.petty.passed and self.monotone_ok and self.measure_ok
        if self.config.mode == "converge":
            ok = ok and self.distance_ratio <= 0.05 and self.overall_decreasing
        return ok

    def summary(self) -> dict:
        p = self.petty
        out = {
            "geometry": p.geometry,
            "mode": self.config.mode,
            "resolution": self.config.resolution,
            "seed": self.config.seed,
            "iterations": int(p.directions.shape[0]),
            "eps_quad": self.eps_quad,
            "equality_band": p.equality_band,
            "lhs": p.lhs,
            "rhs": p.rhs,
            "margin": p.margin,
            "violations": int(p.violations),
            "max_measure_step": float(self.measure_steps.max()),
            "equality": bool(p.equality),
            "monotone_ok": self.monotone_ok,
            "measure_ok": self.measure_ok,
            "passed": bool(self.passed),
            "wall_seconds": self.wall_time,
        }
        if p.distances is not None:
            out["initial_distance"] = float(p.distances[0])
            out["final_distance"] = float(p.distances[-1])
            out["distance_ratio"] = self.distance_ratio
            out["overall_decreasing"] = self.overall_decreasing
        return out


@dataclass
class ChainReport:
    """Isoperimetric chain values for one body plus verdicts."""

    config: ExperimentConfig
    values: object
    eps_quad: float
    wall_time: float
    equality_case: bool = False

    @property
    def passed(self) -> bool:
        v = self.values
        scale = abs(v.body_scaled_perimeter)
        ok = abs(v.left_gap) <= 1e-6 * scale
        ok = ok and v.middle_slack >= -self.eps_quad
        ok = ok and v.right_slack >= -self.eps_quad
        if self.equality_case:
            ok = ok and abs(v.right_slack) <= 1e-6 * scale
        return ok

    def summary(self) -> dict:
        v = self.values
        return {
            "geometry": self.config.geometry,
            "mode": "chain",
            "resolution": self.config.resolution,
            "eps_quad": self.eps_quad,
            "star_scaled_perimeter": v.star_scaled_perimeter,
            "star_inverse": v.star_inverse,
            "body_inverse": v.body_inverse,
            "body_scaled_perimeter": v.body_scaled_perimeter,
            "left_gap": v.left_gap,
            "middle_slack": v.middle_slack,
            "right_slack": v.right_slack,
            "equality_case": self.equality_case,
            "passed": bool(self.passed),
            "wall_seconds": self.wall_time,
        }


def run_experiment(config: ExperimentConfig):
    """Realize the body, run the configured experiment, return its report."""
    body = realize(config.body, config.resolution)
    dim = int(config.body["dim"])
    eps = config.eps_quad
    if eps is None:
        eps = calibrate_eps_quad(config.geometry, dim, config.resolution)

    t0 = time.perf_counter()
    if config.mode == "chain":
        if config.geometry == "spherical":
            values = isoperimetric_chain(body)
        elif config.geometry == "hyperbolic":
            values = hyperbolic_chain(body)
        else:
            raise InvalidBody(
                "the isoperimetric chain is defined for spherical and hyperbolic runs")
        sym = config.body.get("kind") == "ball" and "rotation" not in config.body
        return ChainReport(config, values, eps, time.perf_counter() - t0,
                           equality_case=sym)

    dirs = config.directions(dim)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        petty = _VERIFY[config.geometry](
            body, dirs, eps_quad=eps, equality_band=config.equality_band)
    return RunReport(config, petty, eps, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# emission

def _fmt(x) -> str:
    return repr(float(x))


def emit(report: RunReport, out_dir: str, stem: str):
    """Write the CSV iterate trace and the JSON summary, return the paths.

    CSV columns, in order: iter, dir_0..dir_{n-1}, r_K, measure,
    polar_proj_measure, dist_to_star. Row 0 is the initial body, so the
    direction and correction cells of that row are empty. Floats are
    shortest round-trip decimals, making the bytes a pure function of
    config and seed.
    """
    os.makedirs(out_dir, exist_ok=True)
    p = report.petty
    dim = p.directions.shape[1]
    cols = ["iter"] + [f"dir_{i}" for i in range(dim)] \
        + ["r_K", "measure", "polar_proj_measure", "dist_to_star"]
    lines = [",".join(cols)]
    n_rows = p.measures.shape[0]
    for k in range(n_rows):
        if k == 0:
            row = ["0"] + [""] * dim + [""]
        else:
            row = [str(k)] + [_fmt(c) for c in p.directions[k - 1]] \
                + [_fmt(p.r_values[k - 1])]
        row.append(_fmt(p.measures[k]))
        row.append(_fmt(p.polar_projection[k]))
        row.append(_fmt(p.distances[k]) if p.distances is not None else "")
        lines.append(",".join(row))
    csv_path = os.path.join(out_dir, stem + ".csv")
    with open(csv_path, "w") as f:
        f.write("\n".join(lines) + "\n")

    json_path = os.path.join(out_dir, stem + ".json")
    with open(json_path, "w") as f:
        json.dump(report.summary(), f, indent=2, sort_keys=True)
        f.write("\n")
    return csv_path, json_path


def emit_chain(report: ChainReport, out_dir: str, stem: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, stem + ".json")
    with open(json_path, "w") as f:
        json.dump(report.summary(), f, indent=2, sort_keys=True)
        f.write("\n")
    return json_path


# ---------------------------------------------------------------------------
# corpus generation

def _draw_trig2(rng, geometry: str, degree: int):
    if geometry == "hyperbolic":
        a0 = rng.uniform(0.7, 1.3)
    elif geometry == "spherical":
        a0 = rng.uniform(0.55, 0.95)
    else:
        a0 = rng.uniform(0.6, 1.1)
    cos = [rng.uniform(-1.0, 1.0) * 0.33 * a0 / k for k in range(1, degree + 1)]
    sin = [rng.uniform(-1.0, 1.0) * 0.33 * a0 / k for k in range(1, degree + 1)]
    # keep a visible asymmetry so rearrangement distances start well off
    # the sampling floor
    if abs(cos[0]) < 0.08 * a0:
        cos[0] = math.copysign(0.08 * a0, cos[0] if cos[0] != 0.0 else 1.0)
    return {"kind": "trig-radial", "a0": a0, "cos": cos, "sin": sin}


def _draw_trig3(rng, geometry: str):
    a0 = rng.uniform(0.55, 0.9) if geometry != "hyperbolic" else rng.uniform(0.7, 1.2)
    terms = []
    for axis in rng.permutation(3)[:3]:
        power = int(rng.integers(1, 4))
        amp = rng.uniform(-1.0, 1.0) * 0.18 * a0
        terms.append({"amp": amp, "axis": int(axis), "power": power})
    if abs(terms[0]["amp"]) < 0.1 * a0:
        terms[0]["amp"] = math.copysign(0.1 * a0, terms[0]["amp"] or 1.0)
    terms[0]["power"] = 1  # an odd linear term guarantees asymmetry
    return {"kind": "trig-radial", "a0": a0, "terms": terms}


def _draw_ellipsoid(rng, geometry: str, dim: int):
    lo, hi = (0.5, 1.1) if geometry != "hyperbolic" else (0.6, 1.3)
    axes = sorted(rng.uniform(lo, hi, size=dim), reverse=True)
    spec = {"kind": "ellipsoid", "axes": [float(a) for a in axes]}
    if dim == 2:
        spec["rotation"] = float(rng.uniform(0.0, math.pi))
    else:
        axis = rng.standard_normal(3)
        spec["rotation"] = {"axis": [float(a) for a in (axis / np.linalg.norm(axis))],
                            "angle": float(rng.uniform(0.0, math.pi))}
    return spec


def _draw_symmetric(rng, geometry: str):
    if geometry == "spherical":
        return {"kind": "ball", "alpha": float(rng.uniform(0.3, 1.1))}
    if geometry == "hyperbolic":
        return {"kind": "ball", "geodesic_radius": float(rng.uniform(0.4, 1.2))}
    return {"kind": "ball", "radius": float(rng.uniform(0.4, 1.2))}


def generate_corpus(seed: int, count: int, geometry: str, dim: int = 2,
                    family: str = "mixed", alphas=None, degree: int = 4,
                    floor: float = 0.1, probe_resolution: int = None) -> list:
    """Draw a deterministic list of valid body specs.

    family is one of caps (spherical; explicit alphas or evenly spread),
    balls, ellipsoids, trig-radial, or mixed. Every draw is validated by
    realizing it on a probe grid and checking r_in against the floor;
    rejected draws are redrawn, so the output depends only on the
    arguments.
    """
    if geometry not in GEOMETRIES:
        raise InvalidBody(f"unknown geometry {geometry!r}")
    if probe_resolution is None:
        probe_resolution = 720 if dim == 2 else 32
    rng = np.random.default_rng(seed)

    if family == "caps":
        if geometry != "spherical":
            raise InvalidBody("the caps family is spherical")
        if alphas is None:
            alphas = np.linspace(0.3, 1.1, count)
        specs = [{"kind": "ball", "dim": dim, "geometry": "spherical",
                  "alpha": float(a)} for a in alphas]
        for s in specs:
            realize(s, probe_resolution)
        return specs

    def draw(index):
        kind = family
        if family == "mixed":
            kind = ("balls", "ellipsoids", "trig-radial", "trig-radial")[index % 4]
        if kind == "balls":
            return _draw_symmetric(rng, geometry)
        if kind == "ellipsoids":
            return _draw_ellipsoid(rng, geometry, dim)
        if kind == "trig-radial":
            return (_draw_trig2(rng, geometry, degree) if dim == 2
                    else _draw_trig3(rng, geometry))
        raise InvalidBody(f"unknown family {family!r}")

    specs = []
    for i in range(count):
        for _ in range(200):
            spec = draw(i)
            spec["dim"] = dim
            spec["geometry"] = geometry
            try:
                body = realize(spec, probe_resolution)
            except StarBodyError:
                continue
            chart = getattr(body, "chart", body)
            if chart.r_in < floor:
                continue
            specs.append(spec)
            break
        else:
            raise InvalidBody("corpus constraints look infeasible after 200 draws")
    return specs


# ---------------------------------------------------------------------------
# Monte-Carlo measure oracles

def mc_measure(body, n_samples: int = 10**6, seed: int = 0) -> float:
    """Monte-Carlo intrinsic measure by membership sampling.

    Euclidean bodies: uniform box sampling. Spherical and hyperbolic
    bodies: uniform points in the bounding chart disk, membership-tested
    and reweighted by the chart volume density ((1+|x|^2)^{-(n+1)/2}
    gnomonic, (2/(1-|x|^2))^n conformal). The densities are shared with
    the quadrature route but nothing else is: no grid, no radial
    antiderivative, no per-node weights.
    """
    rng = np.random.default_rng(seed)
    if isinstance(body, SphericalBody):
        n = body.dim
        R = float(body.chart.rho.max()) * (1.0 + 1e-9)
        dirs = rng.standard_normal((n_samples, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = R * rng.random(n_samples) ** (1.0 / n)
        pts = dirs * radii[:, None]
        inside = body.chart.membership(pts)
        w = (1.0 + np.sum(pts * pts, axis=1)) ** (-(n + 1) / 2.0)
        return unit_ball_volume(n) * R**n * float(np.mean(w * inside))
    if isinstance(body, HyperbolicBody):
        n = body.dim
        R = float(body.disk_radial().max()) * (1.0 + 1e-9)
        dirs = rng.standard_normal((n_samples, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = R * rng.random(n_samples) ** (1.0 / n)
        pts = dirs * radii[:, None]
        inside = body.chart.membership(phi(pts))
        w = (2.0 / (1.0 - np.sum(pts * pts, axis=1))) ** n
        return unit_ball_volume(n) * R**n * float(np.mean(w * inside))
    half = float(body.rho.max()) * (1.0 + 1e-9)
    n = body.dim
    pts = rng.uniform(-half, half, size=(n_samples, n))
    hits = int(np.count_nonzero(body.membership(pts)))
    return (2.0 * half) ** n * hits / n_samples


def quadrature_measure(body) -> float:
    if isinstance(body, (SphericalBody, HyperbolicBody)):
        return body.measure()
    return volume(body)
