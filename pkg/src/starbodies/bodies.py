"""Body-definition loader: structured-text specs to star bodies.

A spec is a JSON object. Common fields:

    kind      ball | ellipsoid | cube | superellipsoid | trig-radial | polytope
    dim       2 or 3
    geometry  euclidean | spherical | hyperbolic   (default euclidean)

Per-kind parameters (exact names; values plain decimal):

    ball            radius; spherical specs may give alpha (geodesic cap
                    radius) instead, hyperbolic specs geodesic_radius
    ellipsoid       axes (list of dim); optional rotation (dim 2: angle;
                    dim 3: {axis: [...], angle: a})
    cube            half (half side length)
    superellipsoid  axes, p (exponent, >= 1 for convexity)
    trig-radial     dim 2: a0, cos (list), sin (list)
                    dim 3: a0, terms (list of {amp, axis in 0..2, power})
    polytope        halfspaces (list of {normal: [...], offset: h}), each
                    meaning x . normal <= offset with offset > 0

Geometry wrapper fields: spherical takes delta_pole (default 0.05);
hyperbolic takes delta_disk (default 0.02) and chart = "phi" (radial
parameters are chart-side, default) or "poincare" (disk-side).
"""

import json
import math

import numpy as np

from .errors import InvalidBody
from .grids import make_grid
from .hyperbolic import HyperbolicBody, chart_radius
from .spherical import SphericalBody
from .starbody import StarBody

CONVEX_KINDS = {"ball", "ellipsoid", "cube", "superellipsoid", "polytope"}


def _axes(spec, dim):
    axes = np.asarray(spec["axes"], dtype=float)
    if axes.shape != (dim,) or np.any(axes <= 0):
        raise InvalidBody("axes must be a list of dim positive numbers")
    return axes


def _rotation_matrix(spec, dim):
    rot = spec.get("rotation")
    if rot is None:
        return None
    if dim == 2:
        a = float(rot)
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s], [s, c]])
    axis = np.asarray(rot["axis"], dtype=float)
    axis = axis / np.linalg.norm(axis)
    a = float(rot["angle"])
    kx = np.array([[0, -axis[2], axis[1]],
                   [axis[2], 0, -axis[0]],
                   [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(a) * kx + (1 - math.cos(a)) * (kx @ kx)


def _trig_radial_dim2(spec, grid):
    th = grid.thetas
    rho = np.full(grid.size, float(spec["a0"]))
    drho = np.zeros(grid.size)
    for k, c in enumerate(spec.get("cos", []), start=1):
        rho += float(c) * np.cos(k * th)
        drho += -k * float(c) * np.sin(k * th)
    for k, c in enumerate(spec.get("sin", []), start=1):
        rho += float(c) * np.sin(k * th)
        drho += k * float(c) * np.cos(k * th)
    if np.any(rho <= 0):
        raise InvalidBody("trig-radial profile dips below zero")
    tangent = rho**2 / np.sqrt(rho**2 + drho**2)
    return rho, 0.95 * float(tangent.min())


def _trig_radial_dim3(spec, grid):
    u = grid.nodes
    rho = np.full(grid.size, float(spec["a0"]))
    grad = np.zeros_like(u)
    for term in spec.get("terms", []):
        amp = float(term["amp"])
        axis = int(term["axis"])
        power = int(term["power"])
        if not 0 <= axis < 3 or power < 1:
            raise InvalidBody("trig-radial term needs axis in 0..2, power >= 1")
        rho += amp * u[:, axis] ** power
        grad[:, axis] += amp * power * u[:, axis] ** (power - 1)
    if np.any(rho <= 0):
        raise InvalidBody("trig-radial profile dips below zero")
    tang = grad - (np.sum(grad * u, axis=1))[:, None] * u
    tangent = rho**2 / np.sqrt(rho**2 + np.sum(tang * tang, axis=1))
    return rho, 0.95 * float(tangent.min())


def _polytope(spec, grid, dim):
    hs = spec["halfspaces"]
    if not hs:
        raise InvalidBody("polytope needs at least one halfspace")
    normals = np.asarray([h["normal"] for h in hs], dtype=float)
    offsets = np.asarray([h["offset"] for h in hs], dtype=float)
    if normals.shape[1] != dim:
        raise InvalidBody("halfspace normal dimension mismatch")
    if np.any(offsets <= 0):
        raise InvalidBody("halfspace offsets must be positive (origin interior)")
    dots = grid.nodes @ normals.T
    if np.any(dots.max(axis=1) <= 1e-12):
        raise InvalidBody("polytope is unbounded in some sampled direction")
    with np.errstate(divide="ignore"):
        rho = np.min(np.where(dots > 1e-12, offsets[None, :] / dots, np.inf),
                     axis=1)
    r_in = 0.98 * float((offsets / np.linalg.norm(normals, axis=1)).min())
    return rho, r_in


def euclidean_star(spec: dict, grid) -> StarBody:
    """Realize the Euclidean radial profile of a spec on a grid."""
    kind = spec.get("kind")
    dim = int(spec.get("dim", grid.dim))
    if dim != grid.dim:
        raise InvalidBody(f"spec is {dim}-dimensional, grid is {grid.dim}")

    if kind == "ball":
        r = float(spec["radius"])
        if r <= 0:
            raise InvalidBody("ball radius must be positive")
        rho = np.full(grid.size, r)
        r_in = 0.999 * r
    elif kind == "ellipsoid":
        axes = _axes(spec, dim)
        u = grid.nodes
        R = _rotation_matrix(spec, dim)
        if R is not None:
            u = u @ R
        rho = 1.0 / np.sqrt(((u / axes) ** 2).sum(axis=1))
        r_in = 0.98 * float(axes.min())
    elif kind == "cube":
        half = float(spec["half"])
        if half <= 0:
            raise InvalidBody("cube half side must be positive")
        rho = half / np.abs(grid.nodes).max(axis=1)
        r_in = 0.98 * half
    elif kind == "superellipsoid":
        axes = _axes(spec, dim)
        p = float(spec["p"])
        if p < 1:
            raise InvalidBody("superellipsoid exponent below 1 is not convex")
        rho = (np.abs(grid.nodes / axes) ** p).sum(axis=1) ** (-1.0 / p)
        r_in = 0.98 * float(rho.min())
    elif kind == "trig-radial":
        rho, r_in = (_trig_radial_dim2 if dim == 2 else _trig_radial_dim3)(
            spec, grid)
    elif kind == "polytope":
        rho, r_in = _polytope(spec, grid, dim)
    else:
        raise InvalidBody(f"unknown body kind {kind!r}")
    return StarBody(grid, rho, r_in)


def realize(spec: dict, resolution: int, grid=None):
    """Build the geometry-wrapped body a spec describes.

    Returns a StarBody for euclidean geometry, a SphericalBody or a
    HyperbolicBody otherwise.
    """
    dim = int(spec["dim"])
    if grid is None:
        grid = make_grid(dim, resolution)
    geometry = spec.get("geometry", "euclidean")

    if geometry == "euclidean":
        return euclidean_star(spec, grid)

    if geometry == "spherical":
        spec = dict(spec)
        if spec.get("kind") == "ball" and "alpha" in spec:
            alpha = float(spec.pop("alpha"))
            if not 0.0 < alpha < math.pi / 2:
                raise InvalidBody("cap radius alpha must lie in (0, pi/2)")
            spec["radius"] = math.tan(alpha)
        return SphericalBody(euclidean_star(spec, grid),
                             float(spec.get("delta_pole", 0.05)))

    if geometry == "hyperbolic":
        spec = dict(spec)
        delta = float(spec.get("delta_disk", 0.02))
        if spec.get("kind") == "ball" and "geodesic_radius" in spec:
            r = float(spec.pop("geodesic_radius"))
            if r <= 0:
                raise InvalidBody("geodesic radius must be positive")
            spec["radius"] = math.sinh(r)  # chart radius of a geodesic ball
            spec.pop("chart", None)
        if spec.get("chart", "phi") == "poincare":
            disk = euclidean_star(spec, grid)
            if float(disk.rho.max()) >= 1.0:
                raise InvalidBody("disk-side radial samples must stay below 1")
            return HyperbolicBody(
                StarBody(grid, chart_radius(disk.rho),
                         chart_radius(disk.r_in)), delta)
        return HyperbolicBody(euclidean_star(spec, grid), delta)

    raise InvalidBody(f"unknown geometry {geometry!r}")


def load_specs(path) -> list:
    """Read one spec object or a list of them from a JSON file."""
    with open(path) as f:
        data = json.load(f)
    if isinstance(data, dict):
        return [data]
    if isinstance(data, list):
        return data
    raise InvalidBody("spec file must hold a JSON object or array")


def dump_specs(specs: list, path) -> None:
    """Write a spec list with a canonical byte layout."""
    with open(path, "w") as f:
        json.dump(specs, f, indent=2, sort_keys=True)
        f.write("\n")
