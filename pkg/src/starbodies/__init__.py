"""Star-body geometry in Euclidean, spherical and hyperbolic space."""

from .errors import (BodyTooLarge, BracketError, DegenerateNormal, GridError,
                     GridMismatch, InvalidBody, StarBodyError)
from .grids import SphereGrid, integrate, make_grid, sphere_area, unit_ball_volume
from .hyperbolic import (HyperbolicBody, ball_rearrangement, hyperbolic_chain,
                         hyperbolic_polar, hyperbolic_projection_body,
                         hyperbolic_steiner, mu_measure, phi, phi_inverse,
                         poincare_geodesic, verify_hyperbolic_petty)
from .spherical import (ChainCheck, PettyRun, SphericalBody, cap_body,
                        cap_measure, cap_rearrangement, gnomonic,
                        gnomonic_inverse, isoperimetric_chain,
                        spherical_measure, spherical_polar,
                        spherical_projection_body, spherical_steiner,
                        verify_spherical_petty)
from .starbody import (IntervalSlice, StarBody, SteinerPlan, SupportProfile,
                       ball, boundary_normal, chord_slice, convexity_witness,
                       hausdorff_distance, node_normals, perimeter,
                       perimeter_detail, polar, projection_body,
                       radial_distance, rearrangement, rotate_body, scale_body,
                       star_from_support, steiner, subadditivity_witness,
                       support, support_profile, volume)

__all__ = [
    "BodyTooLarge", "BracketError", "DegenerateNormal", "GridError",
    "GridMismatch", "InvalidBody", "StarBodyError",
    "SphereGrid", "integrate", "make_grid", "sphere_area", "unit_ball_volume",
    "IntervalSlice", "StarBody", "SteinerPlan", "SupportProfile", "ball",
    "boundary_normal", "chord_slice", "convexity_witness",
    "hausdorff_distance", "node_normals", "perimeter", "perimeter_detail",
    "polar", "projection_body", "radial_distance", "rearrangement",
    "rotate_body", "scale_body", "star_from_support", "steiner",
    "subadditivity_witness", "support", "support_profile", "volume",
    "ChainCheck", "PettyRun", "SphericalBody", "cap_body", "cap_measure",
    "cap_rearrangement", "gnomonic", "gnomonic_inverse",
    "isoperimetric_chain", "spherical_measure", "spherical_polar",
    "spherical_projection_body", "spherical_steiner", "verify_spherical_petty",
    "HyperbolicBody", "ball_rearrangement", "hyperbolic_chain",
    "hyperbolic_polar", "hyperbolic_projection_body", "hyperbolic_steiner",
    "mu_measure", "phi", "phi_inverse", "poincare_geodesic",
    "verify_hyperbolic_petty",
]
