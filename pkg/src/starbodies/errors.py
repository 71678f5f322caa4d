"""Exception types shared across the package."""


class StarBodyError(ValueError):
    """Base class for geometric input errors."""


class GridError(StarBodyError):
    """Bad grid request (unsupported dimension, resolution too small)."""


class InvalidBody(StarBodyError):
    """Radial data rejected by a constructor check."""


class GridMismatch(StarBodyError):
    """Two bodies were combined across different grids."""


class BracketError(StarBodyError):
    """A root finder was given a bracket without a sign change."""


class DegenerateNormal(StarBodyError):
    """Boundary normal nearly orthogonal to the radial direction."""


class BodyTooLarge(StarBodyError):
    """Result would leave the open hemisphere / unit disk chart margin."""
