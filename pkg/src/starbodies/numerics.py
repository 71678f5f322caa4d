"""Root finding, radial antiderivatives and monotone profile inversion.

Scalar root finding is bisection (no derivatives) except for the
bracketed secant used by the measure-restoring correction factor, where
the residual is expensive; the integrands and residuals here are tame,
and bracketing keeps every solver robust near the flat or kinked spots
that show up around symmetrized bodies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import BracketError


def bisect(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Bisection root of f on [lo, hi]; raises BracketError without a sign change."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or (hi - lo) < tol:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def illinois_root(f, floor: float, b: float, fb: float, ftol: float,
                  max_iter: int = 80) -> float:
    """Root of an increasing residual on [floor, b], given f(b) = fb >= 0.

    The lower bracket end grows downward geometrically from b instead of
    starting at the floor, because callers' residuals can be expensive or
    ill-behaved far below the root. Then bracketed secant steps (Illinois
    variant) with a bisection guard finish the job. Returns an abscissa
    whose residual was actually evaluated; stored endpoint residuals get
    rescaled by the Illinois rule, so only fresh values are tested
    against ftol.
    """
    if abs(fb) <= ftol:
        return b
    a = b
    fa = fb
    while fa >= 0.0:
        if a <= floor:
            return a
        b, fb = a, fa
        a = max(0.75 * a, floor)
        fa = f(a)
    side = 0
    c, fc = b, fb
    for _ in range(max_iter):
        c = b - fb * (b - a) / (fb - fa)
        if not a < c < b:
            c = 0.5 * (a + b)
        fc = f(c)
        if abs(fc) <= ftol:
            return c
        if fc >= 0.0:
            b, fb = c, fc
            if side == 1:
                fa *= 0.5
            side = 1
        else:
            a, fa = c, fc
            if side == -1:
                fb *= 0.5
            side = -1
    warnings.warn(f"bracketed root search stopped at residual {fc:.3e}",
                  RuntimeWarning)
    return c


def bisect_vec(f, lo: np.ndarray, hi: np.ndarray, iters: int = 48) -> np.ndarray:
    """Vectorized bisection: f maps an array of points to residuals.

    Assumes f(lo) <= 0 <= f(hi) componentwise (callers arrange brackets).
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = f(mid) >= 0.0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return 0.5 * (lo + hi)


def adaptive_quad(f, a: float, b: float, tol: float = 1e-12) -> float:
    """Adaptive quadrature of f on [a, b] to absolute tolerance tol."""
    val, _ = quad(f, a, b, epsabs=tol, epsrel=1e-13, limit=200)
    return val


# ---------------------------------------------------------------------------
# radial antiderivatives for the three volume elements

def sine_power_antiderivative(n: int, s):
    """Integral of (sin r)^(n-1) from 0 to s (geodesic cap kernel on S^n)."""
    s = np.asarray(s, dtype=float)
    if n == 2:
        out = 1.0 - np.cos(s)
    elif n == 3:
        out = 0.5 * (s - np.sin(s) * np.cos(s))
    else:
        out = np.vectorize(
            lambda z: adaptive_quad(lambda r: math.sin(r) ** (n - 1), 0.0, z)
        )(s)
    return out if out.shape else float(out)


def gnomonic_measure_antiderivative(n: int, R):
    """Integral of r^(n-1) (1+r^2)^(-(n+1)/2) from 0 to R.

    This is the radial kernel of the chart-side area element: integrating
    it over directions gives the spherical Hausdorff measure of the body
    whose gnomonic image has radial function R.
    """
    R = np.asarray(R, dtype=float)
    if n == 2:
        out = 1.0 - 1.0 / np.sqrt(1.0 + R**2)
    elif n == 3:
        out = 0.5 * (np.arctan(R) - R / (1.0 + R**2))
    else:
        out = np.vectorize(
            lambda z: adaptive_quad(
                lambda r: r ** (n - 1) * (1 + r * r) ** (-(n + 1) / 2), 0.0, z)
        )(R)
    return out if out.shape else float(out)


def hyperbolic_measure_antiderivative(n: int, R):
    """Integral of r^(n-1) (1+r^2)^(-1/2) from 0 to R (chart-side kernel)."""
    R = np.asarray(R, dtype=float)
    if n == 2:
        out = np.sqrt(1.0 + R**2) - 1.0
    elif n == 3:
        out = 0.5 * (R * np.sqrt(1.0 + R**2) - np.arcsinh(R))
    else:
        out = np.vectorize(
            lambda z: adaptive_quad(
                lambda r: r ** (n - 1) / math.sqrt(1 + r * r), 0.0, z)
        )(R)
    return out if out.shape else float(out)


# ---------------------------------------------------------------------------
# monotone profiles

@dataclass(frozen=True)
class MonotoneProfile:
    """A strictly monotone scalar profile on (lo, hi) with its inverse's needs.

    fn is vectorization-agnostic; decreasing/convex record the declared
    shape, which is spot-checked on a handful of probe points at build
    time rather than trusted blindly.
    """

    fn: object
    lo: float
    hi: float
    decreasing: bool
    convex: bool
    label: str = ""

    def __post_init__(self):
        probes = _probe_points(self.lo, self.hi)
        vals = [self.fn(p) for p in probes]
        diffs = np.diff(vals)
        ok = np.all(diffs < 0) if self.decreasing else np.all(diffs > 0)
        if not ok:
            raise ValueError(f"profile {self.label!r} violates declared monotonicity")

    def __call__(self, t):
        return self.fn(t)


def _probe_points(lo: float, hi: float):
    a = lo if math.isfinite(lo) and lo > 0 else 1e-6
    b = hi if math.isfinite(hi) else max(1e4, 10 * a)
    return np.geomspace(a * 1.0000001, b * 0.9999999, 9)


def profile_inverse(profile: MonotoneProfile, y: float, tol: float = 1e-10) -> float:
    """Solve profile(x) = y by bracket growth plus bisection."""
    lo = profile.lo if math.isfinite(profile.lo) and profile.lo > 0 else 1e-12
    hi = profile.hi if math.isfinite(profile.hi) else 1.0
    sign = -1.0 if profile.decreasing else 1.0

    def g(x):
        return sign * (profile.fn(x) - y)

    # grow the bracket outward until the residual changes sign
    for _ in range(200):
        if g(hi) > 0:
            break
        hi *= 2.0
        if math.isfinite(profile.hi):
            hi = min(hi, profile.hi)
    for _ in range(200):
        if g(lo) < 0:
            break
        lo *= 0.5
        if math.isfinite(profile.lo) and profile.lo > 0:
            lo = max(lo, profile.lo)
    return bisect(g, lo, hi, tol=tol, max_iter=300)


def spherical_profile(n: int) -> MonotoneProfile:
    """F = F2 o F1 with F1(t) = pi/2 - arctan(t), F2(s) = int_0^s sin^(n-1).

    Strictly decreasing and strictly convex on (0, inf); F(h) integrated
    over directions gives the measure of the polar of a convex chart body
    with support function h.
    """
    def fn(t):
        return sine_power_antiderivative(n, math.pi / 2 - np.arctan(t))

    return MonotoneProfile(fn, 0.0, math.inf, decreasing=True, convex=True,
                           label=f"spherical-F(n={n})")


def hyperbolic_profile(n: int) -> MonotoneProfile:
    """F = F2 o F1 with F1(t) = 1/t, F2(s) = int_0^s r^(n-1)/sqrt(1+r^2)."""
    def fn(t):
        return hyperbolic_measure_antiderivative(n, 1.0 / np.asarray(t, dtype=float))

    return MonotoneProfile(fn, 0.0, math.inf, decreasing=True, convex=True,
                           label=f"hyperbolic-F(n={n})")
