"""Parabolic geometry of the plane.

Points carry an isotropic coordinate ``x1`` and a parabolic coordinate ``x2``.
The dilation ``(x1, x2) -> (rho*x1, rho**2*x2)`` is the basic symmetry; every
object here is homogeneous with respect to it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HOMOGENEOUS_DIM = 3
DEFAULT_SIGMA = (1.0, 1.0)
_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class ParaPoint:
    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError(f"non-finite point ({self.x1}, {self.x2})")

    def __add__(self, other: "ParaPoint") -> "ParaPoint":
        return ParaPoint(self.x1 + other.x1, self.x2 + other.x2)

    def __sub__(self, other: "ParaPoint") -> "ParaPoint":
        return ParaPoint(self.x1 - other.x1, self.x2 - other.x2)

    def __neg__(self) -> "ParaPoint":
        return ParaPoint(-self.x1, -self.x2)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x1, self.x2)


ORIGIN = ParaPoint(0.0, 0.0)


@dataclass(frozen=True)
class ParaCube:
    """Anisotropic box ``[a - r/2, a + r/2) x [b - r^2/2, b + r^2/2)``."""

    a: float
    b: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"cube scale must be positive, got {self.r}")

    @property
    def center(self) -> ParaPoint:
        return ParaPoint(self.a, self.b)

    @property
    def extent(self) -> tuple[tuple[float, float], tuple[float, float]]:
        h1, h2 = self.r / 2, self.r**2 / 2
        return (self.a - h1, self.a + h1), (self.b - h2, self.b + h2)

    @property
    def volume(self) -> float:
        return self.r**HOMOGENEOUS_DIM


@dataclass(frozen=True)
class PolarCoords:
    rho: float
    sigma: tuple[float, float]

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        s1, s2 = self.sigma
        if abs(s1 * s1 + s2 * s2 - 1.0) > _UNIT_TOL:
            raise ValueError(f"sigma {self.sigma} is not a unit vector")


def pnorm(p: ParaPoint) -> float:
    """Parabolic quasi-norm ``|x1| + |x2|**0.5``."""
    return abs(p.x1) + math.sqrt(abs(p.x2))


def dilate(p: ParaPoint, rho: float) -> ParaPoint:
    if not rho > 0:
        raise ValueError(f"dilation factor must be positive, got {rho}")
    return ParaPoint(rho * p.x1, rho * rho * p.x2)


def check_sigma(sigma, allow_default: bool = True) -> tuple[float, float]:
    """Validate a curve direction: a unit vector, or the exact pair (1, 1)."""
    s1, s2 = float(sigma[0]), float(sigma[1])
    if allow_default and (s1, s2) == DEFAULT_SIGMA:
        return s1, s2
    if abs(s1 * s1 + s2 * s2 - 1.0) > _UNIT_TOL:
        raise ValueError(f"sigma {sigma} is neither a unit vector nor (1, 1)")
    return s1, s2


def gamma_sigma(t: float, sigma=DEFAULT_SIGMA) -> ParaPoint:
    s1, s2 = check_sigma(sigma)
    return ParaPoint(t * s1, t * t * s2)


def polar_radius(x1, x2):
    """Vectorised parabolic polar radius: positive root of rho^4 - x1^2 rho^2 - x2^2."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    sq = x1 * x1
    rho2 = 0.5 * (sq + np.sqrt(sq * sq + 4.0 * x2 * x2))
    return np.sqrt(rho2)


def to_polar(p: ParaPoint) -> PolarCoords:
    if p.x1 == 0.0 and p.x2 == 0.0:
        raise ValueError("the origin has no polar representation")
    rho = float(polar_radius(p.x1, p.x2))
    s1, s2 = p.x1 / rho, p.x2 / (rho * rho)
    # renormalise away the last ulp so PolarCoords validation is stable
    n = math.hypot(s1, s2)
    return PolarCoords(rho, (s1 / n, s2 / n))


def from_polar(pc: PolarCoords) -> ParaPoint:
    return ParaPoint(pc.rho * pc.sigma[0], pc.rho**2 * pc.sigma[1])


def polar_weight(pc: PolarCoords) -> float:
    """Density of Lebesgue measure in parabolic polar coordinates."""
    return pc.rho**2 * (1.0 + pc.sigma[1] ** 2)


def cube_contains(c: ParaCube, p: ParaPoint) -> bool:
    (lo1, hi1), (lo2, hi2) = c.extent
    return lo1 <= p.x1 < hi1 and lo2 <= p.x2 < hi2


def dyadic_children(c: ParaCube) -> list[ParaCube]:
    """The 8 parabolic cubes of scale r/2 tiling ``c`` (2 across x1, 4 across x2)."""
    r = c.r / 2
    d1, d2 = c.r / 4, c.r**2 / 8
    return [
        ParaCube(c.a + e1 * d1, c.b + e2 * d2, r)
        for e1 in (-1, 1)
        for e2 in (-3, -1, 1, 3)
    ]
