"""The oscillatory multiplier m(xi) = int exp(i(xi1 t + xi2 t^2)) eta(t) dt.

eta is smooth and supported in 1/2 <= |t| <= 2, so the trapezoid rule on each
half converges faster than any power of the step; the only constraint is to
resolve the oscillation of the phase.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import eta

CASE_SPLIT = 40.0
_LO, _HI = 0.5, 2.0


@dataclass(frozen=True)
class OscResult:
    xi: tuple[float, float]
    value: complex
    decay_product: float

    def __post_init__(self):
        if not self.decay_product >= 0:
            raise ValueError("decay_product must be nonnegative")

    @property
    def regime(self) -> str:
        return regime_label(self.xi)


def regime_label(xi) -> str:
    """'case1' when |xi1| > 40 |xi2|, else 'case2'.  Reporting only."""
    return "case1" if abs(xi[0]) > CASE_SPLIT * abs(xi[1]) else "case2"


def _trapezoid(xi1: float, xi2: float, n: int) -> complex:
    t = np.linspace(_LO, _HI, n + 1)
    w = np.full(n + 1, (_HI - _LO) / n)
    w[0] = w[-1] = 0.5 * w[0]  # eta vanishes at both ends anyway
    e = eta(t) * w
    # the negative half is t -> -t: phase xi2 t^2 - xi1 t
    q = xi2 * t * t
    return complex(np.sum(e * (np.exp(1j * (xi1 * t + q)) + np.exp(1j * (q - xi1 * t)))))


def nodes_for(xi, per_wavelength: int = 10) -> int:
    """Trapezoid panels giving >= per_wavelength nodes per local wavelength."""
    rate = abs(xi[0]) + 2 * _HI * abs(xi[1])
    n = per_wavelength * rate * (_HI - _LO) / (2 * np.pi)
    return max(64, int(np.ceil(n)))


def m_xi(xi, tol: float = 1e-10, max_doublings: int = 8) -> complex:
    """Evaluate m at xi = (xi1, xi2), doubling the node count until it settles."""
    xi1, xi2 = float(xi[0]), float(xi[1])
    n = nodes_for((xi1, xi2))
    prev = _trapezoid(xi1, xi2, n)
    for _ in range(max_doublings):
        n *= 2
        cur = _trapezoid(xi1, xi2, n)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    return prev


def eta_moment(p: int, n: int = 4096) -> float:
    """int |t|^p eta(t) dt over both halves of the support."""
    t = np.linspace(_LO, _HI, n + 1)
    w = np.full(n + 1, (_HI - _LO) / n)
    return float(2 * np.sum(t**p * eta(t) * w))


def lipschitz_bound(xi, xi_p) -> float:
    """Upper bound for |m(xi) - m(xi')| from the first two moments of eta."""
    return eta_moment(1) * abs(xi[0] - xi_p[0]) + eta_moment(2) * abs(xi[1] - xi_p[1])


def decay_product(xi, value: complex) -> float:
    return abs(value) * (abs(xi[0]) + np.sqrt(abs(xi[1])))


@dataclass(frozen=True)
class DecaySweep:
    ray: tuple[float, float]
    results: list

    @property
    def products(self) -> np.ndarray:
        return np.array([r.decay_product for r in self.results])

    @property
    def max_product(self) -> float:
        return float(self.products.max())

    @property
    def ratio(self) -> float:
        p = self.products
        return float(p.max() / p.min()) if p.min() > 0 else float("inf")

    def log_slope(self) -> float:
        """Least-squares slope of log(decay_product) against k."""
        p = np.maximum(self.products, np.finfo(float).tiny)
        k = np.arange(p.size)
        return float(np.polyfit(k, np.log(p), 1)[0])


def decay_sweep(ray, k_max: int) -> DecaySweep:
    if k_max < 4:
        raise ValueError("k_max must be >= 4")
    ray = (float(ray[0]), float(ray[1]))
    out = []
    for k in range(k_max + 1):
        xi = (2.0**k * ray[0], 2.0**k * ray[1])
        v = m_xi(xi)
        out.append(OscResult(xi, v, decay_product(xi, v)))
    return DecaySweep(ray, out)
