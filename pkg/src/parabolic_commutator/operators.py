"""Operators along the parabola: H_gamma, the commutator T_A, its dyadic pieces,
the single-scale piece and its adjoint, Q_s, and the two-dimensional commutator
C_A assembled directly and by the method of rotations.

Every curve operator here has the discrete form

    (T f)(x) = sum_n  k_n * [A(x) - A(x - gamma(t_n))] * f(x - gamma(t_n))

on the nodes of a torus grid, with ``f(x - gamma)`` taken from the spectral
interpolant (exact for grid fields).  ``CurveOperator`` evaluates it either by
that node sum or, when A is a lattice trigonometric polynomial, through the
equivalent multiplier form; the two agree to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .geometry import DEFAULT_SIGMA, ParaPoint, check_sigma, polar_radius, to_polar
from .grid import Field2D, TorusGrid, eta, q_smooth, shift_phases  # noqa: F401  (q_smooth re-exported)
from .symbols import SymbolA

_CHUNK = 64


@dataclass(frozen=True)
class CurveOpSpec:
    sigma: tuple[float, float] = DEFAULT_SIGMA
    epsilon: float = 2.0**-8
    R: float = 4.0
    n_quad: int = 16

    def __post_init__(self):
        check_sigma(self.sigma)
        if not 0 < self.epsilon < self.R:
            raise ValueError(f"need 0 < epsilon < R, got ({self.epsilon}, {self.R})")
        if self.n_quad < 8:
            raise ValueError("n_quad must be >= 8")


# ---------------------------------------------------------------- quadrature


def _shell_nodes(a: float, b: float, n_quad: int, rate1: float, rate2: float):
    # Gauss-Legendre on [a, b]; more nodes when the phase xi1*t + xi2*t^2 winds a lot
    phase = rate1 * (b - a) + rate2 * (b * b - a * a)
    n = max(n_quad, int(np.ceil(0.6 * phase)) + 8)
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def pv_quadrature(epsilon: float, R: float, n_quad: int, bandwidth=(0.0, 0.0)):
    """Symmetric nodes and positive weights for p.v. integrals over eps < |t| < R.

    The positive half is split into dyadic shells [2^k eps, 2^(k+1) eps] (the last
    one cut at R), each carrying Gauss-Legendre nodes.  ``bandwidth`` is the
    largest |xi1 sigma1|, |xi2 sigma2| the integrand oscillates at.
    """
    if not 0 < epsilon < R:
        raise ValueError("need 0 < epsilon < R")
    edges = [epsilon]
    while edges[-1] * 2 < R * (1 - 1e-12):
        edges.append(edges[-1] * 2)
    edges.append(R)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        t, w = _shell_nodes(a, b, n_quad, *bandwidth)
        ts.append(t)
        ws.append(w)
    t = np.concatenate(ts)
    w = np.concatenate(ws)
    return np.concatenate([-t[::-1], t]), np.concatenate([w[::-1], w])


def eta_quadrature(j: int, n_quad: int, bandwidth=(0.0, 0.0), sides: str = "both"):
    """Nodes on supp eta(t / 2^j) with weights already multiplied by eta(t / 2^j)."""
    lo, hi = 2.0 ** (j - 1), 2.0 ** (j + 1)
    t1, w1 = _shell_nodes(lo, 2.0**j, n_quad, *bandwidth)
    t2, w2 = _shell_nodes(2.0**j, hi, n_quad, *bandwidth)
    t = np.concatenate([t1, t2])
    w = np.concatenate([w1, w2]) * eta(t / 2.0**j)
    if sides == "positive":
        return t, w
    return np.concatenate([-t[::-1], t]), np.concatenate([w[::-1], w])


def grid_bandwidth(grid: TorusGrid, sigma) -> tuple[float, float]:
    return (np.max(np.abs(grid.xi1)) * abs(sigma[0]), np.max(np.abs(grid.xi2)) * abs(sigma[1]))


# ---------------------------------------------------------------- linear maps


@dataclass
class LinearMap:
    """A linear operator on fields of one grid, with an optional adjoint."""

    grid: TorusGrid
    apply: Callable[[Field2D], Field2D]
    adjoint: Callable[[Field2D], Field2D] | None = None
    name: str = ""

    def __call__(self, f: Field2D) -> Field2D:
        return self.apply(f)

    def then(self, other: "LinearMap") -> "LinearMap":
        """Composition ``other o self``."""
        adj = None
        if self.adjoint is not None and other.adjoint is not None:
            adj = lambda g: self.adjoint(other.adjoint(g))  # noqa: E731
        return LinearMap(self.grid, lambda f: other.apply(self.apply(f)), adj,
                         f"{other.name}.{self.name}")


def multiplier_map(grid: TorusGrid, values: np.ndarray, name: str = "multiplier") -> LinearMap:
    vals = np.asarray(values, dtype=complex)
    return LinearMap(grid,
                     lambda f: Field2D(grid, np.fft.ifft2(np.fft.fft2(f.samples) * vals)),
                     lambda g: Field2D(grid, np.fft.ifft2(np.fft.fft2(g.samples) * np.conj(vals))),
                     name)


# ---------------------------------------------------------------- curve operators


class CurveOperator:
    """``f -> sum_n k_n [A(x) - A(x - gamma_sigma(t_n))] f(x - gamma_sigma(t_n))``.

    With ``symbol=None`` the bracket is replaced by 1 (Hilbert-type averages).
    """

    def __init__(self, grid: TorusGrid, nodes, kernel_weights, sigma=DEFAULT_SIGMA,
                 symbol: SymbolA | None = None):
        self.grid = grid
        self.nodes = np.asarray(nodes, dtype=float)
        self.kw = np.asarray(kernel_weights, dtype=float)
        self.sigma = check_sigma(sigma)
        self.symbol = symbol
        self.d1 = self.nodes * self.sigma[0]
        self.d2 = self.nodes**2 * self.sigma[1]
        self._spectral = None

    # -- node-sum route

    def _brackets(self, sl: slice) -> np.ndarray | None:
        if self.symbol is None:
            return None
        base = self.symbol.on_grid(self.grid)
        return base[None] - self.symbol.shifted(self.grid, self.d1[sl], self.d2[sl])

    def apply_direct(self, f: Field2D) -> Field2D:
        F = np.fft.fft2(f.samples)
        out = np.zeros(self.grid.shape, dtype=complex)
        for s in range(0, self.nodes.size, _CHUNK):
            sl = slice(s, s + _CHUNK)
            moved = np.fft.ifft2(F[None] * shift_phases(self.grid, self.d1[sl], self.d2[sl]),
                                 axes=(1, 2))
            br = self._brackets(sl)
            terms = moved if br is None else br * moved
            out += np.tensordot(self.kw[sl], terms, axes=1)
        return Field2D(self.grid, out)

    def adjoint_direct(self, g: Field2D) -> Field2D:
        acc = np.zeros(self.grid.shape, dtype=complex)
        for s in range(0, self.nodes.size, _CHUNK):
            sl = slice(s, s + _CHUNK)
            br = self._brackets(sl)
            prod = g.samples[None] if br is None else br * g.samples[None]
            P = np.fft.fft2(np.broadcast_to(prod, (len(self.nodes[sl]),) + self.grid.shape),
                            axes=(1, 2))
            phases = np.conj(shift_phases(self.grid, self.d1[sl], self.d2[sl]))
            acc += np.tensordot(self.kw[sl], P * phases, axes=1)
        return Field2D(self.grid, np.fft.ifft2(acc))

    # -- multiplier route

    def _m_on(self, n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
        """M(zeta) = sum_n k_n exp(-i zeta.gamma(t_n)) on integer lattice indices."""
        g = self.grid
        z1 = np.pi * n1 / g.L1
        z2 = np.pi * n2 / g.L2
        E1 = np.exp(-1j * np.outer(self.d1, z1))
        E2 = np.exp(-1j * np.outer(self.d2, z2))
        return (E1 * self.kw[:, None]).T @ E2

    def _prepare_spectral(self):
        if self._spectral is not None:
            return self._spectral
        g = self.grid
        n1 = np.round(np.fft.fftfreq(g.N1) * g.N1).astype(int)
        n2 = np.round(np.fft.fftfreq(g.N2) * g.N2).astype(int)
        if self.symbol is None:
            self._spectral = ("hilbert", self._m_on(n1, n2))
            return self._spectral
        modes = self.symbol.lattice_modes(g)
        if modes is None:
            raise ValueError(f"symbol {self.symbol.name!r} has no lattice modes on this grid")
        k1, k2, coeff = modes
        # the DFT index basis is anchored at the first node, not at x = 0
        coeff = coeff * np.exp(1j * np.pi * (k1 * g.x1[0] / g.L1 + k2 * g.x2[0] / g.L2))
        K1 = int(np.max(np.abs(k1), initial=0))
        K2 = int(np.max(np.abs(k2), initial=0))
        e1 = np.arange(-g.N1 // 2 - K1, g.N1 // 2 + K1)
        e2 = np.arange(-g.N2 // 2 - K2, g.N2 // 2 + K2)
        M = self._m_on(e1, e2)
        i0 = n1 - e1[0]
        j0 = n2 - e2[0]
        base = M[np.ix_(i0, j0)]
        diffs = [base - M[np.ix_(i0 + a, j0 + b)] for a, b in zip(k1, k2)]
        self._spectral = ("commutator", list(zip(k1, k2, coeff, diffs)))
        return self._spectral

    def apply_spectral(self, f: Field2D) -> Field2D:
        kind, data = self._prepare_spectral()
        F = np.fft.fft2(f.samples)
        if kind == "hilbert":
            return Field2D(self.grid, np.fft.ifft2(F * data))
        out = np.zeros_like(F)
        for a, b, c, D in data:
            out += np.roll(c * D * F, (a, b), axis=(0, 1))
        return Field2D(self.grid, np.fft.ifft2(out))

    def adjoint_spectral(self, g: Field2D) -> Field2D:
        kind, data = self._prepare_spectral()
        G = np.fft.fft2(g.samples)
        if kind == "hilbert":
            return Field2D(self.grid, np.fft.ifft2(G * np.conj(data)))
        out = np.zeros_like(G)
        for a, b, c, D in data:
            out += np.conj(c * D) * np.roll(G, (-a, -b), axis=(0, 1))
        return Field2D(self.grid, np.fft.ifft2(out))

    # -- dispatch

    def supports_spectral(self) -> bool:
        return self.symbol is None or self.symbol.lattice_modes(self.grid) is not None

    def apply(self, f: Field2D, method: str = "auto") -> Field2D:
        if method == "spectral" or (method == "auto" and self.supports_spectral()):
            return self.apply_spectral(f)
        return self.apply_direct(f)

    def adjoint(self, g: Field2D, method: str = "auto") -> Field2D:
        if method == "spectral" or (method == "auto" and self.supports_spectral()):
            return self.adjoint_spectral(g)
        return self.adjoint_direct(g)

    def as_map(self, method: str = "auto", name: str = "curve") -> LinearMap:
        return LinearMap(self.grid, lambda f: self.apply(f, method),
                         lambda g: self.adjoint(g, method), name)


def _pv_operator(grid, spec: CurveOpSpec, symbol, power: int, cutoff=None) -> CurveOperator:
    t, w = pv_quadrature(spec.epsilon, spec.R, spec.n_quad, grid_bandwidth(grid, spec.sigma))
    kw = w / t**power
    if cutoff is not None:
        kw = kw * cutoff(t)
    return CurveOperator(grid, t, kw, spec.sigma, symbol)


def hilbert_operator(grid: TorusGrid, spec: CurveOpSpec) -> CurveOperator:
    return _pv_operator(grid, spec, None, 1)


def commutator_operator(A: SymbolA, grid: TorusGrid, spec: CurveOpSpec, cutoff=None) -> CurveOperator:
    return _pv_operator(grid, spec, A, 2, cutoff)


def tj_operator(A: SymbolA, grid: TorusGrid, j: int, spec: CurveOpSpec = CurveOpSpec(),
                sides: str = "both") -> CurveOperator:
    t, w = eta_quadrature(j, spec.n_quad, grid_bandwidth(grid, spec.sigma), sides)
    return CurveOperator(grid, t, w / t**2, spec.sigma, A)


def hilbert_along(f: Field2D, spec: CurveOpSpec = CurveOpSpec(), method: str = "direct") -> Field2D:
    return hilbert_operator(f.grid, spec).apply(f, method)


def commutator_T(A: SymbolA, f: Field2D, spec: CurveOpSpec = CurveOpSpec(), cutoff=None,
                 method: str = "direct") -> Field2D:
    """Truncated commutator along gamma_sigma; ``cutoff(t)`` optionally tapers the weights."""
    return commutator_operator(A, f.grid, spec, cutoff).apply(f, method)


def dyadic_Tj(A: SymbolA, f: Field2D, j: int, spec: CurveOpSpec = CurveOpSpec(),
              method: str = "direct") -> Field2D:
    return tj_operator(A, f.grid, j, spec).apply(f, method)


def t0_operator(A: SymbolA, grid: TorusGrid, n_quad: int = 16) -> CurveOperator:
    """Single-scale piece on 1/2 < t < 2 along (t, t^2)."""
    return tj_operator(A, grid, 0, CurveOpSpec(n_quad=n_quad), sides="positive")


def t0_single(A: SymbolA, g: Field2D, side: str = "forward", method: str = "direct") -> Field2D:
    op = t0_operator(A, g.grid)
    if side == "forward":
        return op.apply(g, method)
    if side == "adjoint":
        return op.adjoint(g, method)
    raise ValueError(f"side must be 'forward' or 'adjoint', got {side!r}")


def t0_adjoint_pointwise(A: SymbolA, g: Field2D, n_quad: int = 16) -> Field2D:
    """-int [A(x) - A(x + gamma(s))] g(x + gamma(s)) eta(s) ds / s^2 with A in closed form."""
    op = t0_operator(A, g.grid, n_quad)
    G = np.fft.fft2(g.samples)
    base = A.on_grid(g.grid)
    out = np.zeros(g.grid.shape, dtype=complex)
    for s in range(0, op.nodes.size, _CHUNK):
        sl = slice(s, s + _CHUNK)
        moved = np.fft.ifft2(G[None] * shift_phases(g.grid, -op.d1[sl], -op.d2[sl]), axes=(1, 2))
        ahead = A.shifted(g.grid, -op.d1[sl], -op.d2[sl])
        out -= np.tensordot(op.kw[sl], (base[None] - ahead) * moved, axes=1)
    return Field2D(g.grid, out)


# ---------------------------------------------------------------- homogeneous kernels


def heat_kernel_values(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    out = np.zeros(np.broadcast(x1, x2).shape)
    pos = np.broadcast_to(x2 > 0, out.shape)
    X1 = np.broadcast_to(x1, out.shape)[pos]
    X2 = np.broadcast_to(x2, out.shape)[pos]
    out[pos] = X2**-2.0 * np.exp(-X1 * X1 / (4.0 * X2))
    return out


def heat_kernel(x: ParaPoint) -> float:
    if x.x1 == 0.0 and x.x2 == 0.0:
        raise ValueError("kernel is singular at the origin")
    return float(heat_kernel_values(x.x1, x.x2))


@dataclass(frozen=True)
class HomKernelProfile:
    """Restriction K(sigma) of a degree -4 parabolically homogeneous kernel to S^1."""

    profile: Callable
    even_in_x1: bool = True
    name: str = "profile"

    def __post_init__(self):
        th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        s1, s2 = np.cos(th), np.sin(th)
        vals = np.asarray(self.profile(s1, s2), dtype=float)
        mass = np.mean(np.abs(vals) * (1 + s2**2)) * 2 * np.pi
        if not np.isfinite(mass):
            raise ValueError("profile is not integrable on S^1")
        if self.even_in_x1 and not np.allclose(vals, self.profile(-s1, s2), rtol=1e-12, atol=1e-300):
            raise ValueError("profile is flagged even in x1 but is not")

    def check_even(self) -> bool:
        th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        s1, s2 = np.cos(th), np.sin(th)
        return bool(np.allclose(self.profile(s1, s2), self.profile(-s1, s2), rtol=1e-12, atol=0))


def heat_profile() -> HomKernelProfile:
    return HomKernelProfile(heat_kernel_values, True, "heat")


def smooth_profile() -> HomKernelProfile:
    return HomKernelProfile(lambda s1, s2: 1.0 + np.asarray(s2) ** 2 + 0.0 * np.asarray(s1),
                            True, "1+sigma2^2")


def hom_extend_values(profile: HomKernelProfile, x1, x2):
    rho = polar_radius(x1, x2)
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = np.asarray(x1) / rho
        s2 = np.asarray(x2) / rho**2
        return rho**-4.0 * profile.profile(s1, s2)


def hom_extend(profile: HomKernelProfile, x: ParaPoint) -> float:
    pc = to_polar(x)
    return float(pc.rho**-4.0 * profile.profile(np.float64(pc.sigma[0]), np.float64(pc.sigma[1])))


# ---------------------------------------------------------------- C_A, two routes


def _require_even(profile: HomKernelProfile):
    if not (profile.even_in_x1 and profile.check_even()):
        raise ValueError("method of rotations needs a profile even in x1")


def annulus_cell_fraction(z1, z2, d1, d2, inner_cut, outer_cut, sub: int = 8):
    """Fraction of each cell [z - d/2, z + d/2) lying in inner_cut <= rho <= outer_cut."""
    off = (np.arange(sub) + 0.5) / sub - 0.5
    o1, o2 = np.meshgrid(off * d1, off * d2, indexing="ij")
    rho = polar_radius(z1[:, None] + o1.ravel()[None], z2[:, None] + o2.ravel()[None])
    return np.mean((rho >= inner_cut) & (rho <= outer_cut), axis=1)


def direct_CA(A: SymbolA, f: Field2D, profile: HomKernelProfile, inner_cut: float,
              outer_cut: float = 2.0, refine: int = 1, sub: int = 8) -> Field2D:
    """Cartesian lattice quadrature of int [A(x)-A(x-z)] K(z) f(x-z) dz.

    The z-lattice has spacing (h1, h2) / refine.  Each node carries its cell
    area times the fraction of the cell inside inner_cut <= rho(z) <= outer_cut
    (rho the parabolic polar radius), so the excised set is resolved below the
    lattice scale.
    """
    _require_even(profile)
    if not 0 < inner_cut < outer_cut:
        raise ValueError("need 0 < inner_cut < outer_cut")
    g = f.grid
    d1, d2 = g.h1 / refine, g.h2 / refine
    n1 = int(np.ceil(outer_cut / d1)) + 1
    n2 = int(np.ceil(outer_cut**2 / d2)) + 1
    Z1, Z2 = np.meshgrid(d1 * np.arange(-n1, n1 + 1), d2 * np.arange(-n2, n2 + 1), indexing="ij")
    rho = polar_radius(Z1, Z2)
    # cells that can touch the annulus; the cell diameter bounds the rho spread
    slack = d1 + np.sqrt(d2) + 1e-12
    near = (rho >= inner_cut - slack) & (rho <= outer_cut + slack)
    z1, z2 = Z1[near], Z2[near]
    frac = annulus_cell_fraction(z1, z2, d1, d2, inner_cut, outer_cut, sub)
    keep = frac > 0
    z1, z2 = z1[keep], z2[keep]
    kz = hom_extend_values(profile, z1, z2) * frac[keep] * d1 * d2
    op = CurveOperator.__new__(CurveOperator)
    op.grid, op.symbol, op.kw, op.d1, op.d2 = g, A, kz, z1, z2
    op.nodes = np.zeros_like(z1)
    op.sigma, op._spectral = DEFAULT_SIGMA, None
    return op.apply_direct(f)


def sigma_nodes(n_sigma: int) -> np.ndarray:
    th = 2 * np.pi * np.arange(n_sigma) / n_sigma
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def rotations_CA(A: SymbolA, f: Field2D, profile: HomKernelProfile, n_sigma: int,
                 spec: CurveOpSpec) -> Field2D:
    """Average over sigma in S^1 of K(sigma) (1 + sigma2^2) T^{gamma_sigma}_A f.

    The t-integral runs over the whole line, so each direction is visited
    twice (t and -t reach the reflected direction); the factor 1/2 undoes it.
    """
    _require_even(profile)
    if n_sigma < 16:
        raise ValueError("n_sigma must be >= 16")
    out = np.zeros(f.grid.shape, dtype=complex)
    for s1, s2 in sigma_nodes(n_sigma):
        k = float(profile.profile(np.float64(s1), np.float64(s2)))
        if k == 0.0:
            continue
        sp = replace(spec, sigma=(float(s1), float(s2)))
        out += k * (1 + s2 * s2) * commutator_T(A, f, sp, method="auto").samples
    return Field2D(f.grid, out * (2 * np.pi / n_sigma) * 0.5)
