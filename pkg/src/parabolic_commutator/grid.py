"""Periodic grids, sampled fields and spectral machinery.

Conventions: the forward transform is the plain DFT sum, the inverse divides by
``N1*N2``; frequencies are ``xi_k = pi*k/L`` for ``k in [-N/2, N/2)``.  A field
is a trigonometric polynomial on that lattice, so shifts and off-grid
evaluation are exact for it.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .geometry import ParaPoint, ParaCube


# ---------------------------------------------------------------- cutoffs


def _glue(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def chi(t):
    """Smooth even cutoff: 1 on [-1, 1], 0 off (-2, 2)."""
    a = np.abs(np.asarray(t, dtype=float))
    g_in = _glue(2.0 - a)
    g_out = _glue(a - 1.0)
    return g_in / (g_in + g_out)


def eta(t):
    """Littlewood-Paley bump ``chi(t) - chi(2t)``, supported in 1/2 <= |t| <= 2."""
    t = np.asarray(t, dtype=float)
    return chi(t) - chi(2.0 * t)


def build_eta_partition(j: int) -> Callable:
    scale = 2.0**j
    return lambda t: eta(np.asarray(t, dtype=float) / scale)


def bump(u):
    """Standard bump ``exp(-1/(1-u^2))`` on (-1, 1)."""
    u = np.asarray(u, dtype=float)
    q = 1.0 - u * u
    out = np.zeros_like(u)
    inside = q > 0
    out[inside] = np.exp(-1.0 / q[inside])
    return out


def _bump_derivs(u):
    """bump, bump', bump'' on a vector of points."""
    u = np.asarray(u, dtype=float)
    b = bump(u)
    q = 1.0 - u * u
    d1 = np.zeros_like(u)
    d2 = np.zeros_like(u)
    inside = q > 0
    qi, ui, bi = q[inside], u[inside], b[inside]
    g = -2.0 * ui / qi**2
    d1[inside] = bi * g
    d2[inside] = bi * (g * g - 2.0 / qi**2 - 8.0 * ui**2 / qi**3)
    return b, d1, d2


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class TorusGrid:
    L1: float
    L2: float
    N1: int
    N2: int
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        for n in (self.N1, self.N2):
            if n <= 0 or n % 2:
                raise ValueError(f"grid sizes must be even and positive, got {n}")
        if not (self.L1 > 0 and self.L2 > 0):
            raise ValueError("half-periods must be positive")

    @classmethod
    def square(cls, N: int, L: float = np.pi) -> "TorusGrid":
        return cls(L, L, N, N)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N1, self.N2)

    @property
    def h1(self) -> float:
        return 2 * self.L1 / self.N1

    @property
    def h2(self) -> float:
        return 2 * self.L2 / self.N2

    @property
    def cell_area(self) -> float:
        return self.h1 * self.h2

    @property
    def x1(self) -> np.ndarray:
        return self.c1 - self.L1 + self.h1 * np.arange(self.N1)

    @property
    def x2(self) -> np.ndarray:
        return self.c2 - self.L2 + self.h2 * np.arange(self.N2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    @property
    def xi1(self) -> np.ndarray:
        """Physical frequencies along x1, in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.N1, d=self.h1)

    @property
    def xi2(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.N2, d=self.h2)

    def freq_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xi1, self.xi2, indexing="ij")

    def dilated(self, rho: float) -> "TorusGrid":
        return TorusGrid(rho * self.L1, rho**2 * self.L2, self.N1, self.N2,
                         rho * self.c1, rho**2 * self.c2)

    def origin_index(self) -> tuple[int, int]:
        """Index of the node at (0, 0); raises if the origin is not a node."""
        idx = []
        for c, L, h, n in ((self.c1, self.L1, self.h1, self.N1),
                           (self.c2, self.L2, self.h2, self.N2)):
            k = (L - c) / h
            if abs(k - round(k)) > 1e-9:
                raise ValueError("origin is not a grid node")
            idx.append(int(round(k)) % n)
        return idx[0], idx[1]


@dataclass
class Field2D:
    grid: TorusGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != self.grid.shape:
            raise ValueError(f"samples shape {self.samples.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("field has non-finite entries")

    @classmethod
    def from_function(cls, grid: TorusGrid, fn: Callable) -> "Field2D":
        X1, X2 = grid.mesh()
        return cls(grid, np.broadcast_to(fn(X1, X2), grid.shape))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "Field2D":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def random(cls, grid: TorusGrid, seed: int, real: bool = False) -> "Field2D":
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(grid.shape)
        if not real:
            z = z + 1j * rng.standard_normal(grid.shape)
        return cls(grid, z)

    def _check(self, other: "Field2D"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "Field2D") -> "Field2D":
        self._check(other)
        return Field2D(self.grid, self.samples + other.samples)

    def __sub__(self, other: "Field2D") -> "Field2D":
        self._check(other)
        return Field2D(self.grid, self.samples - other.samples)

    def __mul__(self, alpha) -> "Field2D":
        return Field2D(self.grid, alpha * self.samples)

    __rmul__ = __mul__

    def inner(self, other: "Field2D") -> complex:
        """Discrete L2 pairing ``sum f * conj(g) * cell_area``."""
        self._check(other)
        return complex(np.vdot(other.samples, self.samples) * self.grid.cell_area)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.grid.cell_area))

    @property
    def real(self) -> np.ndarray:
        return self.samples.real

    # -- serialisation used by the golden fixtures

    def to_csv(self, path) -> None:
        g = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["# grid", g.L1, g.L2, g.N1, g.N2, g.c1, g.c2])
            w.writerow(["i", "j", "re", "im"])
            for (i, j), z in np.ndenumerate(self.samples):
                w.writerow([i, j, repr(float(z.real)), repr(float(z.imag))])

    @classmethod
    def from_csv(cls, path) -> "Field2D":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        L1, L2, N1, N2, c1, c2 = rows[0][1:]
        grid = TorusGrid(float(L1), float(L2), int(N1), int(N2), float(c1), float(c2))
        data = np.zeros(grid.shape, dtype=complex)
        for i, j, re, im in rows[2:]:
            data[int(i), int(j)] = complex(float(re), float(im))
        return cls(grid, data)

    def to_binary(self, path) -> None:
        g = self.grid
        header = np.array([g.L1, g.L2, g.N1, g.N2, g.c1, g.c2], dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(header.tobytes())
            fh.write(self.samples.astype("<c16").tobytes())

    @classmethod
    def from_binary(cls, path) -> "Field2D":
        raw = open(path, "rb").read()
        L1, L2, N1, N2, c1, c2 = np.frombuffer(raw[:48], dtype="<f8")
        grid = TorusGrid(L1, L2, int(N1), int(N2), c1, c2)
        data = np.frombuffer(raw[48:], dtype="<c16").reshape(grid.shape)
        return cls(grid, data.copy())


# ---------------------------------------------------------------- spectral ops


@dataclass(frozen=True)
class MultiplierSpec:
    symbol: Callable
    dc_value: complex = 0.0


def spectral_transform(f: Field2D, direction: str = "forward") -> Field2D:
    if direction == "forward":
        return Field2D(f.grid, np.fft.fft2(f.samples))
    if direction == "inverse":
        return Field2D(f.grid, np.fft.ifft2(f.samples))
    raise ValueError(f"unknown direction {direction!r}")


def multiplier_values(grid: TorusGrid, m: MultiplierSpec) -> np.ndarray:
    XI1, XI2 = grid.freq_mesh()
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(m.symbol(XI1, XI2), dtype=complex)
    vals = np.broadcast_to(vals, grid.shape).copy()
    vals[0, 0] = m.dc_value
    if not np.all(np.isfinite(vals)):
        raise ValueError("multiplier symbol is not finite on the frequency lattice")
    return vals


def apply_multiplier(f: Field2D, m: MultiplierSpec) -> Field2D:
    vals = multiplier_values(f.grid, m)
    return Field2D(f.grid, np.fft.ifft2(np.fft.fft2(f.samples) * vals))


def shift_phases(grid: TorusGrid, d1, d2) -> np.ndarray:
    """Stack of phase factors exp(-i xi.d) for displacements d = (d1[n], d2[n])."""
    d1 = np.atleast_1d(np.asarray(d1, dtype=float))
    d2 = np.atleast_1d(np.asarray(d2, dtype=float))
    p1 = np.exp(-1j * np.outer(d1, grid.xi1))
    p2 = np.exp(-1j * np.outer(d2, grid.xi2))
    return p1[:, :, None] * p2[:, None, :]


def shifted_stack(f_hat: np.ndarray, grid: TorusGrid, d1, d2) -> np.ndarray:
    """Samples of ``f(x - d)`` on the grid for each displacement; f given by its DFT."""
    return np.fft.ifft2(f_hat[None] * shift_phases(grid, d1, d2), axes=(1, 2))


def spectral_shift(f: Field2D, d: ParaPoint) -> Field2D:
    return Field2D(f.grid, shifted_stack(np.fft.fft2(f.samples), f.grid, d.x1, d.x2)[0])


def spectral_derivative(f: Field2D, k: int, m: int) -> Field2D:
    XI1, XI2 = f.grid.freq_mesh()
    return Field2D(f.grid, np.fft.ifft2(np.fft.fft2(f.samples) * (1j * XI1) ** k * (1j * XI2) ** m))


def trig_interpolate_points(f: Field2D, p1, p2) -> np.ndarray:
    """Spectral interpolant of ``f`` at arbitrary points (wrapped into the torus)."""
    g = f.grid
    F = np.fft.fft2(f.samples) / (g.N1 * g.N2)
    p1 = np.atleast_1d(np.asarray(p1, dtype=float)) - (g.c1 - g.L1)
    p2 = np.atleast_1d(np.asarray(p2, dtype=float)) - (g.c2 - g.L2)
    out = np.empty(p1.shape, dtype=complex)
    flat1, flat2, res = p1.ravel(), p2.ravel(), out.reshape(-1)
    chunk = 2048
    for s in range(0, flat1.size, chunk):
        e1 = np.exp(1j * np.outer(flat1[s:s + chunk], g.xi1))
        e2 = np.exp(1j * np.outer(flat2[s:s + chunk], g.xi2))
        res[s:s + chunk] = np.einsum("pi,ij,pj->p", e1, F, e2)
    return out


def trig_interpolate(f: Field2D, p: ParaPoint) -> complex:
    return complex(trig_interpolate_points(f, p.x1, p.x2)[0])


# ---------------------------------------------------------------- Q_s kernels


def _phi_template(x1, x2):
    # nonnegative product bump supported in I_1(0) = [-1/2, 1/2] x [-1/2, 1/2]
    return bump(2.0 * x1) * bump(2.0 * x2)


def _check_psi_resolution(s: float, grid: TorusGrid):
    if s > 2 * min(grid.L1, np.sqrt(grid.L2)):
        raise ValueError(f"scale s={s} exceeds the torus")
    if s < 8 * grid.h1 or s * s < 8 * grid.h2:
        raise ValueError(
            f"grid does not resolve I_s for s={s}: need s >= 8*h1={8 * grid.h1:.3g} "
            f"and s^2 >= 8*h2={8 * grid.h2:.3g}")


def build_psi_s(s: float, grid: TorusGrid) -> Field2D:
    """Mean-zero, L1-normalised kernel supported in I_s(0), sampled on ``grid``."""
    if not s > 0:
        raise ValueError("s must be positive")
    _check_psi_resolution(s, grid)
    X1, X2 = grid.mesh()
    da = grid.cell_area

    def dilate_normalised(u):
        v = _phi_template(X1 / u, X2 / u**2)
        return v / (v.sum() * da)

    diff = dilate_normalised(s) - dilate_normalised(s / 2)
    return Field2D(grid, diff / (np.abs(diff).sum() * da))


def kernel_symbol(kernel: Field2D) -> np.ndarray:
    """DFT of a kernel centred at the origin node, scaled by the cell area."""
    i0, j0 = kernel.grid.origin_index()
    rolled = np.roll(kernel.samples, (-i0, -j0), axis=(0, 1))
    return np.fft.fft2(rolled) * kernel.grid.cell_area


def q_smooth(f: Field2D, s: float) -> Field2D:
    """Circular convolution with the sampled mean-zero kernel ``psi_s``."""
    psi = build_psi_s(s, f.grid)
    return Field2D(f.grid, np.fft.ifft2(np.fft.fft2(f.samples) * kernel_symbol(psi)))


@lru_cache(maxsize=None)
def _bump_profile_table(n: int = 4001):
    u = np.linspace(-1.0, 1.0, n)
    return u, bump(u)


def _bump_ft(omega):
    """Fourier transform of bump / its integral, at the frequencies ``omega``."""
    u, b = _bump_profile_table()
    du = u[1] - u[0]
    z = b.sum() * du
    omega = np.asarray(omega, dtype=float)
    flat = omega.ravel()
    out = np.empty(flat.shape)
    chunk = 256
    for s in range(0, flat.size, chunk):
        out[s:s + chunk] = (np.cos(np.outer(flat[s:s + chunk], u)) @ b) * du / z
    return out.reshape(omega.shape)


@lru_cache(maxsize=None)
def _psi_l1_constant(n: int = 2001) -> float:
    # || phi_1 - phi_{1/2} ||_1 for the unit-mass template; dilation invariant
    u = np.linspace(-1.0, 1.0, n)
    du = u[1] - u[0]
    b = bump(u)
    z = b.sum() * du
    b2, b4 = bump(2 * u), bump(4 * u)
    diff = np.outer(b, b) - 8.0 * np.outer(b2, b4)
    return float(np.abs(diff).sum() * du * du / z**2)


def psi_multiplier(s: float) -> MultiplierSpec:
    """Exact Fourier symbol of the continuum kernel ``psi_s`` (same construction)."""
    c = 1.0 / _psi_l1_constant()

    def sym(xi1, xi2):
        xi1 = np.asarray(xi1, dtype=float)
        xi2 = np.asarray(xi2, dtype=float)
        # 1-D transforms are separable; evaluate on the distinct values only
        def ft(w):
            vals, inv = np.unique(w, return_inverse=True)
            return _bump_ft(vals)[inv].reshape(w.shape)
        full = ft(s * xi1 / 2) * ft(s * s * xi2 / 2)
        half = ft(s * xi1 / 4) * ft(s * s * xi2 / 8)
        return c * (full - half)

    return MultiplierSpec(sym, 0.0)


# ---------------------------------------------------------------- Phi(x, r)


@dataclass(frozen=True)
class BumpSpec:
    center: ParaPoint
    r: float
    profile: str = "even"  # "even" or "odd" (odd in x1)

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("bump scale must be positive")
        if self.profile not in ("even", "odd"):
            raise ValueError(f"unknown bump profile {self.profile!r}")


def _profile_factor(profile: str, u):
    """1-D factor in x1 (value, d/du, d2/du2) for variable u in [-1/2, 1/2]."""
    b, d1, d2 = _bump_derivs(2 * u)
    if profile == "even":
        return b, 2 * d1, 4 * d2
    # v(u) = 2u * bump(2u)
    w = 2 * u
    return w * b, 2 * (b + w * d1), 4 * (2 * d1 + w * d2)


@lru_cache(maxsize=None)
def phi_class_constant(profile: str) -> float:
    """Largest scalar making the template satisfy the three Phi-class bounds."""
    u = np.linspace(-0.5, 0.5, 20001)
    p0, p1, p2 = (np.max(np.abs(a)) for a in _profile_factor(profile, u))
    q0, q1, q2 = (np.max(np.abs(a)) for a in _profile_factor("even", u))
    sup = p0 * q0
    d1, d2 = p1 * q0, p0 * q1
    second = max(p2 * q0, p1 * q1, p0 * q2)
    # (ii) holds if |grad| bounds give rho/r for rho<=r and 2 sup <= 1 for rho>r
    return 1.0 / max(2 * sup, d1 + d2, d1, d2, second)


def phi_bump_values(b: BumpSpec, x1, x2):
    """Closed-form values of the normalised Phi-class bump."""
    u1 = (np.asarray(x1, dtype=float) - b.center.x1) / b.r
    u2 = (np.asarray(x2, dtype=float) - b.center.x2) / b.r**2
    f1 = _profile_factor(b.profile, u1)[0]
    f2 = _profile_factor("even", u2)[0]
    inside = (np.abs(u1) < 0.5) & (np.abs(u2) < 0.5)
    return np.where(inside, phi_class_constant(b.profile) * f1 * f2, 0.0)


def build_phi_class(b: BumpSpec, grid: TorusGrid) -> Field2D:
    if b.r < 8 * grid.h1 or b.r**2 < 8 * grid.h2:
        raise ValueError(f"grid does not resolve I_r for r={b.r}")
    X1, X2 = grid.mesh()
    return Field2D(grid, phi_bump_values(b, X1, X2))


@dataclass
class PhiClassReport:
    sup: float
    lip_ratio: float  # max |f(y+h)-f(y)| * r / rho
    deriv_max: float  # max r^(k+2m) |d1^k d2^m f|, 1 <= k+m <= 2
    support_ok: bool
    tol: float = 1e-3

    @property
    def passed(self) -> bool:
        t = 1 + self.tol
        return self.support_ok and self.sup <= t and self.lip_ratio <= t and self.deriv_max <= t


def lip_offsets(grid: TorusGrid, r: float, n: int = 200, seed: int = 0):
    """Integer lattice offsets (k1, k2) spanning scales from one cell up to ~2r."""
    rng = np.random.default_rng(seed)
    rho = np.exp(rng.uniform(np.log(grid.h1), np.log(2 * r), n))
    k1 = np.round(rng.uniform(-1, 1, n) * rho / grid.h1).astype(int)
    k2 = np.round(rng.uniform(-1, 1, n) * rho**2 / grid.h2).astype(int)
    keep = (k1 != 0) | (k2 != 0)
    return k1[keep], k2[keep]


def parabolic_lip_ratio(f: Field2D, offsets) -> float:
    """max over offsets of |f(y+h) - f(y)| / rho(h), rho(h) = max(|h1|, |h2|^0.5)."""
    g = f.grid
    best = 0.0
    for k1, k2 in zip(*offsets):
        rho = max(abs(k1) * g.h1, np.sqrt(abs(k2) * g.h2))
        diff = np.roll(f.samples, (-k1, -k2), axis=(0, 1)) - f.samples
        best = max(best, float(np.max(np.abs(diff))) / rho)
    return best


def phi_class_check(f: Field2D, x0: ParaPoint, r: float, tol: float = 1e-3,
                    seed: int = 0) -> PhiClassReport:
    g = f.grid
    if r < 8 * g.h1 or r**2 < 8 * g.h2:
        raise ValueError(f"grid does not resolve I_r for r={r}")
    sup = float(np.max(np.abs(f.samples)))
    lip = parabolic_lip_ratio(f, lip_offsets(g, r, seed=seed)) * r
    deriv = 0.0
    for k, m in ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2)):
        d = spectral_derivative(f, k, m).samples
        deriv = max(deriv, float(np.max(np.abs(d))) * r ** (k + 2 * m))
    X1, X2 = g.mesh()
    (lo1, hi1), (lo2, hi2) = ParaCube(x0.x1, x0.x2, r).extent
    outside = (X1 < lo1) | (X1 > hi1) | (X2 < lo2) | (X2 > hi2)
    support_ok = bool(np.all(np.abs(f.samples[outside]) <= 1e-14))
    return PhiClassReport(sup, lip, deriv, support_ok, tol)
