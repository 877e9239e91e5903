"""The symbol A: generators, the Lip(1, 1/2) seminorm, fractional derivatives, BMO."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .geometry import ParaCube
from .grid import (Field2D, MultiplierSpec, TorusGrid, apply_multiplier,
                   shifted_stack, trig_interpolate_points)

GENERATORS = ("zero", "constant", "linear_x1", "sine_x1", "sine_x2", "mixed",
              "random_bandlimited")


@dataclass
class SymbolA:
    """A real symbol, either closed-form or sampled on a torus grid.

    Closed-form trigonometric polynomials also carry their Fourier modes
    ``(omega, coeff)`` with ``A(x) = Re sum coeff * exp(i omega.x)``; operators
    use them for an exact multiplier-side evaluation.
    """

    name: str
    kind: str
    func: Callable | None = None
    field: Field2D | None = None
    modes: tuple[np.ndarray, np.ndarray] | None = None
    periodic: bool = True
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("closed-form", "sampled"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "closed-form" and self.func is None:
            raise ValueError("closed-form symbol needs a function")
        if self.kind == "sampled" and self.field is None:
            raise ValueError("sampled symbol needs a field")

    @classmethod
    def from_field(cls, f: Field2D, name: str = "sampled") -> "SymbolA":
        return cls(name, "sampled", field=Field2D(f.grid, f.samples.real))

    @classmethod
    def from_modes(cls, name: str, omega, coeff, params=None) -> "SymbolA":
        omega = np.asarray(omega, dtype=float).reshape(-1, 2)
        coeff = np.asarray(coeff, dtype=complex).reshape(-1)

        def func(x1, x2):
            x1 = np.asarray(x1, dtype=float)
            x2 = np.asarray(x2, dtype=float)
            out = np.zeros(np.broadcast(x1, x2).shape)
            for (w1, w2), c in zip(omega, coeff):
                out = out + (c * np.exp(1j * (w1 * x1 + w2 * x2))).real
            return out

        return cls(name, "closed-form", func=func, modes=(omega, coeff), params=params or {})

    def __call__(self, x1, x2) -> np.ndarray:
        if self.kind == "closed-form":
            return np.asarray(self.func(x1, x2), dtype=float)
        return trig_interpolate_points(self.field, x1, x2).real

    def __add__(self, other: "SymbolA") -> "SymbolA":
        if self.kind == "sampled" and other.kind == "sampled":
            return SymbolA.from_field(self.field + other.field, f"{self.name}+{other.name}")
        if self.modes is not None and other.modes is not None:
            return SymbolA.from_modes(f"{self.name}+{other.name}",
                                      np.vstack([self.modes[0], other.modes[0]]),
                                      np.concatenate([self.modes[1], other.modes[1]]))
        f, g = self, other
        return SymbolA(f"{f.name}+{g.name}", "closed-form",
                       func=lambda x1, x2: f(x1, x2) + g(x1, x2),
                       periodic=f.periodic and g.periodic)

    def on_grid(self, grid: TorusGrid) -> np.ndarray:
        if self.kind == "sampled" and self.field.grid == grid:
            return self.field.samples.real.copy()
        X1, X2 = grid.mesh()
        return self(X1, X2)

    def shifted(self, grid: TorusGrid, d1, d2) -> np.ndarray:
        """Stack of ``A(x - d_n)`` at the grid nodes."""
        d1 = np.atleast_1d(np.asarray(d1, dtype=float))
        d2 = np.atleast_1d(np.asarray(d2, dtype=float))
        if self.kind == "sampled" and self.field.grid == grid:
            F = np.fft.fft2(self.field.samples)
            return shifted_stack(F, grid, d1, d2).real
        X1, X2 = grid.mesh()
        return self(X1[None] - d1[:, None, None], X2[None] - d2[:, None, None])

    def sample(self, grid: TorusGrid) -> Field2D:
        if not self.periodic:
            raise ValueError(f"symbol {self.name!r} is not periodic; it has no torus samples")
        return Field2D(grid, self.on_grid(grid))

    def complex_modes(self) -> tuple[np.ndarray, np.ndarray]:
        """Expansion ``A = sum c_k exp(i omega_k.x)`` with both members of each +-pair."""
        omega, coeff = self.modes
        dc = np.all(omega == 0, axis=1)
        w = np.vstack([omega[dc], omega[~dc], -omega[~dc]])
        c = np.concatenate([coeff[dc].real, coeff[~dc] / 2, np.conj(coeff[~dc]) / 2])
        return w, c.astype(complex)

    def lattice_modes(self, grid: TorusGrid):
        """Integer lattice indices and coefficients of the modes, or None."""
        if self.modes is None:
            return None
        omega, coeff = self.complex_modes()
        k1 = omega[:, 0] * grid.L1 / np.pi
        k2 = omega[:, 1] * grid.L2 / np.pi
        if not (np.allclose(k1, np.round(k1), atol=1e-9) and np.allclose(k2, np.round(k2), atol=1e-9)):
            return None
        return np.round(k1).astype(int), np.round(k2).astype(int), coeff


def _sine_modes(w1: float, w2: float, amp: float):
    # amp * sin(w.x) = Re[(-i amp) e^{i w.x}]
    return [(w1, w2)], [-1j * amp]


def make_symbol(name: str, **params) -> SymbolA:
    """Test-symbol generators.

    ``zero``, ``constant`` (c), ``linear_x1`` (c * x1, not periodic),
    ``sine_x1`` (amp * sin(k1 pi x1 / L1)), ``sine_x2`` (amp * sin(k2 pi x2 / L2)),
    ``mixed`` (sin/2 + sin/2 + cos(x1 + x2)/4 on the same lattice) and
    ``random_bandlimited`` (seeded Hermitian coefficients with |k| <= band,
    scaled so that sum |omega_1 c| <= 1, which bounds sup |dA/dx1| by 1).
    """
    L1 = float(params.get("L1", np.pi))
    L2 = float(params.get("L2", np.pi))
    if name == "zero":
        return SymbolA.from_modes("zero", np.zeros((0, 2)), [], params)
    if name == "constant":
        c = float(params.get("c", 1.0))
        return SymbolA.from_modes("constant", [(0.0, 0.0)], [c], params)
    if name == "linear_x1":
        c = float(params.get("c", 1.0))
        return SymbolA("linear_x1", "closed-form",
                       func=lambda x1, x2: c * np.asarray(x1, dtype=float) + 0.0 * np.asarray(x2),
                       periodic=False, params=params)
    if name == "sine_x1":
        k1, amp = params.get("k1", 1), float(params.get("amp", 1.0))
        return SymbolA.from_modes("sine_x1", *_sine_modes(k1 * np.pi / L1, 0.0, amp), params)
    if name == "sine_x2":
        k2, amp = params.get("k2", 1), float(params.get("amp", 1.0))
        return SymbolA.from_modes("sine_x2", *_sine_modes(0.0, k2 * np.pi / L2, amp), params)
    if name == "mixed":
        w1, w2 = np.pi / L1, np.pi / L2
        omega = [(w1, 0.0), (0.0, w2), (w1, w2)]
        coeff = [-0.5j, -0.5j, 0.25]
        return SymbolA.from_modes("mixed", omega, coeff, params)
    if name == "random_bandlimited":
        seed = int(params.get("seed", 0))
        band = int(params.get("band", 3))
        rng = np.random.default_rng(seed)
        omega, coeff = [], []
        for k1 in range(-band, band + 1):
            for k2 in range(-band, band + 1):
                if (k1, k2) <= (0, 0):
                    continue  # one of each +-k pair; the real part supplies the conjugate
                c = (rng.standard_normal() + 1j * rng.standard_normal()) / (1.0 + k1 * k1 + k2 * k2)
                omega.append((k1 * np.pi / L1, k2 * np.pi / L2))
                coeff.append(2 * c)
        omega = np.asarray(omega)
        coeff = np.asarray(coeff)
        slope = np.sum(np.abs(omega[:, 0]) * np.abs(coeff))
        return SymbolA.from_modes("random_bandlimited", omega, coeff / slope, params)
    raise ValueError(f"unknown symbol generator {name!r}; choose from {GENERATORS}")


# ---------------------------------------------------------------- Lip(1, 1/2)


def lip_half_seminorm(A: SymbolA, n_samples: int, r_set, seed: int = 0,
                      box: tuple[float, float] = (np.pi, np.pi)) -> float:
    """Sampled lower bound for the least B0 with |A(x+h) - A(x)| <= B0 r.

    ``x`` is uniform in ``[-box1, box1] x [-box2, box2]``; ``h`` is uniform in
    the parabolic box of scale r, with its four corners always included.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    best = 0.0
    corners = np.array([(1, 1), (1, -1), (-1, 1), (-1, -1)], dtype=float)
    for r in r_set:
        x1 = rng.uniform(-box[0], box[0], n_samples)
        x2 = rng.uniform(-box[1], box[1], n_samples)
        u = rng.uniform(-1, 1, (n_samples, 2))
        u[: min(4, n_samples)] = corners[: min(4, n_samples)]
        h1, h2 = u[:, 0] * r, u[:, 1] * r * r
        diff = np.abs(A(x1 + h1, x2 + h2) - A(x1, x2))
        best = max(best, float(np.max(diff)) / r)
    return best


def sup_dx1(A: SymbolA, grid: TorusGrid, shifts=None) -> float:
    """sup over grid nodes and x1-shifts of |A(x1+h, x2) - A(x1, x2)| / |h|."""
    if shifts is None:
        shifts = np.geomspace(1e-5, 1.0, 11) * grid.h1
        shifts = np.concatenate([shifts, -shifts, grid.h1 * np.arange(1, 4)])
    base = A.on_grid(grid)
    moved = A.shifted(grid, -np.asarray(shifts), np.zeros(len(shifts)))
    q = np.abs(moved - base[None]) / np.abs(np.asarray(shifts))[:, None, None]
    return float(np.max(q))


# ---------------------------------------------------------------- D and D_2


def _principal_root(xi1, xi2):
    return np.sqrt(xi1 * xi1 - 1j * xi2)


def frac_diff_multiplier(which: str) -> MultiplierSpec:
    if which == "full":
        return MultiplierSpec(lambda a, b: _principal_root(a, b), 0.0)
    if which == "partial":
        return MultiplierSpec(lambda a, b: b / _principal_root(a, b), 0.0)
    raise ValueError(f"which must be 'full' or 'partial', got {which!r}")


def frac_diff(A: Field2D, which: str) -> Field2D:
    """Parabolic fractional derivative: symbol sqrt(xi1^2 - i xi2) or xi2 / sqrt(...)."""
    return apply_multiplier(A, frac_diff_multiplier(which))


# ---------------------------------------------------------------- BMO


def _axis_indices(center: float, half: float, origin: float, h: float, n: int) -> np.ndarray:
    start = int(np.ceil((center - half - origin) / h - 1e-12))
    stop = int(np.ceil((center + half - origin) / h - 1e-12))
    return np.arange(start, stop) % n


def cube_family(grid: TorusGrid, depth: int) -> list[ParaCube]:
    """Dyadic-plus-half-shifted parabolic cubes covering the torus, ``depth`` refinements."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    r0 = min(2 * grid.L1, np.sqrt(2 * grid.L2))
    cubes = []
    for level in range(depth + 1):
        r = r0 / 2**level
        if r < 4 * grid.h1 * (1 - 1e-9) or r * r < 4 * grid.h2 * (1 - 1e-9):
            raise ValueError(f"cube scale r={r:.4g} at depth {level} is under-resolved "
                             "(fewer than 4 samples per axis)")
        n1 = max(1, int(np.floor(2 * grid.L1 / r + 1e-9)))
        n2 = max(1, int(np.floor(2 * grid.L2 / r**2 + 1e-9)))
        for s1 in (0.0, 0.5):
            for s2 in (0.0, 0.5):
                for i in range(n1):
                    for j in range(n2):
                        a = grid.c1 - grid.L1 + (i + 0.5 + s1) * r
                        b = grid.c2 - grid.L2 + (j + 0.5 + s2) * r * r
                        cubes.append(ParaCube(a, b, r))
    return cubes


def mean_oscillation(b: Field2D, cube: ParaCube, ref: complex = 0.0) -> float:
    g = b.grid
    i = _axis_indices(cube.a, cube.r / 2, g.c1 - g.L1, g.h1, g.N1)
    j = _axis_indices(cube.b, cube.r**2 / 2, g.c2 - g.L2, g.h2, g.N2)
    block = b.samples[np.ix_(i, j)] - ref
    return float(np.mean(np.abs(block - block.mean())))


def bmo_parabolic(b: Field2D, depth: int) -> float:
    """Largest mean oscillation over the dyadic-plus-shifts cube family."""
    ref = b.samples.flat[0]  # removes constants exactly before averaging
    return max(mean_oscillation(b, c, ref) for c in cube_family(b.grid, depth))


# ---------------------------------------------------------------- condition report


@dataclass
class ConditionReport:
    name: str
    lip_half: float
    sup_dx1: float
    bmo_d2a: float
    grid: TorusGrid
    seed: int
    sample_counts: dict = dc_field(default_factory=dict)

    CSV_HEADER = ("name", "lip_half", "sup_dx1", "bmo_d2a", "grid", "seed")

    def to_csv_row(self) -> list:
        g = self.grid
        return [self.name, f"{self.lip_half:.12g}", f"{self.sup_dx1:.12g}",
                f"{self.bmo_d2a:.12g}", f"{g.L1:.6g}x{g.L2:.6g}/{g.N1}x{g.N2}", self.seed]


def check_condition_17(A: SymbolA, grid: TorusGrid, n_samples: int = 20000,
                       r_set=(0.05, 0.1, 0.25, 0.5, 1.0), depth: int = 2,
                       seed: int = 0) -> ConditionReport:
    """Constants of the x1-Lipschitz bound and of ||D_2 A||_BMO, plus the Lip(1,1/2) estimate."""
    if not A.periodic:
        raise ValueError(f"symbol {A.name!r} is not periodic; D_2 A is undefined on the torus")
    d2a = frac_diff(A.sample(grid), "partial")
    return ConditionReport(
        name=A.name,
        lip_half=lip_half_seminorm(A, n_samples, r_set, seed=seed, box=(grid.L1, grid.L2)),
        sup_dx1=sup_dx1(A, grid),
        bmo_d2a=bmo_parabolic(d2a, depth),
        grid=grid,
        seed=seed,
        sample_counts={"lip_half": n_samples * len(r_set), "grid_nodes": grid.N1 * grid.N2},
    )
