"""Numerical experiments: operator norms, decay fits and bounded-ratio sweeps."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import ParaCube, ParaPoint
from .grid import (BumpSpec, Field2D, TorusGrid, _glue, build_phi_class, multiplier_values,
                   psi_multiplier)
from .operators import (CurveOpSpec, HomKernelProfile, LinearMap, commutator_operator,
                        direct_CA, multiplier_map, pv_quadrature, rotations_CA, tj_operator)
from .symbols import SymbolA

# ---------------------------------------------------------------- operator norms


@dataclass(frozen=True)
class OpNormResult:
    norm_estimate: float
    iterations: int
    rel_change_at_stop: float
    seed: int
    method: str = "power"

    def __post_init__(self):
        if not self.norm_estimate >= 0:
            raise ValueError("norm estimate must be nonnegative")


def check_linear(op: LinearMap, grid: TorusGrid, seed: int = 0, tol: float = 1e-8) -> float:
    """Relative defect of op(a f + b g) against a op(f) + b op(g) on a random triple."""
    rng = np.random.default_rng(seed)
    f = Field2D.random(grid, int(rng.integers(2**31)))
    g = Field2D.random(grid, int(rng.integers(2**31)))
    a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
    lhs = op(f * a + g * b)
    rhs = op(f) * a + op(g) * b
    scale = max(lhs.norm(), rhs.norm())
    err = (lhs - rhs).norm() / scale if scale > 0 else 0.0
    if err > tol:
        raise ValueError(f"operator failed the linearity check (defect {err:.2e})")
    return err


def operator_matrix(op: LinearMap, grid: TorusGrid) -> np.ndarray:
    n = grid.N1 * grid.N2
    M = np.empty((n, n), dtype=complex)
    e = np.zeros(n, dtype=complex)
    for k in range(n):
        e[k] = 1.0
        M[:, k] = op(Field2D(grid, e.reshape(grid.shape))).samples.ravel()
        e[k] = 0.0
    return M


def probe_norm(op: LinearMap, grid: TorusGrid, n_probes: int, seed: int) -> float:
    """Largest gain ||T f|| / ||f|| over the span of random probes (a lower bound)."""
    rng = np.random.default_rng(seed)
    n = grid.N1 * grid.N2
    P = rng.normal(size=(n, n_probes)) + 1j * rng.normal(size=(n, n_probes))
    Q, _ = np.linalg.qr(P)
    TQ = np.stack([op(Field2D(grid, Q[:, k].reshape(grid.shape))).samples.ravel()
                   for k in range(Q.shape[1])], axis=1)
    return float(np.linalg.norm(TQ, 2))


def opnorm_power(op: LinearMap, grid: TorusGrid, tol: float = 1e-6, max_iter: int = 500,
                 seed: int = 0, n_probes: int = 32) -> OpNormResult:
    """Largest singular value of a linear map on grid fields.

    With an adjoint: power iteration on T*T.  Without one: the dense matrix for
    grids with at most 1024 nodes, else the random-probe lower estimate.
    """
    check_linear(op, grid, seed)
    if op.adjoint is None:
        if grid.N1 * grid.N2 <= 1024:
            s = np.linalg.norm(operator_matrix(op, grid), 2)
            return OpNormResult(float(s), 1, 0.0, seed, "matrix")
        return OpNormResult(probe_norm(op, grid, n_probes, seed), 1, float("nan"), seed, "probes")
    v = Field2D.random(grid, seed)
    v = v * (1.0 / v.norm())
    est, change = 0.0, float("inf")
    for it in range(1, max_iter + 1):
        w = op.adjoint(op(v))
        nw = w.norm()
        if nw == 0.0:
            return OpNormResult(0.0, it, 0.0, seed)
        new = float(np.sqrt(nw))
        change = abs(new - est) / new
        est = new
        v = w * (1.0 / nw)
        if change <= tol:
            break
    return OpNormResult(est, it, change, seed)


# ---------------------------------------------------------------- fits


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    r_squared: float
    points: tuple

    def __post_init__(self):
        if len(self.points) < 4:
            raise ValueError("a decay fit needs at least 4 points")
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError("r_squared outside [0, 1]")


def fit_decay(scales, values) -> DecayFit:
    """Ordinary least squares of log(value) on log(scale)."""
    x = np.log(np.asarray(scales, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), float(icpt), float(np.clip(r2, 0.0, 1.0)),
                    tuple(zip(x.tolist(), y.tolist())))


@dataclass(frozen=True)
class QsDecayResult:
    symbol: str
    j: int
    scales: tuple
    norms: tuple
    fit: DecayFit | None

    @property
    def degenerate(self) -> bool:
        return self.fit is None

    def monotone(self, slack: float = 0.10) -> bool:
        """Norms do not grow as s decreases (up to the relative slack)."""
        n = self.norms
        return all(n[k + 1] <= n[k] * (1 + slack) for k in range(len(n) - 1))


def qs_resolved(s: float, grid: TorusGrid) -> bool:
    return s * float(np.max(np.abs(grid.xi1))) >= 1.0 - 1e-12


def qs_tj_decay(A: SymbolA, s_list, grid: TorusGrid, j: int = 0, seed: int = 0,
                spec: CurveOpSpec = CurveOpSpec(), tol: float = 1e-6) -> QsDecayResult:
    """Norms of f -> Q_s T_j f over s, and the log-log fit of their decay."""
    s_list = sorted((float(s) for s in s_list), reverse=True)
    if any(s > 2.0**j for s in s_list):
        raise ValueError("need s <= 2^j")
    for s in s_list:
        if not qs_resolved(s, grid):
            raise ValueError(f"grid does not resolve Q_s at s={s}")
    T = tj_operator(A, grid, j, spec).as_map(name="T_j")
    norms = []
    for s in s_list:
        Q = multiplier_map(grid, multiplier_values(grid, psi_multiplier(s)), "Q_s")
        norms.append(opnorm_power(T.then(Q), grid, tol=tol, seed=seed).norm_estimate)
    fit = None if min(norms) == 0.0 else fit_decay(np.array(s_list) / 2.0**j, norms)
    return QsDecayResult(A.name, j, tuple(s_list), tuple(norms), fit)


# ---------------------------------------------------------------- weak boundedness


def wbp_grid(r: float, N: int = 64, center: ParaPoint = ParaPoint(0.0, 0.0)) -> TorusGrid:
    """Torus just large enough that curve shifts up to 1.5 r never wrap onto I_r."""
    return TorusGrid(2.0 * r, 4.0 * r * r, N, N, center.x1, center.x2)


def wbp_pairing(A: SymbolA, r: float, N: int = 64, center: ParaPoint = ParaPoint(0.3, 0.1),
                n_quad: int = 16) -> float:
    """|<psi, T phi>| / r^3 with psi odd and phi even in x1, both in Phi(center, r)."""
    g = wbp_grid(r, N, center)
    phi = build_phi_class(BumpSpec(center, r, "even"), g)
    psi = build_phi_class(BumpSpec(center, r, "odd"), g)
    # phi and psi sit in I_r(center), so |t| > 1.5 r moves phi off psi entirely
    spec = CurveOpSpec(epsilon=r * 2.0**-12, R=1.5 * r, n_quad=n_quad)
    T = commutator_operator(A, g, spec)
    return abs(psi.inner(T.apply(phi, "direct"))) / r**3


def wbp_sweep(A: SymbolA, r_list, N: int = 64, center: ParaPoint = ParaPoint(0.3, 0.1)):
    return [(float(r), wbp_pairing(A, r, N, center)) for r in r_list]


# ---------------------------------------------------------------- T1 oscillation


def plateau(y, a: float, b: float):
    """Smooth even step: 1 for |y| <= a, 0 for |y| >= b."""
    y = np.abs(np.asarray(y, dtype=float))
    g_in = _glue(b - y)
    return g_in / (g_in + _glue(y - a))


def _t_of_one(A: SymbolA, x1, x2, t, w, weight=None):
    # sum_n w_n [A(x) - A(x - gamma(t_n))] (weight at x - gamma) / t_n^2
    d1, d2 = t, t * t
    br = A(x1[:, None], x2[:, None]) - A(x1[:, None] - d1[None], x2[:, None] - d2[None])
    if weight is not None:
        br = br * weight(x1[:, None] - d1[None], x2[:, None] - d2[None])
    return br @ (w / t**2)


def t1_oscillation(A: SymbolA, cube: ParaCube, t_max: float, n_side: int = 24,
                   epsilon: float = 2.0**-8, n_quad: int = 16) -> float:
    """Mean over the cube of |T1 - C_I|, T truncated to epsilon < |t| < t_max.

    C_I = T(1 - phi)(x0), phi = 1 on I_{3r}(x0) and 0 off I_{4r}(x0).
    """
    if not np.isfinite(t_max) or t_max <= epsilon:
        raise ValueError("t_max must be finite and exceed epsilon")
    r, a, b = cube.r, cube.a, cube.b
    t, w = pv_quadrature(epsilon, t_max, n_quad)

    def outside(y1, y2):
        return 1.0 - plateau(y1 - a, 1.5 * r, 2.0 * r) * plateau(y2 - b, 4.5 * r * r, 8.0 * r * r)

    c_I = float(_t_of_one(A, np.array([a]), np.array([b]), t, w, outside)[0])
    off = (np.arange(n_side) + 0.5) / n_side - 0.5
    X1, X2 = np.meshgrid(a + r * off, b + r * r * off, indexing="ij")
    g = _t_of_one(A, X1.ravel(), X2.ravel(), t, w)
    return float(np.mean(np.abs(g - c_I)))


def random_unit_cubes(n: int, seed: int, box: float = np.pi) -> list[ParaCube]:
    rng = np.random.default_rng(seed)
    return [ParaCube(float(a), float(b), 1.0) for a, b in rng.uniform(-box, box, (n, 2))]


# ---------------------------------------------------------------- sigma uniformity


@dataclass(frozen=True)
class SigmaRow:
    theta: float
    sigma: tuple[float, float]
    norm: float


def sigma_uniformity(A: SymbolA, n: int, grid: TorusGrid, spec: CurveOpSpec = CurveOpSpec(),
                     seed: int = 0, tol: float = 1e-6) -> list[SigmaRow]:
    if n < 16:
        raise ValueError("need at least 16 directions")
    rows = []
    for k in range(n):
        th = 2 * np.pi * k / n
        sig = (float(np.cos(th)), float(np.sin(th)))
        op = commutator_operator(A, grid, replace(spec, sigma=sig)).as_map()
        rows.append(SigmaRow(th, sig, opnorm_power(op, grid, tol=tol, seed=seed).norm_estimate))
    return rows


def max_over_median(values) -> float:
    v = np.asarray(values, dtype=float)
    med = np.median(v)
    if med == 0.0:
        return 0.0 if v.max() == 0.0 else float("inf")
    return float(v.max() / med)


# ---------------------------------------------------------------- rotations vs direct


def rotations_vs_direct(A: SymbolA, f: Field2D, profile: HomKernelProfile, spec: CurveOpSpec,
                        n_sigma: int = 64, refine: int = 1) -> float:
    """||direct - rotations|| / ||direct|| with excision inner = epsilon, outer = R."""
    d = direct_CA(A, f, profile, spec.epsilon, spec.R, refine=refine)
    r = rotations_CA(A, f, profile, n_sigma, spec)
    nd = d.norm()
    if nd == 0.0:
        return 0.0 if r.norm() == 0.0 else float("inf")
    return (d - r).norm() / nd
