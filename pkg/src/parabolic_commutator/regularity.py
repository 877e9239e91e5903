"""Kernel regularity for the single-scale commutator piece.

With phi(t) = eta(t) / t^2 and

    B(x, s, t) = [A(x) - A(x - gamma(t))] [A(x - gamma(t)) - A(x + gamma(s) - gamma(t))],

the composite T0 T0* has the representation

    T0 T0* g(w) = - int int B(w, s, t) phi(s) phi(t) g(w + gamma(s) - gamma(t)) ds dt.

Pushing (s, t) forward through Phi_w(s, t) = w + gamma(s) - gamma(t), whose
Jacobian is 2(s - t), gives the kernel K0(w, y) used here, restricted to the
part of the square well away from the diagonal:

    E_lam = {1/2 <= t < s <= 2,  s - t >= 15 lam^(1/3)}.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ParaPoint, gamma_sigma, pnorm
from .grid import eta
from .symbols import SymbolA

_LO, _HI = 0.5, 2.0
_EXT_LO, _EXT_HI = 0.25, 4.0


@dataclass(frozen=True)
class ShellPair:
    """A pair (s, t) of curve parameters, kept inside [1/4, 4]^2."""

    s: float
    t: float

    def __post_init__(self):
        for v in (self.s, self.t):
            if not _EXT_LO <= v <= _EXT_HI:
                raise ValueError(f"shell parameter {v} outside [1/4, 4]")

    def in_square(self) -> bool:
        return _LO <= self.s <= _HI and _LO <= self.t <= _HI


# ---------------------------------------------------------------- the map Phi


def phi_map(omega: ParaPoint, s: float, t: float) -> ParaPoint:
    return ParaPoint(omega.x1 + s - t, omega.x2 + s * s - t * t)


def phi_jacobian(s, t):
    """Determinant of d(Phi)/d(s, t)."""
    return 2.0 * (np.asarray(s) - np.asarray(t))


def phi_inverse(omega: ParaPoint, y: ParaPoint) -> ShellPair | None:
    u = y.x1 - omega.x1
    v = y.x2 - omega.x2
    if u == 0.0:
        raise ValueError("y1 == omega1: the curve pair is degenerate")
    s = 0.5 * (u + v / u)
    t = 0.5 * (v / u - u)
    if not (_EXT_LO <= s <= _EXT_HI and _EXT_LO <= t <= _EXT_HI):
        return None
    return ShellPair(s, t)


def sh_th(s, t, h: ParaPoint):
    """Parameters (s_h, t_h) with Phi_x(s_h, t_h) = Phi_{x+h}(s, t); vectorised."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    d = h.x1 + s - t
    if np.any(d == 0):
        raise ValueError("h1 + s - t vanishes")
    q = (h.x2 + s * s - t * t) / d
    return 0.5 * (d + q), 0.5 * (q - d)


# ---------------------------------------------------------------- E_lambda


def gap(lam: float) -> float:
    return 15.0 * lam ** (1.0 / 3.0)


def in_E_lambda(s, t, lam: float):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return (s - t >= gap(lam)) & (t >= _LO) & (s <= _HI) & (t < s)


def e_lambda_area(lam: float) -> float:
    leg = max(_HI - _LO - gap(lam), 0.0)
    return 0.5 * leg * leg


def sample_E_lambda(lam: float, n: int, rng: np.random.Generator):
    """n uniform draws from the triangle E_lam (empty arrays if it is null)."""
    leg = _HI - _LO - gap(lam)
    if leg <= 0:
        return np.empty(0), np.empty(0)
    u = rng.random((n, 2))
    flip = u.sum(axis=1) > 1
    u[flip] = 1 - u[flip]
    t = _LO + leg * u[:, 0]
    s = _HI - leg * u[:, 1]
    keep = in_E_lambda(s, t, lam)  # closes the half-open edge t < s
    return s[keep], t[keep]


def sample_h(lam: float, rng: np.random.Generator, n: int = 1):
    return lam * rng.uniform(-1, 1, n), lam * lam * rng.uniform(-1, 1, n)


@dataclass(frozen=True)
class ShiftBoundReport:
    lam: float
    n_requested: int
    n_valid: int
    violations: int
    max_ratio: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def shift_bound_check(lam: float, n_samples: int, seed: int = 0, h: ParaPoint | None = None
                      ) -> ShiftBoundReport:
    """Compare |s - s_h|, |t - t_h| with lam^(2/3) for draws in E_lam.

    h is drawn uniformly from |h1| <= lam, |h2| <= lam^2 per sample unless given.
    """
    if lam > 1e-3:
        raise ValueError("the shift bound is stated for lam <= 1/1000")
    rng = np.random.default_rng(seed)
    s, t = sample_E_lambda(lam, n_samples, rng)
    if s.size == 0:
        return ShiftBoundReport(lam, n_samples, 0, 0, float("nan"))
    if h is None:
        h1, h2 = sample_h(lam, rng, s.size)
    else:
        h1, h2 = np.full(s.size, h.x1), np.full(s.size, h.x2)
    d = h1 + s - t
    q = (h2 + s * s - t * t) / d
    sh, th = 0.5 * (d + q), 0.5 * (q - d)
    dev = np.maximum(np.abs(s - sh), np.abs(t - th)) / lam ** (2.0 / 3.0)
    return ShiftBoundReport(lam, n_samples, int(s.size), int(np.sum(dev > 1.0)), float(dev.max()))


# ---------------------------------------------------------------- B and K0


def B_values(A: SymbolA, x1, x2, s, t):
    """B(x, s, t) broadcast over arrays, along gamma(t) = (t, t^2)."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    a0 = A(x1, x2)
    a1 = A(x1 - t, x2 - t * t)
    a2 = A(x1 + s - t, x2 + s * s - t * t)
    return (a0 - a1) * (a1 - a2)


def B_quantity(x: ParaPoint, s: float, t: float, A: SymbolA) -> float:
    return float(B_values(A, x.x1, x.x2, s, t))


def B_difference_bound(s, t, sh, th, lip: float):
    """Pointwise bound on |B(x,s,t) - B(x,s_h,t_h)| from |A(x)-A(y)| <= lip*||x-y||.

    ||.|| = |x1| + |x2|^(1/2) obeys the triangle inequality, so both brackets
    and their increments are controlled by parabolic norms of curve points.
    """
    def norm(a, b):
        return np.abs(a) + np.sqrt(np.abs(b))

    g_t = norm(t, t * t)
    g_sh = norm(sh, sh * sh)
    d_t = norm(t - th, t * t - th * th)
    d_s = norm(s - sh, s * s - sh * sh)
    return lip * lip * ((g_sh + 2 * g_t) * d_t + g_t * d_s)


def phi_weight(t):
    t = np.asarray(t, dtype=float)
    return eta(t) / (t * t)


def k0_values(A: SymbolA, w1, w2, s, t, lam: float):
    """K0 at y = Phi_w(s, t), zero off E_lam."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    inside = in_E_lambda(s, t, lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = -B_values(A, w1, w2, s, t) * phi_weight(s) * phi_weight(t) / (2.0 * (s - t))
    return np.where(inside, val, 0.0)


def k0_eval(w: ParaPoint, y: ParaPoint, A: SymbolA, lam: float) -> float:
    if y.x1 == w.x1:
        return 0.0  # u = 0 never meets E_lam, where s - t > 0
    pair = phi_inverse(w, y)
    if pair is None:
        return 0.0
    return float(k0_values(A, w.x1, w.x2, pair.s, pair.t, lam))


def k0_support_box(lam: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Bounding box of y - w over the support of K0(w, .)."""
    u0 = gap(lam)
    return (u0, _HI - _LO), (u0 * (u0 + 1.0), 3.75)


# ---------------------------------------------------------------- regularity integral


def _gauss(a: float, b: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _ut_rule(u_breaks, n: int):
    """Tensor Gauss rule on {u in [u_a, u_b], t in [1/2, 2 - u]}, u = s - t."""
    U, T, W = [], [], []
    for a, b in zip(u_breaks[:-1], u_breaks[1:]):
        if b <= a:
            continue
        u, wu = _gauss(a, b, n)
        x, wx = np.polynomial.legendre.leggauss(n)
        width = (_HI - u) - _LO
        t = _LO + 0.5 * width[:, None] * (x[None] + 1)
        U.append(np.broadcast_to(u[:, None], t.shape).ravel())
        T.append(t.ravel())
        W.append((wu[:, None] * 0.5 * width[:, None] * wx[None]).ravel())
    if not U:
        return np.empty(0), np.empty(0), np.empty(0)
    return np.concatenate(U), np.concatenate(T), np.concatenate(W)


def reg_integral(A: SymbolA, x: ParaPoint, lam: float, h: ParaPoint, n_quad: int = 64) -> float:
    """int |K0(x + h, y) - K0(x, y)| dy, computed in (s, t) coordinates.

    On Phi_x(E_lam) the integrand is pulled back through Phi_x (weight 2(s-t));
    the rest of the support, Phi_{x+h}(E_lam) minus Phi_x(E_lam), is pulled back
    through Phi_{x+h}.  u = s - t is split where E_lam membership of the
    partner point switches, so each panel integrates a smooth function.
    """
    d = gap(lam)
    top = _HI - _LO
    if d >= top:
        return 0.0
    xh = x + h
    breaks = sorted({d, top} | {b for b in (d + h.x1, d - h.x1) if d < b < top})

    u, t, w = _ut_rule(breaks, n_quad)
    s = u + t
    k_x = -B_values(A, x.x1, x.x2, s, t) * phi_weight(s) * phi_weight(t) / (2 * u)
    sp, tp = sh_th(s, t, ParaPoint(-h.x1, -h.x2))
    k_xh = k0_values(A, xh.x1, xh.x2, sp, tp, lam)
    part1 = np.sum(w * np.abs(k_xh - k_x) * 2 * u)

    sq, tq = sh_th(s, t, h)
    outside = ~in_E_lambda(sq, tq, lam)
    part2 = np.sum(w * outside * np.abs(B_values(A, xh.x1, xh.x2, s, t)) * phi_weight(s) * phi_weight(t))
    return float(part1 + part2)


@dataclass(frozen=True)
class RegSweepRow:
    symbol: str
    lam: float
    h: ParaPoint
    integral: float
    ratio: float
    n_quad: int
    seed: int

    def __post_init__(self):
        if self.lam > 1e-3:
            raise ValueError("sweep rows are for lam <= 1/1000")
        if not (abs(self.h.x1) <= self.lam and abs(self.h.x2) <= self.lam**2):
            raise ValueError("h outside the lam box")
        if not self.ratio >= 0:
            raise ValueError("ratio must be nonnegative")

    CSV_HEADER = ("symbol", "lambda", "h1", "h2", "integral", "ratio", "n_quad", "seed")

    def to_csv_row(self) -> list:
        return [self.symbol, repr(self.lam), repr(self.h.x1), repr(self.h.x2),
                repr(self.integral), repr(self.ratio), self.n_quad, self.seed]


def reg_integral_sweep(A: SymbolA, x: ParaPoint, lambda_list, seed: int = 0,
                       h_mode: str = "corner", n_quad: int = 64) -> list[RegSweepRow]:
    if any(lam > 1e-3 for lam in lambda_list):
        raise ValueError("all lam must be <= 1/1000")
    rng = np.random.default_rng(seed)
    rows = []
    for lam in lambda_list:
        if h_mode == "corner":
            h = ParaPoint(lam, lam * lam)
        elif h_mode == "random":
            h1, h2 = sample_h(lam, rng)
            h = ParaPoint(float(h1[0]), float(h2[0]))
        else:
            raise ValueError(f"unknown h_mode {h_mode!r}")
        val = reg_integral(A, x, lam, h, n_quad)
        rows.append(RegSweepRow(A.name, lam, h, val, val / lam ** (1.0 / 3.0), n_quad, seed))
    return rows


# ---------------------------------------------------------------- F_lambda


@dataclass(frozen=True)
class FLambdaResult:
    lam: float
    estimate: float
    stderr: float
    n_mc: int


def f_lambda_measure(x: ParaPoint, h: ParaPoint, lam: float, n_mc: int, seed: int = 0
                     ) -> FLambdaResult:
    """Monte Carlo area of {(s,t) in E_lam : (s_h, t_h) not in E_lam}.

    Draws are uniform on E_lam itself and rescaled by its area; the result does
    not depend on x (only differences of curve points enter).
    """
    del x
    if not (abs(h.x1) <= lam and abs(h.x2) <= lam * lam):
        raise ValueError("h outside the lam box")
    if lam > 1e-3:
        raise ValueError("lam must be <= 1/1000")
    area = e_lambda_area(lam)
    rng = np.random.default_rng(seed)
    s, t = sample_E_lambda(lam, n_mc, rng)
    if s.size == 0 or area == 0.0:
        return FLambdaResult(lam, 0.0, 0.0, n_mc)
    sh, th = sh_th(s, t, h)
    hit = ~in_E_lambda(sh, th, lam)
    p = hit.mean()
    return FLambdaResult(lam, float(area * p), float(area * np.sqrt(p * (1 - p) / s.size)), n_mc)


def curve_norm(t: float) -> float:
    return pnorm(gamma_sigma(t))
