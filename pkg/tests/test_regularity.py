import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import dblquad

from parabolic_commutator.geometry import ParaPoint
from parabolic_commutator.regularity import (
    B_difference_bound, B_quantity, B_values, RegSweepRow, ShellPair, e_lambda_area,
    f_lambda_measure, gap, in_E_lambda, k0_eval, k0_support_box, phi_inverse, phi_jacobian,
    phi_map, phi_weight, reg_integral, reg_integral_sweep, sample_E_lambda, sh_th,
    shift_bound_check)
from parabolic_commutator.symbols import make_symbol

X = ParaPoint(0.3, -0.2)
BAND = [2.0**-k for k in range(14, 19)]


# ---------------------------------------------------------------- Phi and its inverse

def test_phi_examples():
    w = ParaPoint(1.0, 2.0)
    assert phi_map(w, 2.0, 1.0) == ParaPoint(2.0, 5.0)
    assert phi_jacobian(2.0, 1.0) == 2.0
    p = phi_inverse(w, ParaPoint(2.0, 5.0))
    assert (p.s, p.t) == (2.0, 1.0) and p.in_square()
    assert phi_inverse(w, ParaPoint(1.0 + 10.0, 2.0)) is None
    with pytest.raises(ValueError):
        phi_inverse(w, ParaPoint(1.0, 7.0))
    with pytest.raises(ValueError):
        ShellPair(0.1, 1.0)


def test_phi_roundtrip_many():
    # the inverse divides by s - t, so stay a fixed distance off the diagonal
    rng = np.random.default_rng(0)
    s, t = rng.uniform(0.25, 4, (2, 100000))
    keep = np.abs(s - t) >= 0.01
    w = ParaPoint(-0.4, 0.9)
    worst = 0.0
    for sk, tk in zip(s[keep], t[keep]):
        p = phi_inverse(w, phi_map(w, sk, tk))
        worst = max(worst, abs(p.s - sk), abs(p.t - tk))
    assert keep.sum() > 99000 and worst < 1e-11


# ---------------------------------------------------------------- shifted parameters

def test_sh_th_example():
    s, t, h1, h2 = 2.0, 1.0, 1e-3, 1e-6
    d = h1 + s - t
    q = (h2 + s * s - t * t) / d
    sh, th = sh_th(s, t, ParaPoint(h1, h2))
    assert sh == pytest.approx(0.5 * (d + q), rel=1e-15)
    assert th == pytest.approx(0.5 * (q - d), rel=1e-15)
    assert sh == pytest.approx(1.999001998, abs=1e-6)
    assert th == pytest.approx(0.998001998, abs=1e-6)


@given(st.floats(0.5, 2), st.floats(0.5, 2), st.floats(-1e-3, 1e-3), st.floats(-1e-6, 1e-6),
       st.floats(-5, 5), st.floats(-5, 5))
def test_sh_th_identity_for_every_x(s, t, h1, h2, x1, x2):
    if abs(s - t) < 0.05:
        return
    h = ParaPoint(h1, h2)
    sh, th = sh_th(s, t, h)
    x = ParaPoint(x1, x2)
    lhs = phi_map(x, float(sh), float(th))
    rhs = phi_map(x + h, s, t)
    assert abs(lhs.x1 - rhs.x1) < 1e-12 and abs(lhs.x2 - rhs.x2) < 1e-11


def test_sh_th_rejects_degenerate():
    with pytest.raises(ValueError):
        sh_th(1.0, 1.0, ParaPoint(0.0, 0.0))


# ---------------------------------------------------------------- E_lambda

def test_E_lambda_geometry():
    assert gap(1e-3) == pytest.approx(1.5)
    assert e_lambda_area(1e-3) == 0.0
    leg = 1.5 - gap(1e-5)
    assert e_lambda_area(1e-5) == pytest.approx(0.5 * leg * leg)
    s, t = sample_E_lambda(1e-5, 5000, np.random.default_rng(1))
    assert s.size > 4900 and np.all(in_E_lambda(s, t, 1e-5))
    assert sample_E_lambda(1e-3, 10, np.random.default_rng(1))[0].size == 0


def test_shift_bound_holds_small_lambda():
    worst = []
    for lam in (1e-4, 1e-5):
        rep = shift_bound_check(lam, 100000, seed=0)
        assert rep.n_valid > 0.99 * rep.n_requested
        assert rep.passed
        worst.append(rep.max_ratio)
    assert worst[1] < worst[0]


def test_shift_bound_zero_shift():
    rep = shift_bound_check(1e-4, 1000, h=ParaPoint(0.0, 0.0))
    # s_h is recomputed through (s^2 - t^2) / (s - t), so only rounding remains
    assert rep.max_ratio < 1e-10
    with pytest.raises(ValueError):
        shift_bound_check(1e-2, 10)


# ---------------------------------------------------------------- B and K0

def test_B_linear_example():
    # brackets are t and -s
    A = make_symbol("linear_x1")
    assert B_quantity(ParaPoint(0.7, 3.0), 2.0, 1.0, A) == -2.0
    assert B_quantity(ParaPoint(0.0, 0.0), 1.5, 0.5, make_symbol("constant", c=3.0)) == 0.0


@pytest.mark.parametrize("name", ["linear_x1", "sine_x1"])
def test_B_difference_bound(name):
    # both symbols have |A(x) - A(y)| <= |x1 - y1| <= ||x - y||
    A = make_symbol(name)
    rng = np.random.default_rng(2)
    lam = 1e-5
    s, t = sample_E_lambda(lam, 10000, rng)
    h = ParaPoint(lam, -lam * lam)
    sh, th = sh_th(s, t, h)
    x1, x2 = rng.uniform(-3, 3, (2, s.size))
    diff = np.abs(B_values(A, x1, x2, s, t) - B_values(A, x1, x2, sh, th))
    assert np.all(diff <= B_difference_bound(s, t, sh, th, 1.0) + 1e-15)


def test_k0_examples():
    A = make_symbol("mixed")
    w = ParaPoint(0.1, 0.2)
    assert k0_eval(w, phi_map(w, 1.9, 0.6), make_symbol("constant", c=2.0), 1e-5) == 0.0
    # outside E_lam: s - t below the gap
    assert k0_eval(w, phi_map(w, 1.0, 0.9), A, 1e-5) == 0.0
    assert k0_eval(w, ParaPoint(w.x1, 1.0), A, 1e-5) == 0.0
    y = phi_map(w, 1.9, 0.6)
    ref = -B_quantity(w, 1.9, 0.6, A) * phi_weight(1.9) * phi_weight(0.6) / (2 * 1.3)
    assert k0_eval(w, y, A, 1e-5) == pytest.approx(float(ref), rel=1e-12)


def test_k0_support_box():
    lam = 1e-5
    (u0, u1), (v0, v1) = k0_support_box(lam)
    s, t = sample_E_lambda(lam, 20000, np.random.default_rng(3))
    u, v = s - t, s * s - t * t
    assert np.all((u >= u0) & (u <= u1) & (v >= v0 - 1e-12) & (v <= v1))


def test_k0_pushforward():
    # int K0(w, y) g(y) dy = -int_{E} B(w,s,t) phi(s) phi(t) g(Phi_w(s,t)) ds dt
    A = make_symbol("mixed")
    w, lam = ParaPoint(0.3, -0.2), 1e-4

    def g(y1, y2):
        return np.exp(-((y1 - w.x1) ** 2 + (y2 - w.x2) ** 2))

    (u0, u1), (v0, v1) = k0_support_box(lam)
    lhs = dblquad(lambda y2, y1: k0_eval(w, ParaPoint(y1, y2), A, lam) * g(y1, y2),
                  w.x1 + u0, w.x1 + u1, w.x2 + v0, w.x2 + v1, epsabs=1e-12, epsrel=1e-10)[0]
    d = gap(lam)

    def pulled(s, t):
        p = phi_map(w, s, t)
        return -B_quantity(w, s, t, A) * phi_weight(s) * phi_weight(t) * g(p.x1, p.x2)

    rhs = dblquad(pulled, 0.5, 2.0 - d, lambda t: t + d, lambda t: 2.0,
                  epsabs=1e-13, epsrel=1e-11)[0]
    assert abs(lhs - rhs) < 1e-4 * abs(rhs)


# ---------------------------------------------------------------- the regularity integral

def test_reg_integral_null_cases():
    A = make_symbol("sine_x1")
    assert reg_integral(A, X, 1e-5, ParaPoint(0.0, 0.0)) < 1e-14
    assert reg_integral(make_symbol("constant", c=1.0), X, 1e-5, ParaPoint(1e-5, 1e-10)) == 0.0
    assert reg_integral(A, X, 1e-3, ParaPoint(1e-3, 1e-6)) == 0.0


@pytest.mark.parametrize("lam", [2.0**-12, 2.0**-16])
def test_reg_integral_refinement(lam):
    A = make_symbol("mixed")
    h = ParaPoint(lam, lam * lam)
    a = reg_integral(A, X, lam, h, 64)
    b = reg_integral(A, X, lam, h, 128)
    assert abs(a - b) <= 0.02 * b


@pytest.mark.parametrize("name", ["sine_x1", "sine_x2", "mixed", "random_bandlimited"])
def test_reg_ratio_flat_in_small_band(name):
    A = make_symbol(name, seed=7) if name == "random_bandlimited" else make_symbol(name)
    r = [row.ratio for row in reg_integral_sweep(A, X, BAND)]
    assert min(r) > 0 and max(r) / min(r) < 5


def test_sweep_rows():
    rows = reg_integral_sweep(make_symbol("sine_x1"), X, [1e-4], h_mode="random", seed=4)
    assert abs(rows[0].h.x1) <= 1e-4 and abs(rows[0].h.x2) <= 1e-8
    assert len(rows[0].to_csv_row()) == len(RegSweepRow.CSV_HEADER)
    with pytest.raises(ValueError):
        reg_integral_sweep(make_symbol("sine_x1"), X, [1e-2])
    with pytest.raises(ValueError):
        reg_integral_sweep(make_symbol("sine_x1"), X, [1e-4], h_mode="diagonal")


# ---------------------------------------------------------------- F_lambda

def test_f_lambda_null_shift():
    r = f_lambda_measure(X, ParaPoint(0.0, 0.0), 1e-5, 10000)
    assert r.estimate == 0.0


def test_f_lambda_decreases():
    vals = [f_lambda_measure(X, ParaPoint(lam, lam * lam), lam, 200000, seed=1).estimate
            for lam in (1e-4, 1e-5)]
    assert vals[0] > vals[1] > 0
    with pytest.raises(ValueError):
        f_lambda_measure(X, ParaPoint(1.0, 0.0), 1e-5, 10)
