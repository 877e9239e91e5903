import numpy as np
import pytest
from hypothesis import given, strategies as st

from parabolic_commutator.grid import Field2D, TorusGrid, spectral_derivative, spectral_shift
from parabolic_commutator.geometry import ParaPoint
from parabolic_commutator.symbols import (
    GENERATORS, ConditionReport, SymbolA, bmo_parabolic, check_condition_17, cube_family,
    frac_diff, frac_diff_multiplier, lip_half_seminorm, make_symbol, sup_dx1)

from conftest import rel_err

R_SET = (0.05, 0.1, 0.25, 0.5, 1.0)
PERIODIC = [n for n in GENERATORS if n != "linear_x1"]


def test_lip_half_examples():
    assert lip_half_seminorm(make_symbol("constant", c=5.0), 2000, R_SET) == 0.0
    assert lip_half_seminorm(make_symbol("linear_x1"), 2000, R_SET) == pytest.approx(1.0, rel=0.02)
    est = lip_half_seminorm(make_symbol("sine_x2"), 20000, (0.1, 0.5, 1.0), seed=3)
    assert est <= 1.0 + 1e-12


def test_make_symbol_examples():
    lin = make_symbol("linear_x1", c=1.0)
    assert lin(2.0, 5.0) - lin(1.0, 5.0) == 1.0
    g = TorusGrid.square(32)
    a = make_symbol("random_bandlimited", seed=7).sample(g)
    b = make_symbol("random_bandlimited", seed=7).sample(g)
    assert np.array_equal(a.samples, b.samples)
    with pytest.raises(ValueError):
        make_symbol("cubic")
    with pytest.raises(ValueError):
        lin.sample(g)


@pytest.mark.parametrize("name", PERIODIC)
def test_modes_reproduce_closed_form(name, grid32):
    A = make_symbol(name, seed=7) if name == "random_bandlimited" else make_symbol(name)
    X1, X2 = grid32.mesh()
    w, c = A.complex_modes()
    recon = sum(ck * np.exp(1j * (wk[0] * X1 + wk[1] * X2)) for wk, ck in zip(w, c)) if len(c) else 0 * X1
    assert np.max(np.abs(recon - A(X1, X2))) < 1e-13


def test_random_bandlimited_slope_bound(grid64):
    for seed in range(5):
        assert sup_dx1(make_symbol("random_bandlimited", seed=seed), grid64) <= 1 + 1e-6


def test_symbol_addition(grid32):
    A = make_symbol("sine_x1") + make_symbol("sine_x2")
    X1, X2 = grid32.mesh()
    assert np.allclose(A(X1, X2), np.sin(X1) + np.sin(X2), atol=1e-14)


def test_sampled_symbol_shift(grid32):
    A = make_symbol("mixed")
    S = SymbolA.from_field(A.sample(grid32))
    d1, d2 = np.array([0.3, -1.1]), np.array([0.09, 1.21])
    assert rel_err(S.shifted(grid32, d1, d2), A.shifted(grid32, d1, d2)) < 1e-12


def test_frac_diff_examples(grid32):
    one = Field2D(grid32, np.ones(grid32.shape))
    assert np.max(np.abs(frac_diff(one, "partial").samples)) == 0.0
    assert frac_diff_multiplier("partial").symbol(1.0, 0.0) == 0.0
    root = frac_diff_multiplier("full").symbol(np.array([3.0, 0.0, -2.0]), np.array([0.0, 5.0, -7.0]))
    assert np.all(root.real >= 0)
    with pytest.raises(ValueError):
        frac_diff_multiplier("half")


def test_d2_after_d_is_minus_i_d_dx2(grid64):
    # xi2 = (xi2 / sqrt(w)) sqrt(w) while d/dx2 has symbol i xi2
    b = make_symbol("random_bandlimited", seed=11).sample(grid64)
    lhs = frac_diff(frac_diff(b, "full"), "partial")
    rhs = spectral_derivative(b, 0, 1) * (-1j)
    assert (lhs - rhs).norm() / rhs.norm() < 1e-10


def test_frac_diff_linear_and_translation(grid32):
    f, h = Field2D.random(grid32, 1), Field2D.random(grid32, 2)
    for which in ("full", "partial"):
        lhs = frac_diff(f * 2.0 + h * (-3.0), which)
        rhs = frac_diff(f, which) * 2.0 + frac_diff(h, which) * (-3.0)
        assert rel_err(lhs.samples, rhs.samples) < 1e-12
        d = ParaPoint(3 * grid32.h1, 5 * grid32.h2)
        a = frac_diff(spectral_shift(f, d), which)
        b = spectral_shift(frac_diff(f, which), d)
        assert rel_err(a.samples, b.samples) < 1e-10


def test_bmo_constants_and_step(grid64):
    c = Field2D(grid64, np.full(grid64.shape, 3.7))
    assert bmo_parabolic(c, 2) == 0.0
    X1, _ = grid64.mesh()
    step = Field2D(grid64, 0.5 * (1 + np.tanh(3 * np.sin(X1))))
    assert 0.1 <= bmo_parabolic(step, 2) <= 1.0


def test_bmo_monotone_in_depth(grid64):
    b = make_symbol("mixed").sample(grid64)
    assert bmo_parabolic(b, 1) <= bmo_parabolic(b, 2)
    with pytest.raises(ValueError):
        cube_family(TorusGrid.square(16), 2)


@given(st.integers(-6, 6), st.booleans())
def test_bmo_homogeneity_powers_of_two(k, neg):
    g = TorusGrid.square(32)
    b = make_symbol("random_bandlimited", seed=3, band=2).sample(g)
    a = (-1.0 if neg else 1.0) * 2.0**k
    assert bmo_parabolic(b * a, 1) == abs(a) * bmo_parabolic(b, 1)


@given(st.floats(0.01, 100), st.floats(-100, 100))
def test_bmo_homogeneity_and_shift_to_rounding(a, c):
    g = TorusGrid.square(32)
    b = make_symbol("random_bandlimited", seed=3, band=2).sample(g)
    v = bmo_parabolic(b, 1)
    assert bmo_parabolic(b * a, 1) == pytest.approx(a * v, rel=1e-14)
    shifted = Field2D(g, b.samples + c)
    assert bmo_parabolic(shifted, 1) == pytest.approx(v, rel=1e-13, abs=1e-13)


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_bmo_dilation_resampled(seed):
    g = TorusGrid.square(128)
    A = make_symbol("random_bandlimited", seed=seed, band=2)
    X1, X2 = g.mesh()
    b = Field2D(g, A(X1, X2))
    db = Field2D(g, A(2 * X1, 4 * X2))
    v, w = bmo_parabolic(b, 2), bmo_parabolic(db, 2)
    assert abs(w - v) / v < 0.10


def test_condition_report_examples(grid64):
    z = check_condition_17(make_symbol("zero"), grid64)
    assert (z.lip_half, z.sup_dx1, z.bmo_d2a) == (0.0, 0.0, 0.0)
    s = check_condition_17(make_symbol("sine_x1"), grid64)
    assert s.sup_dx1 == pytest.approx(1.0, rel=0.02)
    with pytest.raises(ValueError):
        check_condition_17(make_symbol("linear_x1"), grid64)
    assert ConditionReport.CSV_HEADER == ("name", "lip_half", "sup_dx1", "bmo_d2a", "grid", "seed")
    row = s.to_csv_row()
    assert len(row) == len(ConditionReport.CSV_HEADER) and row[0] == "sine_x1"


@pytest.mark.parametrize("name", PERIODIC)
def test_lip_controlled_by_condition(name, grid64):
    A = make_symbol(name, seed=7) if name == "random_bandlimited" else make_symbol(name)
    r = check_condition_17(A, grid64)
    assert r.lip_half <= 10 * (r.sup_dx1 + r.bmo_d2a) + 1e-12


@pytest.mark.parametrize("name", PERIODIC)
def test_condition_report_stable_under_refinement(name):
    A = make_symbol(name, seed=7) if name == "random_bandlimited" else make_symbol(name)
    a = check_condition_17(A, TorusGrid.square(32), depth=1)
    b = check_condition_17(A, TorusGrid.square(64), depth=1)
    for x, y in ((a.lip_half, b.lip_half), (a.sup_dx1, b.sup_dx1), (a.bmo_d2a, b.bmo_d2a)):
        assert abs(x - y) <= 0.05 * max(abs(y), 1e-300)
