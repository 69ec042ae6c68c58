import math
import re

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rbolab import elliptic
from rbolab.fourier import SpectralField, make_grid
from rbolab.waves import (
    AdmissibilityError,
    bbm_cnoidal,
    bbm_fourier_coeffs,
    bbm_k0,
    bbm_k_L,
    bbm_k_of_c,
    bbm_lattice_sum,
    bbm_params,
    bbm_poisson_series,
    bbm_quadratic_residual,
    bbm_residual,
    bbm_scalars,
    bbm_speed,
    bbm_system_residuals,
    bbm_w,
    rbo_coefficients,
    rbo_deta_dc,
    rbo_dwave_dc,
    rbo_eta,
    rbo_index_analytic,
    rbo_flux,
    rbo_lattice_sum,
    rbo_poisson_profile,
    rbo_profile_values,
    rbo_residual,
    rbo_self_convolution,
    rbo_wave,
)

TWO_PI = 2 * math.pi
GOLDEN = (1 + math.sqrt(5)) / 2


def rbo_grid(L, N=256):
    return make_grid(N, 2 * L)


# ------------------------------------------------------------------ rBO eta


def test_eta_at_c4_is_half_log_five():
    assert rbo_eta(4, TWO_PI) == pytest.approx(0.5 * math.log(5), abs=1e-15)
    assert rbo_deta_dc(4, TWO_PI) == pytest.approx(-0.1, abs=1e-15)


def test_eta_blows_up_at_lower_speed_edge():
    etas = [rbo_eta(2 + e, TWO_PI) for e in (1e-2, 1e-4, 1e-8)]
    assert etas[0] < etas[1] < etas[2] and etas[2] > 9


@pytest.mark.parametrize("c,L,case", [
    (4, math.pi, "L = pi"),
    (4, 0.8 * math.pi, "case (b)"),
    (1, TWO_PI, "c = 1"),
    (-3, TWO_PI, "case (c)"),
    (1.5, TWO_PI, "must exceed"),
    (2, TWO_PI, "must exceed"),
])
def test_eta_rejects_inadmissible(c, L, case):
    with pytest.raises(AdmissibilityError, match=re.escape(case)):
        rbo_eta(c, L)


@given(st.floats(2.01, 50), st.floats(1.5, 6))
def test_eta_positive_on_admissible_region(c, Lfac):
    L = Lfac * math.pi
    if c <= 1 + math.pi / (L - math.pi) + 1e-9:
        return
    eta = rbo_eta(c, L)
    assert eta > 0
    assert math.tanh(eta) == pytest.approx(c * math.pi / ((c - 1) * L), rel=1e-12)


# ----------------------------------------------------------------- rBO wave


def test_wave_values_at_c4(rbo4):
    assert rbo_profile_values(4, TWO_PI, 0.0) == pytest.approx(4 * (1 + GOLDEN), rel=1e-14)
    eta = 0.5 * math.log(5)
    series = 4 * (1 + 2 * math.exp(-eta) / (1 - math.exp(-eta)))
    assert rbo_profile_values(4, TWO_PI, 0.0) == pytest.approx(series, rel=1e-14)
    assert rbo4.field.mode(1).real == pytest.approx(4 / math.sqrt(5), rel=1e-13)


def test_wave_minimum_at_edges(rbo4):
    eta = rbo4.params["eta"]
    low = 2 * 4 * math.pi / TWO_PI * math.sinh(eta) / (math.cosh(eta) + 1)
    v = rbo4.values().real
    assert v.min() == pytest.approx(low, rel=1e-12)
    assert v[0] == pytest.approx(low, rel=1e-12)
    assert low > 0


def test_wave_is_even(rbo4):
    v = rbo4.values().real
    assert np.abs(v[1:] - v[1:][::-1]).max() < 1e-12


@pytest.mark.parametrize("c,L", [(4, TWO_PI), (8, 1.2 * math.pi), (3, 2 * TWO_PI)])
def test_wave_coefficients_up_to_quarter_grid(c, L):
    w = rbo_wave(c, L, rbo_grid(L))
    n = np.arange(-64, 65)
    a = rbo_coefficients(c, L, n)
    got = w.field.mode(n)
    assert np.abs(got - a).max() < 1e-10 * a.max()
    assert w.tail_bound < 1e-10 * a.max() or c == 3


def test_wave_rejects_wrong_grid():
    with pytest.raises(ValueError):
        rbo_wave(4, TWO_PI, make_grid(256, TWO_PI))


def test_residual_of_exact_wave(rbo4):
    assert rbo_residual(rbo4) < 1e-10


def test_residual_c1_probe(rbo4):
    # at c = 1 the zero profile is the only solution
    assert rbo_residual(SpectralField.zeros(rbo4.grid), 1.0) == 0
    const = SpectralField.zeros(rbo4.grid)
    const.coeffs[0] = 0.3
    for trial in (rbo4.field, 0.01 * rbo4.field, const):
        assert rbo_residual(trial, 1.0) > 0


def test_residual_of_doubled_wave(rbo4):
    phi_max = np.abs(rbo4.values()).max()
    assert rbo_residual(2 * rbo4.field, rbo4.speed) > 0.1 * phi_max


def test_residual_needs_speed_for_bare_field(rbo4):
    with pytest.raises(ValueError):
        rbo_residual(rbo4.field)


# ------------------------------------------------------- coefficient identity


@pytest.mark.parametrize("c,L", [(4, TWO_PI), (3, 2 * TWO_PI), (8, 1.2 * math.pi)])
def test_self_convolution_closed_form(c, L):
    m = np.arange(-4000, 4001)
    a = rbo_coefficients(c, L, m)
    n = np.arange(-20, 21)
    direct = np.array([np.sum(a * rbo_coefficients(c, L, k - m)) for k in n])
    closed = rbo_self_convolution(c, L, n)
    assert np.abs(direct - closed).max() < 1e-10 * np.abs(closed).max()


@pytest.mark.parametrize("c,L", [(4, TWO_PI), (3, 2 * TWO_PI), (8, 1.2 * math.pi), (30, 3.3)])
def test_coefficient_balance(c, L):
    n = np.arange(-20, 21)
    a = rbo_coefficients(c, L, n)
    lhs = c * a * (1 + math.pi * np.abs(n) / L) - a
    rhs = 0.5 * rbo_self_convolution(c, L, n)
    assert np.abs(lhs - rhs).max() < 1e-10 * np.abs(rhs).max()


# ---------------------------------------------------------- c-derivatives


def test_dwave_dc_against_richardson():
    c, L, h = 4.0, TWO_PI, 1e-5
    g = rbo_grid(L)
    n = np.arange(-40, 41)

    def d(step):
        return (rbo_coefficients(c + step, L, n) - rbo_coefficients(c - step, L, n)) / (2 * step)

    rich = (4 * d(h / 2) - d(h)) / 3
    chi = rbo_dwave_dc(c, L, g).mode(n)
    assert np.abs(-chi - rich).max() < 1e-7 * np.abs(rich).max()


def test_curve_is_c1_with_second_order_differences():
    c, L = 4.0, TWO_PI
    g = rbo_grid(L)
    exact = -rbo_dwave_dc(c, L, g).coeffs
    errs = []
    for h in (1e-1, 5e-2, 2.5e-2):
        fd = (rbo_wave(c + h, L, g).field.coeffs - rbo_wave(c - h, L, g).field.coeffs) / (2 * h)
        errs.append(np.abs(fd - exact).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2) < 0.1)


def test_index_matches_flux_derivative():
    c, L, h = 4.0, TWO_PI, 1e-4
    fd = -L * (rbo_flux(c + h, L) - rbo_flux(c - h, L)) / (2 * h)
    assert rbo_index_analytic(c, L) == pytest.approx(fd, rel=1e-7)
    assert rbo_index_analytic(c, L) < 0


# ------------------------------------------------------ Poisson summation


def test_rbo_lattice_sum_matches_closed_form():
    L, w = TWO_PI, 4.0
    x = np.linspace(-L, L, 16, endpoint=False)
    direct = rbo_lattice_sum(w, L, x)
    closed = rbo_poisson_profile(w, L, x)
    assert np.abs(direct - closed).max() < 1e-6 * closed.max()


def test_bbm_lattice_sum_matches_csch_series():
    L = 8.0
    w = bbm_w(L, 0.5)
    x = np.linspace(-L / 2, L / 2, 16, endpoint=False)
    assert np.abs(bbm_lattice_sum(w, L, x) - bbm_poisson_series(w, L, x)).max() < 1e-6


# ---------------------------------------------------------------- BBM speed


def test_bbm_speed_small_k_limit():
    L = 8.0
    cstar = 1 + 4 * math.pi**2 / (L * L - 4 * math.pi**2)
    assert cstar == pytest.approx(64 / (64 - 4 * math.pi**2), rel=1e-15)
    assert cstar == pytest.approx(2.60995, abs=1e-5)
    assert bbm_speed(L, 1e-7)[0] == pytest.approx(cstar, rel=1e-9)


@pytest.mark.parametrize("k", [0.1, 0.3, 0.5, 0.7])
def test_bbm_speed_roots(k):
    L = 8.0
    cp, cm = bbm_speed(L, k)
    assert cp > 1 and 0 < cm < 1
    for c in (cp, cm):
        assert abs(bbm_quadratic_residual(L, k, c)) < 1e-11 * L**4


def test_bbm_speed_rejects_large_modulus():
    L = 8.0
    kL = bbm_k_L(L)
    with pytest.raises(AdmissibilityError):
        bbm_speed(L, min(0.999999, kL + 1e-3))
    with pytest.raises(AdmissibilityError):
        bbm_speed(TWO_PI, 0.1)


def test_minus_branch_needs_flag():
    with pytest.raises(AdmissibilityError):
        bbm_params(8.0, 0.3, branch="minus")
    assert bbm_params(8.0, 0.3, branch="minus", allow_unstable=True).c < 1


def test_k_of_c_inverts_speed():
    L = 8.0
    for k in (0.15, 0.4, 0.6):
        assert bbm_k_of_c(bbm_speed(L, k)[0], L) == pytest.approx(k, rel=1e-10)
    with pytest.raises(AdmissibilityError):
        bbm_k_of_c(2.0, L)


# ------------------------------------------------------------ BBM cnoidal


@pytest.mark.parametrize("k", [0.2, 0.5])
def test_bbm_system_and_identities(k):
    L = 8.0
    q = bbm_params(L, k)
    scale = [abs(q.b) ** 2, abs(q.b) * (abs(q.a) + abs(q.b)), (abs(q.a) + abs(q.b)) ** 2]
    for r, s in zip(bbm_system_residuals(L, k), scale):
        assert abs(r) < 1e-9 * s
    assert q.d == pytest.approx(2 * q.K / L, rel=1e-11)
    assert q.b == pytest.approx(48 * q.c * q.K**2 / L**2, rel=1e-11)
    assert math.sqrt((q.beta3 - q.beta1) / (12 * q.c)) == pytest.approx(2 * q.K / L, rel=1e-11)


@pytest.mark.parametrize("k", [0.2, 0.5])
def test_bbm_ode_residual(k):
    w = bbm_cnoidal(8.0, k, make_grid(512, 8.0))
    assert bbm_residual(w) < 1e-8
    assert w.values().real.min() > 0


def test_bbm_rejects_wrong_grid():
    with pytest.raises(ValueError):
        bbm_cnoidal(8.0, 0.5, make_grid(512, 16.0))


def test_bbm_profile_is_even(bbm05):
    v = bbm05.values().real
    assert np.abs(v[1:] - v[1:][::-1]).max() < 1e-12


def test_bbm_fourier_coefficients(bbm05):
    L, k = 8.0, 0.5
    n = np.arange(-64, 65)
    an = bbm_fourier_coeffs(L, k, n)
    fft = bbm05.field.mode(n)
    assert np.abs(fft - an).max() < 1e-8 * np.abs(an).max()
    assert an[64] == pytest.approx(np.mean(bbm05.values().real), rel=1e-10)
    np.testing.assert_allclose(an[:64], an[65:][::-1], rtol=1e-12)
    for m in (1, 2, 3):
        assert abs(bbm05.field.mode(m) - bbm_fourier_coeffs(L, k, m)) < 1e-8


def test_bbm_small_k_amplitude_collapses():
    L = 8.0
    amps = []
    for k in (0.1, 0.05, 0.025):
        q = bbm_params(L, k)
        amps.append(q.beta3 - q.beta2)
        assert amps[-1] == pytest.approx(48 * q.c * q.K**2 * k * k / L**2, rel=1e-12)
    assert amps[0] > amps[1] > amps[2] > 0


# ------------------------------------------------------------ BBM scalars


def test_bbm_scalars_small_k_limit():
    L = 8.0
    s = bbm_scalars(L, 1e-6)
    assert s.a_tilde == pytest.approx(8 * math.pi**2 / L**2, rel=1e-9)


def test_bbm_dw_dk_against_differences():
    L, k, h = 8.0, 0.4, 1e-6
    fd = (bbm_w(L, k + h) - bbm_w(L, k - h)) / (2 * h)
    assert bbm_scalars(L, k).dw_dk == pytest.approx(fd, rel=1e-6)


def test_bbm_scalar_grid_monotonicity():
    L = 8.0
    top = 0.9 * min(bbm_k0(L), bbm_k_L(L))
    ks = np.linspace(0.01, top, 50)
    sc = [bbm_scalars(L, k) for k in ks]
    assert all(s.dw_dk > 0 for s in sc)
    assert np.all(np.diff([s.a_tilde for s in sc]) > 0)
    assert np.all(np.diff([s.c for s in sc]) > 0)
    assert all(s.a_tilde > 0 for s in sc)


def test_bbm_scalars_reject_k_beyond_k0():
    L = 8.0
    k0 = bbm_k0(L)
    # k0 sits within ~1e-10 of 1, where K/K' is steep; bisection to 1e-12 in k
    p = elliptic.complete_elliptic(k0)
    assert p.K / p.Kp == pytest.approx(L, rel=1e-4)
    with pytest.raises(AdmissibilityError):
        bbm_scalars(L, min(0.9999, k0 + 1e-3))
