import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rbolab.fourier import (
    SpectralField,
    apply_symbol,
    bessel,
    convolve_coeffs,
    dealiased_power,
    dealiased_product,
    deriv,
    half_deriv,
    hilbert,
    hilbert_deriv,
    inner_product,
    inverse_transform,
    k_rbo,
    lambda_smooth,
    make_grid,
    neg_second_deriv,
    semigroup,
    sobolev_norm,
    transform,
    weighted_half_norm,
)

TWO_PI = 2 * math.pi
g64 = make_grid(64, TWO_PI)


def field(f, grid=g64):
    return SpectralField.from_function(grid, f)


def bandlimited(grid, rng, kmax):
    n = grid.modes
    c = (rng.normal(size=n.size) + 1j * rng.normal(size=n.size)) * (np.abs(n) <= kmax)
    return transform(SpectralField(grid, c).values().real, grid)


# ---------------------------------------------------------------- grids


def test_grid_frequencies_equal_modes_at_two_pi():
    g = make_grid(8, TWO_PI)
    assert sorted(g.modes.tolist()) == list(range(-3, 5))
    np.testing.assert_allclose(g.xi, g.modes, atol=1e-15)


def test_grid_half_frequency_on_four_pi():
    g = make_grid(256, 2 * TWO_PI)
    assert g.xi[g.index(1)] == pytest.approx(0.5)


@pytest.mark.parametrize("N,P", [(7, 1.0), (6, 1.0), (8, 0.0), (8, -1.0)])
def test_grid_rejects_bad_sizes(N, P):
    with pytest.raises(ValueError):
        make_grid(N, P)


def test_grid_points_start_at_minus_half_period():
    g = make_grid(16, 3.0)
    assert g.x[0] == pytest.approx(-1.5)
    np.testing.assert_allclose(np.diff(g.x), 3.0 / 16)


# ------------------------------------------------------------ transform


def test_cosine_has_two_half_coefficients():
    f = field(np.cos)
    assert f.mode(1) == pytest.approx(0.5)
    assert f.mode(-1) == pytest.approx(0.5)
    others = np.delete(np.abs(f.coeffs), g64.index([1, -1]))
    assert others.max() < 1e-14


def test_constant_is_pure_mean():
    f = field(np.ones_like)
    assert f.mode(0) == pytest.approx(1.0)
    assert np.abs(f.coeffs[1:]).max() < 1e-15


def test_transform_length_mismatch():
    with pytest.raises(ValueError):
        transform(np.zeros(10), g64)


@given(arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)))
def test_round_trip_random_real_data(samples):
    back = inverse_transform(transform(samples, g64))
    assert np.abs(back - samples).max() <= 1e-12 * max(1.0, np.abs(samples).max())


def test_transform_is_hermitian_for_real_data(rng):
    f = transform(rng.normal(size=64), g64)
    assert f.hermitian_defect() < 1e-12


# -------------------------------------------------------------- symbols


def test_hilbert_maps_cos_to_sin():
    for n in (1, 3, 7):
        out = apply_symbol(field(lambda x: np.cos(n * x)), hilbert())
        assert np.abs(out.values() - np.sin(n * g64.x)).max() < 1e-13


def test_k_rbo_on_sine_at_two_pi():
    out = apply_symbol(field(np.sin), k_rbo())
    assert out.mode(1) == pytest.approx(-0.25)
    assert np.abs(out.values() + 0.5 * np.cos(g64.x)).max() < 1e-14


def test_semigroup_zero_is_identity(rng):
    f = bandlimited(g64, rng, 20)
    np.testing.assert_allclose(apply_symbol(f, semigroup(0.0)).coeffs, f.coeffs, atol=1e-15)


@given(st.floats(-20, 20))
def test_semigroup_composition_inverts(t):
    rng = np.random.default_rng(0)
    f = bandlimited(g64, rng, 30)
    back = apply_symbol(apply_symbol(f, semigroup(t)), semigroup(-t))
    assert np.abs(back.coeffs - f.coeffs).max() < 1e-12 * np.abs(f.coeffs).max()


def test_hilbert_squared_is_minus_identity_on_mean_zero(rng):
    f = bandlimited(g64, rng, 25)
    f.coeffs[0] = 0
    hh = apply_symbol(apply_symbol(f, hilbert()), hilbert())
    assert np.abs(hh.coeffs + f.coeffs).max() < 1e-14


@pytest.mark.parametrize("sym", [hilbert_deriv(), neg_second_deriv(), bessel(0.7), half_deriv(),
                                 lambda_smooth()])
def test_real_symbols_are_even(sym):
    v = sym.evaluate(g64)
    n = g64.modes[np.abs(g64.modes) < 32]
    np.testing.assert_allclose(v[g64.index(n)], v[g64.index(-n)])
    assert np.abs(v.imag).max() == 0


@pytest.mark.parametrize("sym", [hilbert(), deriv(), k_rbo()])
def test_imaginary_symbols_are_odd(sym):
    v = sym.evaluate(g64)
    n = g64.modes[np.abs(g64.modes) < 32]
    np.testing.assert_allclose(v[g64.index(n)], -v[g64.index(-n)])
    assert np.abs(v.real).max() == 0


def test_symbols_keep_real_fields_real(rng):
    f = bandlimited(g64, rng, 32)
    for sym in (hilbert(), deriv(), k_rbo(), semigroup(1.3), hilbert_deriv()):
        assert apply_symbol(f, sym).hermitian_defect() < 1e-13


# ---------------------------------------------------------------- norms


def test_sobolev_norm_examples():
    c = field(np.cos)
    assert sobolev_norm(c, 0) == pytest.approx(math.sqrt(math.pi))
    assert sobolev_norm(c, 1) == pytest.approx(math.sqrt(TWO_PI))
    assert sobolev_norm(SpectralField.zeros(g64), 2.5) == 0


def test_weighted_half_norm_examples():
    assert weighted_half_norm(field(np.ones_like), 2) == pytest.approx(math.sqrt(math.pi))
    assert weighted_half_norm(field(np.cos), 2) == pytest.approx(math.sqrt(1.5 * math.pi))
    with pytest.raises(ValueError):
        weighted_half_norm(field(np.cos), 1.0)


def test_weighted_half_norm_monotone_in_speed(rng):
    f = bandlimited(g64, rng, 10)
    vals = [weighted_half_norm(f, c) for c in (1.1, 2, 5, 50, 1e6)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_inner_product_orthogonality_and_parseval(rng):
    assert abs(inner_product(field(np.cos), field(np.sin))) < 1e-14
    f = bandlimited(g64, rng, 20)
    quad = TWO_PI * np.mean(f.values().real ** 2)
    assert inner_product(f, f) == pytest.approx(quad, rel=1e-10)


def test_inner_product_rejects_complex_pairing():
    f = SpectralField(g64, np.zeros(64))
    f.coeffs[1] = 1j
    g = SpectralField(g64, np.zeros(64))
    g.coeffs[1] = 1
    with pytest.raises(ValueError):
        inner_product(f, g)


def test_grid_mismatch_raises():
    with pytest.raises(ValueError):
        inner_product(field(np.cos), SpectralField.zeros(make_grid(32, TWO_PI)))


# ---------------------------------------------------------- convolution


def test_convolution_matches_padded_product(rng):
    f, g = bandlimited(g64, rng, 31), bandlimited(g64, rng, 31)
    a = convolve_coeffs(f, g).coeffs
    b = dealiased_product(f, g).coeffs
    assert np.abs(a - b).max() < 1e-10 * np.abs(a).max()


def test_convolution_with_constant():
    c = SpectralField.zeros(g64)
    c.coeffs[0] = 3.0
    f = field(lambda x: np.sin(2 * x))
    np.testing.assert_allclose(convolve_coeffs(c, f).coeffs, 3 * f.coeffs, atol=1e-15)


def test_dealiased_power_exact_for_low_modes():
    f = field(lambda x: np.cos(3 * x) + 0.5)
    cube = dealiased_power(f, 3)
    exact = field(lambda x: (np.cos(3 * x) + 0.5) ** 3)
    assert np.abs(cube.coeffs - exact.coeffs).max() < 1e-14


def test_dealiased_product_drops_aliased_modes():
    # cos(30x)^2 has a mode at 60 which must not fold back onto the grid
    f = field(lambda x: np.cos(30 * x))
    sq = dealiased_product(f, f)
    assert sq.mode(0) == pytest.approx(0.5)
    assert np.abs(np.delete(sq.coeffs, 0)).max() < 1e-14
