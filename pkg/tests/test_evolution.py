import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rbolab.fourier import (
    SpectralField,
    apply_symbol,
    deriv,
    make_grid,
    neg_second_deriv,
    semigroup,
    sobolev_norm,
    transform,
)
from rbolab.evolution import (
    ContractionWindowError,
    IntegrationError,
    NonContractionError,
    ResolutionWarning,
    algebra_constant,
    conserved,
    contraction_window,
    default_dt,
    evolve_rk4,
    picard_solve,
    rhs,
)
from rbolab.waves import rbo_residual

TWO_PI = 2 * math.pi
g64 = make_grid(64, TWO_PI)


def smooth(grid=g64, amp=0.3):
    return SpectralField.from_function(grid, lambda x: amp * (np.cos(x) + 0.5 * np.sin(2 * x)))


def scaled_to_h1(f, target):
    return f * (target / sobolev_norm(f, 1))


# ------------------------------------------------------------------ rhs


def test_rhs_on_cosine():
    out = rhs(SpectralField.from_function(g64, np.cos))
    # linear part -i/(1+1) * 1/2 at n = 1; cos^2/2 feeds only modes 0 and 2
    assert out.mode(1) == pytest.approx(-0.25j, abs=1e-15)
    assert out.mode(2) == pytest.approx(-2j / 3 * 0.125, abs=1e-15)
    assert out.mode(0) == 0


def test_rhs_annihilates_constants():
    u = SpectralField.zeros(g64)
    u.coeffs[0] = 2.5
    assert np.abs(rhs(u).coeffs).max() == 0
    assert np.abs(rhs(u, dispersive=neg_second_deriv()).coeffs).max() == 0


def test_rhs_wave_frame_identity(rbo4):
    assert rbo_residual(rbo4) < 1e-9
    res = rhs(rbo4.field) + rbo4.speed * apply_symbol(rbo4.field, deriv())
    assert np.abs(res.values()).max() < 1e-9


def test_rhs_wave_frame_identity_bbm(bbm05):
    res = rhs(bbm05.field, dispersive=neg_second_deriv()) + bbm05.speed * apply_symbol(
        bbm05.field, deriv())
    assert np.abs(res.values()).max() < 1e-8


def test_rhs_generalised_power():
    u = smooth()
    out = rhs(u, p=3)
    assert out.hermitian_defect() < 1e-14
    assert out.mode(0) == 0


# ------------------------------------------------------------ conserved


def test_conserved_cosine_and_zero():
    q = conserved(SpectralField.from_function(g64, np.cos))
    assert q["F"] == pytest.approx(math.pi, rel=1e-14)
    assert q["G"] == pytest.approx(0, abs=1e-14)
    assert q["E"] == pytest.approx(0.5 * math.pi, rel=1e-14)  # int cos^3 = 0
    assert conserved(SpectralField.zeros(g64)) == {"E": 0.0, "F": 0.0, "G": 0.0}


@given(st.integers(0, 2**32 - 1))
def test_bbm_dispersive_energy_nonnegative(seed):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=64)
    u = transform(vals, g64)
    q = conserved(u, dispersive=neg_second_deriv())
    # F - (1/2) int u^2 = (1/2) int u_x^2
    assert q["F"] - 0.5 * TWO_PI * np.mean(vals**2) >= -1e-10


# ---------------------------------------------------------------- RK4


def test_zero_data_stays_zero():
    traj = evolve_rk4(SpectralField.zeros(g64), 0.5, 1e-2, save_every=10)
    assert all(np.abs(s.coeffs).max() == 0 for s in traj.states)
    assert len(traj.times) == 6


def test_dt_must_divide_T():
    with pytest.raises(ValueError):
        evolve_rk4(smooth(), 0.1, 0.03)
    traj = evolve_rk4(smooth(), 0.1, 0.03, fit_dt=True)
    assert traj.dt == pytest.approx(0.025) and traj.times[-1] == pytest.approx(0.1)
    with pytest.raises(ValueError):
        evolve_rk4(smooth(), 0.1, 0.0)


def test_default_dt():
    assert default_dt(smooth(amp=1000.0)) < 1e-3
    assert default_dt(SpectralField.zeros(g64)) == 1e-3


def test_linear_flow_matches_semigroup():
    u0 = smooth()
    T = 2.0
    exact = apply_symbol(u0, semigroup(T))
    errs = []
    for dt in (0.2, 0.1):
        out = evolve_rk4(u0, T, dt, linear=True).final
        errs.append(np.abs(out.coeffs - exact.coeffs).max())
    assert errs[1] < 1e-6
    assert math.log2(errs[0] / errs[1]) > 3.8


def test_time_reversibility():
    u0 = smooth()
    fwd = evolve_rk4(u0, 1.0, 1e-3).final
    back = evolve_rk4(fwd, -1.0, 1e-3).final
    assert np.abs(back.coeffs - u0.coeffs).max() < 1e-7


def test_mean_is_conserved_and_e_tracks_f():
    u0 = smooth()
    u0.coeffs[0] = 0.7
    traj = evolve_rk4(u0, 2.0, 1e-2)
    assert np.abs(traj.diagnostics["G"] - traj.diagnostics["G"][0]).max() < 1e-12
    # absolute drifts: |E| is several times smaller than F here
    d = {k: np.abs(traj.diagnostics[k] - traj.diagnostics[k][0]).max() for k in ("E", "F")}
    assert d["F"] / 10 <= d["E"] <= 10 * d["F"]


def test_observed_order_on_travelling_wave(rbo4):
    T = 0.5
    exact = rbo4.field.translate(-rbo4.speed * T)
    errs = []
    for dt in (0.02, 0.01, 0.005):
        out = evolve_rk4(rbo4.field, T, dt).final
        errs.append(np.abs(out.coeffs - exact.coeffs).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 3.9


def test_diagnostics_table_columns():
    traj = evolve_rk4(smooth(), 0.05, 1e-2)
    cols, data = traj.diagnostics_table()
    assert cols == ["t", "E", "F", "G", "H1/2", "H3/2"]
    assert data.shape == (6, 6)
    np.testing.assert_allclose(data[:, 0], np.linspace(0, 0.05, 6), atol=1e-15)


def test_blow_up_aborts_with_partial_trajectory():
    u0 = smooth(amp=1e3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with np.errstate(all="ignore"):
            with pytest.raises(IntegrationError) as info:
                evolve_rk4(u0, 200.0, 1.0)
    traj = info.value.trajectory
    assert traj is not None
    assert np.all(np.isfinite(traj.final.coeffs))


def test_underresolved_data_warns():
    rng = np.random.default_rng(3)
    u0 = transform(0.1 * rng.normal(size=64), g64)
    with pytest.warns(ResolutionWarning):
        traj = evolve_rk4(u0, 0.01, 1e-2)
    assert traj.warnings


# --------------------------------------------------------------- Picard


def test_algebra_constant_reference_value():
    c0 = algebra_constant(g64)
    assert 0.5 < c0 < 0.6


def test_picard_small_data_contracts_and_matches_rk4():
    u0 = scaled_to_h1(smooth(), 0.1)
    res = picard_solve(u0)
    assert res.converged
    assert np.all(res.ratios[1:] <= 0.55)
    T = res.times[-1]
    ref = evolve_rk4(u0, T, fit_dt=True, dt=1e-3).final
    assert np.abs(res.final.coeffs - ref.coeffs).max() < 1e-6
    assert res.window == pytest.approx(0.5 / (1 + res.c0 * 0.2))


def test_picard_zero_data():
    res = picard_solve(SpectralField.zeros(g64), T_req=0.3)
    assert res.iterations == 1 and res.converged
    assert all(np.abs(s.coeffs).max() == 0 for s in res.states)


def test_picard_rejects_time_beyond_window():
    u0 = scaled_to_h1(smooth(), 5.0)
    T, _, _ = contraction_window(u0)
    with pytest.raises(ContractionWindowError):
        picard_solve(u0, T_req=2 * T)


def test_picard_non_contraction_abort():
    u0 = scaled_to_h1(smooth(), 40.0)
    with pytest.raises(NonContractionError):
        picard_solve(u0, T_req=20.0, enforce_window=False)


def test_picard_mesh_validation():
    with pytest.raises(ValueError):
        picard_solve(smooth(), T_req=0.01, nodes=64)
    with pytest.raises(ValueError):
        picard_solve(smooth(), T_req=-1.0)
