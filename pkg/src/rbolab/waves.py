"""Explicit periodic travelling waves of the rBO and BBM equations.

rBO profiles live on [-L, L] (grid period 2L) and solve

    c H phi' + (c - 1) phi - phi^2 / 2 = 0.

BBM cnoidal profiles have period L (grid period L) and solve

    c phi'' - (c - 1) phi + phi^2 / 2 = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import optimize

from . import elliptic
from .fourier import (
    PeriodicGrid,
    SpectralField,
    dealiased_power,
    hilbert_deriv,
    neg_second_deriv,
    apply_symbol,
    transform,
)


class AdmissibilityError(ValueError):
    """Parameters outside the region where the positive wave family exists."""


@dataclass
class WaveProfile:
    kind: str
    grid: PeriodicGrid
    field: SpectralField
    speed: float
    params: dict = field(default_factory=dict)
    tail_bound: float = 0.0

    def analytic_coeffs(self, n) -> np.ndarray:
        n = np.asarray(n)
        if self.kind == "rbo":
            return rbo_coefficients(self.speed, self.params["L"], n)
        if self.kind == "bbm_cnoidal":
            return bbm_fourier_coeffs(self.params["L"], self.params["k"], n,
                                      branch=self.params.get("branch", "plus"))
        raise ValueError(f"unknown wave kind {self.kind!r}")

    def values(self) -> np.ndarray:
        return self.field.values()


# ---------------------------------------------------------------- rBO


def rbo_eta(c: float, L: float) -> float:
    """Decay rate eta with tanh(eta) = c pi / ((c - 1) L)."""
    if L < math.pi:
        raise AdmissibilityError(
            f"L={L} < pi: only c in (1 + pi/(L - pi), 0) solve the coefficient "
            "relation (case (b)); those waves are negative"
        )
    if L == math.pi:
        raise AdmissibilityError(
            "L = pi: only negative speeds solve the coefficient relation (case (a))"
        )
    cmin = 1 + math.pi / (L - math.pi)
    if c == 1:
        raise AdmissibilityError("c = 1: the only smooth solution is phi = 0")
    if c < 0:
        raise AdmissibilityError(
            f"c={c} < 0 lies on the negative branch of case (c); the wave is negative"
        )
    if c <= cmin:
        raise AdmissibilityError(
            f"c={c} must exceed 1 + pi/(L - pi) = {cmin:.15g} for L={L} (case (c))"
        )
    arg = c * math.pi / ((c - 1) * L)
    assert 0 < arg < 1
    return math.atanh(arg)


def rbo_deta_dc(c: float, L: float) -> float:
    rbo_eta(c, L)
    x = c * math.pi / ((c - 1) * L)
    return -math.pi / ((c - 1) ** 2 * L) / (1 - x * x)


def rbo_coefficients(c: float, L: float, n) -> np.ndarray:
    eta = rbo_eta(c, L)
    return 2 * c * math.pi / L * np.exp(-eta * np.abs(np.asarray(n, dtype=float)))


def rbo_dcoeff_dc(c: float, L: float, n) -> np.ndarray:
    eta = rbo_eta(c, L)
    deta = rbo_deta_dc(c, L)
    an = np.abs(np.asarray(n, dtype=float))
    e = np.exp(-eta * an)
    return 2 * math.pi / L * e - 2 * c * math.pi / L * an * e * deta


def rbo_self_convolution(c: float, L: float, n) -> np.ndarray:
    """(a*a)(n) = (4 pi^2 c^2 / L^2) e^{-eta|n|} (|n| + coth eta), summed in closed form."""
    eta = rbo_eta(c, L)
    n = np.abs(np.asarray(n, dtype=float))
    return (2 * math.pi * c / L) ** 2 * np.exp(-eta * n) * (n + 1 / math.tanh(eta))


def rbo_profile_values(c: float, L: float, x) -> np.ndarray:
    eta = rbo_eta(c, L)
    x = np.asarray(x, dtype=float)
    return 2 * c * math.pi / L * math.sinh(eta) / (math.cosh(eta) - np.cos(math.pi * x / L))


def _check_period(grid: PeriodicGrid, period: float):
    if not math.isclose(grid.period, period, rel_tol=1e-14):
        raise ValueError(f"grid period {grid.period} != required {period}")


def rbo_wave(c: float, L: float, grid: PeriodicGrid) -> WaveProfile:
    _check_period(grid, 2 * L)
    eta = rbo_eta(c, L)
    f = transform(rbo_profile_values(c, L, grid.x), grid)
    h = grid.nyquist
    tail = 2 * c * math.pi / L * math.exp(-eta * h) / (1 - math.exp(-eta))
    return WaveProfile("rbo", grid, f, float(c), {"L": float(L), "eta": eta}, tail)


def rbo_residual_field(u: SpectralField, c: float) -> SpectralField:
    """c H u' + (c - 1) u - u^2 / 2, spectrally."""
    return (c * apply_symbol(u, hilbert_deriv()) + (c - 1) * u
            - 0.5 * dealiased_power(u, 2))


def rbo_residual(profile, c: float | None = None) -> float:
    """Max-norm of the rBO travelling-wave residual.

    Accepts a WaveProfile, or a SpectralField together with a trial speed.
    """
    if isinstance(profile, WaveProfile):
        u, c = profile.field, profile.speed if c is None else c
    else:
        u = profile
        if c is None:
            raise ValueError("speed required for a bare field")
    return float(np.abs(rbo_residual_field(u, c).values()).max())


def rbo_dwave_dc(c: float, L: float, grid: PeriodicGrid) -> SpectralField:
    """chi = -d phi_c / dc, from the analytic coefficients."""
    _check_period(grid, 2 * L)
    return SpectralField(grid, -rbo_dcoeff_dc(c, L, grid.modes))


def rbo_flux(c: float, L: float) -> float:
    """sum_n (1 + pi|n|/L) a_n^2 in closed form (geometric series)."""
    eta = rbo_eta(c, L)
    q = math.exp(-2 * eta)
    amp = (2 * math.pi * c / L) ** 2
    return amp * (1 / math.tanh(eta) + (math.pi / L) * 2 * q / (1 - q) ** 2)


def rbo_index_analytic(c: float, L: float) -> float:
    """(chi, phi + H phi') = -L d/dc sum_n (1 + pi|n|/L) a_n^2, closed form."""
    eta = rbo_eta(c, L)
    deta = rbo_deta_dc(c, L)
    q = math.exp(-2 * eta)
    amp = (2 * math.pi / L) ** 2 * c * c
    damp = 2 * (2 * math.pi / L) ** 2 * c
    G = 1 / math.tanh(eta) + (math.pi / L) * 2 * q / (1 - q) ** 2
    dG = -1 / math.sinh(eta) ** 2 - (math.pi / L) * 4 * q * (1 + q) / (1 - q) ** 3
    return -L * (damp * G + amp * dG * deta)


def rbo_lattice_sum(w: float, L: float, x, m_max: int = 10**4) -> np.ndarray:
    """sum_m of the solitary wave 4(w-1)/(1 + ((w-1)(x + 2Lm)/w)^2).

    The |m| > m_max tail is replaced by its integral (midpoint rule), which
    makes the truncated sum accurate to O(m_max^-3).
    """
    x = np.asarray(x, dtype=float)
    s = (w - 1) / w
    m = np.arange(-m_max, m_max + 1)
    y = x[..., None] + 2 * L * m
    total = np.sum(4 * (w - 1) / (1 + (s * y) ** 2), axis=-1)
    # int_{M+1/2}^inf 4(w-1)/(1 + s^2 (x + 2Lm)^2) dm, both sides
    amp = 4 * (w - 1) / (2 * L * s)
    hi = s * (x + 2 * L * (m_max + 0.5))
    lo = s * (x - 2 * L * (m_max + 0.5))
    tail = amp * ((math.pi / 2 - np.arctan(hi)) + (math.pi / 2 + np.arctan(lo)))
    return total + tail


def rbo_poisson_profile(w: float, L: float, x) -> np.ndarray:
    """Closed form of the 2L-periodisation of the rBO solitary wave of speed w."""
    lam = math.pi * w / ((w - 1) * L)
    x = np.asarray(x, dtype=float)
    return 2 * math.pi * w / L * math.sinh(lam) / (math.cosh(lam) - np.cos(math.pi * x / L))


# ---------------------------------------------------------------- BBM


def _bbm_disc(L: float, k: float) -> float:
    p = elliptic.complete_elliptic(k)
    return L * L - 16 * p.K**2 * math.sqrt(1 - k * k + k**4)


def bbm_k_L(L: float) -> float:
    """Modulus where L^2 - 16 K^2 sqrt(1 - k^2 + k^4) changes sign."""
    if L <= 2 * math.pi:
        raise AdmissibilityError(f"BBM cnoidal family needs L > 2 pi, got {L}")
    return optimize.bisect(lambda k: _bbm_disc(L, k), 1e-14, 1 - 1e-15,
                           xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)


def bbm_k0(L: float) -> float:
    """Modulus where K(k) / K(k') = L."""
    def g(k):
        p = elliptic.complete_elliptic(k)
        return p.K / p.Kp - L
    return optimize.bisect(g, 1e-14, 1 - 1e-15, xtol=1e-12,
                           rtol=4 * np.finfo(float).eps, maxiter=200)


def bbm_speed(L: float, k: float) -> tuple[float, float]:
    """Roots (c_plus, c_minus) of the BBM speed quadratic."""
    if L <= 2 * math.pi:
        raise AdmissibilityError(f"BBM cnoidal family needs L > 2 pi, got {L}")
    p = elliptic.complete_elliptic(k)
    X = 16 * p.K**2 * math.sqrt(1 - k * k + k**4)
    if L * L - X <= 0:
        raise AdmissibilityError(
            f"k={k} is not below k_L(L={L}); L^2 - 16K^2 sqrt(1-k^2+k^4) = {L*L - X:.3e}"
        )
    return L * L / (L * L - X), L * L / (L * L + X)


def bbm_quadratic_residual(L: float, k: float, c: float) -> float:
    p = elliptic.complete_elliptic(k)
    L4 = L**4
    return (256 * p.K**4 * (1 - k * k + k**4) - L4) * c * c + 2 * c * L4 - L4


def _bbm_speed_branch(L, k, branch, allow_unstable):
    c_plus, c_minus = bbm_speed(L, k)
    if branch == "plus":
        return c_plus
    if branch == "minus":
        if not allow_unstable:
            raise AdmissibilityError(
                "c_minus lies in (0, 1); pass allow_unstable=True to construct it"
            )
        return c_minus
    raise ValueError(f"unknown branch {branch!r}")


@dataclass(frozen=True)
class BBMParams:
    L: float
    k: float
    c: float
    a: float
    b: float
    d: float
    beta1: float
    beta2: float
    beta3: float
    K: float
    E: float


def bbm_params(L: float, k: float, branch="plus", allow_unstable=False) -> BBMParams:
    c = _bbm_speed_branch(L, k, branch, allow_unstable)
    p = elliptic.complete_elliptic(k)
    K, E = p.K, p.E
    d = 2 * K / L
    b = 48 * c * K * K / (L * L)
    a = 16 * c * K / L**2 * (3 * E - (1 + p.kp**2) * K) + c - 1
    beta2 = 16 * c * K * K * (2 * p.kp**2 - 1) / L**2 + c - 1
    beta3 = 16 * c * K * K * (1 + k * k) / L**2 + c - 1
    beta1 = beta3 - 48 * c * K * K / L**2
    return BBMParams(L, k, c, a, b, d, beta1, beta2, beta3, K, E)


def bbm_system_residuals(L: float, k: float, branch="plus", allow_unstable=False):
    """Residuals of the three algebraic equations for a + b(dn^2(d x) - E/K)."""
    q = bbm_params(L, k, branch, allow_unstable)
    a, b, d, c = q.a, q.b, q.d, q.c
    r = q.E / q.K
    kp2 = 1 - k * k
    r1 = b * b / 2 - 6 * c * b * d * d
    r2 = 4 * b * d * d * c * (1 + kp2) + a * b - b * b * r - (c - 1) * b
    r3 = (a * a / 2 - a * b * r + b * b / 2 * r * r - (c - 1) * a
          + (c - 1) * b * r - 2 * c * b * d * d * kp2)
    return r1, r2, r3


def bbm_profile_values(L: float, k: float, x, branch="plus", allow_unstable=False):
    q = bbm_params(L, k, branch, allow_unstable)
    scale = math.sqrt((q.beta3 - q.beta1) / (12 * q.c))
    _, cn, _ = elliptic.jacobi(scale * np.asarray(x, dtype=float), k)
    return q.beta2 + (q.beta3 - q.beta2) * cn**2


def bbm_cnoidal(L: float, k: float, grid: PeriodicGrid, branch="plus",
                allow_unstable=False) -> WaveProfile:
    _check_period(grid, L)
    q = bbm_params(L, k, branch, allow_unstable)
    f = transform(bbm_profile_values(L, k, grid.x, branch, allow_unstable), grid)
    n = np.arange(grid.nyquist + 1, grid.nyquist + 400)
    tail = float(np.sum(np.abs(bbm_fourier_coeffs(L, k, n, branch, allow_unstable))))
    params = {"L": float(L), "k": float(k), "branch": branch, "a": q.a, "b": q.b,
              "d": q.d, "beta1": q.beta1, "beta2": q.beta2, "beta3": q.beta3,
              "w": bbm_w(L, k)}
    return WaveProfile("bbm_cnoidal", grid, f, q.c, params, tail)


def bbm_residual_field(u: SpectralField, c: float) -> SpectralField:
    """c u'' - (c - 1) u + u^2 / 2."""
    return (-c * apply_symbol(u, neg_second_deriv()) - (c - 1) * u
            + 0.5 * dealiased_power(u, 2))


def bbm_residual(profile: WaveProfile) -> float:
    return float(np.abs(bbm_residual_field(profile.field, profile.speed).values()).max())


def bbm_w(L: float, k: float) -> float:
    """w(k) > 1 with sqrt((w - 1)/w) = K(k) / (K(k') L); needs k < k0."""
    p = elliptic.complete_elliptic(k)
    r = p.K / (p.Kp * L)
    if r >= 1:
        raise AdmissibilityError(f"k={k} is not below k0(L={L}); K/(K'L) = {r}")
    return 1.0 / (1.0 - r * r)


def bbm_fourier_coeffs(L: float, k: float, n, branch="plus", allow_unstable=False):
    """Fourier coefficients of the cnoidal profile.

    Mean a(k) at n = 0 and 24 c pi^2 / L^2 |n| csch(pi |n| K'/K) otherwise,
    from the Fourier series of dn^2.
    """
    q = bbm_params(L, k, branch, allow_unstable)
    p = elliptic.complete_elliptic(k)
    n = np.abs(np.asarray(n, dtype=float))
    theta = math.pi * p.Kp / p.K
    with np.errstate(over="ignore"):
        body = 24 * q.c * math.pi**2 / L**2 * n / np.sinh(theta * np.where(n == 0, 1, n))
    return np.where(n == 0, q.a, body)


@dataclass(frozen=True)
class BBMScalars:
    w: float
    dw_dk: float
    a_tilde: float
    s_tilde: float
    a: float
    c: float


def bbm_scalars(L: float, k: float) -> BBMScalars:
    k0 = bbm_k0(L)
    if k >= k0:
        raise AdmissibilityError(f"k={k} >= k0={k0}: w(k) is not finite")
    c, _ = bbm_speed(L, k)
    p = elliptic.complete_elliptic(k)
    K, Kp, E = p.K, p.Kp, p.E
    w = bbm_w(L, k)
    # d/dk of K'^2 L^2 / (K'^2 L^2 - K^2)
    dw = (2 * L * L * Kp * K * (Kp * elliptic.dK_dk(p) - K * elliptic.dKp_dk(p))
          / (L * L * Kp * Kp - K * K) ** 2)
    root = math.sqrt(1 - k * k + k**4)
    a_t = 16 * K * K / L**2 * (3 * E / K - 2 + k * k + root)
    s_t = 16 * K * K / L**2 * (root - 2 + k * k + 3 * E / K) - 24 / L**2 * K / Kp
    return BBMScalars(w, dw, a_t, s_t, c * a_t, c)


def bbm_k_of_c(c: float, L: float) -> float:
    """Invert c_plus(k) on (0, k_L)."""
    cstar = 1 + 4 * math.pi**2 / (L * L - 4 * math.pi**2)
    if c <= cstar:
        raise AdmissibilityError(f"c={c} must exceed c*={cstar}")
    kL = bbm_k_L(L)
    return optimize.brentq(lambda k: bbm_speed(L, k)[0] - c, 1e-12,
                           kL * (1 - 1e-12), xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=300)


def bbm_wave_at_speed(c: float, L: float, grid: PeriodicGrid) -> WaveProfile:
    return bbm_cnoidal(L, bbm_k_of_c(c, L), grid)


def bbm_lattice_sum(w: float, L: float, x, m_max: int = 200) -> np.ndarray:
    """L-periodisation of the BBM solitary wave 3(w-1) sech^2(sqrt((w-1)/w) x/2)."""
    x = np.asarray(x, dtype=float)
    beta = math.sqrt((w - 1) / w)
    m = np.arange(-m_max, m_max + 1)
    y = x[..., None] + L * m
    return np.sum(3 * (w - 1) / np.cosh(0.5 * beta * y) ** 2, axis=-1)


def bbm_poisson_series(w: float, L: float, x, n_max: int = 400) -> np.ndarray:
    """csch Fourier series of the L-periodised BBM solitary wave."""
    x = np.asarray(x, dtype=float)
    beta = math.sqrt((w - 1) / w)
    n = np.arange(1, n_max + 1)
    xi = 2 * math.pi * n / L
    with np.errstate(over="ignore"):
        coef = 24 * math.pi**2 * w * n / L**2 / np.sinh(math.pi * xi / beta)
    return 12 * w * beta / L + 2 * np.sum(coef * np.cos(np.multiply.outer(x, xi)), axis=-1)
