"""Orbital-stability perturbation runs and ill-posedness growth witnesses."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
import math

import numpy as np
from scipy import optimize
from scipy.integrate import simpson

from .evolution import evolve_rk4, conserved
from .fourier import (
    SpectralField,
    SymbolSpec,
    apply_symbol,
    dealiased_product,
    deriv,
    hilbert_deriv,
    inner_product,
    make_grid,
    semigroup,
    sobolev_norm,
)


# ------------------------------------------------------- orbital distance


@dataclass
class OrbitalDistance:
    distance: float
    shift: float
    coarse_shift: float


def _norm_weights(grid, norm: str, c: float | None, s: float):
    if norm == "H1/2":
        return grid.period * (1.0 + grid.modes.astype(float) ** 2) ** 0.5
    if norm == "Hs":
        return grid.period * (1.0 + grid.modes.astype(float) ** 2) ** s
    if norm == "weighted":
        if c is None or not c > 1:
            raise ValueError("weighted norm needs a speed c > 1")
        return grid.period * (np.abs(grid.xi) + (c - 1) / c)
    raise ValueError(f"unknown norm {norm!r}")


def orbital_distance(u: SpectralField, profile, norm: str = "H1/2", c: float | None = None,
                     s: float = 0.5) -> OrbitalDistance:
    """inf_y ||u - phi(. + y)|| together with the shift r = -y in (-P/2, P/2].

    The returned shift satisfies u(. + r) ~ phi, so u = phi(. + 0.3) gives
    r = -0.3.

    A lattice of 4N shifts picks the basin of the global minimum; the shift is
    then refined to 1e-10 P by a root of the correlation derivative, with a
    bounded scalar minimisation as fallback.
    """
    phi = profile.field if hasattr(profile, "field") else profile
    if u.grid != phi.grid:
        raise ValueError("u and the profile live on different grids")
    g = u.grid
    if c is None and hasattr(profile, "speed"):
        c = profile.speed
    w = _norm_weights(g, norm, c, s)
    a, b, xi = u.coeffs, phi.coeffs, g.xi
    cross = w * a * b.conj()

    def dcorr(y):
        return float(np.real(np.sum(-1j * xi * cross * np.exp(-1j * xi * y))))

    def dist(y):
        diff = a - b * np.exp(1j * xi * y)
        return math.sqrt(float(np.sum(w * np.abs(diff) ** 2)))

    P = g.period
    K = 4 * g.num_points
    ys = -P / 2 + P * np.arange(K) / K
    vals = np.real(np.exp(-1j * np.outer(ys, xi)) @ cross)
    j = int(np.argmax(vals))
    y0 = float(ys[j])
    h = P / K
    lo, hi = y0 - h, y0 + h
    y = None
    dlo, dhi = dcorr(lo), dcorr(hi)
    if dlo > 0 > dhi:
        y = optimize.brentq(dcorr, lo, hi, xtol=1e-12 * P, rtol=4 * np.finfo(float).eps)
    if y is None:
        res = optimize.minimize_scalar(dist, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-10 * P})
        y = float(res.x)
    cand = [y, y0]
    best = min(cand, key=dist)
    r = (P / 2 - best) % P - P / 2
    if r == -P / 2:
        r = P / 2
    return OrbitalDistance(dist(best), float(r), float(_wrap(-y0, P)))


# ------------------------------------------------------- stability runs


@dataclass
class StabilityRun:
    params: dict
    times: np.ndarray
    distances: np.ndarray
    shifts: np.ndarray
    orthogonality: np.ndarray
    jumps: list
    initial_distance: float
    max_ratio: float
    trend_slope: float
    F_drift: float
    perturbation_F_defect: float
    warnings: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            **self.params,
            "initial_distance": self.initial_distance,
            "max_ratio": self.max_ratio,
            "trend_slope": self.trend_slope,
            "max_orthogonality": float(np.abs(self.orthogonality).max()),
            "jumps": self.jumps,
            "F_drift": self.F_drift,
            "perturbation_F_defect": self.perturbation_F_defect,
        }


def _dispersive_norm_s(dispersive: SymbolSpec) -> float:
    return 1.0 if dispersive.name == "neg_second_deriv" else 0.5


def perturbation_direction(profile, kind="first_harmonic", dispersive: SymbolSpec | None = None,
                           s: float | None = None) -> SpectralField:
    """Unit H^s direction orthogonal in L^2 to F'(phi) = phi + A phi and to constants."""
    dispersive = dispersive or hilbert_deriv()
    s = _dispersive_norm_s(dispersive) if s is None else s
    phi = profile.field
    g = phi.grid
    if isinstance(kind, SpectralField):
        q = kind
    else:
        k = {"first_harmonic": 1, "second_harmonic": 2}.get(kind)
        if k is None:
            raise ValueError(f"unknown perturbation {kind!r}")
        q = SpectralField.from_function(g, lambda x: np.cos(2 * np.pi * k * x / g.period))
    R = phi + apply_symbol(phi, dispersive)
    one = SpectralField.from_function(g, lambda x: np.ones_like(x))
    basis = []
    for v in (one, R):
        for e in basis:
            v = v - e * inner_product(v, e)
        basis.append(v * (1.0 / math.sqrt(inner_product(v, v))))
    for e in basis:
        q = q - e * inner_product(q, e)
    nq = sobolev_norm(q, s)
    if nq < 1e-12:
        raise ValueError("perturbation lies in span{F'(phi), 1}")
    return q * (1.0 / nq)


def perturbed_initial_data(profile, delta: float, kind="first_harmonic", normalize: bool = True,
                           dispersive: SymbolSpec | None = None, p: int = 1, s: float | None = None):
    """phi + delta q (+ mu r), with mu chosen so that F(u0) = F(phi) exactly.

    r = F'(phi) minus its mean, so the correction leaves G unchanged.
    Returns (u0, relative F defect).
    """
    dispersive = dispersive or hilbert_deriv()
    phi = profile.field
    q = perturbation_direction(profile, kind, dispersive, s)
    u0 = phi + q * delta
    F0 = conserved(phi, p, dispersive)["F"]
    if normalize and delta != 0:
        R = phi + apply_symbol(phi, dispersive)
        r = SpectralField(R.grid, R.coeffs.copy())
        r.coeffs[0] = 0.0
        Ar = r + apply_symbol(r, dispersive)
        Au = u0 + apply_symbol(u0, dispersive)
        qa = 0.5 * inner_product(r, Ar)
        qb = inner_product(Au, r)
        qc = conserved(u0, p, dispersive)["F"] - F0
        disc = qb * qb - 4 * qa * qc
        if disc < 0:
            raise ValueError("cannot restore F along F'(phi)")
        mu = -2 * qc / (qb + math.copysign(math.sqrt(disc), qb))
        u0 = u0 + r * mu
    defect = abs(conserved(u0, p, dispersive)["F"] - F0) / abs(F0)
    return u0, defect


def _wrap(y, P):
    return (y + P / 2) % P - P / 2


def stability_run(profile, delta: float, T: float, perturbation="first_harmonic",
                  normalize: bool = True, dt: float | None = None, sample_dt: float = 0.05,
                  dispersive: SymbolSpec | None = None, p: int = 1, norm: str | None = None,
                  jump_fraction: float = 0.05) -> StabilityRun:
    """Evolve a perturbed wave and record its orbital distance d(t).

    The distance uses H^{1/2} for rBO and H^1 for BBM (``norm`` overrides).
    Jumps of the optimal shift, after removing the drift c t, larger than
    ``jump_fraction`` of the period are flagged.
    """
    dispersive = dispersive or hilbert_deriv()
    s = _dispersive_norm_s(dispersive)
    norm = norm or ("H1/2" if s == 0.5 else "Hs")
    phi = profile.field
    P = phi.grid.period
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta > 0.05 * sobolev_norm(phi, s):
        raise ValueError("delta exceeds 5% of the wave norm")
    u0, defect = perturbed_initial_data(profile, delta, perturbation, normalize, dispersive, p, s)
    if dt is None:
        dt = min(1e-3, 0.2 / float(np.abs(u0.values()).max()))
    every = max(1, int(round(sample_dt / dt)))
    traj = evolve_rk4(u0, T, dt, p=p, dispersive=dispersive, save_every=every, fit_dt=True)
    c = profile.speed
    d, y, orth = [], [], []
    for t, u in zip(traj.times, traj.states):
        od = orbital_distance(u, profile, norm=norm, s=s)
        d.append(od.distance)
        y.append(od.shift)
        ph = phi.translate(-od.shift)
        v = u - ph
        pp = dealiased_product(ph, apply_symbol(ph, deriv()))
        # v is pure round-off when delta = 0, so take real parts directly
        nv, npp = np.linalg.norm(v.coeffs), np.linalg.norm(pp.coeffs)
        dot = float(np.real(np.vdot(pp.coeffs, v.coeffs)))
        orth.append(dot / (nv * npp) if nv > 0 else 0.0)
    d, y, times = np.array(d), np.array(y), traj.times
    comoving = _wrap(y - c * times, P)
    steps = _wrap(np.diff(comoving), P)
    jumps = [float(times[i + 1]) for i in np.flatnonzero(np.abs(steps) > jump_fraction * P)]
    half = times >= times[-1] / 2
    slope = float(np.polyfit(times[half], d[half], 1)[0]) if half.sum() >= 2 else 0.0
    params = {"speed": c, "delta": delta, "T": T, "dt": traj.dt, "perturbation": str(perturbation),
              "normalize": normalize, "norm": norm, "kind": getattr(profile, "kind", "")}
    return StabilityRun(params, times, d, y, np.array(orth), jumps, float(d[0]),
                        float(d.max() / delta) if delta > 0 else float(d.max()),
                        slope, traj.drift("F"), defect, list(traj.warnings))


# ------------------------------------------------ periodic ill-posedness


def gamma_N(N):
    N = np.asarray(N, dtype=float)
    return 2 * N**2 / ((1 + N) * (1 + 2 * N))


def _check_illposed(s, t):
    if not s < 0:
        raise ValueError(f"s must be negative, got {s}")
    if not 0 <= t < 2 * np.pi:
        raise ValueError(f"t must lie in [0, 2pi), got {t}")


def psi_coefficient(N, s, t):
    """Fourier coefficient of the second iterate at mode 2N (P = 2 pi)."""
    N = np.asarray(N, dtype=float)
    A = 0.5 * N ** (1 - 2 * s) / (gamma_N(N) * (1 + 2 * N))
    nu = 2 * N / (1 + 2 * N)
    om = 2 * N / (1 + N)
    return 0.5 * A * (np.exp(-1j * nu * t) - np.exp(-1j * om * t))


def illposed_ratio(N, s, t):
    """||psi(t)||_{H^s} / ||phi||_{H^s}^2 from the closed form."""
    N = np.asarray(N, dtype=float)
    psi2 = 2 * np.pi * 2 * (1 + 4 * N**2) ** s * np.abs(psi_coefficient(N, s, t)) ** 2
    phi2 = np.pi * (1 + N**2) ** s * N ** (-2 * s)
    return np.sqrt(psi2) / phi2


@dataclass
class Picard2Result:
    N: int
    s: float
    t: float
    psi: SpectralField
    ratio: float

    def compensated(self) -> float:
        g = float(gamma_N(self.N))
        return self.ratio * self.N**self.s / math.sqrt(1 - math.cos(g * self.t))


def _picard2_grid(N: int):
    return make_grid(int(2 ** math.ceil(math.log2(8 * N))), 2 * np.pi)


def picard2_periodic(N: int, s: float, t: float) -> Picard2Result:
    """Closed-form second Picard iterate for phi = N^{-s} cos(N x)."""
    _check_illposed(s, t)
    if N < 1 or int(N) != N:
        raise ValueError("N must be a positive integer")
    g = _picard2_grid(N)
    coef = np.zeros(g.num_points, dtype=complex)
    a = psi_coefficient(N, s, t)
    coef[g.index(2 * N)] = a
    coef[g.index(-2 * N)] = np.conj(a)
    return Picard2Result(int(N), s, t, SpectralField(g, coef), float(illposed_ratio(N, s, t)))


def picard2_quadrature(N: int, s: float, t: float, intervals: int = 256) -> SpectralField:
    """int_0^t S(t - tau) Lambda[(S(tau) phi)(S(tau) phi)_x] dtau by composite Simpson."""
    _check_illposed(s, t)
    g = _picard2_grid(N)
    phi = SpectralField.from_function(g, lambda x: N ** (-s) * np.cos(N * x))
    lam = 1.0 / (1.0 + np.abs(g.xi))
    taus = np.linspace(0.0, t, intervals + 1)
    vals = np.empty((taus.size, g.num_points), dtype=complex)
    for i, tau in enumerate(taus):
        f = apply_symbol(phi, semigroup(tau))
        prod = dealiased_product(f, apply_symbol(f, deriv()))
        vals[i] = apply_symbol(SpectralField(g, lam * prod.coeffs), semigroup(t - tau)).coeffs
    coef = simpson(vals.real, x=taus, axis=0) + 1j * simpson(vals.imag, x=taus, axis=0)
    return SpectralField(g, coef)


@dataclass
class IllposedScan:
    s: float
    t: float
    N: np.ndarray
    ratios: np.ndarray
    slope: float
    intercept: float
    residual: float
    onset: int
    predicted: float
    passed: bool
    degenerate: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["N"] = [int(n) for n in self.N]
        d["ratios"] = [float(r) for r in self.ratios]
        return d


def fit_slope(x, y, threshold: float = 1e-3):
    """Log-log least squares, dropping the smallest x until max residual < threshold.

    Returns (slope, intercept, max residual, number of dropped points).
    """
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    for drop in range(0, len(lx) - 2):
        coef = np.polyfit(lx[drop:], ly[drop:], 1)
        res = float(np.abs(ly[drop:] - np.polyval(coef, lx[drop:])).max())
        if res < threshold:
            return float(coef[0]), float(coef[1]), res, drop
    return float(coef[0]), float(coef[1]), res, drop


def illposed_scan(s: float, t: float, N_list) -> IllposedScan:
    """Growth exponent of the closed-form ratio R(N, t) against N."""
    _check_illposed(s, t)
    if t == 0:
        raise ValueError("t must be positive")
    N = np.asarray(sorted(set(int(n) for n in N_list)))
    if N.size < 5:
        raise ValueError("need at least 5 values of N")
    R = illposed_ratio(N, s, t)
    if np.any(R <= 0):
        raise ValueError("non-positive ratio encountered")
    if np.ptp(np.log(R)) < 1e-14:
        return IllposedScan(s, t, N, R, 0.0, float(np.log(R[0])), 0.0, 0, -s, False, True)
    slope, icpt, res, drop = fit_slope(N, R)
    passed = abs(slope - (-s)) <= 0.02 * abs(s)
    return IllposedScan(s, t, N, R, slope, icpt, res, int(N[drop]), -s, passed)


# ------------------------------------------- non-periodic ill-posedness


def resonance_chi(xi, eta):
    """p(eta) + p(xi - eta) - p(xi) with p(z) = z/(1+|z|), in the factored form."""
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    return eta * (xi - eta) * (2 + xi) / ((1 + eta) * (1 + xi - eta) * (1 + xi))


def omega_interval(xi: float, N: int) -> tuple[float, float]:
    """{eta in [N, N+1] : xi - eta in [N, N+1]}."""
    lo, hi = max(N, xi - N - 1), min(N + 1, xi - N)
    return lo, max(lo, hi)


class QuadratureError(RuntimeError):
    pass


def _gauss(f, a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    xm, xr = 0.5 * (a + b), 0.5 * (b - a)
    return xr * np.sum(w * f(xm + xr * x))


def _adaptive(f, a, b, n0=8, cap=512, rtol=1e-12):
    n = n0
    prev = _gauss(f, a, b, n)
    while n < cap:
        n *= 2
        cur = _gauss(f, a, b, n)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    if abs(cur - prev) > 1e-6 * max(abs(cur), 1e-300):
        raise QuadratureError(f"Gauss-Legendre did not settle on [{a}, {b}]")
    return cur


@dataclass
class NonperiodicResult:
    N: int
    s: float
    eps: float
    t: float
    lower_bound: float
    phi_norm: float
    ratio_proxy: float
    compensated: float


def illposed_nonperiodic(N: int, s: float, eps: float) -> NonperiodicResult:
    """Lower bound for ||psi(t)||_{H^s} at t = N^{-eps} with phi-hat = N^{-s} 1_[N, N+1].

    Evaluates the double integral over xi in (2N+1/2, 2N+1) and eta in
    Omega_xi of the sinc factor sin(t chi)/(t chi).
    """
    if not s < 0:
        raise ValueError("s must be negative")
    if not (eps > 0 and -s - eps > 0):
        raise ValueError("need eps > 0 with -s - eps > 0")
    if N < 16:
        raise ValueError("N must be at least 16")
    t = float(N) ** (-eps)

    def inner(xi):
        lo, hi = omega_interval(xi, N)
        return _adaptive(lambda eta: np.sinc(t * resonance_chi(xi, eta) / np.pi), lo, hi)

    def outer(xis):
        vals = np.array([inner(x) for x in np.atleast_1d(xis)])
        return ((1 + xis**2) ** s * float(N) ** (-4 * s) * xis**2 / (1 + xis) ** 2
                * t**2 * vals**2)

    lb2 = _adaptive(outer, 2 * N + 0.5, 2 * N + 1.0)
    lb = math.sqrt(lb2)
    phi2 = _adaptive(lambda z: float(N) ** (-2 * s) * (1 + z**2) ** s, N, N + 1.0)
    return NonperiodicResult(int(N), s, eps, t, lb, math.sqrt(phi2), lb / phi2,
                             lb * float(N) ** (s + eps))
