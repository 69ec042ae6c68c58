"""Method-of-lines time stepping for u_t = K(u + u^{p+1}/(p+1)) and a Picard solver.

K is the multiplier -i xi / (1 + alpha(xi)); alpha = |xi| gives the rBO
equation and alpha = xi^2 the BBM equation.  Both multipliers are bounded,
so classical RK4 is used without any stiffness treatment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import fft as sfft
from scipy.integrate import cumulative_simpson

from .fourier import (
    PeriodicGrid,
    SpectralField,
    SymbolSpec,
    _padded_size,
    dealiased_product,
    hilbert_deriv,
    sobolev_norm,
    transform,
)

TAIL_THRESHOLD = 1e-12


class IntegrationError(RuntimeError):
    """Integrator abort; ``trajectory`` holds everything up to the last valid state."""

    def __init__(self, msg, trajectory=None):
        super().__init__(msg)
        self.trajectory = trajectory


class ResolutionWarning(RuntimeWarning):
    pass


class ContractionWindowError(ValueError):
    """Requested Picard time exceeds the guaranteed contraction window."""


class NonContractionError(IntegrationError):
    pass


# ----------------------------------------------------------- half-spectrum engine


class _Engine:
    """rfft-based evaluation of the right-hand side on a padded grid."""

    def __init__(self, grid: PeriodicGrid, p: int, dispersive: SymbolSpec):
        if p < 1 or int(p) != p:
            raise ValueError("p must be a positive integer")
        alpha = dispersive.real_values(grid)
        if np.any(1.0 + alpha <= 0):
            raise ValueError(f"1 + alpha vanishes or changes sign for {dispersive.name!r}")
        self.grid = grid
        self.p = int(p)
        self.n = grid.num_points
        self.h = self.n // 2
        self.m = sfft.next_fast_len(max(2 * self.n, _padded_size(self.n, p + 1)), real=True)
        self.m += self.m % 2
        xi = grid.xi[: self.h + 1]
        alpha_h = alpha[: self.h + 1]
        self.alpha = alpha_h
        mult = -1j * xi / (1.0 + alpha_h)
        mult[self.h] = 0.0  # odd symbol: no Hermitian part on the Nyquist mode
        self.mult = mult
        modes = np.arange(self.h + 1, dtype=float)
        self.weight = np.where((modes == 0) | (modes == self.h), 1.0, 2.0)
        self.tail = modes >= self.n / 3

    def to_half(self, f: SpectralField) -> np.ndarray:
        return f.coeffs[: self.h + 1].copy()

    def to_field(self, c: np.ndarray) -> SpectralField:
        full = np.empty(self.n, dtype=complex)
        full[: self.h + 1] = c
        full[self.h + 1 :] = np.conj(c[1 : self.h][::-1])
        full[self.h] = c[self.h].real
        return SpectralField(self.grid, full)

    def padded_values(self, c: np.ndarray) -> np.ndarray:
        hp = np.zeros(self.m // 2 + 1, dtype=complex)
        hp[: self.h] = c[: self.h]
        hp[self.h] = 0.5 * c[self.h]
        return sfft.irfft(hp, n=self.m) * self.m

    def power(self, c: np.ndarray, q: int) -> np.ndarray:
        w = sfft.rfft(self.padded_values(c) ** q) / self.m
        out = w[: self.h + 1].copy()
        out[self.h] = 2.0 * w[self.h].real
        return out

    def rhs(self, c: np.ndarray) -> np.ndarray:
        return self.mult * (c + self.power(c, self.p + 1) / (self.p + 1))

    def energy_sums(self, c: np.ndarray) -> tuple[float, float, float]:
        P = self.grid.period
        a2 = self.weight * np.abs(c) ** 2
        l2 = P * a2.sum()
        quad = P * np.sum(self.alpha * a2)
        v = self.padded_values(c)
        integral = P * np.mean(v ** (self.p + 2))
        return l2, quad, integral

    def conserved(self, c: np.ndarray) -> dict:
        l2, quad, integral = self.energy_sums(c)
        p = self.p
        return {
            "E": 0.5 * quad - integral / ((p + 1) * (p + 2)),
            "F": 0.5 * (l2 + quad),
            "G": self.grid.period * c[0].real,
        }

    def norms(self, c: np.ndarray) -> tuple[float, float, float]:
        n2 = 1.0 + np.arange(self.h + 1, dtype=float) ** 2
        a2 = self.weight * np.abs(c) ** 2
        P = self.grid.period
        total = a2.sum()
        tail = a2[self.tail].sum() / total if total > 0 else 0.0
        return (math.sqrt(P * np.sum(n2**0.5 * a2)),
                math.sqrt(P * np.sum(n2**1.5 * a2)), tail)


# ------------------------------------------------------------- public API


def rhs(u: SpectralField, p: int = 1, dispersive: SymbolSpec | None = None) -> SpectralField:
    """-i xi/(1+alpha) applied to u + u^{p+1}/(p+1), with a dealiased power."""
    eng = _Engine(u.grid, p, dispersive or hilbert_deriv())
    return eng.to_field(eng.rhs(eng.to_half(u)))


def conserved(u: SpectralField, p: int = 1, dispersive: SymbolSpec | None = None) -> dict:
    """E, F and G by spectral quadrature.

    E = 1/2 int u A u - int u^{p+2} / ((p+1)(p+2)),  F = 1/2 int (u^2 + u A u),
    G = int u, where A has symbol alpha.
    """
    eng = _Engine(u.grid, p, dispersive or hilbert_deriv())
    return {k: float(v) for k, v in eng.conserved(eng.to_half(u)).items()}


@dataclass
class Trajectory:
    grid: PeriodicGrid
    times: np.ndarray
    states: list
    p: int = 1
    dispersive: str = "hilbert_deriv"
    dt: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def final(self) -> SpectralField:
        return self.states[-1]

    def drift(self, key: str) -> float:
        """max_t |Q(t) - Q(0)| relative to |Q(0)| (absolute when Q(0) = 0)."""
        q = np.asarray(self.diagnostics[key])
        ref = abs(q[0]) if q[0] != 0 else 1.0
        return float(np.abs(q - q[0]).max() / ref)

    def diagnostics_table(self) -> tuple[list, np.ndarray]:
        cols = ["t", "E", "F", "G", "H1/2", "H3/2"]
        data = np.column_stack([self.diagnostics[c] for c in cols])
        return cols, data


def default_dt(u0: SpectralField) -> float:
    umax = float(np.abs(u0.values()).max())
    return min(1e-3, 0.2 / umax) if umax > 0 else 1e-3


def evolve_rk4(u0: SpectralField, T: float, dt: float | None = None, p: int = 1,
               dispersive: SymbolSpec | None = None, save_every: int | None = None,
               diagnostics_every: int = 1, linear: bool = False,
               fit_dt: bool = False) -> Trajectory:
    """Classical RK4 from 0 to T (T may be negative for backward runs).

    States are kept every ``save_every`` steps (default: only the endpoints).
    ``linear=True`` drops the nonlinearity, which is used to compare with the
    exact linear propagator.  ``fit_dt=True`` shrinks dt to T/ceil(|T|/dt)
    when T is not a multiple of dt.
    """
    dispersive = dispersive or hilbert_deriv()
    eng = _Engine(u0.grid, p, dispersive)
    if dt is None:
        dt = default_dt(u0)
    if not dt > 0:
        raise ValueError("dt must be positive")
    nsteps_f = abs(T) / dt
    if fit_dt and abs(round(nsteps_f) - nsteps_f) > 1e-9 * max(1.0, nsteps_f):
        nsteps_f = math.ceil(nsteps_f)
        dt = abs(T) / nsteps_f
    nsteps = int(round(nsteps_f))
    if abs(nsteps - nsteps_f) > 1e-9 * max(1.0, nsteps_f):
        raise ValueError(f"T={T} is not a multiple of dt={dt}")
    h = math.copysign(dt, T) if T != 0 else dt
    f = (lambda c: eng.mult * c) if linear else eng.rhs

    c = eng.to_half(u0)
    diag = {k: [] for k in ("t", "E", "F", "G", "H1/2", "H3/2", "tail")}
    times, states = [0.0], [eng.to_field(c)]
    traj = Trajectory(u0.grid, np.array(times), states, p, dispersive.name, dt, diag)
    warned = False

    def record(step, cc):
        nonlocal warned
        cons = eng.conserved(cc)
        n12, n32, tail = eng.norms(cc)
        diag["t"].append(step * h)
        for k in ("E", "F", "G"):
            diag[k].append(float(cons[k]))
        diag["H1/2"].append(n12)
        diag["H3/2"].append(n32)
        diag["tail"].append(tail)
        if tail > TAIL_THRESHOLD and not warned:
            warned = True
            msg = f"tail energy fraction {tail:.2e} at t={step * h:.4g} exceeds {TAIL_THRESHOLD}"
            traj.warnings.append(msg)
            warnings.warn(msg, ResolutionWarning, stacklevel=3)

    record(0, c)
    for step in range(1, nsteps + 1):
        k1 = f(c)
        k2 = f(c + 0.5 * h * k1)
        k3 = f(c + 0.5 * h * k2)
        k4 = f(c + h * k3)
        new = c + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(new)):
            if times[-1] != (step - 1) * h:
                times.append((step - 1) * h)
                states.append(eng.to_field(c))
            traj.times = np.array(times)
            _finalize(traj)
            raise IntegrationError(f"non-finite state at step {step} (t={step * h:.6g})", traj)
        c = new
        if step % diagnostics_every == 0 or step == nsteps:
            record(step, c)
        if (save_every and step % save_every == 0) or step == nsteps:
            times.append(step * h)
            states.append(eng.to_field(c))
    traj.times = np.array(times)
    _finalize(traj)
    return traj


def _finalize(traj: Trajectory):
    for k, v in traj.diagnostics.items():
        traj.diagnostics[k] = np.asarray(v)


# --------------------------------------------------------------- Picard


def algebra_constant(grid: PeriodicGrid, s: float = 1.0, num_random: int = 40,
                     max_mode: int | None = None, seed: int = 0) -> float:
    """Empirical sup of ||fg||_{H^s} / (||f||_{H^s} ||g||_{H^s}) over a probe set.

    Probes are constants, single cosines and sines, and random trigonometric
    polynomials with algebraically decaying spectra.
    """
    rng = np.random.default_rng(seed)
    kmax = max_mode or grid.num_points // 4
    probes = [SpectralField.from_function(grid, lambda x: np.ones_like(x))]
    xi0 = 2 * np.pi / grid.period
    for k in (1, 2, 3, 5, 8, 13, 21):
        if k <= kmax:
            probes.append(SpectralField.from_function(grid, lambda x, k=k: np.cos(k * xi0 * x)))
            probes.append(SpectralField.from_function(grid, lambda x, k=k: np.sin(k * xi0 * x)))
    n = grid.modes
    for _ in range(num_random):
        decay = rng.uniform(0.5, 3.0)
        coef = (rng.normal(size=n.size) + 1j * rng.normal(size=n.size)) / (1.0 + np.abs(n)) ** (s + decay)
        coef[np.abs(n) > kmax] = 0
        full = SpectralField(grid, coef)
        vals = full.values().real
        probes.append(transform(vals, grid))
    best = 0.0
    norms = [sobolev_norm(f, s) for f in probes]
    for i, f in enumerate(probes):
        for j in range(i, len(probes)):
            g = probes[j]
            r = sobolev_norm(dealiased_product(f, g), s) / (norms[i] * norms[j])
            best = max(best, r)
    return float(best)


@dataclass
class PicardResult:
    times: np.ndarray
    states: list
    ratios: np.ndarray
    distances: np.ndarray
    window: float
    c0: float
    radius: float
    iterations: int
    converged: bool

    @property
    def final(self) -> SpectralField:
        return self.states[-1]


def contraction_window(u0: SpectralField, s: float = 1.0, c0: float | None = None) -> tuple[float, float, float]:
    """(T, c0, R) with R = 2||u0||_{H^s} and T = (1/2)(1 + c0 R)^{-1}."""
    if c0 is None:
        c0 = algebra_constant(u0.grid, s)
    R = 2.0 * sobolev_norm(u0, s)
    return 0.5 / (1.0 + c0 * R), c0, R


def picard_solve(u0: SpectralField, T_req: float | None = None, s: float = 1.0,
                 nodes: int = 65, tol: float = 1e-14, max_iter: int = 80,
                 c0: float | None = None, enforce_window: bool = True) -> PicardResult:
    """Fixed point of u(t) = u0 + int_0^t K(u + u^2/2) on a Simpson time mesh.

    Distances between successive iterates are measured in
    sup_t ||.||_{H^s}.  Three consecutive ratios >= 1 abort the iteration.
    """
    T, c0, R = contraction_window(u0, s, c0)
    if T_req is None:
        T_req = T
    if not T_req > 0:
        raise ValueError("T_req must be positive")
    if enforce_window and T_req > T * (1 + 1e-12):
        raise ContractionWindowError(
            f"T_req={T_req:.6g} exceeds the guaranteed contraction window T={T:.6g} "
            f"(c0={c0:.4g}, R={R:.4g})")
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("Simpson mesh needs an odd number of nodes >= 3")
    eng = _Engine(u0.grid, 1, hilbert_deriv())
    t = np.linspace(0.0, T_req, nodes)
    c0h = eng.to_half(u0)
    U = np.tile(c0h, (nodes, 1))
    nh = np.arange(eng.h + 1, dtype=float)
    wgt = eng.weight * (1.0 + nh**2) ** s * u0.grid.period

    def dist(A, B):
        return float(np.sqrt((wgt * np.abs(A - B) ** 2).sum(axis=1)).max())

    distances, ratios = [], []
    bad = 0
    converged = False
    scale = max(dist(U, 0 * U), 1e-300)
    for it in range(1, max_iter + 1):
        F = np.array([eng.rhs(row) for row in U])
        integ = (cumulative_simpson(F.real, x=t, axis=0, initial=0)
                 + 1j * cumulative_simpson(F.imag, x=t, axis=0, initial=0))
        new = c0h[None, :] + integ
        d = dist(new, U)
        U = new
        distances.append(d)
        if len(distances) > 1 and distances[-2] > 0:
            r = d / distances[-2]
            ratios.append(r)
            bad = bad + 1 if r >= 1 else 0
            if bad >= 3:
                raise NonContractionError(
                    f"Picard ratios >= 1 for 3 consecutive iterations at iteration {it}; "
                    f"T_req={T_req:.6g} exceeds the guaranteed window T={T:.6g}")
        if d <= tol * scale:
            converged = True
            break
    states = [eng.to_field(row) for row in U]
    return PicardResult(t, states, np.array(ratios), np.array(distances), T, c0, R,
                        it, converged)
