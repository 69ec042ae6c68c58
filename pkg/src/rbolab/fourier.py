"""Periodic grids, Fourier coefficients, multipliers and Sobolev norms.

Coefficients follow the convention

    f(x) = sum_n fhat(n) exp(i xi_n x),    xi_n = 2 pi n / P,

so ``fhat(n) = (1/P) int f exp(-i xi_n x) dx``.  Arrays are stored in numpy
FFT order (index ``j`` holds mode ``j`` for ``j <= N/2`` and mode ``j - N``
otherwise); the mode set is ``{-N/2+1, ..., N/2}``, the Nyquist mode being
``+N/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "PeriodicGrid",
    "SpectralField",
    "SymbolSpec",
    "make_grid",
    "transform",
    "inverse_transform",
    "apply_symbol",
    "sobolev_norm",
    "weighted_half_norm",
    "inner_product",
    "convolve_coeffs",
    "dealiased_product",
    "dealiased_power",
    "integral_of_power",
    "hilbert",
    "hilbert_deriv",
    "neg_second_deriv",
    "bessel",
    "half_deriv",
    "lambda_smooth",
    "k_rbo",
    "semigroup",
    "deriv",
    "custom",
]


@dataclass(frozen=True)
class PeriodicGrid:
    num_points: int
    period: float

    def __post_init__(self):
        n = self.num_points
        if int(n) != n or n % 2 or n < 8:
            raise ValueError(f"num_points must be an even integer >= 8, got {n}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def x(self) -> np.ndarray:
        n = self.num_points
        return -0.5 * self.period + np.arange(n) * self.period / n

    @property
    def modes(self) -> np.ndarray:
        """Integer mode index of each array slot (FFT order, Nyquist = +N/2)."""
        n = self.num_points
        m = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        m[n // 2] = n // 2
        return m

    @property
    def xi(self) -> np.ndarray:
        return 2 * np.pi * self.modes / self.period

    @property
    def nyquist(self) -> int:
        return self.num_points // 2

    def index(self, n) -> np.ndarray:
        """Array slot(s) holding mode(s) ``n``."""
        n = np.asarray(n)
        if np.any(n > self.nyquist) or np.any(n <= -self.nyquist):
            raise IndexError("mode outside the grid")
        return np.mod(n, self.num_points)


def make_grid(num_points: int, period: float) -> PeriodicGrid:
    return PeriodicGrid(int(num_points), float(period))


@dataclass
class SpectralField:
    grid: PeriodicGrid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.grid.num_points,):
            raise ValueError("coefficient array does not match the grid")

    def mode(self, n):
        return self.coeffs[self.grid.index(n)]

    def values(self) -> np.ndarray:
        return inverse_transform(self)

    def hermitian_defect(self) -> float:
        """max |c(-n) - conj c(n)| relative to max |c|."""
        g = self.grid
        c = self.coeffs
        flipped = c[g.index(-g.modes[g.modes < g.nyquist])]
        own = c[g.modes < g.nyquist]
        scale = max(np.abs(c).max(), np.finfo(float).tiny)
        defect = max(np.abs(flipped - own.conj()).max(), abs(c[g.nyquist].imag))
        return float(defect / scale)

    def __add__(self, other):
        _same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def translate(self, shift: float) -> "SpectralField":
        """Return f(. + shift); the Nyquist mode keeps only the cosine part of its phase."""
        ph = np.exp(1j * self.grid.xi * shift)
        ph[self.grid.nyquist] = ph[self.grid.nyquist].real
        return SpectralField(self.grid, self.coeffs * ph)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.num_points, dtype=complex))

    @classmethod
    def from_function(cls, grid: PeriodicGrid, f: Callable) -> "SpectralField":
        return transform(f(grid.x), grid)


def _same_grid(f: SpectralField, g: SpectralField):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def _phase(grid: PeriodicGrid) -> np.ndarray:
    # exp(-i xi_n x_0) with x_0 = -P/2
    return np.where(grid.modes % 2 == 0, 1.0, -1.0)


def transform(samples, grid: PeriodicGrid) -> SpectralField:
    samples = np.asarray(samples)
    if samples.shape != (grid.num_points,):
        raise ValueError(
            f"expected {grid.num_points} samples, got shape {samples.shape}"
        )
    if np.iscomplexobj(samples):
        if np.abs(samples.imag).max() > 1e-12 * max(np.abs(samples).max(), 1.0):
            raise ValueError("samples must be real")
        samples = samples.real
    c = np.fft.fft(samples) / grid.num_points * _phase(grid)
    return SpectralField(grid, c)


def inverse_transform(f: SpectralField) -> np.ndarray:
    g = f.grid
    c = f.coeffs * _phase(g)
    return np.fft.ifft(c).real * g.num_points


# ---------------------------------------------------------------- symbols


@dataclass(frozen=True)
class SymbolSpec:
    """Fourier multiplier on the grid modes.

    ``rule(n, xi)`` maps integer modes and physical frequencies to the
    multiplier.  ``parity`` is ``"even"`` for real even symbols, ``"odd"``
    for purely imaginary odd ones, ``"unitary"`` for the group phases.
    """

    name: str
    rule: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(compare=False)
    parity: str = "even"
    params: tuple = ()

    def evaluate(self, grid: PeriodicGrid) -> np.ndarray:
        n = grid.modes
        vals = np.asarray(self.rule(n, grid.xi), dtype=complex) * np.ones(n.shape)
        # Only the Hermitian part of the symbol survives on the Nyquist mode,
        # otherwise real data would stop being real.
        vals[grid.nyquist] = vals[grid.nyquist].real
        return vals

    def real_values(self, grid: PeriodicGrid) -> np.ndarray:
        if self.parity != "even":
            raise ValueError(f"symbol {self.name!r} is not real")
        return self.evaluate(grid).real


def hilbert() -> SymbolSpec:
    return SymbolSpec("hilbert", lambda n, xi: -1j * np.sign(n), "odd")


def hilbert_deriv() -> SymbolSpec:
    """H d/dx, multiplier |xi|."""
    return SymbolSpec("hilbert_deriv", lambda n, xi: np.abs(xi))


def neg_second_deriv() -> SymbolSpec:
    return SymbolSpec("neg_second_deriv", lambda n, xi: xi**2)


def bessel(s: float) -> SymbolSpec:
    return SymbolSpec("bessel", lambda n, xi: (1.0 + n**2) ** (s / 2), params=(s,))


def half_deriv() -> SymbolSpec:
    return SymbolSpec("half_deriv", lambda n, xi: np.sqrt(np.abs(xi)))


def lambda_smooth() -> SymbolSpec:
    return SymbolSpec("lambda_smooth", lambda n, xi: 1.0 / (1.0 + np.abs(n)))


def k_rbo() -> SymbolSpec:
    """-d/dx (1 + H d/dx)^{-1}."""
    return SymbolSpec("k_rbo", lambda n, xi: -1j * xi / (1.0 + np.abs(xi)), "odd")


def semigroup(t: float) -> SymbolSpec:
    """Linear rBO propagator S(t)."""
    return SymbolSpec(
        "semigroup",
        lambda n, xi: np.exp(-1j * t * xi / (1.0 + np.abs(xi))),
        "unitary",
        (t,),
    )


def deriv() -> SymbolSpec:
    return SymbolSpec("deriv", lambda n, xi: 1j * xi, "odd")


def custom(table: Callable[[np.ndarray, np.ndarray], np.ndarray], name="custom",
           parity="even") -> SymbolSpec:
    return SymbolSpec(name, table, parity)


def apply_symbol(f: SpectralField, symbol: SymbolSpec) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * symbol.evaluate(f.grid))


# ------------------------------------------------------------------ norms


def sobolev_norm(f: SpectralField, s: float) -> float:
    """sqrt(P sum (1 + n^2)^s |fhat(n)|^2), integer-index weight."""
    n = f.grid.modes
    w = (1.0 + n.astype(float) ** 2) ** s
    return float(np.sqrt(f.grid.period * np.sum(w * np.abs(f.coeffs) ** 2)))


def weighted_half_norm(f: SpectralField, c: float) -> float:
    """sqrt(||D^{1/2} f||^2 + (c-1)/c ||f||^2)."""
    if not c > 1:
        raise ValueError(f"weighted half norm needs c > 1, got {c}")
    g = f.grid
    a2 = np.abs(f.coeffs) ** 2
    half = g.period * np.sum(np.abs(g.xi) * a2)
    l2 = g.period * np.sum(a2)
    return float(np.sqrt(half + (c - 1) / c * l2))


def inner_product(f: SpectralField, g: SpectralField) -> float:
    _same_grid(f, g)
    val = f.grid.period * np.sum(f.coeffs * g.coeffs.conj())
    scale = f.grid.period * np.linalg.norm(f.coeffs) * np.linalg.norm(g.coeffs)
    if abs(val.imag) > 1e-10 * max(scale, 1e-300):
        raise ValueError(f"inner product has imaginary residual {val.imag:.3e}")
    return float(val.real)


# -------------------------------------------------------- convolutions


def _centered(f: SpectralField) -> np.ndarray:
    """Coefficients ordered n = -N/2+1 .. N/2."""
    return np.roll(f.coeffs, f.grid.nyquist - 1)


def _uncentered(grid: PeriodicGrid, c: np.ndarray) -> np.ndarray:
    return np.roll(c, -(grid.nyquist - 1))


def convolve_coeffs(f: SpectralField, g: SpectralField) -> SpectralField:
    """(fhat * ghat)(n) = sum_m fhat(n-m) ghat(m), truncated to the grid.

    Done as a direct linear convolution, which equals the zero-padded FFT
    product but keeps termwise relative accuracy for decaying sequences.
    """
    _same_grid(f, g)
    n2 = f.grid.nyquist
    full = np.convolve(_centered(f), _centered(g))
    # full[k] holds mode k - 2(N/2 - 1)
    lo = n2 - 1
    out = full[lo : lo + f.grid.num_points].copy()
    # the Nyquist slot of a real field carries the modes +N/2 and -N/2 together
    out[-1] += full[lo - 1]
    return SpectralField(f.grid, _uncentered(f.grid, out))


def _pad(c: np.ndarray, n: int, m: int) -> np.ndarray:
    """Zero-pad an FFT-ordered length-n array to length m (Nyquist split)."""
    out = np.zeros(m, dtype=complex)
    h = n // 2
    out[:h] = c[:h]
    out[m - h + 1 :] = c[h + 1 :]
    out[h] = 0.5 * c[h]
    out[m - h] = 0.5 * c[h]
    return out


def _truncate(c: np.ndarray, n: int) -> np.ndarray:
    m = c.shape[0]
    h = n // 2
    out = np.empty(n, dtype=complex)
    out[:h] = c[:h]
    out[h + 1 :] = c[m - h + 1 :]
    out[h] = c[h] + c[m - h]
    return out


def _padded_size(n: int, degree: int) -> int:
    # exact for products of `degree` factors truncated to n modes
    m = (degree + 1) * n // 2 + 2
    return int(2 * ((m + 1) // 2))


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    _same_grid(f, g)
    n = f.grid.num_points
    m = max(2 * n, _padded_size(n, 2))
    vf = np.fft.ifft(_pad(f.coeffs, n, m)) * m
    vg = np.fft.ifft(_pad(g.coeffs, n, m)) * m
    prod = np.fft.fft(vf * vg) / m
    return SpectralField(f.grid, _truncate(prod, n))


def dealiased_power(f: SpectralField, p: int) -> SpectralField:
    """Coefficients of f**p, computed on a grid wide enough to avoid aliasing."""
    if p < 0 or int(p) != p:
        raise ValueError("power must be a non-negative integer")
    n = f.grid.num_points
    if p == 0:
        c = np.zeros(n, dtype=complex)
        c[0] = 1.0
        return SpectralField(f.grid, c)
    m = max(2 * n, _padded_size(n, p))
    v = np.fft.ifft(_pad(f.coeffs, n, m)).real * m
    return SpectralField(f.grid, _truncate(np.fft.fft(v**p) / m, n))


def integral_of_power(f: SpectralField, q: int) -> float:
    """int f^q dx over one period, exact for the trigonometric polynomial f."""
    n = f.grid.num_points
    m = max(n, int(2 * ((q * n // 2 + 2) // 2 + 1)))
    v = np.fft.ifft(_pad(f.coeffs, n, m)).real * m
    return float(f.grid.period * np.mean(v**q))
