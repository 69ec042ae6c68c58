"""Truncated linearised operators c*alpha(D) + (c - 1) - phi^p and their spectra."""
from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import math
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh

from .fourier import (
    PeriodicGrid,
    SpectralField,
    SymbolSpec,
    apply_symbol,
    dealiased_power,
    deriv,
    inner_product,
)


class DegenerateConstraintError(ValueError):
    pass


@dataclass
class OperatorMatrix:
    """Self-adjoint operator on the modes -M..M.

    ``complex_matrix`` acts on Fourier coefficient vectors; ``matrix`` is the
    same operator in the real orthonormal basis {1, sqrt2 cos, sqrt2 sin}
    (ordered 1, cos_1..cos_M, sin_1..sin_M), which is the stored form.
    """

    M: int
    grid: PeriodicGrid
    speed: float
    complex_matrix: np.ndarray
    matrix: np.ndarray
    diagonal: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.M + 1

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def coeff_vector(self, f: SpectralField) -> np.ndarray:
        """Coefficients of ``f`` on the window, ordered n = -M..M."""
        return f.mode(self.modes)

    def to_real(self, v: np.ndarray) -> np.ndarray:
        return _real_basis(self.M).conj().T @ v

    def from_real(self, r: np.ndarray) -> np.ndarray:
        return _real_basis(self.M) @ r

    def real_vector(self, f: SpectralField) -> np.ndarray:
        r = self.to_real(self.coeff_vector(f))
        return r.real

    def symmetry_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.T).max())

    def gershgorin_tail(self) -> dict:
        """First mode n0 beyond which Gershgorin discs stay in (0, inf)."""
        A = self.matrix
        radius = np.abs(A).sum(axis=1) - np.abs(np.diag(A))
        lower = np.diag(A) - radius
        ok = lower > 0
        order = np.abs(_real_basis_modes(self.M))
        bad = order[~ok]
        n0 = int(bad.max()) + 1 if bad.size else 0
        return {"n0": n0, "min_lower_beyond": float(lower[order >= n0].min())
                if np.any(order >= n0) else math.inf}


def _real_basis_modes(M: int) -> np.ndarray:
    k = np.arange(1, M + 1)
    return np.concatenate([[0], k, k])


_BASIS_CACHE: dict[int, np.ndarray] = {}


def _real_basis(M: int) -> np.ndarray:
    """Unitary U with columns = real basis functions in coefficient space."""
    U = _BASIS_CACHE.get(M)
    if U is None:
        dim = 2 * M + 1
        U = np.zeros((dim, dim), dtype=complex)
        U[M, 0] = 1.0
        s = 1 / math.sqrt(2)
        for k in range(1, M + 1):
            U[M + k, k] = s
            U[M - k, k] = s
            U[M + k, M + k] = -1j * s
            U[M - k, M + k] = 1j * s
        _BASIS_CACHE[M] = U
    return U


def assemble_potential(potential: SpectralField, speed: float, symbol: SymbolSpec,
                       M: int) -> OperatorMatrix:
    """Matrix of c*alpha(D) + (c - 1) - V for a potential V given by its coefficients."""
    grid = potential.grid
    if symbol.parity != "even":
        raise ValueError(f"symbol {symbol.name!r} must be real and even")
    if M > grid.num_points // 4:
        raise ValueError(f"M={M} exceeds N/4={grid.num_points // 4} for this grid")
    alpha = symbol.real_values(grid)
    modes = np.arange(-M, M + 1)
    alpha_w = alpha[grid.index(modes)]
    diag = speed * alpha_w + speed - 1
    diff = modes[:, None] - modes[None, :]
    # the Nyquist slot carries modes +-N/2 together; split it evenly
    nyq = grid.nyquist
    edge = np.abs(diff) == nyq
    V = potential.mode(np.where(diff == -nyq, nyq, diff))
    V[edge] *= 0.5
    A = np.diag(diag).astype(complex) - V
    U = _real_basis(M)
    R = U.conj().T @ A @ U
    if np.abs(R.imag).max() > 1e-10 * max(np.abs(R).max(), 1.0):
        raise ValueError("potential is not real-valued")
    R = R.real
    R = 0.5 * (R + R.T)
    return OperatorMatrix(M, grid, float(speed), A, R, diag)


def assemble(profile, symbol: SymbolSpec, p: int, M: int) -> OperatorMatrix:
    """Linearised operator about a WaveProfile: c*alpha(D) + (c - 1) - phi^p."""
    if p < 1:
        raise ValueError("p must be >= 1")
    pot = dealiased_power(profile.field, p)
    return assemble_potential(pot, profile.speed, symbol, M)


# ------------------------------------------------------------ spectra


@dataclass
class EigenReport:
    eigenvalues: np.ndarray
    count_negative: int
    zero_value: float | None
    zero_index: int | None
    zero_count: int
    gap_below: float
    gap_above: float
    gap_threshold: float
    lowest_vectors: np.ndarray
    kernel_alignment: float | None
    max_residual: float
    norm: float

    @property
    def simple_zero(self) -> bool:
        return self.zero_count == 1

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "count_negative": self.count_negative,
            "zero_eigenvalue": {
                "value": self.zero_value,
                "index": self.zero_index,
                "count_in_window": self.zero_count,
                "gap_below": self.gap_below,
                "gap_above": self.gap_above,
                "window": self.gap_threshold,
            },
            "kernel_alignment": self.kernel_alignment,
            "max_residual": self.max_residual,
            "norm": self.norm,
        }


def eigen_report(A: OperatorMatrix | np.ndarray, kernel: np.ndarray | None = None,
                 zero_tol: float = 1e-7) -> EigenReport:
    """Full symmetric eigendecomposition with zero-mode certification.

    ``kernel`` is the expected null vector in the real basis (e.g. phi').
    An eigenvalue counts as zero when it lies in (-g, g) with
    g = max(zero_tol * ||A||, 10 * max eigen-residual).
    """
    mat = A.matrix if isinstance(A, OperatorMatrix) else np.asarray(A)
    if np.iscomplexobj(mat) or np.abs(mat - mat.T).max() > 1e-12 * max(np.abs(mat).max(), 1.0):
        raise ValueError("matrix is not real symmetric")
    lam, vec = np.linalg.eigh(mat)
    norm = float(np.abs(lam).max())
    res = np.linalg.norm(mat @ vec - vec * lam, axis=0)
    max_res = float(res.max())
    g = max(zero_tol * norm, 10 * max_res)
    in_window = np.flatnonzero(np.abs(lam) < g)
    count_neg = int(np.sum(lam <= -g))
    zero_idx = zero_val = None
    align = None
    gap_below = gap_above = math.nan
    if in_window.size:
        zero_idx = int(in_window[np.argmin(np.abs(lam[in_window]))])
        zero_val = float(lam[zero_idx])
        gap_below = float(zero_val - lam[zero_idx - 1]) if zero_idx > 0 else math.inf
        gap_above = (float(lam[zero_idx + 1] - zero_val)
                     if zero_idx + 1 < lam.size else math.inf)
        if kernel is not None:
            kv = np.asarray(kernel, dtype=float)
            align = float(abs(vec[:, zero_idx] @ kv) / np.linalg.norm(kv))
    return EigenReport(lam, count_neg, zero_val, zero_idx, int(in_window.size),
                       gap_below, gap_above, g, vec[:, :3].copy(), align, max_res, norm)


def kernel_vector(op: OperatorMatrix, profile) -> np.ndarray:
    """phi' in the operator's real basis."""
    return op.real_vector(apply_symbol(profile.field, deriv()))


# --------------------------------------------------------------- PF(2)


@dataclass
class PF2Result:
    passed: bool
    condition: str | None = None
    witness: tuple | None = None
    value: float | None = None
    checked: int = 0


def _pf2_scan(alpha: Callable[[np.ndarray], np.ndarray], quads: np.ndarray, rtol: float):
    n1, n2, m1, m2 = quads.T
    p = alpha(n1 - m1) * alpha(n2 - m2)
    q = alpha(n1 - m2) * alpha(n2 - m1)
    det = p - q
    scale = np.abs(p) + np.abs(q)
    overlap = (n2 > m1) & (n1 < m2)
    weak_fail = det < -rtol * scale
    strict_fail = overlap & ~(det > rtol * scale)
    return det, weak_fail, strict_fail


def _pairs(lo: int, hi: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(lo, hi + 1), 2)), dtype=int)


def pf2_check(seq: Sequence[float], rtol: float = 1e-12,
              brute_force_limit: int = 24) -> PF2Result:
    """Check the weakened discrete PF(2) condition on a sequence over n = -M..M.

    Only quadruples whose four index differences lie in the window are
    tested.  For M <= ``brute_force_limit`` every quadruple n1 < n2,
    m1 < m2 is enumerated; beyond that translation invariance fixes m1 = 0.
    The weak inequality allows a relative slack ``rtol``; the strict one
    must hold by more than ``rtol``.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.ndim != 1 or seq.size % 2 == 0:
        raise ValueError("sequence must be indexed by n = -M..M")
    M = seq.size // 2
    if not np.allclose(seq, seq[::-1], rtol=1e-12, atol=0):
        raise ValueError("sequence must be even")
    if np.any(seq <= 0):
        i = int(np.flatnonzero(seq <= 0)[0])
        return PF2Result(False, "(i) positivity", (i - M,), float(seq[i]), 0)

    def alpha(d):
        return seq[d + M]

    npairs = _pairs(-M, M)
    if M <= brute_force_limit:
        mpairs = npairs
    else:
        mpairs = np.array([(0, d) for d in range(1, 2 * M + 1)], dtype=int)
    quads = np.concatenate([np.repeat(npairs, len(mpairs), axis=0),
                            np.tile(mpairs, (len(npairs), 1))], axis=1)
    n1, n2, m1, m2 = quads.T
    inside = np.ones(len(quads), dtype=bool)
    for d in (n1 - m1, n2 - m2, n1 - m2, n2 - m1):
        inside &= np.abs(d) <= M
    quads = quads[inside]
    det, weak_fail, strict_fail = _pf2_scan(alpha, quads, rtol)
    for fails, label in ((weak_fail, "(ii') weak"), (strict_fail, "(ii') strict")):
        if np.any(fails):
            j = int(np.flatnonzero(fails)[0])
            return PF2Result(False, label, tuple(int(v) for v in quads[j]),
                             float(det[j]), len(quads))
    return PF2Result(True, None, None, None, len(quads))


def pf2_distance_check(M: int) -> bool:
    """Distance form of (ii') for kernels exp(-eta|n|), brute force."""
    idx = range(-M, M + 1)
    for n1, n2 in itertools.combinations(idx, 2):
        for m1, m2 in itertools.combinations(idx, 2):
            if max(abs(n1 - m1), abs(n2 - m2), abs(n1 - m2), abs(n2 - m1)) > M:
                continue
            lhs = abs(n1 - m1) + abs(n2 - m2)
            rhs = abs(n1 - m2) + abs(n2 - m1)
            if lhs > rhs:
                return False
            if n2 > m1 and n1 < m2 and not lhs < rhs:
                return False
    return True


# ------------------------------------------------------- constrained min


def _orthonormal_complement(constraints: list[np.ndarray], dim: int,
                            drop_tol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of the complement of span(constraints)."""
    Q = []
    for v in constraints:
        v = np.asarray(v, dtype=float).copy()
        nv = np.linalg.norm(v)
        if nv == 0:
            raise DegenerateConstraintError("zero constraint vector")
        for _ in range(2):  # modified Gram-Schmidt with one reorthogonalisation
            for q in Q:
                v -= (q @ v) * q
        if np.linalg.norm(v) < drop_tol * nv:
            raise DegenerateConstraintError("constraints are linearly dependent")
        Q.append(v / np.linalg.norm(v))
    if not Q:
        return np.eye(dim)
    C = np.array(Q).T
    # complement from a full QR of [C | I]
    full, _ = np.linalg.qr(np.concatenate([C, np.eye(dim)], axis=1))
    basis = full[:, len(Q):dim]
    basis -= C @ (C.T @ basis)
    basis, _ = np.linalg.qr(basis)
    return basis


def constrained_min(A: OperatorMatrix | np.ndarray, constraints: list) -> float:
    """min (Af, f) over unit f orthogonal to the constraints (real basis vectors
    or SpectralFields)."""
    mat, vecs = _unpack(A, constraints)
    Z = _orthonormal_complement(vecs, mat.shape[0])
    return float(np.linalg.eigvalsh(Z.T @ mat @ Z)[0])


def coercivity_estimate(A: OperatorMatrix, constraints: list, s: float = 0.5) -> float:
    """Largest b0 with (Af, f) >= b0 ||f||_{H^s}^2 on the constrained subspace.

    Computed as the smallest generalised eigenvalue of the projected pencil;
    it is an estimate on the truncated space, not a certified constant.
    """
    mat, vecs = _unpack(A, constraints)
    Z = _orthonormal_complement(vecs, mat.shape[0])
    w = (1.0 + _real_basis_modes(A.M).astype(float) ** 2) ** s
    B = Z.T @ (w[:, None] * Z)
    return float(eigh(Z.T @ mat @ Z, B, eigvals_only=True)[0])


def _unpack(A, constraints):
    mat = A.matrix if isinstance(A, OperatorMatrix) else np.asarray(A)
    vecs = []
    for v in constraints:
        if isinstance(v, SpectralField):
            if not isinstance(A, OperatorMatrix):
                raise TypeError("field constraints need an OperatorMatrix")
            v = A.real_vector(v)
        vecs.append(np.asarray(v, dtype=float))
    return mat, vecs


# ------------------------------------------------------ stability index


@dataclass
class IndexResult:
    I: float
    dF_dc: float
    I_direct: float
    rel_agreement: float
    steps: tuple = field(default_factory=tuple)


def momentum(u: SpectralField, symbol: SymbolSpec) -> float:
    """F(u) = (1/2) int (u H u + u^2) with H the multiplier ``symbol``."""
    a = symbol.real_values(u.grid)
    return float(0.5 * u.grid.period * np.sum((1 + a) * np.abs(u.coeffs) ** 2))


def stability_index(family: Callable[[float], SpectralField], c: float, h: float,
                    symbol: SymbolSpec) -> IndexResult:
    """I = (chi, phi + H phi) with chi = -d phi/dc, by Richardson-extrapolated
    central differences in c.

    Returns both -dF/dc and the direct pairing with the differenced profile;
    they agree because F'(phi) = phi + H phi.
    """
    phi = family(c)

    def central(step):
        up, dn = family(c + step), family(c - step)
        dF = (momentum(up, symbol) - momentum(dn, symbol)) / (2 * step)
        dphi = (up - dn) * (1 / (2 * step))
        return dF, dphi

    dF1, dp1 = central(h)
    dF2, dp2 = central(h / 2)
    dF = (4 * dF2 - dF1) / 3
    dphi = (dp2 * 4 - dp1) * (1 / 3)
    R = phi + apply_symbol(phi, symbol)
    I_direct = inner_product(-dphi, R)
    I = -dF
    rel = abs(I - I_direct) / max(abs(I), 1e-300)
    return IndexResult(I, dF, I_direct, rel, (h, h / 2))
