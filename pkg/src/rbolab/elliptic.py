"""Complete elliptic integrals and Jacobi elliptic functions via the AGM.

The modulus ``k`` (not the parameter ``m = k**2``) is used throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

AGM_TOL = 1e-15
AGM_MAXITER = 40


@dataclass(frozen=True)
class EllipticParams:
    k: float
    kp: float
    K: float
    E: float
    Kp: float
    Ep: float

    @property
    def nome(self) -> float:
        return math.exp(-math.pi * self.Kp / self.K)

    @property
    def legendre_residual(self) -> float:
        return self.E * self.Kp + self.Ep * self.K - self.K * self.Kp - math.pi / 2


def _agm_KE(k: float, kp: float) -> tuple[float, float]:
    """K(k), E(k) from the AGM of (1, k') with the c_n sum for E."""
    a, b, c = 1.0, kp, k
    csum = 0.5 * c * c
    power = 0.5
    for _ in range(AGM_MAXITER):
        if abs(c) < AGM_TOL * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        power *= 2
        csum += power * c * c
    else:
        raise RuntimeError(f"AGM did not converge for k={k}")
    K = math.pi / (2 * a)
    return K, K * (1.0 - csum)


def complete_elliptic(k: float) -> EllipticParams:
    if not 0 < k < 1:
        raise ValueError(f"modulus must lie in (0, 1), got {k}")
    # k' computed as sqrt((1-k)(1+k)) keeps accuracy near k -> 1
    kp = math.sqrt((1.0 - k) * (1.0 + k))
    K, E = _agm_KE(k, kp)
    Kp, Ep = _agm_KE(kp, k)
    return EllipticParams(k, kp, K, E, Kp, Ep)


def dK_dk(p: EllipticParams) -> float:
    return p.E / (p.k * p.kp**2) - p.K / p.k


def dE_dk(p: EllipticParams) -> float:
    return (p.E - p.K) / p.k


def dKp_dk(p: EllipticParams) -> float:
    """d K(k')/dk."""
    return -p.Ep / (p.k * p.kp**2) + p.k * p.Kp / p.kp**2


def jacobi(u, k: float):
    """(sn, cn, dn)(u; k) by descending Landen (AGM) recursion.

    Vectorised over ``u``.  The recursion stops once the modulus sequence
    falls below 1e-12 and closes with trigonometric functions.
    """
    if not 0 <= k < 1:
        raise ValueError(f"modulus must lie in [0, 1), got {k}")
    u = np.asarray(u, dtype=float)
    if k == 0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    a = [1.0]
    c = [k]
    b = math.sqrt((1.0 - k) * (1.0 + k))
    while abs(c[-1]) > 1e-12 * a[-1]:
        if len(a) > AGM_MAXITER:
            raise RuntimeError("Landen descent did not converge")
        an, bn, cn = 0.5 * (a[-1] + b), math.sqrt(a[-1] * b), 0.5 * (a[-1] - b)
        a.append(an)
        c.append(cn)
        b = bn
    n = len(a) - 1
    phi = (2.0**n) * a[n] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] / a[j] * np.sin(phi)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    # dn > 0 for k < 1; the square root is more accurate than the
    # cn / cos(phi1 - phi0) closure near the zeros of cn.
    dn = np.sqrt((1.0 - k * sn) * (1.0 + k * sn))
    return sn, cn, dn
