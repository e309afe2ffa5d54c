"""Gegenbauer polynomials, zonal reproducing kernels and band-limited zonal functions.

Everything is evaluated with forward three-term recurrences in ``t``; monomial
expansions are never formed. A band-limited zonal function

    f(x) = sum_k a_k Z_k(p, x),    Z_k(p, x) = (k + lam)/lam * C_k^lam(<p, x>),

with ``lam = (d - 2)/2`` has exact projections, Sobolev norms and fractional
Laplace-Beltrami powers, which is why it is the test-function class throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .sphere import as_points

MAX_DEGREE = 200


def gegenbauer_table(nmax: int, lam: float, t) -> np.ndarray:
    """Values C_0^lam(t), ..., C_nmax^lam(t) stacked along a new leading axis."""
    if lam <= -0.5:
        raise ValueError(f"Gegenbauer parameter must exceed -1/2, got {lam}")
    t = np.asarray(t, dtype=float)
    out = np.empty((nmax + 1,) + t.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 2.0 * lam * t
    for n in range(2, nmax + 1):
        out[n] = (2.0 * (n + lam - 1.0) * t * out[n - 1] - (n + 2.0 * lam - 2.0) * out[n - 2]) / n
    return out


def gegenbauer(n: int, lam: float, t):
    """C_n^lam(t) by the recurrence n C_n = 2(n+lam-1) t C_{n-1} - (n+2lam-2) C_{n-2}."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    t = np.asarray(t, dtype=float)
    if lam <= -0.5:
        raise ValueError(f"Gegenbauer parameter must exceed -1/2, got {lam}")
    prev, cur = np.ones_like(t), 2.0 * lam * t
    if n == 0:
        return prev if prev.ndim else float(prev)
    for k in range(2, n + 1):
        prev, cur = cur, (2.0 * (k + lam - 1.0) * t * cur - (k + 2.0 * lam - 2.0) * prev) / k
    return cur if cur.ndim else float(cur)


def _lam(d: int) -> float:
    if d < 3:
        raise ValueError(f"d must be >= 3, got {d}")
    return (d - 2) / 2.0


def harmonic_dim(n: int, d: int) -> int:
    """Dimension N(n, d) of the degree-n spherical harmonics on S^{d-1}."""
    if n < 0 or d < 3:
        raise ValueError("need n >= 0 and d >= 3")
    return comb(n + d - 1, n) - (comb(n + d - 3, n - 2) if n >= 2 else 0)


def laplace_eigenvalue(n: int, d: int) -> int:
    """Eigenvalue n(n + d - 2) of -Delta_0 on degree-n harmonics."""
    return n * (n + d - 2)


def zonal_kernel(n: int, d: int, t):
    """Reproducing kernel Z_n(x, y) as a function of t = <x, y>."""
    lam = _lam(d)
    return (n + lam) / lam * gegenbauer(n, lam, t)


def zonal_table(K: int, d: int, t) -> np.ndarray:
    """Z_0(t), ..., Z_K(t) stacked along a new leading axis."""
    lam = _lam(d)
    C = gegenbauer_table(K, lam, t)
    scale = (np.arange(K + 1) + lam) / lam
    return C * scale.reshape((-1,) + (1,) * (C.ndim - 1))


def zonal_series(coeffs, d: int, t) -> np.ndarray:
    """sum_k coeffs[k] Z_k(t), accumulated along the recurrence."""
    coeffs = np.asarray(coeffs, dtype=float)
    lam = _lam(d)
    t = np.asarray(t, dtype=float)
    acc = np.full(t.shape, coeffs[0])
    if len(coeffs) == 1:
        return acc
    prev, cur = np.ones_like(t), 2.0 * lam * t
    acc = acc + coeffs[1] * (1.0 + lam) / lam * cur
    for k in range(2, len(coeffs)):
        prev, cur = cur, (2.0 * (k + lam - 1.0) * t * cur - (k + 2.0 * lam - 2.0) * prev) / k
        if coeffs[k] != 0.0:
            acc = acc + coeffs[k] * (k + lam) / lam * cur
    return acc


def _eigenvalues(K: int, d: int) -> np.ndarray:
    k = np.arange(K + 1, dtype=float)
    return k * (k + d - 2)


@dataclass(frozen=True)
class BandLimitedZonal:
    """f(x) = sum_{k=0}^{K} coeffs[k] Z_k(pole, x) on S^{d-1}."""

    pole: np.ndarray
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        pole = as_points(self.pole)
        if pole.shape[0] != 1:
            raise ValueError("pole must be a single point")
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coeffs must be a non-empty vector")
        if coeffs.size - 1 > MAX_DEGREE:
            raise ValueError(f"degree cap exceeded: K = {coeffs.size - 1} > {MAX_DEGREE}")
        object.__setattr__(self, "pole", pole[0])
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dim(self) -> int:
        return self.pole.shape[0]

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    def with_coeffs(self, coeffs) -> "BandLimitedZonal":
        return BandLimitedZonal(self.pole, coeffs)

    def profile(self, t) -> np.ndarray:
        """The univariate profile, i.e. f as a function of t = <pole, x>."""
        return zonal_series(self.coeffs, self.dim, t)

    def __call__(self, x) -> np.ndarray:
        return zonal_eval(self, x)


def zonal_eval(f: BandLimitedZonal, x) -> np.ndarray:
    """Evaluate ``f`` at the rows of ``x`` (shape ``(d,)`` or ``(P, d)``)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != f.dim:
        raise ValueError(f"dimension mismatch: x has d={x.shape[-1]}, f has d={f.dim}")
    return f.profile(x @ f.pole)


def apply_fractional_power(f: BandLimitedZonal, exponent: float) -> BandLimitedZonal:
    """(-Delta_0 + I)^exponent f, i.e. a_k -> (1 + lambda_k)^exponent a_k."""
    K = f.coeffs.size - 1
    return f.with_coeffs((1.0 + _eigenvalues(K, f.dim)) ** exponent * f.coeffs)


def sobolev_norm_2(f: BandLimitedZonal, r: float) -> float:
    """Exact W_2^r norm: sqrt(sum_k (1 + lambda_k)^r a_k^2 N(k, d))."""
    if r < 0:
        raise ValueError("Sobolev index must be non-negative")
    K = f.coeffs.size - 1
    dims = np.array([harmonic_dim(k, f.dim) for k in range(K + 1)], dtype=float)
    return float(np.sqrt(np.sum((1.0 + _eigenvalues(K, f.dim)) ** r * f.coeffs**2 * dims)))
