"""Finitely supported filters, Toeplitz convolution matrices and convolutional factorization.

A filter is a 1-D float array of taps ``(w_0, ..., w_M)`` supported on
``{0, ..., M}``. Convolution with a filter is polynomial multiplication of the
generating polynomials ``sum_k w_k z^k``, so factorizing a long filter into
filters of length ``S + 1`` means splitting its polynomial into real factors of
degree at most ``S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import NamedTuple, Sequence

import numpy as np

from .sphere import as_points


class FactorizationError(ArithmeticError):
    """Root finding failed or the factors do not reproduce the filter."""

    def __init__(self, message: str, taps: np.ndarray):
        super().__init__(f"{message}; polynomial coefficients (ascending) = {np.array2string(taps, precision=17)}")
        self.taps = taps


def as_filter(taps) -> np.ndarray:
    w = np.atleast_1d(np.asarray(taps, dtype=float))
    if w.ndim != 1 or w.size == 0:
        raise ValueError("a filter needs at least one tap")
    if not np.all(np.isfinite(w)):
        raise ValueError("filter taps must be finite")
    return w


def delta(length: int = 1) -> np.ndarray:
    """The unit filter delta_0, zero-padded to ``length`` taps."""
    w = np.zeros(length)
    w[0] = 1.0
    return w


def l1_norm(w) -> float:
    return float(np.sum(np.abs(w)))


def convolve(w, v) -> np.ndarray:
    """(w * v)_i = sum_k w_{i-k} v_k restricted to its support; length ``len(v) + M``."""
    w = as_filter(w)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("v must be a non-empty vector")
    out = np.zeros(v.size + w.size - 1)
    # accumulate column by column, the same order toeplitz_apply uses
    for k, vk in enumerate(v):
        out[k : k + w.size] += vk * w
    return out


@dataclass(frozen=True)
class ToeplitzMatrix:
    """The (D + M) x D matrix with entries w_{i-k}."""

    filter: np.ndarray
    D: int

    def __post_init__(self):
        object.__setattr__(self, "filter", as_filter(self.filter))
        if self.D < 1:
            raise ValueError("D must be >= 1")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.D + self.filter.size - 1, self.D)

    def dense(self) -> np.ndarray:
        rows, cols = self.shape
        diff = np.arange(rows)[:, None] - np.arange(cols)[None, :]
        valid = (diff >= 0) & (diff < self.filter.size)
        return np.where(valid, self.filter[np.clip(diff, 0, self.filter.size - 1)], 0.0)

    def apply(self, v) -> np.ndarray:
        return toeplitz_apply(self, v)


def toeplitz_apply(T: ToeplitzMatrix, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (T.D,):
        raise ValueError(f"length mismatch: matrix has D={T.D}, vector has shape {v.shape}")
    A = T.dense()
    out = np.zeros(A.shape[0])
    for k in range(T.D):
        out += A[:, k] * v[k]
    return out


def convolve_all(filters: Sequence) -> np.ndarray:
    """w^(p) * ... * w^(1) for ``filters = [w^(1), ..., w^(p)]``."""
    out = np.array([1.0])
    for w in filters:
        out = np.convolve(as_filter(w), out)
    return out


def toeplitz_chain(filters: Sequence, d: int, route: str = "filter") -> np.ndarray:
    """T^(J) ... T^(1) with T^(j) the Toeplitz matrix of ``filters[j-1]``, starting width ``d``.

    ``route="filter"`` builds the Toeplitz matrix of the convolved filter directly;
    ``route="product"`` multiplies the individual matrices. Both give the same matrix.
    """
    if len(filters) == 0:
        raise ValueError("need at least one filter")
    if route == "filter":
        return ToeplitzMatrix(convolve_all(filters), d).dense()
    if route == "product":
        P = np.eye(d)
        for w in filters:
            P = ToeplitzMatrix(w, P.shape[0]).dense() @ P
        return P
    raise ValueError(f"unknown route {route!r}")


# --- factorization --------------------------------------------------------

CONJUGATE_TOL = 1e-8


class Factorization(NamedTuple):
    factors: list
    rel_error: float


def _companion_roots(c: np.ndarray) -> np.ndarray:
    """Roots of sum_k c_k z^k (c[-1] != 0) as eigenvalues of the companion matrix."""
    n = c.size - 1
    C = np.zeros((n, n))
    C[1:, :-1] = np.eye(n - 1)
    C[:, -1] = -c[:-1] / c[-1]
    try:
        return np.linalg.eigvals(C)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"eigenvalue iteration did not converge ({exc})", c) from exc


def _root_units(roots: np.ndarray, taps: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """Monic real factors of degree 1 (real roots) and 2 (conjugate pairs), each with its root argument."""
    scale = np.maximum(1.0, np.abs(roots))
    is_real = np.abs(roots.imag) <= CONJUGATE_TOL * scale
    upper = roots[~is_real & (roots.imag > 0)]
    lower = roots[~is_real & (roots.imag < 0)]
    if upper.size != lower.size:
        raise FactorizationError("complex roots do not come in conjugate pairs", taps)
    units = [(0.0 if z >= 0 else np.pi, np.array([-z, 1.0])) for z in roots[is_real].real.tolist()]
    if upper.size:
        dist = np.abs(upper[:, None] - np.conj(lower)[None, :])
        partner = np.empty(upper.size, dtype=int)
        for i in range(upper.size):
            partner[i] = np.argmin(dist[i])
            dist[:, partner[i]] = np.inf
        z = 0.5 * (upper + np.conj(lower[partner]))
        quads = np.stack([np.abs(z) ** 2, -2.0 * z.real, np.ones(z.size)], axis=1)
        units += list(zip(np.angle(z).tolist(), quads))
    return units


def _bit_reversal_order(n: int) -> list[int]:
    """A permutation of range(n) whose every prefix is spread evenly over the range."""
    bits = max(1, (n - 1).bit_length())
    seen, order = set(), []
    for k in range(1 << bits):
        rev = int(format(k, f"0{bits}b")[::-1], 2)
        i = (rev * n) >> bits
        if i not in seen:
            seen.add(i)
            order.append(i)
    order.extend(i for i in range(n) if i not in seen)
    return order


def factorize_filter(W, S: int, tol: float = 1e-6) -> Factorization:
    """Split ``W`` into filters supported in ``{0..S}`` with ``w^(p) * ... * w^(1) = W``.

    The generating polynomial's roots come from the companion matrix. Roots are
    grouped into real factors of degree <= S (conjugate pairs kept together).
    Before greedy packing the roots are sorted by argument and visited in
    bit-reversal order. This keeps every factor, and every partial product, close
    to a polynomial with evenly spread roots, which is what keeps the
    reconvolution error small. The leading coefficient is split as
    ``|lead|**(1/p)`` per factor with its sign on the first factor.

    Parameters
    ----------
    W : array_like
        Taps ``(W_0, ..., W_M)``; must not be identically zero.
    S : int
        Filter length bound, ``S >= 2``.
    tol : float
        Maximum accepted relative l-infinity reconvolution error.

    Returns
    -------
    Factorization
        ``(factors, rel_error)``; ``factors[0]`` is applied first. The factor
        count is at most ``ceil(M / (S - 1))`` for ``M >= 1``.

    Raises
    ------
    ValueError
        If ``W`` is zero or ``S < 2``.
    FactorizationError
        If root finding fails or the achieved error exceeds ``tol``.
    """
    W = as_filter(W)
    if S < 2:
        raise ValueError("S must be >= 2")
    nz = np.flatnonzero(W)
    if nz.size == 0:
        raise ValueError("cannot factorize the zero filter")
    M = int(nz[-1])
    if M <= S:
        return Factorization([W[: max(M + 1, 1)].copy()], 0.0)

    low = int(nz[0])  # roots at the origin
    core = W[low : M + 1]
    units = [(0.0, np.array([0.0, 1.0])) for _ in range(low)]
    if core.size > 1:
        units += _root_units(_companion_roots(core), W)
    units.sort(key=lambda item: item[0])
    units = [units[i][1] for i in _bit_reversal_order(len(units))]

    factors, cur = [], np.array([1.0])
    for u in units:
        if cur.size + u.size - 2 > S:
            factors.append(cur)
            cur = np.array([1.0])
        cur = np.convolve(cur, u)
    factors.append(cur)

    lead = W[M]
    share = abs(lead) ** (1.0 / len(factors))
    factors = [share * f for f in factors]
    if lead < 0:
        factors[0] = -factors[0]

    rebuilt = convolve_all(factors)
    target = W[: M + 1]
    err = float(np.max(np.abs(rebuilt - target)) / np.max(np.abs(target)))
    if not np.isfinite(err) or err > tol:
        raise FactorizationError(f"reconvolution error {err:.3e} exceeds tolerance {tol:.1e}", W)
    if len(factors) > ceil(M / (S - 1)):
        raise FactorizationError(f"{len(factors)} factors exceed the bound ceil(M/(S-1))", W)
    return Factorization(factors, err)


def feature_filter(points) -> np.ndarray:
    """Filter on ``{0..md-1}`` with W_{(j-1)d + (d-i)} = (y_j)_i (1-based i, j).

    Block j holds y_j reversed, so row k*d of its Toeplitz matrix reads <y_k, x>.
    """
    ys = as_points(points)
    return ys[:, ::-1].ravel().copy()


def pad_with_deltas(filters: Sequence, J: int) -> list:
    """Append unit filters until there are exactly ``J``."""
    filters = list(filters)
    if J < len(filters):
        raise ValueError(f"J = {J} is smaller than the number of filters ({len(filters)})")
    return filters + [delta() for _ in range(J - len(filters))]
