"""Near-best operator L_n, its Monte-Carlo discretization, and the ReLU spline machinery.

The cutoff is fixed to the exp-bump construction

    eta(t) = h(2 - t) / (h(2 - t) + h(t - 1)),  h(s) = exp(-1/s) for s > 0 else 0,

which is C-infinity, equal to 1 on [0, 1], 0 on [2, inf) and symmetric about
t = 1.5. On band-limited zonal inputs L_n acts coefficient-wise by eta(k/n), so
no quadrature is involved anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .harmonics import BandLimitedZonal, apply_fractional_power, zonal_series
from .sphere import as_points


def relu(u):
    return np.maximum(u, 0.0)


def _h(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)


def eta(t):
    """The smooth cutoff: 1 on [0, 1], 0 on [2, inf), decreasing in between."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("eta is defined on [0, inf)")
    a, b = _h(2.0 - t), _h(t - 1.0)
    out = np.where(t <= 1.0, 1.0, np.where(t >= 2.0, 0.0, a / np.where(a + b > 0, a + b, 1.0)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SmoothedKernel:
    """zeta_{n,r}(t) = sum_{k=0}^{2n} (1 + lambda_k)^{-r/2} eta(k/n) Z_k(t); r = 0 gives l_n."""

    n: int
    r: float
    d: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.r < 0:
            raise ValueError("r must be >= 0")
        if self.d < 3:
            raise ValueError("d must be >= 3")

    @cached_property
    def coeffs(self) -> np.ndarray:
        k = np.arange(2 * self.n + 1, dtype=float)
        return (1.0 + k * (k + self.d - 2)) ** (-self.r / 2.0) * eta(k / self.n)

    def __call__(self, t) -> np.ndarray:
        return zonal_series(self.coeffs, self.d, t)

    def sup_estimate(self, points: int = 10_000) -> float:
        """max |zeta| over a uniform grid of ``points`` values on [-1, 1]."""
        return float(np.max(np.abs(self(np.linspace(-1.0, 1.0, points)))))


def smoothed_kernel_eval(kernel: SmoothedKernel, t):
    return kernel(t)


def apply_Ln(f: BandLimitedZonal, n: int) -> BandLimitedZonal:
    """L_n f for band-limited zonal f: coefficient k is multiplied by eta(k/n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(f.coeffs.size, dtype=float)
    return f.with_coeffs(eta(k / n) * f.coeffs)


def discretized_Ln(f: BandLimitedZonal, r: float, n: int, samples, x) -> np.ndarray:
    """Empirical operator (1/m) sum_i F_r(y_i) zeta_{n,r}(<x, y_i>) with F_r = (-Delta_0+I)^{r/2} f.

    ``x`` may be one point or a ``(P, d)`` array; the result has one value per row.
    """
    ys = as_points(samples, f.dim)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != f.dim:
        raise ValueError("dimension mismatch between x and f")
    weights = apply_fractional_power(f, r / 2.0)(ys) / ys.shape[0]
    zeta = SmoothedKernel(n, r, f.dim)
    out = np.empty(X.shape[0])
    # chunk rows so the (P, m) kernel matrix stays small
    step = max(1, 2_000_000 // ys.shape[0])
    for s in range(0, X.shape[0], step):
        out[s : s + step] = zeta(X[s : s + step] @ ys.T) @ weights
    return out[0] if single else out


@dataclass(frozen=True)
class SplineMesh:
    """Uniform mesh t_i = -1 + (i - 2)/N, i = 1..2N+3, on [-1 - 1/N, 1 + 1/N].

    ``nodes[i - 1]`` holds t_i (node labels are 1-based as in the formulas).
    """

    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")

    @cached_property
    def nodes(self) -> np.ndarray:
        i = np.arange(1, 2 * self.N + 4, dtype=float)
        return -1.0 + (i - 2.0) / self.N

    def t(self, i: int) -> float:
        return float(self.nodes[i - 1])

    @property
    def interior(self) -> np.ndarray:
        """Nodes t_2, ..., t_{2N+2}, which span exactly [-1, 1]."""
        return self.nodes[1:-1]


def delta_i_eval(mesh: SplineMesh, i: int, u):
    """Hat function N(relu(u - t_{i-1}) - 2 relu(u - t_i) + relu(u - t_{i+1})), 2 <= i <= 2N+2."""
    if not 2 <= i <= 2 * mesh.N + 2:
        raise IndexError(f"hat index {i} outside [2, {2 * mesh.N + 2}]")
    u = np.asarray(u, dtype=float)
    t = mesh.nodes
    return mesh.N * (relu(u - t[i - 2]) - 2.0 * relu(u - t[i - 1]) + relu(u - t[i]))


def apply_Lt(g: Callable | np.ndarray, mesh: SplineMesh, u) -> np.ndarray:
    """Quasi-interpolant sum_{i=2}^{2N+2} g(t_i) delta_i(u).

    ``g`` is either a vectorized callable or the precomputed values at t_2..t_{2N+2}.
    """
    vals = np.asarray(g(mesh.interior) if callable(g) else g, dtype=float)
    if vals.shape != (2 * mesh.N + 1,):
        raise ValueError(f"expected {2 * mesh.N + 1} node values, got shape {vals.shape}")
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    for i in range(2, 2 * mesh.N + 3):
        out += vals[i - 2] * delta_i_eval(mesh, i, u)
    return out


def apply_LN(values) -> np.ndarray:
    """Second-difference extension R^{2N+1} -> R^{2N+3}.

    Input position p holds the value at node t_{p+2}; output position q holds
    the coefficient of relu(. - t_{q+1}). With these labels

        L_t(g) = N * sum_i apply_LN(g(t_2..t_{2N+2}))_i relu(. - t_i).
    """
    z = np.asarray(values, dtype=float)
    if z.ndim != 1 or z.size < 3 or z.size % 2 == 0:
        raise ValueError(f"expected a vector of odd length 2N+1 >= 3, got shape {z.shape}")
    # pad with zeros at the two outer nodes; a plain second difference then gives every case
    padded = np.concatenate([[0.0, 0.0], z, [0.0, 0.0]])
    return padded[:-2] - 2.0 * padded[1:-1] + padded[2:]


def spline_from_LN(coeffs, mesh: SplineMesh, u) -> np.ndarray:
    """N * sum_i coeffs_i relu(u - t_i): the ReLU form of the quasi-interpolant."""
    u = np.asarray(u, dtype=float)
    return mesh.N * (relu(u[..., None] - mesh.nodes) @ np.asarray(coeffs, dtype=float))
