"""Constructed deep convolutional ReLU networks on the sphere.

Layout of a network (widths in brackets)::

    x [d] -> J convolutional ReLU layers [d + jS] -> downsample by d [D2]
          -> fully connected F1 = Xi(D2, 1) [D1 = (2N+3) D2]
          -> (two-layer flavour only) F2 = Xi(D2, theta)^T [D2]
          -> linear read-out

``Xi(D2, u)`` is block diagonal with D2 copies of the column ``u``. It is never
materialized; blocks are applied directly. The convolutional stage is computed
in double-double arithmetic (see ``_dd``): every activation there equals a
small signal plus the constant B_j = prod ||w^(p)||_1, which is far larger than
float64 can carry alongside a 1e-8-accurate signal.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from math import ceil
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import _dd
from ._dd import DD
from .filters import factorize_filter, feature_filter, l1_norm, pad_with_deltas
from .harmonics import BandLimitedZonal, apply_fractional_power
from .operators import SmoothedKernel, SplineMesh, apply_LN
from .sphere import as_points

FORMAT_VERSION = 1
KERNEL_SUP_POINTS = 10_000
KERNEL_SUP_MARGIN = 1.01


class ConstructionError(ValueError):
    """Network parameters violate a structural constraint of the construction."""


def min_depth(m: int, d: int, S: int) -> int:
    """Smallest J with J >= (md - 1)/(S - 1): enough layers to factor the feature filter."""
    return ceil((m * d - 1) / (S - 1))


@dataclass(frozen=True)
class CnnLayer:
    """h -> relu(T^w h - b) with taps of length S + 1 and bias of length in_width + S."""

    taps: np.ndarray
    bias: DD = field(repr=False)

    @property
    def S(self) -> int:
        return self.taps.size - 1

    @property
    def out_width(self) -> int:
        return self.bias.shape[0]

    @property
    def in_width(self) -> int:
        return self.out_width - self.S


class CnnStack(NamedTuple):
    layers: list
    B_J: DD
    factor_error: float


def _toeplitz_row_sums(taps: np.ndarray, D: int) -> DD:
    """T^w 1_D in double-double; entries are partial sums of the taps."""
    hi, lo = np.zeros(D + taps.size - 1), np.zeros(D + taps.size - 1)
    for k, w in enumerate(taps):
        hi[k : k + D], lo[k : k + D] = _dd.add(hi[k : k + D], lo[k : k + D], w, 0.0)
    return DD(hi, lo)


def build_cnn_stack(points, S: int, J: int, tol: float = 1e-6) -> CnnStack:
    """Convolutional layers whose output at positions kd is <y_k, x> + B_J.

    Filters: the feature filter of ``points`` factorized into length-(S+1)
    pieces, padded with unit filters to J layers. Biases: b^(1) = -||w^(1)||_1 1
    and b^(j) = B_{j-1} T^(j) 1 - B_j 1 with B_j = prod_{p <= j} ||w^(p)||_1, so
    every pre-activation equals T^(j,1) x + B_j >= 0 on the sphere.
    """
    ys = as_points(points)
    m, d = ys.shape
    if not 2 <= S:
        raise ConstructionError("filter length S must be >= 2")
    if J < min_depth(m, d, S):
        raise ConstructionError(f"J = {J} < ceil((md-1)/(S-1)) = {min_depth(m, d, S)}")
    fac = factorize_filter(feature_filter(ys), S, tol=tol)
    filters = pad_with_deltas(fac.factors, J)

    layers = []
    B_prev = None
    width = d
    for w in filters:
        taps = np.zeros(S + 1)
        taps[: w.size] = w
        norm = DD(*_dd.dd_sum(np.abs(taps)))
        B = norm if B_prev is None else B_prev * norm
        ones = np.ones(width + S)
        if B_prev is None:
            bias = DD(-B.hi * ones, -B.lo * ones)
        else:
            bias = _toeplitz_row_sums(taps, width) * B_prev - DD(B.hi * ones, B.lo * ones)
        layers.append(CnnLayer(taps, bias))
        B_prev = B
        width += S
    return CnnStack(layers, B_prev, fac.rel_error)


def _conv_layer(h: DD, layer: CnnLayer) -> DD:
    P, D = h.shape
    hi, lo = np.zeros((P, D + layer.S)), np.zeros((P, D + layer.S))
    for k, w in enumerate(layer.taps):
        if w == 0.0:
            continue
        ph, pl = _dd.mul_float(h.hi, h.lo, w)
        hi[:, k : k + D], lo[:, k : k + D] = _dd.add(hi[:, k : k + D], lo[:, k : k + D], ph, pl)
    return DD(hi, lo) - layer.bias


def _check_input(layers: Sequence[CnnLayer], x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if layers and X.shape[1] != layers[0].in_width:
        raise ValueError(f"dimension mismatch: input has width {X.shape[1]}, network expects {layers[0].in_width}")
    return X, single


def forward_cnn(layers: Sequence[CnnLayer], x) -> list[DD]:
    """Hidden states [h^(0), ..., h^(J)] as double-double arrays of shape (P, width)."""
    X, _ = _check_input(layers, x)
    hs = [DD.of(X)]
    for layer in layers:
        hs.append(_conv_layer(hs[-1], layer).relu())
    return hs


def min_preactivation(layers: Sequence[CnnLayer], x) -> float:
    """Smallest pre-activation over all layers and inputs (>= 0 means ReLU acts as identity)."""
    X, _ = _check_input(layers, x)
    h, lowest = DD.of(X), np.inf
    for layer in layers:
        pre = _conv_layer(h, layer)
        lowest = min(lowest, float(np.min(pre.to_float())))
        h = pre.relu()
    return lowest


def downsample(v, d: int):
    """Keep entries d, 2d, ... (1-based) along the last axis; works on arrays and DD."""
    width = v.shape[-1]
    if d < 1 or d > width:
        raise ValueError(f"scaling parameter d={d} must satisfy 1 <= d <= {width}")
    return v[..., d - 1 : (width // d) * d : d]


@dataclass(frozen=True)
class SphericalNetwork:
    """A constructed network of either flavour.

    ``flavor="two-layer"`` (general Sobolev approximation): output is
    ``c . h^(J+2)(x) - A`` with ``out_coeffs`` of length D2.
    ``flavor="one-layer"`` (additive ridge approximation): output is
    ``c . h^(J+1)(x)`` with ``out_coeffs`` of shape (D2, 2N+3).
    """

    flavor: str
    d: int
    S: int
    m: int
    N: int
    layers: tuple
    B_J: DD = field(repr=False)
    out_coeffs: np.ndarray = field(repr=False)
    theta: np.ndarray | None = field(default=None, repr=False)
    B_J2: float | None = None
    A: float = 0.0
    n: int | None = None
    r: float | None = None

    def __post_init__(self):
        if self.flavor not in ("two-layer", "one-layer"):
            raise ConstructionError(f"unknown flavour {self.flavor!r}")
        if self.D2 < self.m:
            raise ConstructionError(f"downsampled width {self.D2} < m = {self.m}")
        expected = (self.D2,) if self.flavor == "two-layer" else (self.D2, 2 * self.N + 3)
        if np.shape(self.out_coeffs) != expected:
            raise ConstructionError(f"output coefficients must have shape {expected}")
        if self.flavor == "two-layer" and (self.theta is None or self.B_J2 is None):
            raise ConstructionError("two-layer networks need theta and B_J2")

    @property
    def J(self) -> int:
        return len(self.layers)

    @property
    def D2(self) -> int:
        return (self.d + self.J * self.S) // self.d

    @property
    def D1(self) -> int:
        return (2 * self.N + 3) * self.D2

    @cached_property
    def mesh(self) -> SplineMesh:
        return SplineMesh(self.N)

    @cached_property
    def bias_fc1(self) -> DD:
        """b^(J+1) in block form (D2, 2N+3): B_J + t_i for blocks j <= m, B_J + 1 beyond."""
        shifts = np.ones((self.D2, 2 * self.N + 3))
        shifts[: self.m] = self.mesh.nodes
        return DD(np.full(shifts.shape, self.B_J.hi), np.full(shifts.shape, self.B_J.lo)) + shifts

    @cached_property
    def bias_fc2(self) -> np.ndarray:
        b = np.zeros(self.D2)
        if self.flavor == "two-layer":
            b[: self.m] = -self.B_J2 / self.N
        return b

    def cnn(self, x) -> list[DD]:
        return forward_cnn(self.layers, x)

    def features(self, x) -> np.ndarray:
        """Downsampled CNN output minus B_J, shape (P, D2); entries j <= m equal <y_j, x>."""
        h = downsample(self.cnn(x)[-1], self.d)
        return (h - DD(np.full(h.shape, self.B_J.hi), np.full(h.shape, self.B_J.lo))).to_float()

    def hidden_fc1(self, x) -> np.ndarray:
        """h^(J+1) in block form (P, D2, 2N+3)."""
        v = downsample(self.cnn(x)[-1], self.d)
        pre = DD(v.hi[:, :, None], v.lo[:, :, None]) - self.bias_fc1
        return pre.relu().to_float()

    def hidden_fc2(self, x) -> np.ndarray:
        if self.flavor != "two-layer":
            raise ConstructionError("one-layer networks have no second fully connected layer")
        return np.maximum(self.hidden_fc1(x) @ self.theta - self.bias_fc2, 0.0)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.flavor == "one-layer":
            out = np.einsum("pji,ji->p", self.hidden_fc1(x), self.out_coeffs)
        else:
            out = self.hidden_fc2(x) @ self.out_coeffs - self.A
        return out[0] if x.ndim == 1 else out


def build_theorem1_net(f: BandLimitedZonal, r: float, n: int, samples, N: int, S: int, J: int) -> SphericalNetwork:
    """Two-layer network whose output is (1/m) sum_j F_r(y_j) L_t(zeta_{n,r})(<y_j, x>).

    This is the spline version of the empirical operator built on ``samples``;
    F_r = (-Delta_0 + I)^{r/2} f and zeta_{n,r} is the smoothed kernel.
    """
    ys = as_points(samples, f.dim)
    m, d = ys.shape
    if N < 1:
        raise ConstructionError("N must be >= 1")
    layers, B_J, _ = build_cnn_stack(ys, S, J)
    zeta = SmoothedKernel(n, r, d)
    mesh = SplineMesh(N)
    node_vals = zeta(mesh.interior)
    theta = apply_LN(node_vals)
    # any upper bound of |L_t zeta| on [-1, 1] keeps the second layer non-negative
    B_J2 = KERNEL_SUP_MARGIN * max(zeta.sup_estimate(KERNEL_SUP_POINTS), float(np.max(np.abs(node_vals))))
    F = apply_fractional_power(f, r / 2.0)(ys)
    D2 = (d + J * S) // d
    c = np.zeros(D2)
    c[:m] = N / m * F
    return SphericalNetwork(
        "two-layer", d, S, m, N, tuple(layers), B_J, c,
        theta=theta, B_J2=B_J2, A=B_J2 * float(np.mean(F)), n=n, r=r,
    )


def build_theorem2_net(points, g_values, S: int, N: int) -> SphericalNetwork:
    """One-layer network whose output is sum_j L_t(g_j)(<y_j, x>).

    ``g_values[j]`` holds g_j at the mesh nodes t_2, ..., t_{2N+2}. Depth is the
    minimal J = ceil((md - 1)/(S - 1)).
    """
    ys = as_points(points)
    m, d = ys.shape
    g_values = np.asarray(g_values, dtype=float)
    if g_values.shape != (m, 2 * N + 1):
        raise ConstructionError(f"g_values must have shape ({m}, {2 * N + 1}), got {g_values.shape}")
    J = min_depth(m, d, S)
    layers, B_J, _ = build_cnn_stack(ys, S, J)
    D2 = (d + J * S) // d
    c = np.zeros((D2, 2 * N + 3))
    for j in range(m):
        c[j] = N * apply_LN(g_values[j])
    return SphericalNetwork("one-layer", d, S, m, N, tuple(layers), B_J, c)


def count_free_parameters(net: SphericalNetwork) -> int:
    """Free-parameter count in the construction's own accounting.

    Per convolutional layer: S + 1 taps (by capacity, also for unit filters) and
    2S + 1 bias degrees of freedom (the middle run of equal entries counts once).
    Two-layer flavour adds 2N + 1 kernel samples, B_J and B_J2, and m + 1 for the
    read-out coefficients and shift. One-layer flavour adds B_J and m(2N + 1)
    ridge-profile samples. The block matrices Xi are fixed and not counted.
    """
    J, S, N, m = net.J, net.S, net.N, net.m
    cnn = J * (S + 1) + J * (2 * S + 1)
    if net.flavor == "two-layer":
        return cnn + (2 * N + 1) + 2 + (m + 1)
    return cnn + 1 + m * (2 * N + 1)


def parameter_bound(net: SphericalNetwork) -> int:
    """J(3S+2) + m + 2N + 4 (two-layer) or (3S+2) J + m(2N+2) (one-layer)."""
    if net.flavor == "two-layer":
        return net.J * (3 * net.S + 2) + net.m + 2 * net.N + 4
    return (3 * net.S + 2) * net.J + net.m * (2 * net.N + 2)


# --- plain-text serialization --------------------------------------------------

_HEADER = "# sphconv-network"


def _fmt(values) -> str:
    return " ".join(format(float(v), ".17g") for v in np.ravel(values))


def dumps_network(net: SphericalNetwork) -> str:
    """Serialize to the version-1 text format.

    Layout: a ``# sphconv-network 1`` line, then ``key value...`` lines. Header
    keys ``flavor d S J m N`` (plus ``n r`` for the two-layer flavour), scalars
    ``B_J hi lo``, ``B_J2``, ``A``, then per layer ``taps``, ``bias_hi``,
    ``bias_lo`` lines, then ``theta`` and ``coeffs`` (row-major), and ``end``.
    Floats use 17 significant digits so values round-trip exactly. Biases are
    double-double and are stored as two rows whose sum is the bias.
    """
    out = io.StringIO()
    w = out.write
    w(f"{_HEADER} {FORMAT_VERSION}\n")
    w(f"flavor {net.flavor}\nd {net.d}\nS {net.S}\nJ {net.J}\nm {net.m}\nN {net.N}\n")
    if net.flavor == "two-layer":
        w(f"n {net.n}\nr {format(float(net.r), '.17g')}\n")
        w(f"B_J2 {format(net.B_J2, '.17g')}\nA {format(net.A, '.17g')}\n")
    w(f"B_J {_fmt([net.B_J.hi, net.B_J.lo])}\n")
    for j, layer in enumerate(net.layers, 1):
        w(f"taps {j} {_fmt(layer.taps)}\n")
        w(f"bias_hi {j} {_fmt(layer.bias.hi)}\n")
        w(f"bias_lo {j} {_fmt(layer.bias.lo)}\n")
    if net.flavor == "two-layer":
        w(f"theta {_fmt(net.theta)}\n")
    w(f"coeffs {_fmt(net.out_coeffs)}\nend\n")
    return out.getvalue()


def loads_network(text: str) -> SphericalNetwork:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or " ".join(lines[0][:2]) != _HEADER:
        raise ValueError("not a sphconv network file")
    if int(lines[0][2]) != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {lines[0][2]}")
    kv, taps, bhi, blo = {}, {}, {}, {}
    for parts in lines[1:]:
        key = parts[0]
        if key == "end":
            break
        if key in ("taps", "bias_hi", "bias_lo"):
            {"taps": taps, "bias_hi": bhi, "bias_lo": blo}[key][int(parts[1])] = np.array(parts[2:], dtype=float)
        else:
            kv[key] = parts[1:]
    J = int(kv["J"][0])
    layers = tuple(CnnLayer(taps[j], DD(bhi[j], blo[j])) for j in range(1, J + 1))
    d, S, m, N = (int(kv[k][0]) for k in ("d", "S", "m", "N"))
    flavor = kv["flavor"][0]
    B_J = DD(*(np.array(v, dtype=float) for v in kv["B_J"]))
    coeffs = np.array(kv["coeffs"], dtype=float)
    if flavor == "two-layer":
        return SphericalNetwork(
            flavor, d, S, m, N, layers, B_J, coeffs,
            theta=np.array(kv["theta"], dtype=float), B_J2=float(kv["B_J2"][0]),
            A=float(kv["A"][0]), n=int(kv["n"][0]), r=float(kv["r"][0]),
        )
    return SphericalNetwork(flavor, d, S, m, N, layers, B_J, coeffs.reshape(-1, 2 * N + 3))


def save_network(net: SphericalNetwork, path) -> None:
    Path(path).write_text(dumps_network(net))


def load_network(path) -> SphericalNetwork:
    return loads_network(Path(path).read_text())
