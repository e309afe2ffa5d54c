"""Rate studies and audits, reported as CSV.

Every study is deterministic given its seed: each parameter point draws from
its own PCG64 stream derived from ``(seed, row index, ...)``, so rows do not
depend on evaluation order.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from math import ceil, floor
from typing import Callable, Sequence

import numpy as np

from . import tolerances as tol
from .filters import factorize_filter
from .harmonics import BandLimitedZonal, harmonic_dim, sobolev_norm_2
from .network import (
    build_theorem1_net,
    build_theorem2_net,
    count_free_parameters,
    parameter_bound,
)
from .operators import SplineMesh, apply_Ln, discretized_Ln
from .sphere import EvalGrid, as_points, make_rng, sample_uniform, sup_norm_on_grid


class BoundViolation(AssertionError):
    """A theoretical bound or an asserted trend failed."""


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x); nan if any y <= 0."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if len(x) < 2 or np.any(y <= 0):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


@dataclass
class RateRow:
    control: int
    sup_error: float
    param_count: int | None
    seed: int
    grid_size: int
    extra: dict = field(default_factory=dict)


@dataclass
class RateStudyReport:
    """Rows sorted by control parameter, plus a log-log slope and metadata."""

    study: str
    rows: list
    metadata: dict

    def __post_init__(self):
        self.rows.sort(key=lambda r: r.control)

    @property
    def controls(self) -> np.ndarray:
        return np.array([r.control for r in self.rows])

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.sup_error for r in self.rows])

    @property
    def fitted_slope(self) -> float:
        return fit_loglog_slope(self.controls, self.errors)

    def to_csv(self) -> str:
        """Metadata as ``# key=value`` lines, then a header row and data rows."""
        out = io.StringIO()
        out.write(f"# study={self.study}\n")
        for k, v in self.metadata.items():
            out.write(f"# {k}={_fmt(v)}\n")
        out.write(f"# fitted_slope={_fmt(self.fitted_slope)}\n")
        extra_keys = list(self.rows[0].extra) if self.rows else []
        out.write(",".join(["control", "sup_error", "param_count", "seed", "grid_size", *extra_keys]) + "\n")
        for r in self.rows:
            cells = [r.control, float(r.sup_error), "" if r.param_count is None else r.param_count, r.seed, r.grid_size]
            cells += [r.extra[k] for k in extra_keys]
            out.write(",".join(_fmt(c) for c in cells) + "\n")
        return out.getvalue()


# --- test-function catalogs ---------------------------------------------------


def north_pole(d: int) -> np.ndarray:
    p = np.zeros(d)
    p[-1] = 1.0
    return p


def zonal_test_function(name: str, d: int, r: float = 1.0, K: int = 24) -> BandLimitedZonal:
    """Named band-limited zonal functions with pole e_d.

    ``constant``: f = 1. ``decay``: a_k = (1 + lambda_k)^{-(r+d)/2} for k <= K,
    so that sup |f - L_n f| decays at least like n^{-r}. ``geometric``:
    a_k = 2^{-k} / N(k, d), a smooth function with O(1) profile values.
    """
    k = np.arange(K + 1, dtype=float)
    if name == "constant":
        coeffs = np.array([1.0])
    elif name == "decay":
        coeffs = (1.0 + k * (k + d - 2)) ** (-(r + d) / 2.0)
    elif name == "geometric":
        coeffs = 2.0**-k / np.array([harmonic_dim(int(i), d) for i in k])
    else:
        raise ValueError(f"unknown zonal test function {name!r}")
    return BandLimitedZonal(north_pole(d), coeffs)


@dataclass(frozen=True)
class RidgeFamily:
    """Profiles g_1..g_m on [-1, 1] with an analytic Hoelder seminorm and exponent."""

    name: str
    profiles: tuple
    seminorms: tuple
    alpha: float
    kinks: tuple = ()

    def __call__(self, ys: np.ndarray, X: np.ndarray) -> np.ndarray:
        U = X @ ys.T
        return sum(g(U[:, j]) for j, g in enumerate(self.profiles))


def ridge_family(name: str, m: int, alpha: float = 0.5) -> RidgeFamily:
    """Built-in additive ridge profiles.

    ``abs``: |u - c_j| (Lipschitz 1). ``abspower``: |u - c_j|^alpha (Hoelder-alpha
    seminorm 1). ``cos``: cos(pi j u) (Lipschitz pi j). ``linear``: u.
    ``zero``: 0. The offsets c_j = (-1)^j j / (3m) keep the kinks off every
    dyadic mesh.
    """
    cs = tuple((-1) ** j * j / (3.0 * m) for j in range(1, m + 1))
    if name == "abs":
        return RidgeFamily(name, tuple((lambda u, c=c: np.abs(u - c)) for c in cs), (1.0,) * m, 1.0, cs)
    if name == "abspower":
        if not 0 < alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        return RidgeFamily(
            name, tuple((lambda u, c=c: np.abs(u - c) ** alpha) for c in cs), (1.0,) * m, alpha, cs
        )
    if name == "cos":
        return RidgeFamily(
            name, tuple((lambda u, j=j: np.cos(np.pi * j * u)) for j in range(1, m + 1)),
            tuple(np.pi * j for j in range(1, m + 1)), 1.0,
        )
    if name == "linear":
        return RidgeFamily(name, tuple((lambda u: np.asarray(u, dtype=float)) for _ in range(m)), (1.0,) * m, 1.0)
    if name == "zero":
        return RidgeFamily(name, tuple((lambda u: np.zeros_like(u)) for _ in range(m)), (0.0,) * m, 1.0)
    raise ValueError(f"unknown ridge family {name!r}")


def kink_points(ys: np.ndarray, kinks: Sequence[float], per_circle: int, rng: np.random.Generator) -> np.ndarray:
    """Sphere points on the circles <y_j, x> = c_j and, when they exist, on all circles at once.

    Piecewise-linear interpolation of |u - c| is worst at u = c, a set a generic
    grid almost never hits; adding these points makes the grid maximum track
    the true sup norm.
    """
    m, d = ys.shape
    pts = []
    for y, c in zip(ys, kinks):
        v = rng.standard_normal((per_circle, d))
        v -= np.outer(v @ y, y)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        pts.append(c * y + np.sqrt(1.0 - c * c) * v)
    if m < d:
        G = ys @ ys.T
        if np.linalg.matrix_rank(G) == m:
            base = ys.T @ np.linalg.solve(G, np.asarray(kinks, dtype=float))
            rest = 1.0 - base @ base
            if rest >= 0:
                Q, _ = np.linalg.qr(ys.T, mode="complete")
                perp = Q[:, m:].T
                z = rng.standard_normal((per_circle, d - m)) @ perp
                z /= np.linalg.norm(z, axis=1, keepdims=True)
                pts.append(base + np.sqrt(rest) * z)
    P = np.vstack(pts)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


# --- studies --------------------------------------------------------------------


def run_theorem2_rate(
    m: int, d: int, S: int, ridge: str, N_list: Sequence[int], grid: EvalGrid, seed: int,
    alpha: float = 0.5, kink_samples: int = 256,
) -> RateStudyReport:
    """Sup error of the one-layer network against an additive ridge function, per N.

    Asserts sup error <= sum_j |g_j| N^{-alpha} and the parameter bound
    (3S+2) J + m(2N+2) on every row.
    """
    fam = ridge_family(ridge, m, alpha)
    ys = sample_uniform(d, m, make_rng(seed, 0))
    if fam.kinks:
        grid = grid.augmented(kink_points(ys, fam.kinks, kink_samples, make_rng(seed, 1)))
    target = fam(ys, grid.points)
    rows = []
    for N in N_list:
        mesh = SplineMesh(N)
        g_values = np.array([g(mesh.interior) for g in fam.profiles])
        net = build_theorem2_net(ys, g_values, S, N)
        err = float(np.max(np.abs(target - net(grid.points))))
        bound = sum(fam.seminorms) * N ** (-fam.alpha)
        count = count_free_parameters(net)
        if err > bound * (1 + tol.BOUND_RTOL) + 1e-12:
            raise BoundViolation(f"N={N}: sup error {err:.6g} exceeds ridge bound {bound:.6g}")
        if count > parameter_bound(net):
            raise BoundViolation(f"N={N}: {count} parameters exceed (3S+2)J + m(2N+2) = {parameter_bound(net)}")
        rows.append(RateRow(N, err, count, seed, grid.size, {"bound": bound, "J": net.J}))
    meta = {
        "d": d, "S": S, "m": m, "ridge": ridge, "alpha": fam.alpha,
        "seminorm_sum": sum(fam.seminorms), "grid_kind": grid.kind, "norm": "grid sup (lower bound of L_inf)",
    }
    return RateStudyReport("thm2-rate", rows, meta)


def theorem1_coupling(J: int, d: int, S: int, r: float, tau: float) -> tuple[int, int, int]:
    """(m, n, N) chosen from the depth J as in the general-Sobolev rate."""
    if not 2 <= S <= d:
        raise ValueError("need 2 <= S <= d")
    if J < (d - 1) / (S - 1):
        raise ValueError(f"infeasible depth: J = {J} < (d-1)/(S-1)")
    if tau <= 0:
        raise ValueError("tau must be positive")
    m = ((S - 1) * J + 1) // d
    if r < d - 1:
        n = floor(m ** (1.0 / (2.0 * (d - 1 + tau))))
        N = n ** (d + 1)
    elif r > d - 1:
        if tau >= r - (d - 1):
            raise ValueError("need tau < r - (d - 1) when r > d - 1")
        n = floor(m ** (1.0 / (2.0 * r)))
        N = floor(n ** (2.0 + r))
    else:
        raise ValueError("r = d - 1 is excluded")
    return m, max(n, 1), max(N, 1)


def run_theorem1_rate(
    f_spec: str, r: float, d: int, S: int, J_list: Sequence[int], tau: float,
    seeds: Sequence[int], grid: EvalGrid, K: int = 24, check_trend: bool = True,
) -> RateStudyReport:
    """Seed-averaged sup error of the two-layer network against f, per depth J.

    Asserts the parameter bound (3S+5)J + 4 on every network and, with
    ``check_trend``, that each averaged error is at most TREND_FACTOR times the
    smallest error at shallower depths.
    """
    f = zonal_test_function(f_spec, d, r, K)
    target = f(grid.points)
    rows = []
    best = np.inf
    for row, J in enumerate(sorted(J_list)):
        m, n, N = theorem1_coupling(J, d, S, r, tau)
        errs, counts = [], []
        for s in seeds:
            ys = sample_uniform(d, m, make_rng(s, row, J))
            net = build_theorem1_net(f, r, n, ys, N, S, J)
            errs.append(float(np.max(np.abs(target - net(grid.points)))))
            count = count_free_parameters(net)
            if count > (3 * S + 5) * J + 4:
                raise BoundViolation(f"J={J}: {count} parameters exceed (3S+5)J + 4 = {(3 * S + 5) * J + 4}")
            counts.append(count)
        err = float(np.mean(errs))
        if check_trend and err > tol.TREND_FACTOR * best:
            raise BoundViolation(f"J={J}: mean error {err:.6g} exceeds {tol.TREND_FACTOR} x earlier best {best:.6g}")
        best = min(best, err)
        rows.append(RateRow(J, err, max(counts), seeds[0], grid.size, {"m": m, "n": n, "N": N, "seed_std": float(np.std(errs))}))
    meta = {
        "d": d, "S": S, "r": r, "tau": tau, "f": f_spec, "K": K, "seeds": len(seeds),
        "grid_kind": grid.kind, "W2r_norm": sobolev_norm_2(f, r),
        "norm": "grid sup (lower bound of L_inf); W_inf^r norm not computed, W_2^r proxy reported",
    }
    return RateStudyReport("thm1-rate", rows, meta)


def discretization_errors(
    f: BandLimitedZonal, r: float, n: int, m: int, seeds: Sequence[int], grid: EvalGrid, row: int = 0
) -> np.ndarray:
    """Grid sup of L_hat_{n,m}(f) - L_n(f) for each seed."""
    exact = apply_Ln(f, n)(grid.points)
    out = []
    for s in seeds:
        ys = sample_uniform(f.dim, m, make_rng(s, row, m))
        out.append(float(np.max(np.abs(discretized_Ln(f, r, n, ys, grid.points) - exact))))
    return np.array(out)


def run_discretization_study(
    f_spec: str, r: float, n: int, d: int, m_list: Sequence[int], seeds: Sequence[int],
    grid: EvalGrid, K: int = 12, check_slope: bool = True,
) -> RateStudyReport:
    """Seed-averaged sup |L_hat_{n,m} f - L_n f| per sample size m; slope should be about -1/2."""
    f = zonal_test_function(f_spec, d, r, K)
    rows = []
    for row, m in enumerate(sorted(m_list)):
        errs = discretization_errors(f, r, n, m, seeds, grid, row)
        rows.append(RateRow(m, float(np.mean(errs)), None, seeds[0], grid.size, {"seed_std": float(np.std(errs))}))
    rep = RateStudyReport(
        "discretize", rows,
        {"d": d, "r": r, "n": n, "f": f_spec, "K": K, "seeds": len(seeds), "grid_kind": grid.kind},
    )
    lo, hi = tol.DISCRETIZATION_SLOPE_WINDOW
    if check_slope and not lo <= rep.fitted_slope <= hi:
        raise BoundViolation(f"discretization slope {rep.fitted_slope:.3f} outside [{lo}, {hi}]")
    return rep


@dataclass
class FactorBenchRow:
    M: int
    S: int
    max_rel_err: float
    max_factor_count: int
    bound: int


def random_filter(M: int, rng: np.random.Generator) -> np.ndarray:
    """Taps i.i.d. uniform[-1, 1], leading tap redrawn until |W_M| >= 1e-3."""
    W = rng.uniform(-1.0, 1.0, M + 1)
    while abs(W[-1]) < 1e-3:
        W[-1] = rng.uniform(-1.0, 1.0)
    return W


def run_factorization_bench(M_list: Sequence[int], S_list: Sequence[int], trials: int, seed: int) -> list:
    """Max reconvolution error and factor count over random filters per (M, S) cell."""
    rows = []
    for M in M_list:
        for S in S_list:
            rng = make_rng(seed, M, S)
            errs, counts = [], []
            for _ in range(trials):
                fac = factorize_filter(random_filter(M, rng), S, tol=tol.FACTOR_REL_TOL)
                errs.append(fac.rel_error)
                counts.append(len(fac.factors))
            bound = max(1, ceil(M / (S - 1)))
            row = FactorBenchRow(M, S, max(errs), max(counts), bound)
            if row.max_rel_err > tol.FACTOR_REL_TOL or row.max_factor_count > bound:
                raise BoundViolation(f"factorization bench failed at M={M}, S={S}: {row}")
            rows.append(row)
    return rows


def factor_bench_csv(rows: Sequence[FactorBenchRow]) -> str:
    out = io.StringIO()
    out.write("M,S,max_rel_err,max_factor_count,count_bound\n")
    for r in rows:
        out.write(f"{r.M},{r.S},{_fmt(r.max_rel_err)},{r.max_factor_count},{r.bound}\n")
    return out.getvalue()
