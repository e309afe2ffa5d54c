"""Points on the unit sphere S^{d-1}: sampling, evaluation grids, sup-norm surrogate.

Point sets are plain ``(m, d)`` float arrays with unit-norm rows. All randomness
goes through numpy's PCG64 bit generator (``numpy.random.default_rng``), seeded
explicitly, so every sample is reproducible from ``(d, m, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

UNIT_TOL = 1e-12

GridKind = Literal["fibonacci", "random"]


def make_rng(seed, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed``, optionally split into an independent stream."""
    if stream:
        return np.random.default_rng([int(seed), *map(int, stream)])
    return np.random.default_rng(int(seed))


def as_points(x, d: int | None = None) -> np.ndarray:
    """Validate and return a ``(m, d)`` array of unit vectors (a single point is promoted)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("expected a non-empty (m, d) array of sphere points")
    if pts.shape[1] < 3:
        raise ValueError(f"dimension d must be >= 3, got {pts.shape[1]}")
    if d is not None and pts.shape[1] != d:
        raise ValueError(f"dimension mismatch: points have d={pts.shape[1]}, expected {d}")
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValueError("points must have unit Euclidean norm")
    return pts


def sample_uniform(d: int, m: int, seed) -> np.ndarray:
    """Draw ``m`` points uniformly from S^{d-1} (normalized Gaussian vectors).

    Parameters
    ----------
    d : int
        Ambient dimension, ``d >= 3``.
    m : int
        Number of points, ``m >= 1``.
    seed : int or numpy.random.Generator
        Either a 64-bit seed or an already-constructed generator.

    Returns
    -------
    ndarray of shape (m, d)
    """
    if d < 3:
        raise ValueError(f"d must be >= 3, got {d}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    g = rng.standard_normal((m, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g


def fibonacci_sphere(G: int) -> np.ndarray:
    """Golden-angle spiral of ``G`` quasi-uniform points on S^2."""
    i = np.arange(G, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / G
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


@dataclass(frozen=True)
class EvalGrid:
    """Finite point set standing in for the sphere when estimating sup norms."""

    points: np.ndarray
    kind: str

    def __post_init__(self):
        as_points(self.points)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def augmented(self, extra) -> "EvalGrid":
        """A grid with additional points appended (kind is suffixed with ``+``)."""
        extra = as_points(extra, self.dim)
        return EvalGrid(np.vstack([self.points, extra]), self.kind + "+")


def build_grid(d: int, G: int, kind: GridKind = "fibonacci", seed=0) -> EvalGrid:
    """Evaluation grid of ``G`` points: a Fibonacci spiral (``d = 3`` only) or seeded random."""
    if G < 1:
        raise ValueError(f"grid size must be >= 1, got {G}")
    if kind == "fibonacci":
        if d != 3:
            raise ValueError("fibonacci grids exist only for d = 3")
        return EvalGrid(fibonacci_sphere(G), "fibonacci")
    if kind == "random":
        return EvalGrid(sample_uniform(d, G, seed), "random")
    raise ValueError(f"unknown grid kind {kind!r}")


def default_grid(d: int, G: int, seed=0) -> EvalGrid:
    return build_grid(d, G, "fibonacci" if d == 3 else "random", seed)


def sup_norm_on_grid(f: Callable[[np.ndarray], np.ndarray], grid: EvalGrid) -> float:
    """Max of ``|f|`` over the grid.

    ``f`` is called once with the ``(G, d)`` point array and must return ``G``
    values. The result is a lower bound for the true sup norm on the sphere.
    """
    if grid.size == 0:
        raise ValueError("empty grid")
    vals = np.asarray(f(grid.points), dtype=float)
    return float(np.max(np.abs(vals)))
