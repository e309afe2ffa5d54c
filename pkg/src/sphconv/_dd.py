"""Vectorized double-double arithmetic.

A double-double value is an unevaluated sum ``hi + lo`` of two float64 arrays
with ``|lo| <= ulp(hi) / 2``, giving roughly 106 bits of mantissa. The CNN
stage of the constructed networks carries a large constant offset in every
activation, so its arithmetic is done here to keep the small signal on top of
that offset intact.

Algorithms are the classical error-free transforms (Knuth two-sum, Dekker
split/two-product).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def add(ah, al, bh, bl):
    s, e = two_sum(ah, bh)
    t, f = two_sum(al, bl)
    e = e + t
    s, e = quick_two_sum(s, e)
    e = e + f
    return quick_two_sum(s, e)


def mul(ah, al, bh, bl):
    p, e = two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return quick_two_sum(p, e)


def mul_float(ah, al, b):
    p, e = two_prod(ah, b)
    e = e + al * b
    return quick_two_sum(p, e)


def dd_sum(values) -> tuple[float, float]:
    """Compensated sum of a 1-D float array, returned as a (hi, lo) pair."""
    hi, lo = 0.0, 0.0
    for v in np.asarray(values, dtype=float).ravel():
        hi, lo = add(hi, lo, float(v), 0.0)
    return hi, lo


@dataclass(frozen=True)
class DD:
    """Double-double array ``hi + lo``."""

    hi: np.ndarray
    lo: np.ndarray

    @classmethod
    def of(cls, x) -> "DD":
        if isinstance(x, DD):
            return x
        hi = np.asarray(x, dtype=float)
        return cls(hi, np.zeros_like(hi))

    @property
    def shape(self):
        return np.shape(self.hi)

    def __getitem__(self, idx) -> "DD":
        return DD(self.hi[idx], self.lo[idx])

    def __neg__(self) -> "DD":
        return DD(-self.hi, -self.lo)

    def __add__(self, other) -> "DD":
        o = DD.of(other)
        return DD(*add(self.hi, self.lo, o.hi, o.lo))

    __radd__ = __add__

    def __sub__(self, other) -> "DD":
        o = DD.of(other)
        return DD(*add(self.hi, self.lo, -o.hi, -o.lo))

    def __rsub__(self, other) -> "DD":
        return DD.of(other) - self

    def __mul__(self, other) -> "DD":
        o = DD.of(other)
        return DD(*mul(self.hi, self.lo, o.hi, o.lo))

    __rmul__ = __mul__

    def relu(self) -> "DD":
        # hi carries the sign of a normalized pair except when hi == 0
        keep = (self.hi > 0) | ((self.hi == 0) & (self.lo > 0))
        return DD(np.where(keep, self.hi, 0.0), np.where(keep, self.lo, 0.0))

    def to_float(self) -> np.ndarray:
        return self.hi + self.lo
