"""Exact probability mass functions on contiguous integer supports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .rng import RngStream

__all__ = ["Pmf", "binomial_pmf", "hypergeometric_pmf", "point_mass"]

# math.comb results stay representable as floats up to about this n.
_EXACT_COMB_LIMIT = 1000


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probabilities ``probs[i]`` of the values ``lo + i``."""

    lo: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("a Pmf needs a non-empty 1-d probability vector")
        if (probs < 0).any():
            raise ValueError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def hi(self) -> int:
        return self.lo + self.probs.size - 1

    @property
    def support(self) -> range:
        return range(self.lo, self.hi + 1)

    def __call__(self, x: int) -> float:
        if self.lo <= x <= self.hi:
            return float(self.probs[x - self.lo])
        return 0.0

    def mean(self) -> float:
        return float(np.dot(np.arange(self.lo, self.hi + 1), self.probs))

    def variance(self) -> float:
        xs = np.arange(self.lo, self.hi + 1)
        mu = self.mean()
        return float(np.dot((xs - mu) ** 2, self.probs))

    def on_range(self, lo: int, hi: int) -> np.ndarray:
        """Probabilities over ``lo..hi`` (zero-padded)."""
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a <= b:
            out[a - lo : b - lo + 1] = self.probs[a - self.lo : b - self.lo + 1]
        return out

    def sample(self, rng: RngStream, size: int) -> np.ndarray:
        """Inverse-cdf samples."""
        cdf = np.cumsum(self.probs)
        u = rng.random_array(size)
        idx = np.searchsorted(cdf, u, side="right")
        return self.lo + np.minimum(idx, self.probs.size - 1)


def point_mass(x: int) -> Pmf:
    return Pmf(x, np.ones(1))


def binomial_pmf(n: int, p: float) -> Pmf:
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return Pmf(0, np.eye(1, n + 1, 0).ravel())
    if p == 1.0:
        return Pmf(0, np.eye(1, n + 1, n).ravel())
    q = 1.0 - p
    if n <= _EXACT_COMB_LIMIT:
        probs = [math.comb(n, i) * p**i * q ** (n - i) for i in range(n + 1)]
    else:
        lp, lq, lgn = math.log(p), math.log1p(-p), math.lgamma(n + 1)
        probs = [
            math.exp(lgn - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq)
            for i in range(n + 1)
        ]
    probs = np.array(probs)
    return Pmf(0, probs / probs.sum())


def hypergeometric_pmf(n: int, N: int, m: int) -> Pmf:
    """Law of ``|Y & B|`` for a uniform ``N``-subset ``Y`` of an ``n``-set with ``|B| = m``.

    Computed with exact rational arithmetic before rounding to floats.
    """
    if n < 0 or not (0 <= N <= n and 0 <= m <= n):
        raise ValueError(f"need 0 <= N, m <= n, got n={n}, N={N}, m={m}")
    lo, hi = max(0, N + m - n), min(N, m)
    total = math.comb(n, N)
    probs = [float(Fraction(math.comb(m, i) * math.comb(n - m, N - i), total)) for i in range(lo, hi + 1)]
    return Pmf(lo, np.array(probs))
