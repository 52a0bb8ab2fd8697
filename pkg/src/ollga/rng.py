"""Seedable random streams and the samplers used by the GA.

The generator is xoshiro256** seeded through splitmix64.  Both are defined on
64-bit unsigned integers only, so a given seed reproduces the same sequence on
every platform.  All hot samplers are numba kernels that operate on the raw
four-word state array, which lets the engine call them from compiled loops.

Child streams for parallel replication are derived with :func:`derive_seed`,
a splitmix64 hash of ``(master_seed, stream_index)``.
"""

from __future__ import annotations

import math
from typing import Sequence, TypeVar

import numba
import numpy as np

__all__ = [
    "RngStream",
    "derive_seed",
    "derive_states",
    "splitmix64",
    "sample_binomial",
    "sample_k_subset",
    "sample_k_subsets",
    "bernoulli",
    "uniform_choice",
]

T = TypeVar("T")

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Below this mean the binomial sampler inverts from zero; above it, it inverts
# outward from the mode so the expected work stays O(sqrt(variance)).
BINOMIAL_INVERSION_CUTOFF = 30.0


def splitmix64(x: int) -> int:
    """One splitmix64 output for input state ``x`` (state already advanced)."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, stream_index: int) -> int:
    """Seed of child stream ``stream_index`` under ``master_seed``."""
    if master_seed < 0 or stream_index < 0:
        raise ValueError("seeds and stream indices must be non-negative")
    return splitmix64((master_seed & MASK64) ^ splitmix64(stream_index & MASK64))


def _seed_state(seed: int) -> np.ndarray:
    state = np.empty(4, dtype=np.uint64)
    x = seed & MASK64
    for i in range(4):
        state[i] = splitmix64(x)
        x = (x + _GOLDEN) & MASK64
    if not state.any():  # xoshiro must not start from the all-zero state
        state[0] = 1
    return state


# ---------------------------------------------------------------------------
# compiled kernels (state is a uint64[4] array, mutated in place)
# ---------------------------------------------------------------------------

_U1 = np.uint64(1)
_U5 = np.uint64(5)
_U9 = np.uint64(9)
_U11 = np.uint64(11)
_U17 = np.uint64(17)
_TWO_M53 = 1.0 / 9007199254740992.0


@numba.njit(inline="always", cache=True)
def _rotl(x, k):
    return (x << k) | (x >> (np.uint64(64) - k))


@numba.njit(cache=True)
def next_u64(s):
    result = _rotl(s[1] * _U5, np.uint64(7)) * _U9
    t = s[1] << _U17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], np.uint64(45))
    return result


@numba.njit(cache=True)
def next_double(s):
    """Uniform double in [0, 1) with 53 random bits."""
    return float(next_u64(s) >> _U11) * _TWO_M53


@numba.njit(cache=True)
def next_below(s, bound):
    """Uniform integer in [0, bound) by masked rejection; ``bound >= 1``."""
    if bound <= 1:
        return 0
    m = np.uint64(bound - 1)
    m |= m >> np.uint64(1)
    m |= m >> np.uint64(2)
    m |= m >> np.uint64(4)
    m |= m >> np.uint64(8)
    m |= m >> np.uint64(16)
    m |= m >> np.uint64(32)
    ub = np.uint64(bound)
    while True:
        v = next_u64(s) & m
        if v < ub:
            return np.int64(v)


@numba.njit(cache=True)
def next_bernoulli(s, p):
    return 1 if next_double(s) < p else 0


@numba.njit(cache=True)
def _binomial_small_mean(s, n, p):
    q = 1.0 - p
    ratio = p / q
    f0 = math.exp(n * math.log1p(-p))
    while True:
        u = next_double(s)
        f = f0
        x = 0
        while True:
            if u < f:
                return x
            u -= f
            x += 1
            if x > n:
                break  # lost to rounding; redraw
            f *= ratio * (n - x + 1) / x


@numba.njit(cache=True)
def _binomial_from_mode(s, n, p):
    q = 1.0 - p
    ratio = p / q
    m = int((n + 1) * p)
    if m > n:
        m = n
    pm = math.exp(
        math.lgamma(n + 1.0) - math.lgamma(m + 1.0) - math.lgamma(n - m + 1.0)
        + m * math.log(p) + (n - m) * math.log1p(-p)
    )
    while True:
        u = next_double(s)
        if u < pm:
            return m
        u -= pm
        lo = m
        hi = m
        flo = pm
        fhi = pm
        while lo > 0 or hi < n:
            if hi < n:
                fhi *= ratio * (n - hi) / (hi + 1.0)
                hi += 1
                if u < fhi:
                    return hi
                u -= fhi
            if lo > 0:
                flo *= lo / ((n - lo + 1.0) * ratio)
                lo -= 1
                if u < flo:
                    return lo
                u -= flo


@numba.njit(cache=True)
def binomial_draw(s, n, p):
    """One Binomial(n, p) draw."""
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    flip = p > 0.5
    pp = 1.0 - p if flip else p
    if n * pp < BINOMIAL_INVERSION_CUTOFF:
        x = _binomial_small_mean(s, n, pp)
    else:
        x = _binomial_from_mode(s, n, pp)
    return n - x if flip else x


@numba.njit(cache=True)
def binomial_array(s, n, p, size):
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        out[i] = binomial_draw(s, n, p)
    return out


@numba.njit(cache=True)
def k_subset_inplace(s, work, ell):
    """Uniform ``ell``-subset of the entries of ``work`` (a permutation).

    Runs a partial Fisher-Yates pass and returns ``(start, stop)`` such that
    ``work[start:stop]`` holds the subset.  ``work`` stays a permutation, so it
    can be reused across calls without resetting.  When ``ell > n/2`` the
    complement is shuffled to the front instead.
    """
    n = work.shape[0]
    m = ell if 2 * ell <= n else n - ell
    for i in range(m):
        j = i + next_below(s, n - i)
        tmp = work[i]
        work[i] = work[j]
        work[j] = tmp
    if m == ell:
        return 0, ell
    return m, n


@numba.njit(cache=True)
def k_subset_array(s, n, ell, size):
    work = np.arange(n)
    out = np.empty((size, ell), dtype=np.int64)
    for r in range(size):
        a, b = k_subset_inplace(s, work, ell)
        out[r, :] = np.sort(work[a:b])
    return out


@numba.njit(cache=True)
def double_array(s, size):
    out = np.empty(size, dtype=np.float64)
    for i in range(size):
        out[i] = next_double(s)
    return out


@numba.njit(cache=True)
def conditional_binomial_array(s, n, p, k, size):
    """``size`` draws of Binomial(n, p) conditioned on ``X >= k``, by rejection."""
    out = np.empty(size, dtype=np.int64)
    i = 0
    while i < size:
        x = binomial_draw(s, n, p)
        if x >= k:
            out[i] = x
            i += 1
    return out


# ---------------------------------------------------------------------------
# Python surface
# ---------------------------------------------------------------------------


class RngStream:
    """A single-owner xoshiro256** stream.

    Never share one stream between concurrent tasks; derive children with
    :meth:`spawn` instead.
    """

    __slots__ = ("seed", "state")

    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.state = _seed_state(self.seed)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed})"

    def spawn(self, stream_index: int) -> "RngStream":
        return RngStream(derive_seed(self.seed, stream_index))

    def next_u64(self) -> int:
        return int(next_u64(self.state))

    def random(self) -> float:
        return next_double(self.state)

    def integers(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)``."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        return int(next_below(self.state, bound))

    def random_array(self, size: int) -> np.ndarray:
        return double_array(self.state, size)

    def bits(self, n: int) -> np.ndarray:
        """``n`` fair random bits as a uint8 array."""
        return (self.random_array(n) < 0.5).astype(np.uint8)


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"probability must lie in [0, 1], got {p}")


def sample_binomial(n: int, p: float, rng: RngStream) -> int:
    """Draw from Binomial(n, p)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    _check_probability(p)
    return int(binomial_draw(rng.state, n, p))


def sample_k_subset(n: int, ell: int, rng: RngStream) -> np.ndarray:
    """Uniformly random set of ``ell`` distinct positions out of ``n``.

    Positions are 0-based and returned sorted.
    """
    if n < 0 or not 0 <= ell <= n:
        raise ValueError(f"need 0 <= ell <= n, got ell={ell}, n={n}")
    work = np.arange(n, dtype=np.int64)
    start, stop = k_subset_inplace(rng.state, work, ell)
    return np.sort(work[start:stop])


def sample_k_subsets(n: int, ell: int, size: int, rng: RngStream) -> np.ndarray:
    """``size`` independent draws of :func:`sample_k_subset`, one per row."""
    if n < 0 or not 0 <= ell <= n:
        raise ValueError(f"need 0 <= ell <= n, got ell={ell}, n={n}")
    return k_subset_array(rng.state, n, ell, size)


def bernoulli(p: float, rng: RngStream) -> int:
    _check_probability(p)
    return int(next_bernoulli(rng.state, p))


def uniform_choice(items: Sequence[T], rng: RngStream) -> T:
    if len(items) == 0:
        raise ValueError("cannot choose from an empty sequence")
    return items[rng.integers(len(items))]


def derive_states(master_seed: int, count: int) -> np.ndarray:
    """Generator states of child streams ``0..count-1``, shape ``(count, 4)``.

    Row ``i`` equals ``RngStream(derive_seed(master_seed, i)).state``.
    """
    if master_seed < 0 or count < 0:
        raise ValueError("seeds and counts must be non-negative")
    g = np.uint64(_GOLDEN)

    def mix(x):
        z = x + g
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    with np.errstate(over="ignore"):
        idx = np.arange(count, dtype=np.uint64)
        x = np.uint64(master_seed & MASK64) ^ mix(idx)
        seeds = mix(x)
        out = np.empty((count, 4), dtype=np.uint64)
        for j in range(4):
            out[:, j] = mix(seeds)
            seeds = seeds + g
    out[~out.any(axis=1), 0] = 1
    return out
