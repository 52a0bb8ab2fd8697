"""One-iteration drift probes and exact small-instance laws.

Probes start the GA from a parent at a prescribed fitness distance and run
exactly one iteration through the engine's own compiled iteration, so they
measure the shipped algorithm.  The exact laws are computed without sampling
and serve as oracles for the samplers and for the composition of mutation
and crossover.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Union

import numba
import numpy as np
from scipy import stats

from . import engine as _engine
from . import rng as _rng
from .bitspace import BitAccounting, BitString, OneMaxInstance, ShapeError
from .engine import ALL_COMPETE, GaParams
from .pmf import Pmf, binomial_pmf, hypergeometric_pmf
from .rng import RngStream

__all__ = [
    "DriftSample",
    "ExactLaw",
    "EmpiricalLaw",
    "MAX_EXACT_N",
    "probe_drift",
    "probe_drift_arrays",
    "exact_composed_offspring_law",
    "exact_bitmutation_law",
    "exact_goodbits_law",
    "sample_goodbits",
    "conditional_binomial_mean",
    "tvd",
    "empirical_law",
]

MAX_EXACT_N = 12
MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class DriftSample:
    d0: int
    gain: int
    ell: int
    accounting: BitAccounting


# ---------------------------------------------------------------------------
# drift probes
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _probe_batch(states, z, d0, lam, p, c, all_compete):
    reps = states.shape[0]
    n = z.shape[0]
    out = np.empty((reps, 6), dtype=np.int64)  # gain, ell, good, bad, s_good, s_bad
    x = np.empty(n, dtype=np.uint8)
    xb = np.empty(n, dtype=np.uint8)
    big = np.int64(1) << np.int64(62)
    for r in range(reps):
        s = states[r]
        work, win_pos, y_pos, cand_pos, tmp, delta = _engine._buffers(n)
        for i in range(n):
            x[i] = z[i]
        a, b = _rng.k_subset_inplace(s, work, d0)
        for j in range(a, b):
            x[work[j]] ^= 1
        for i in range(n):
            work[i] = i
            xb[i] = x[i]
        fx = n - d0
        status, new_fx, _, ell, f_mut, f_cross, n_y, _, _ = _engine._iteration(
            s, x, z, fx, lam, p, c, all_compete, work, win_pos, y_pos, cand_pos, tmp, delta, 0, big
        )
        gain = d0 if status == 1 else new_fx - fx
        good = 0
        for j in range(ell):
            if xb[win_pos[j]] != z[win_pos[j]]:
                good += 1
        s_good = -1
        s_bad = -1
        if f_cross >= 0:
            s_good = 0
            for j in range(n_y):
                if xb[y_pos[j]] != z[y_pos[j]]:
                    s_good += 1
            s_bad = n_y - s_good
        out[r, 0] = gain
        out[r, 1] = ell
        out[r, 2] = good
        out[r, 3] = ell - good
        out[r, 4] = s_good
        out[r, 5] = s_bad
    return out


def probe_drift_arrays(
    params: GaParams, d0: int, reps: int, rng: RngStream, inst: Optional[OneMaxInstance] = None
) -> np.ndarray:
    """Probe results as an int array with columns gain, ell, good, bad, s_good, s_bad.

    Repetition ``i`` uses the child stream ``rng.spawn(i)``; ``s_good`` and
    ``s_bad`` are -1 when the optimum appeared before any crossover offspring.
    """
    inst = OneMaxInstance.classic(params.n) if inst is None else inst
    if inst.n != params.n:
        raise ValueError(f"params.n={params.n} does not match instance n={inst.n}")
    if not 0 <= d0 <= params.n:
        raise ValueError(f"d0 must lie in [0, {params.n}], got {d0}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    states = _rng.derive_states(rng.seed, reps)
    return _probe_batch(
        states, inst.target.bits.copy(), d0, params.lam, params.p, params.c, params.variant == ALL_COMPETE
    )


def probe_drift(
    params: GaParams, d0: int, reps: int, rng: RngStream, inst: Optional[OneMaxInstance] = None
) -> List[DriftSample]:
    """Gain in fitness over one iteration started at fitness distance ``d0``.

    The gain is measured on the surviving parent, which under the
    all-compete variant is the best of all offspring.  When an optimum is
    evaluated mid-iteration the gain is ``d0``.
    """
    arr = probe_drift_arrays(params, d0, reps, rng, inst)
    samples = []
    for gain, ell, good, bad, sg, sb in arr.tolist():
        acc = BitAccounting(good, bad, ell, sg if sg >= 0 else None, sb if sb >= 0 else None)
        samples.append(DriftSample(d0, gain, ell, acc))
    return samples


# ---------------------------------------------------------------------------
# exact laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExactLaw:
    """Probabilities of all ``2**n`` strings, indexed by :meth:`BitString.to_int`."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        if self.probs.shape != (1 << self.n,):
            raise ShapeError(f"expected {1 << self.n} probabilities, got {self.probs.shape}")
        if abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {self.probs.sum()!r}")

    def __call__(self, y: BitString) -> float:
        return float(self.probs[y.to_int()])

    def flip_marginals(self, x: BitString) -> np.ndarray:
        """Probability that each position differs from ``x``."""
        codes = np.arange(1 << self.n) ^ x.to_int()
        return np.array([self.probs[(codes >> i) & 1 == 1].sum() for i in range(self.n)])


def _check_small(n: int) -> None:
    if not 1 <= n <= MAX_EXACT_N:
        raise ValueError(f"exact laws need 1 <= n <= {MAX_EXACT_N}, got n={n}")


def _popcounts(n: int) -> np.ndarray:
    codes = np.arange(1 << n)
    return np.array([bin(c).count("1") for c in codes])


def exact_composed_offspring_law(
    n: int, x: BitString, k: float, r: float, method: str = "count"
) -> ExactLaw:
    """Law of one crossover offspring of ``x`` and ``mut_ell(x)``, ``ell ~ B(n, k/n)``.

    No selection is applied.  ``method="count"`` sums, for each flip mask M,
    the binomial weight of every ``ell`` times the fraction of ``ell``-subsets
    containing M times the chance the crossover takes exactly M.
    ``method="enumerate"`` walks every flip subset and every crossover mask.
    """
    _check_small(n)
    if len(x) != n:
        raise ShapeError(f"x has length {len(x)}, expected {n}")
    if not 0 < r <= k <= n:
        raise ValueError(f"need 0 < r <= k <= n, got r={r}, k={k}, n={n}")
    ell_law = binomial_pmf(n, k / n).probs
    c = r / k
    xc = x.to_int()
    probs = np.zeros(1 << n)
    if method == "count":
        by_size = np.zeros(n + 1)
        for m in range(n + 1):
            for ell in range(m, n + 1):
                by_size[m] += (
                    ell_law[ell] * math.comb(n - m, ell - m) / math.comb(n, ell) * c**m * (1 - c) ** (ell - m)
                )
        masks = np.arange(1 << n)
        probs[masks ^ xc] = by_size[_popcounts(n)]
    elif method == "enumerate":
        for ell in range(n + 1):
            w = ell_law[ell] / math.comb(n, ell)
            if w == 0.0:
                continue
            for flipped in itertools.combinations(range(n), ell):
                for taken in itertools.product((0, 1), repeat=ell):
                    m = sum(taken)
                    mask = 0
                    for pos, t in zip(flipped, taken):
                        if t:
                            mask |= 1 << pos
                    probs[xc ^ mask] += w * c**m * (1 - c) ** (ell - m)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ExactLaw(n, probs)


def exact_bitmutation_law(n: int, x: BitString, rate: float) -> ExactLaw:
    """Law of standard bit mutation of ``x`` with the given per-bit rate."""
    _check_small(n)
    if len(x) != n:
        raise ShapeError(f"x has length {len(x)}, expected {n}")
    pc = _popcounts(n)
    probs = np.zeros(1 << n)
    probs[np.arange(1 << n) ^ x.to_int()] = rate**pc * (1 - rate) ** (n - pc)
    return ExactLaw(n, probs)


def exact_goodbits_law(n: int, ell: int, d: int) -> Pmf:
    """Law of the number of wrong bits corrected by ``mut_ell`` at distance ``d``."""
    if not (0 <= ell <= n and 0 <= d <= n):
        raise ValueError(f"need 0 <= ell, d <= n, got ell={ell}, d={d}, n={n}")
    return hypergeometric_pmf(n, ell, d)


@numba.njit(cache=True)
def _goodbits_batch(s, n, ell, d, size):
    work = np.arange(n)
    out = np.empty(size, dtype=np.int64)
    for r in range(size):
        a, b = _rng.k_subset_inplace(s, work, ell)
        g = 0
        for j in range(a, b):
            if work[j] < d:  # positions 0..d-1 are the wrong ones
                g += 1
        out[r] = g
    return out


def sample_goodbits(n: int, ell: int, d: int, size: int, rng: RngStream) -> np.ndarray:
    """Good-bit counts of ``size`` mutations of a parent at distance ``d``.

    Uses the same subset sampler as the engine's mutation phase.
    """
    if not (0 <= ell <= n and 0 <= d <= n):
        raise ValueError(f"need 0 <= ell, d <= n, got ell={ell}, d={d}, n={n}")
    return _goodbits_batch(rng.state, n, ell, d, size)


def conditional_binomial_mean(n: int, p: float, k: int, size: int, rng: RngStream):
    """Empirical ``E[X | X >= k]`` for ``X ~ B(n, p)`` and its standard error."""
    xs = _rng.conditional_binomial_array(rng.state, n, p, k, size)
    return float(xs.mean()), float(xs.std(ddof=1) / math.sqrt(size))


# ---------------------------------------------------------------------------
# distances and goodness of fit
# ---------------------------------------------------------------------------


def tvd(a: Union[ExactLaw, Pmf], b: Union[ExactLaw, Pmf]) -> float:
    """Total variation distance, half the L1 distance."""
    if isinstance(a, ExactLaw) and isinstance(b, ExactLaw):
        if a.n != b.n:
            raise ShapeError(f"laws over different lengths: {a.n} vs {b.n}")
        return float(0.5 * np.abs(a.probs - b.probs).sum())
    if isinstance(a, Pmf) and isinstance(b, Pmf):
        lo, hi = min(a.lo, b.lo), max(a.hi, b.hi)
        return float(0.5 * np.abs(a.on_range(lo, hi) - b.on_range(lo, hi)).sum())
    raise ShapeError("tvd needs two ExactLaws or two Pmfs")


@dataclass(frozen=True)
class EmpiricalLaw:
    values: np.ndarray  # support of the reference
    frequencies: np.ndarray  # observed relative frequencies on that support
    buckets: List[range]  # merged chi-square buckets
    chi2: float
    dof: int
    pvalue: float


def _merge_buckets(expected: np.ndarray, lo: int) -> List[range]:
    # left to right, closing a bucket once it expects MIN_EXPECTED counts;
    # a short final bucket is folded into its left neighbour
    buckets, start, acc = [], 0, 0.0
    for i, e in enumerate(expected):
        acc += e
        if acc >= MIN_EXPECTED:
            buckets.append((start, i))
            start, acc = i + 1, 0.0
    if start < expected.size:
        if not buckets:
            buckets.append((start, expected.size - 1))
        else:
            buckets[-1] = (buckets[-1][0], expected.size - 1)
    return [range(lo + a, lo + b + 1) for a, b in buckets]


def empirical_law(
    sampler: Callable[[RngStream, int], np.ndarray], reps: int, rng: RngStream, reference: Pmf
) -> EmpiricalLaw:
    """Histogram ``reps`` sampler draws and chi-square test them against ``reference``.

    ``sampler(rng, size)`` returns an integer array.  Draws outside the
    reference support are counted in the nearest end bucket.  Adjacent
    support points are merged until every bucket expects at least 5 draws;
    fewer than two buckets is an error.
    """
    expected = reps * reference.probs
    buckets = _merge_buckets(expected, reference.lo)
    if len(buckets) < 2 or any(expected[b.start - reference.lo : b.stop - reference.lo].sum() < MIN_EXPECTED for b in buckets):
        raise ValueError(f"{reps} draws are too few for a chi-square test against this reference")
    draws = np.clip(np.asarray(sampler(rng, reps)), reference.lo, reference.hi)
    counts = np.bincount(draws - reference.lo, minlength=reference.probs.size)
    obs = np.array([counts[b.start - reference.lo : b.stop - reference.lo].sum() for b in buckets], dtype=float)
    exp = np.array([expected[b.start - reference.lo : b.stop - reference.lo].sum() for b in buckets])
    chi2 = float(((obs - exp) ** 2 / exp).sum())
    dof = len(buckets) - 1
    return EmpiricalLaw(
        values=np.arange(reference.lo, reference.hi + 1),
        frequencies=counts / reps,
        buckets=buckets,
        chi2=chi2,
        dof=dof,
        pvalue=float(stats.chi2.sf(chi2, dof)),
    )
