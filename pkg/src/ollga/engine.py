"""The (1+(lambda,lambda)) GA on generalized OneMax, plus a (1+1) EA baseline.

Every fitness evaluation is counted.  A run stops at the first evaluation of
an optimal point, even in the middle of a phase, so ``F`` is exactly the
optimization time.  Offspring fitness is computed incrementally from the
flipped positions, which makes one evaluation cost O(ell) instead of O(n).

One compiled function, :func:`_iteration`, performs a full iteration.  The
fast run loop, the traced run loop and the drift probes all go through it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numba
import numpy as np

from . import rng as _rng
from .analysis import clog2, lambda_star
from .bitspace import BitAccounting, BitString, OneMaxInstance, ShapeError, account
from .rng import RngStream

__all__ = [
    "GaParams",
    "RunOutcome",
    "IterationTrace",
    "STANDARD",
    "ALL_COMPETE",
    "default_budget",
    "mutate",
    "crossover",
    "run",
    "run_opo_ea",
]

STANDARD = "standard"
ALL_COMPETE = "all-compete"
VARIANTS = (STANDARD, ALL_COMPETE)

# iteration status codes
_DONE = 0
_OPTIMUM = 1
_BUDGET = 2


def default_budget(n: int) -> int:
    """10^4 * n * log2(n) evaluations, with log2 clamped to 1 for n <= 2."""
    return int(10_000 * n * clog2(n))


@dataclass(frozen=True)
class GaParams:
    """Population size ``lam``, mutation rate ``k/n``, crossover bias ``r/k``."""

    n: int
    lam: int
    k: float
    r: float
    variant: str = STANDARD
    budget: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.lam, (int, np.integer)) or self.lam < 1:
            raise ValueError(f"lambda must be an integer >= 1, got {self.lam!r}")
        if not 0 < self.k <= self.n:
            raise ValueError(f"need 0 < k <= n, got k={self.k}, n={self.n}")
        if not 0 < self.r <= self.k:
            raise ValueError(f"need 0 < r <= k, got r={self.r}, k={self.k}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be >= 1")

    @classmethod
    def suggested(cls, n: int, **kwargs) -> "GaParams":
        """lambda = k = round(lambda*(n)), r = 1."""
        lam = max(1, round(lambda_star(n)))
        return cls(n=n, lam=lam, k=min(lam, n), r=1.0, **kwargs)

    @property
    def p(self) -> float:
        return self.k / self.n

    @property
    def c(self) -> float:
        return self.r / self.k

    @property
    def max_evaluations(self) -> int:
        return self.budget if self.budget is not None else default_budget(self.n)


@dataclass(frozen=True)
class IterationTrace:
    ell: int
    mutation_winner_fitness: Optional[int]  # None if the budget ran out before any mutant
    crossover_winner_fitness: Optional[int]  # None if the phase never finished one offspring
    parent_before: int
    parent_after: int
    accounting: Optional[BitAccounting]


@dataclass(frozen=True)
class RunOutcome:
    T: int
    F: int
    success: bool
    seed: int
    final_distance: int
    trace: Optional[List[IterationTrace]] = field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# compiled core
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _init_uniform(s, x):
    for i in range(x.shape[0]):
        x[i] = 1 if _rng.next_double(s) < 0.5 else 0


@numba.njit(cache=True)
def _agreements(x, z):
    f = 0
    for i in range(x.shape[0]):
        if x[i] == z[i]:
            f += 1
    return f


@numba.njit(cache=True)
def _iteration(s, x, z, fx, lam, p, c, all_compete, work, win_pos, y_pos, cand_pos, tmp, delta, evals, budget):
    """One iteration from parent ``x`` (fitness ``fx``), updating ``x`` in place.

    Returns ``(status, fx, evals, ell, f_mut, f_cross, n_y, n_cand, best_f)``.
    ``win_pos[:ell]`` holds the positions flipped in the mutation winner and
    ``y_pos[:n_y]`` the positions flipped in the crossover winner, both
    relative to the parent as it was on entry.  ``best_f`` is the best fitness
    evaluated during the iteration.
    """
    n = x.shape[0]
    ell = _rng.binomial_draw(s, n, p)

    # mutation phase: lam offspring, all at Hamming distance ell
    f_mut = -1
    ties = 0
    cand_f = -1
    cand_ties = 0
    n_cand = 0
    for i in range(lam):
        if evals >= budget:
            return _BUDGET, fx, evals, ell, f_mut, -1, 0, n_cand, max(f_mut, fx)
        a, b = _rng.k_subset_inplace(s, work, ell)
        f = fx
        for j in range(a, b):
            f += 1 if x[work[j]] != z[work[j]] else -1
        evals += 1
        take = False
        if f > f_mut:
            f_mut = f
            ties = 1
            take = True
        elif f == f_mut:
            ties += 1
            take = _rng.next_below(s, ties) == 0
        if take:
            for j in range(a, b):
                win_pos[j - a] = work[j]
        if f == n:
            return _OPTIMUM, fx, evals, ell, f_mut, -1, 0, n_cand, f
        if all_compete:
            ctake = False
            if f > cand_f:
                cand_f = f
                cand_ties = 1
                ctake = True
            elif f == cand_f:
                cand_ties += 1
                ctake = _rng.next_below(s, cand_ties) == 0
            if ctake:
                for j in range(a, b):
                    cand_pos[j - a] = work[j]
                n_cand = b - a

    for j in range(ell):
        delta[j] = 1 if x[win_pos[j]] != z[win_pos[j]] else -1

    # crossover phase: take each differing bit of the winner with probability c
    f_cross = -1
    ties = 0
    n_y = 0
    for i in range(lam):
        if evals >= budget:
            return _BUDGET, fx, evals, ell, f_mut, f_cross, n_y, n_cand, max(f_mut, f_cross, fx)
        m = 0
        f = fx
        for j in range(ell):
            if _rng.next_double(s) < c:
                tmp[m] = win_pos[j]
                m += 1
                f += delta[j]
        evals += 1
        take = False
        if f > f_cross:
            f_cross = f
            ties = 1
            take = True
        elif f == f_cross:
            ties += 1
            take = _rng.next_below(s, ties) == 0
        if take:
            for j in range(m):
                y_pos[j] = tmp[j]
            n_y = m
        if f == n:
            return _OPTIMUM, fx, evals, ell, f_mut, f_cross, n_y, n_cand, f
        if all_compete:
            ctake = False
            if f > cand_f:
                cand_f = f
                cand_ties = 1
                ctake = True
            elif f == cand_f:
                cand_ties += 1
                ctake = _rng.next_below(s, cand_ties) == 0
            if ctake:
                for j in range(m):
                    cand_pos[j] = tmp[j]
                n_cand = m

    best_f = max(f_mut, f_cross)
    # selection
    if all_compete:
        if cand_f >= fx:
            for j in range(n_cand):
                x[cand_pos[j]] ^= 1
            fx = cand_f
    elif f_cross >= fx:
        for j in range(n_y):
            x[y_pos[j]] ^= 1
        fx = f_cross
    return _DONE, fx, evals, ell, f_mut, f_cross, n_y, n_cand, best_f


@numba.njit(cache=True)
def _buffers(n):
    work = np.arange(n)
    return work, np.empty(n, np.int64), np.empty(n, np.int64), np.empty(n, np.int64), np.empty(n, np.int64), np.empty(n, np.int64)


@numba.njit(cache=True)
def _run_loop(s, x, z, lam, p, c, all_compete, budget):
    n = x.shape[0]
    work, win_pos, y_pos, cand_pos, tmp, delta = _buffers(n)
    _init_uniform(s, x)
    fx = _agreements(x, z)
    best = fx
    evals = 1
    T = 0
    if fx == n:
        return T, evals, True, best
    while evals < budget:
        T += 1
        status, fx, evals, ell, f_mut, f_cross, n_y, n_cand, it_best = _iteration(
            s, x, z, fx, lam, p, c, all_compete, work, win_pos, y_pos, cand_pos, tmp, delta, evals, budget
        )
        best = max(best, it_best)
        if status == _OPTIMUM:
            return T, evals, True, n
        if status == _BUDGET:
            break
    return T, evals, False, best


@numba.njit(cache=True)
def _opo_loop(s, x, z, rate, budget):
    n = x.shape[0]
    _init_uniform(s, x)
    fx = _agreements(x, z)
    evals = 1
    T = 0
    flips = np.empty(n, np.int64)
    while fx < n and evals < budget:
        T += 1
        m = 0
        f = fx
        for i in range(n):
            if _rng.next_double(s) < rate:
                flips[m] = i
                m += 1
                f += 1 if x[i] != z[i] else -1
        evals += 1
        if f >= fx:
            for j in range(m):
                x[flips[j]] ^= 1
            fx = f
    return T, evals, fx == n, fx


# ---------------------------------------------------------------------------
# Python surface
# ---------------------------------------------------------------------------


def mutate(x: BitString, ell: int, rng: RngStream) -> BitString:
    """Flip exactly ``ell`` distinct uniformly chosen positions of ``x``."""
    if not 0 <= ell <= len(x):
        raise ValueError(f"need 0 <= ell <= n, got ell={ell}, n={len(x)}")
    return x.flip(_rng.sample_k_subset(len(x), ell, rng))


def crossover(x: BitString, xp: BitString, c: float, rng: RngStream) -> BitString:
    """Biased uniform crossover: each position comes from ``xp`` with probability ``c``."""
    if len(x) != len(xp):
        raise ShapeError(f"length mismatch: {len(x)} vs {len(xp)}")
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"crossover bias must lie in [0, 1], got {c}")
    take = rng.random_array(len(x)) < c
    return BitString(np.where(take, xp.bits, x.bits))


def _check_instance(params: GaParams, inst: OneMaxInstance) -> None:
    if params.n != inst.n:
        raise ValueError(f"params.n={params.n} does not match instance n={inst.n}")


def run(params: GaParams, inst: OneMaxInstance, rng: RngStream, trace: bool = False) -> RunOutcome:
    """Run the GA until it evaluates an optimum or exhausts its budget."""
    _check_instance(params, inst)
    z = inst.target.bits.copy()
    x = np.empty(params.n, dtype=np.uint8)
    budget = params.max_evaluations
    all_compete = params.variant == ALL_COMPETE
    if not trace:
        T, F, ok, best = _run_loop(rng.state, x, z, params.lam, params.p, params.c, all_compete, budget)
        return RunOutcome(int(T), int(F), bool(ok), rng.seed, params.n - int(best))
    return _traced_run(params, inst, rng, z, x, budget, all_compete)


def _traced_run(params, inst, rng, z, x, budget, all_compete) -> RunOutcome:
    n = params.n
    s = rng.state
    work, win_pos, y_pos, cand_pos, tmp, delta = _buffers(n)
    _init_uniform(s, x)
    fx = int(_agreements(x, z))
    best, evals, T = fx, 1, 0
    steps: List[IterationTrace] = []
    if fx == n:
        return RunOutcome(0, 1, True, rng.seed, 0, steps)
    while evals < budget:
        T += 1
        before = BitString(x)
        status, new_fx, evals, ell, f_mut, f_cross, n_y, _, it_best = _iteration(
            s, x, z, fx, params.lam, params.p, params.c, all_compete,
            work, win_pos, y_pos, cand_pos, tmp, delta, evals, budget,
        )
        best = max(best, int(it_best))
        acc = None
        if f_mut >= 0:
            acc = _winner_accounting(inst, before, win_pos[:ell], y_pos[:n_y] if f_cross >= 0 else None)
        after = n if status == _OPTIMUM else int(new_fx)
        steps.append(
            IterationTrace(
                int(ell),
                int(f_mut) if f_mut >= 0 else None,
                int(f_cross) if f_cross >= 0 else None,
                fx,
                after,
                acc,
            )
        )
        fx = int(new_fx)
        if status == _OPTIMUM:
            return RunOutcome(T, int(evals), True, rng.seed, 0, steps)
        if status == _BUDGET:
            break
    return RunOutcome(T, int(evals), False, rng.seed, n - best, steps)


def _winner_accounting(inst, before: BitString, win_pos, y_pos) -> BitAccounting:
    xp = before.flip(win_pos)
    y = before.flip(y_pos) if y_pos is not None else None
    return account(inst, before, xp, y)


def run_opo_ea(
    n: int, mutation_rate: float, inst: OneMaxInstance, rng: RngStream, budget: Optional[int] = None
) -> RunOutcome:
    """(1+1) EA with standard bit mutation; accepts offspring that are not worse."""
    if inst.n != n:
        raise ValueError(f"n={n} does not match instance n={inst.n}")
    if not 0.0 < mutation_rate <= 1.0:
        raise ValueError(f"mutation rate must lie in (0, 1], got {mutation_rate}")
    budget = default_budget(n) if budget is None else budget
    x = np.empty(n, dtype=np.uint8)
    T, F, ok, fx = _opo_loop(rng.state, x, inst.target.bits.copy(), mutation_rate, budget)
    return RunOutcome(int(T), int(F), bool(ok), rng.seed, n - int(fx))
