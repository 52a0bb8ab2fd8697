"""Runtime predictors, drift-theorem hitting times, and summary statistics.

Logarithms follow one fixed convention: ``log`` is base 2 and equals 1 for
arguments <= 2, ``ln`` is natural and equals 1 for arguments <= e.  The
clamps keep iterated logarithms finite and positive for every n >= 1.
Asymptotic expressions are evaluated with constant factor 1, so only their
shape and ratios are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "clog2",
    "cln",
    "lambda_star",
    "f_star",
    "k_window_exponent",
    "two_term_runtime",
    "two_term_argmin",
    "additive_drift_time",
    "multiplicative_drift_lower",
    "PredictorValues",
    "predict",
    "SummaryStats",
    "summarize",
    "UShape",
    "locate_u_shape",
]


def clog2(x: float) -> float:
    return math.log2(x) if x > 2 else 1.0


def cln(x: float) -> float:
    return math.log(x) if x > math.e else 1.0


def lambda_star(n: float) -> float:
    """sqrt(log n * loglog n / logloglog n)."""
    L = clog2(n)
    LL = clog2(L)
    return math.sqrt(L * LL / clog2(LL))


def f_star(n: float) -> float:
    """n log n / lambda*(n)."""
    return n * clog2(n) / lambda_star(n)


def _f_star_closed(n: float) -> float:
    # n * sqrt(log n * logloglog n / loglog n); must agree with f_star
    L = clog2(n)
    LL = clog2(L)
    return n * math.sqrt(L * clog2(LL) / LL)


def k_window_exponent(n: float) -> float:
    """Argument of exp(O(.)) bounding the admissible k for optimal runtime.

    The constant inside the O is unspecified, so only the argument
    sqrt(log n * logloglog n / loglog n) is exposed.
    """
    L = clog2(n)
    LL = clog2(L)
    return math.sqrt(L * clog2(LL) / LL)


def two_term_runtime(n: float, lam: float) -> float:
    """max{n log n / lam, n lam loglog lam / log lam}."""
    if n < 2 or lam < 1:
        raise ValueError("need n >= 2 and lam >= 1")
    return max(n * clog2(n) / lam, n * lam * clog2(clog2(lam)) / clog2(lam))


def _two_term_vec(n: float, lams: np.ndarray) -> np.ndarray:
    lams = lams.astype(np.float64)
    L = np.where(lams > 2, np.log2(np.maximum(lams, 1.0)), 1.0)
    LL = np.where(L > 2, np.log2(L), 1.0)
    return np.maximum(n * clog2(n) / lams, n * lams * LL / L)


def two_term_argmin(n: int, lam_max: Optional[int] = None, chunk: int = 1 << 16) -> Tuple[int, float]:
    """Brute-force integer minimizer of :func:`two_term_runtime` over ``1..lam_max``.

    ``lam_max`` defaults to ``n``.  The scan stops early once a whole chunk
    lies past the point where the second (increasing) term alone exceeds the
    best value found.
    """
    lam_max = n if lam_max is None else lam_max
    best_lam, best = 1, math.inf
    start = 1
    while start <= lam_max:
        lams = np.arange(start, min(start + chunk, lam_max + 1))
        vals = _two_term_vec(n, lams)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_lam = float(vals[i]), int(lams[i])
        second_first = n * lams[0] * clog2(clog2(lams[0])) / clog2(lams[0])
        if lams[0] >= 16 and second_first > best:
            break
        start += chunk
    return best_lam, best


def additive_drift_time(x0: float, delta: float) -> float:
    """Expected hitting time x0/delta of 0 under additive drift delta."""
    if delta <= 0:
        raise ValueError("drift must be positive")
    if x0 < 0:
        raise ValueError("start value must be non-negative")
    return x0 / delta


def multiplicative_drift_lower(s0: float, smin: float, delta: float, beta: float) -> float:
    """Lower bound (ln s0 - ln smin)/delta * (1-beta)/(1+beta) on the hitting time of smin.

    Uses the unclamped natural logarithm.
    """
    if not s0 >= smin >= 1:
        raise ValueError("need s0 >= smin >= 1")
    if not (0 < delta <= 1 and 0 < beta <= 1):
        raise ValueError("need 0 < delta, beta <= 1")
    return (math.log(s0) - math.log(smin)) / delta * (1 - beta) / (1 + beta)


@dataclass(frozen=True)
class PredictorValues:
    n: int
    lambda_star: float
    f_star: float
    two_term: Dict[int, float]
    log_convention: str = "log = log2 clamped to 1 for x <= 2; ln clamped to 1 for x <= e"


def predict(n: int, lams: Iterable[int] = (1, 2, 4, 8, 16, 32, 64, 128)) -> PredictorValues:
    return PredictorValues(
        n=n,
        lambda_star=lambda_star(n),
        f_star=f_star(n),
        two_term={int(l): two_term_runtime(max(n, 2), l) for l in lams},
    )


@dataclass(frozen=True)
class SummaryStats:
    count: int
    mean: float
    median: float
    stderr: float
    ci_low: float
    ci_high: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def summarize(values: Sequence[float], resamples: int = 2000, seed: int = 0) -> SummaryStats:
    """Mean, median, standard error and a percentile bootstrap 95% CI of the mean.

    Values are sorted before resampling, so the result does not depend on
    their order.
    """
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("cannot summarize an empty sample")
    stderr = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    rng = np.random.default_rng(seed)
    boot = v[rng.integers(0, v.size, size=(resamples, v.size))].mean(axis=1)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return SummaryStats(int(v.size), float(v.mean()), float(np.median(v)), stderr, float(lo), float(hi))


@dataclass(frozen=True)
class UShape:
    argmin: float
    minimum: float
    left_ratio: float  # value at smallest lambda / minimum
    right_ratio: float  # value at largest lambda / minimum


def locate_u_shape(curve: Iterable[Tuple[float, float]]) -> UShape:
    pts = sorted(curve)
    if not pts:
        raise ValueError("empty curve")
    best_lam, best = pts[0]
    for lam, val in pts[1:]:
        if val < best:
            best_lam, best = lam, val
    return UShape(best_lam, best, pts[0][1] / best, pts[-1][1] / best)
