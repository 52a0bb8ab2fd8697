import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ollga.drift import tvd
from ollga.pmf import Pmf, binomial_pmf, hypergeometric_pmf, point_mass
from ollga.rng import RngStream


def bernoulli_sum_law(n, p):
    law = np.array([1.0])
    for _ in range(n):
        law = np.convolve(law, [1 - p, p])
    return Pmf(0, law)


def test_binomial_three_halves():
    np.testing.assert_array_equal(binomial_pmf(3, 0.5).probs, [0.125, 0.375, 0.375, 0.125])


@pytest.mark.parametrize("n,p", [(1, 0.5), (10, 0.1), (40, 0.37), (200, 0.02), (300, 0.9)])
def test_binomial_agrees_with_convolution(n, p):
    assert tvd(binomial_pmf(n, p), bernoulli_sum_law(n, p)) < 1e-12


def test_binomial_large_n_path():
    pmf = binomial_pmf(5000, 0.01)
    assert abs(pmf.mean() - 50) < 1e-8
    assert abs(pmf.variance() - 5000 * 0.01 * 0.99) < 1e-6


def test_binomial_degenerate():
    assert binomial_pmf(4, 0.0)(0) == 1.0
    assert binomial_pmf(4, 1.0)(4) == 1.0


def test_hypergeometric_draw_everything():
    pmf = hypergeometric_pmf(10, 10, 4)
    assert pmf.support == range(4, 5)
    assert pmf(4) == 1.0


def test_hypergeometric_mean_example():
    assert abs(hypergeometric_pmf(20, 5, 8).mean() - 2.0) < 1e-9


def brute_hypergeometric(n, N, m):
    # enumerate all N-subsets of range(n) with B = range(m)
    from itertools import combinations

    counts = {}
    for sub in combinations(range(n), N):
        c = sum(1 for i in sub if i < m)
        counts[c] = counts.get(c, 0) + 1
    total = math.comb(n, N)
    return {k: v / total for k, v in counts.items()}


@pytest.mark.parametrize("n,N,m", [(8, 3, 5), (9, 6, 2), (10, 5, 5), (7, 0, 3), (7, 7, 7)])
def test_hypergeometric_matches_enumeration(n, N, m):
    pmf = hypergeometric_pmf(n, N, m)
    for k, prob in brute_hypergeometric(n, N, m).items():
        assert abs(pmf(k) - prob) < 1e-15


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 60), data=st.data())
def test_hypergeometric_mean_identity(n, data):
    N = data.draw(st.integers(0, n))
    m = data.draw(st.integers(0, n))
    pmf = hypergeometric_pmf(n, N, m)
    assert abs(pmf.probs.sum() - 1) < 1e-12
    assert abs(pmf.mean() - N * m / n) < 1e-9


def test_invalid_ranges():
    with pytest.raises(ValueError):
        hypergeometric_pmf(5, 6, 2)
    with pytest.raises(ValueError):
        binomial_pmf(5, 1.2)
    with pytest.raises(ValueError):
        Pmf(0, np.array([0.5, 0.4]))


def test_pmf_sampling_matches():
    pmf = binomial_pmf(10, 0.3)
    draws = pmf.sample(RngStream(1), 200_000)
    assert abs(draws.mean() - 3.0) < 4 * math.sqrt(2.1 / 200_000)
    assert point_mass(7).sample(RngStream(2), 5).tolist() == [7] * 5
