import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ollga import rng as R
from ollga.pmf import binomial_pmf
from ollga.rng import (
    RngStream,
    bernoulli,
    derive_seed,
    derive_states,
    sample_binomial,
    sample_k_subset,
    sample_k_subsets,
    splitmix64,
    uniform_choice,
)

M64 = (1 << 64) - 1


def ref_xoshiro(state):
    """Straight transcription of xoshiro256** on Python ints."""
    s = [int(v) for v in state]

    def rotl(x, k):
        return ((x << k) | (x >> (64 - k))) & M64

    while True:
        result = (rotl((s[1] * 5) & M64, 7) * 9) & M64
        t = (s[1] << 17) & M64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        yield result


def test_splitmix64_known_value():
    # first output of splitmix64 started from state 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_xoshiro_known_value():
    stream = RngStream(0)
    stream.state[:] = np.array([1, 2, 3, 4], dtype=np.uint64)
    assert stream.next_u64() == 11520


@pytest.mark.parametrize("seed", [0, 1, 2**63 + 12345, M64])
def test_xoshiro_matches_reference(seed):
    stream = RngStream(seed)
    ref = ref_xoshiro(stream.state.copy())
    for _ in range(1000):
        assert stream.next_u64() == next(ref)


def test_seed_range_checked():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(1 << 64)


def test_derive_states_match_spawn():
    states = derive_states(987654321, 64)
    for i in range(64):
        np.testing.assert_array_equal(states[i], RngStream(987654321).spawn(i).state)
        assert RngStream(987654321).spawn(i).seed == derive_seed(987654321, i)


def test_child_seeds_distinct():
    seeds = {derive_seed(7, i) for i in range(10_000)}
    assert len(seeds) == 10_000


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, M64), n=st.integers(0, 200), p=st.floats(0, 1), ell_frac=st.floats(0, 1))
def test_equal_seeds_equal_sequences(seed, n, p, ell_frac):
    a, b = RngStream(seed), RngStream(seed)
    ell = int(ell_frac * n)
    for _ in range(3):
        assert sample_binomial(n, p, a) == sample_binomial(n, p, b)
        np.testing.assert_array_equal(sample_k_subset(n, ell, a), sample_k_subset(n, ell, b))
        assert bernoulli(p, a) == bernoulli(p, b)
        assert uniform_choice("abc", a) == uniform_choice("abc", b)
        assert a.random() == b.random()


def test_random_in_unit_interval():
    u = RngStream(5).random_array(100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / u.size)


def test_integers_unbiased():
    rng = RngStream(11)
    draws = np.array([rng.integers(3) for _ in range(60_000)])
    counts = np.bincount(draws, minlength=3)
    assert stats.chisquare(counts).pvalue > 0.001


# --- binomial ---------------------------------------------------------------


def test_binomial_degenerate():
    rng = RngStream(1)
    assert all(sample_binomial(50, 0.0, rng) == 0 for _ in range(100))
    assert all(sample_binomial(50, 1.0, rng) == 50 for _ in range(100))
    assert sample_binomial(0, 0.3, rng) == 0


def test_binomial_rejects_bad_probability():
    with pytest.raises(ValueError):
        sample_binomial(10, 1.5, RngStream(0))
    with pytest.raises(ValueError):
        sample_binomial(10, -0.1, RngStream(0))
    with pytest.raises(ValueError):
        sample_binomial(-1, 0.5, RngStream(0))


def _chi2_vs_binomial(draws, n, p):
    pmf = binomial_pmf(n, p)
    counts = np.bincount(draws, minlength=n + 1).astype(float)
    expected = draws.size * pmf.probs
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    if exp[-1] < 5:
        obs[-2] += obs[-1]
        exp[-2] += exp[-1]
        obs, exp = obs[:-1], exp[:-1]
    return stats.chisquare(obs, exp).pvalue


def test_binomial_n20_quarter():
    draws = R.binomial_array(RngStream(2024).state, 20, 0.25, 1_000_000)
    assert abs(draws.mean() - 5.0) <= 5 * 0.02
    assert _chi2_vs_binomial(draws, 20, 0.25) > 0.01


@pytest.mark.parametrize("n,p", [(1000, 0.3), (500, 0.9), (65536, 0.5), (40, 0.97), (10, 0.6)])
def test_binomial_both_branches_match_pmf(n, p):
    draws = R.binomial_array(RngStream(n).state, n, p, 200_000)
    assert _chi2_vs_binomial(draws, n, p) > 0.001


# --- subsets ------------------------------------------------------------------


def test_k_subset_edges():
    rng = RngStream(3)
    assert sample_k_subset(10, 0, rng).size == 0
    np.testing.assert_array_equal(sample_k_subset(10, 10, rng), np.arange(10))
    with pytest.raises(ValueError):
        sample_k_subset(5, 6, rng)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, M64), n=st.integers(1, 100), frac=st.floats(0, 1))
def test_k_subset_is_a_set_of_right_size(seed, n, frac):
    ell = int(frac * n)
    s = sample_k_subset(n, ell, RngStream(seed))
    assert s.size == ell == np.unique(s).size
    assert (s >= 0).all() and (s < n).all()


def test_k_subset_uniform_over_all_pairs():
    rows = sample_k_subsets(5, 2, 1_000_000, RngStream(99))
    codes = rows[:, 0] * 5 + rows[:, 1]
    pairs = list(itertools.combinations(range(5), 2))
    for a, b in pairs:
        assert abs(np.mean(codes == a * 5 + b) - 0.1) <= 0.003


@pytest.mark.parametrize("n,ell", [(10, 3), (10, 8), (31, 16)])
def test_k_subset_marginals(n, ell):
    size = 200_000
    rows = sample_k_subsets(n, ell, size, RngStream(n * 100 + ell))
    freq = np.bincount(rows.ravel(), minlength=n) / size
    q = ell / n
    sigma = math.sqrt(q * (1 - q) / size)
    assert np.all(np.abs(freq - q) <= 4 * sigma)


# --- bernoulli / choice -----------------------------------------------------


def test_bernoulli_edges_and_mean():
    rng = RngStream(8)
    assert bernoulli(0.0, rng) == 0
    assert bernoulli(1.0, rng) == 1
    draws = [bernoulli(0.5, rng) for _ in range(1_000_000)]
    assert abs(np.mean(draws) - 0.5) <= 0.002
    with pytest.raises(ValueError):
        bernoulli(2.0, rng)


def test_uniform_choice():
    rng = RngStream(4)
    assert uniform_choice(["only"], rng) == "only"
    with pytest.raises(ValueError):
        uniform_choice([], rng)
    two = [uniform_choice((0, 1), rng) for _ in range(1_000_000)]
    assert abs(np.mean(two) - 0.5) <= 0.002
    three = np.bincount([uniform_choice((0, 1, 2), rng) for _ in range(1_000_000)]) / 1_000_000
    assert np.all(np.abs(three - 1 / 3) <= 0.002)
