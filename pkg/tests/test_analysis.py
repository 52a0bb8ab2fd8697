import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ollga.analysis import (
    _f_star_closed,
    additive_drift_time,
    clog2,
    cln,
    f_star,
    k_window_exponent,
    lambda_star,
    locate_u_shape,
    multiplicative_drift_lower,
    predict,
    summarize,
    two_term_argmin,
    two_term_runtime,
)
from ollga.bitspace import OneMaxInstance
from ollga.engine import run_opo_ea
from ollga.pmf import binomial_pmf
from ollga.rng import RngStream, derive_seed

GRID = [2**e for e in range(10, 31)]


def test_clamped_logs():
    assert clog2(1) == clog2(2) == 1.0
    assert clog2(8) == 3.0
    assert cln(1) == cln(math.e) == 1.0
    assert cln(math.e**2) == pytest.approx(2.0)


@settings(max_examples=200)
@given(n=st.floats(1, 1e300), lam=st.floats(1, 1e6))
def test_predictors_total(n, lam):
    for v in (lambda_star(n), f_star(n), two_term_runtime(max(n, 2), lam), k_window_exponent(n)):
        assert math.isfinite(v) and v > 0


def test_lambda_star_values():
    assert lambda_star(2) == 1.0
    assert lambda_star(2**64) == pytest.approx(math.sqrt(64 * 6 / math.log2(6)))
    assert lambda_star(2**64) == pytest.approx(12.19, abs=0.005)
    assert lambda_star(2**16) == pytest.approx(math.sqrt(32))


def test_lambda_star_monotone():
    vals = [lambda_star(2**e) for e in range(4, 41)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_f_star_values():
    assert f_star(2) == 2.0
    assert f_star(2**16) == pytest.approx(65536 * 16 / math.sqrt(32))
    assert round(f_star(2**16)) == 185364


def test_f_star_two_forms_agree():
    for n in [1, 2, 3, 10, 1000] + GRID + [2**64]:
        assert abs(f_star(n) - _f_star_closed(n)) <= 1e-12 * f_star(n)


def test_f_star_beats_n_log_n():
    ratios = [f_star(n) / (n * math.log2(n)) for n in [2**e for e in range(4, 200, 8)]]
    assert all(a >= b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < ratios[0] / 2


def test_two_term_examples():
    n = 1024
    assert two_term_runtime(n, 1) == n * 10
    with pytest.raises(ValueError):
        two_term_runtime(1, 1)
    with pytest.raises(ValueError):
        two_term_runtime(16, 0.5)


def brute_argmin(n, lam_max):
    vals = [two_term_runtime(n, lam) for lam in range(1, lam_max + 1)]
    i = int(np.argmin(vals))
    return i + 1, vals[i]


@pytest.mark.parametrize("n", [2**10, 2**12, 2**16])
def test_argmin_matches_plain_scan(n):
    lam, val = two_term_argmin(n)
    assert (lam, pytest.approx(val)) == brute_argmin(n, n)


@pytest.mark.parametrize("n", GRID)
def test_argmin_near_lambda_star(n):
    lam, _ = two_term_argmin(n)
    ls = lambda_star(n)
    assert ls / 4 <= lam <= 4 * ls


@pytest.mark.parametrize("n", GRID)
def test_two_term_at_lambda_star_tracks_f_star(n):
    assert 0.5 <= two_term_runtime(n, lambda_star(n)) / f_star(n) <= 2


@pytest.mark.parametrize("n", [2**10, 2**14, 2**20, 2**30])
def test_two_term_quasi_convex(n):
    vals = [two_term_runtime(n, lam) for lam in range(1, 4097)]
    i = int(np.argmin(vals))
    assert all(a >= b for a, b in zip(vals[: i + 1], vals[1 : i + 1]))
    assert all(a <= b for a, b in zip(vals[i:], vals[i + 1 :]))


def test_predict_bundle():
    pv = predict(2**16, [1, 6])
    assert pv.lambda_star == lambda_star(2**16)
    assert pv.f_star == f_star(2**16)
    assert pv.two_term[1] == two_term_runtime(2**16, 1)


# --- drift theorems -------------------------------------------------------------


def test_additive_drift_time():
    assert additive_drift_time(0, 1.5) == 0
    assert additive_drift_time(10, 2) == 5
    with pytest.raises(ValueError):
        additive_drift_time(1, 0)


def test_multiplicative_drift_lower():
    assert multiplicative_drift_lower(7, 7, 0.5, 0.5) == 0
    assert multiplicative_drift_lower(1e9, 1, 0.5, 1.0) == 0
    assert multiplicative_drift_lower(math.e**2 * 3, 3, 0.1, 1 / 3) == pytest.approx(10)
    with pytest.raises(ValueError):
        multiplicative_drift_lower(1, 2, 0.5, 0.5)
    with pytest.raises(ValueError):
        multiplicative_drift_lower(4, 2, 0.0, 0.5)


def opo_drift(n, d, rate):
    # exact expected one-step gain of the elitist (1+1) EA at distance d
    g = binomial_pmf(d, rate).probs
    b = binomial_pmf(n - d, rate).probs
    gain = np.maximum(np.subtract.outer(np.arange(g.size), np.arange(b.size)), 0)
    return float(g @ gain @ b)


def _opo_prediction_and_measurement():
    n = 100
    delta = opo_drift(n, n // 2, 1 / n)
    predicted = additive_drift_time(n / 2, delta)
    inst = OneMaxInstance.classic(n)
    measured = np.mean([run_opo_ea(n, 1 / n, inst, RngStream(derive_seed(21, i))).T for i in range(300)])
    return predicted, measured


def test_additive_drift_prediction_is_a_lower_estimate():
    predicted, measured = _opo_prediction_and_measurement()
    assert predicted <= measured


@pytest.mark.xfail(
    strict=True,
    reason="drift at distance n/2 is ~7x the average drift over a run; the factor-3 bracket does not hold",
)
def test_additive_drift_prediction_within_factor_three():
    predicted, measured = _opo_prediction_and_measurement()
    assert measured / 3 <= predicted <= 3 * measured


# --- summaries ---------------------------------------------------------------------


def test_summarize_constant():
    s = summarize([4.0] * 10)
    assert s.mean == s.median == s.ci_low == s.ci_high == 4.0
    assert s.stderr == 0.0 and s.count == 10


def test_summarize_single_and_empty():
    assert summarize([3.0]).stderr == 0.0
    with pytest.raises(ValueError):
        summarize([])


@settings(max_examples=40, deadline=None)
@given(vals=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), seed=st.integers(0, 2**32))
def test_summarize_permutation_invariant(vals, seed):
    perm = list(np.random.default_rng(seed).permutation(vals))
    assert summarize(vals) == summarize(perm)


def test_summarize_ci_reasonable():
    vals = np.random.default_rng(0).normal(10, 2, 400)
    s = summarize(vals)
    assert s.ci_low < s.mean < s.ci_high
    assert s.ci_high - s.ci_low == pytest.approx(2 * 1.96 * s.stderr, rel=0.15)
    assert s.stderr == pytest.approx(vals.std(ddof=1) / 20)


def test_u_shape_basic():
    u = locate_u_shape([(1, 10.0), (2, 5.0), (4, 3.0), (8, 6.0)])
    assert (u.argmin, u.minimum) == (4, 3.0)
    assert u.left_ratio == pytest.approx(10 / 3)
    assert u.right_ratio == pytest.approx(2.0)


def test_u_shape_decreasing_and_ties():
    u = locate_u_shape([(4, 2.0), (1, 8.0), (2, 4.0)])
    assert u.argmin == 4 and u.right_ratio == 1.0
    assert locate_u_shape([(1, 3.0), (2, 1.0), (3, 1.0)]).argmin == 2
    with pytest.raises(ValueError):
        locate_u_shape([])


def test_u_shape_on_two_term_curve():
    n = 2**20
    u = locate_u_shape([(lam, two_term_runtime(n, lam)) for lam in range(1, 65)])
    assert lambda_star(n) / 4 <= u.argmin <= 4 * lambda_star(n)
