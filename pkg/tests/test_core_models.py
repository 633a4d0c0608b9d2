import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from smmh.core_models import (
    ItemBank,
    ItemParams,
    LogisticPrior,
    NormalPrior,
    ResponsePattern,
    irf_cdf,
    irf_probs,
    log_joint_proposal,
    log_joint_target,
    simulate_response,
    simulate_responses,
    weighted_sum,
)


def random_bank(rng, n):
    return ItemBank.from_arrays(rng.uniform(0.3, 2.0, n), rng.uniform(-1.5, 1.5, n))


# -- types ------------------------------------------------------------------


@pytest.mark.parametrize("a", [0.0, -1.0, float("nan"), float("inf")])
def test_item_params_rejects_bad_discrimination(a):
    with pytest.raises(ValueError):
        ItemParams(a, 0.0)


def test_empty_bank_rejected():
    with pytest.raises(ValueError):
        ItemBank([])


def test_bank_arrays_are_read_only():
    bank = ItemBank.from_arrays([1.0, 2.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        bank.a[0] = 5.0
    assert len(bank) == 2
    assert bank[1] == ItemParams(2.0, 1.0)


@pytest.mark.parametrize("kw", [{"a0": 0.0}, {"a0": -1.0}])
def test_logistic_prior_scale_positive(kw):
    with pytest.raises(ValueError):
        LogisticPrior(**kw)


def test_normal_prior_scale_positive():
    with pytest.raises(ValueError):
        NormalPrior(0.0, 0.0)


def test_priors_agree_with_scipy():
    grid = np.linspace(-6, 6, 25)
    lp = LogisticPrior(1.7, 0.4)
    # logistic with a0, b0 has location -b0/a0 and scale 1/a0
    ref = stats.logistic(loc=-0.4 / 1.7, scale=1 / 1.7)
    np.testing.assert_allclose(lp.logpdf(grid), ref.logpdf(grid), rtol=1e-12)
    np.testing.assert_allclose(lp.logcdf(grid), ref.logcdf(grid), rtol=1e-12)
    np.testing.assert_allclose(lp.logsf(grid), ref.logsf(grid), rtol=1e-12)
    np.testing.assert_allclose(lp.ppf(np.array([0.1, 0.5, 0.9])), ref.ppf([0.1, 0.5, 0.9]), rtol=1e-12)
    npr = NormalPrior(0.3, 1.4)
    ref = stats.norm(0.3, 1.4)
    np.testing.assert_allclose(npr.logpdf(grid), ref.logpdf(grid), rtol=1e-12)
    np.testing.assert_allclose(npr.logcdf(grid), ref.logcdf(grid), rtol=1e-12)
    np.testing.assert_allclose(npr.logsf(grid), ref.logsf(grid), rtol=1e-12)


def test_response_pattern_validation():
    with pytest.raises(ValueError):
        ResponsePattern([0, 2, 1])
    x = ResponsePattern([0, 1, 1])
    assert x.raw_sum == 2
    with pytest.raises(ValueError):
        x.bits[0] = 1


# -- irf ----------------------------------------------------------------------


def test_irf_examples():
    assert irf_cdf(ItemParams(1.0, 0.0), 0.0) == 0.5
    assert irf_cdf(ItemParams(2.0, 3.0), -1.5) == 0.5
    # extended-precision oracle for exp(2) / (1 + exp(2))
    assert irf_cdf(ItemParams(1.0, 0.0), 2.0) == pytest.approx(0.8807970779778824440597, abs=1e-15)


def test_irf_extreme_arguments_do_not_overflow():
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        assert irf_cdf(ItemParams(1.0, 0.0), 800.0) == 1.0
        assert irf_cdf(ItemParams(1.0, 0.0), -800.0) == 0.0
        t = log_joint_target(800.0, ResponsePattern([0]), ItemBank.from_arrays([1.0], [0.0]), NormalPrior())
    assert t == pytest.approx(-800.0 + stats.norm.logpdf(800.0), rel=1e-12)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=30), st.floats(0.1, 3), st.floats(-3, 3))
def test_irf_monotone(etas, a, b):
    etas = sorted(etas)
    item = ItemParams(a, b)
    vals = [irf_cdf(item, e) for e in etas]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(v1 <= v2 for v1, v2 in zip(vals, vals[1:]))


# -- densities ----------------------------------------------------------------


def test_log_joint_target_single_item():
    bank = ItemBank.from_arrays([1.0], [0.0])
    got = log_joint_target(0.0, ResponsePattern([1]), bank, LogisticPrior())
    assert got == pytest.approx(math.log(0.5) + math.log(0.25), abs=1e-15)


def test_log_joint_target_matches_per_item_oracle():
    rng = np.random.default_rng(3)
    for _ in range(200):
        bank = random_bank(rng, 3)
        x = ResponsePattern(rng.integers(0, 2, 3))
        eta = rng.normal(0, 2)
        oracle = stats.norm.logpdf(eta)
        for a, b, xi in zip(bank.a, bank.b, x.bits):
            p = 1.0 / (1.0 + math.exp(-(a * eta + b)))
            oracle += math.log(p) if xi else math.log(1.0 - p)
        assert log_joint_target(eta, x, bank, NormalPrior()) == pytest.approx(oracle, abs=1e-12)


def test_log_joint_proposal_symmetric_case():
    bank = ItemBank.from_arrays([1.0, 1.0], [0.0, 0.0])
    # y indexed by slot: y[0] prior, y[1] item 1 (ignored for j=1), y[2] item 2
    got = log_joint_proposal(0.0, 1, [1, 0, 0], bank, LogisticPrior())
    assert got == pytest.approx(math.log(0.5) + math.log(0.5) + math.log(0.25), abs=1e-15)


def test_log_joint_proposal_j0_is_target():
    rng = np.random.default_rng(4)
    for prior in (LogisticPrior(1.3, -0.2), NormalPrior(0.5, 0.8)):
        bank = random_bank(rng, 6)
        x = rng.integers(0, 2, 6)
        for eta in rng.normal(0, 2, 20):
            y = np.concatenate([[rng.integers(0, 2)], x])
            assert log_joint_proposal(eta, 0, y, bank, prior) == pytest.approx(
                log_joint_target(eta, ResponsePattern(x), bank, prior), abs=1e-12
            )


def test_log_joint_proposal_factor_oracle():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        bank = random_bank(rng, n)
        prior = NormalPrior(rng.normal(), rng.uniform(0.5, 2)) if rng.random() < 0.5 else LogisticPrior(rng.uniform(0.5, 2), rng.normal())
        ref = stats.norm(*prior.params) if prior.kind == 1 else stats.logistic(-prior.params[1] / prior.params[0], 1 / prior.params[0])
        j = int(rng.integers(1, n + 1))
        y = rng.integers(0, 2, n + 1)
        eta = rng.normal(0, 2)
        oracle = ref.logcdf(eta) if y[0] else ref.logsf(eta)
        for i in range(1, n + 1):
            a, b = bank.a[i - 1], bank.b[i - 1]
            if i == j:
                oracle += stats.logistic(-b / a, 1 / a).logpdf(eta)
            else:
                oracle += stats.logistic(-b / a, 1 / a).logcdf(eta) if y[i] else stats.logistic(-b / a, 1 / a).logsf(eta)
        assert log_joint_proposal(eta, j, y, bank, prior) == pytest.approx(oracle, abs=1e-12)


def test_log_joint_proposal_index_range():
    bank = ItemBank.from_arrays([1.0, 1.0], [0.0, 0.0])
    with pytest.raises(IndexError):
        log_joint_proposal(0.0, 3, [0, 0, 0], bank, LogisticPrior())
    with pytest.raises(IndexError):
        log_joint_proposal(0.0, -1, [0, 0, 0], bank, LogisticPrior())


def test_weighted_sum_examples():
    bank = ItemBank.from_arrays([1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
    assert weighted_sum(ResponsePattern([0, 0, 0]), bank) == 0.0
    assert weighted_sum(ResponsePattern([0, 1, 1]), bank) == 2.0


def test_weighted_sum_naive_loop():
    rng = np.random.default_rng(6)
    bank = random_bank(rng, 40)
    x = ResponsePattern(rng.integers(0, 2, 40))
    naive = Fraction(0)
    for a, xi in zip(bank.a, x.bits):
        naive += Fraction(float(a)) * int(xi)
    assert weighted_sum(x, bank) == pytest.approx(float(naive), abs=1e-13)


@pytest.mark.parametrize("n", [1, 4, 10])
def test_patterns_normalize(n):
    # sum over all 2^n patterns of the quadrature marginal P(x) is one
    rng = np.random.default_rng(n)
    bank = random_bank(rng, n)
    prior = NormalPrior()
    grid = np.linspace(-12, 12, 4001)
    total = 0.0
    t = np.outer(grid, bank.a) + bank.b
    logp1 = -np.logaddexp(0.0, -t)
    logp0 = -np.logaddexp(0.0, t)
    logprior = prior.logpdf(grid)
    for bits in itertools.product((0, 1), repeat=n):
        bits = np.array(bits)
        logf = np.where(bits == 1, logp1, logp0).sum(axis=1) + logprior
        total += np.trapezoid(np.exp(logf), grid)
    assert total == pytest.approx(1.0, abs=1e-6)


# -- simulation ---------------------------------------------------------------


def test_simulate_large_eta_all_correct():
    bank = ItemBank.from_arrays(np.ones(10), np.zeros(10))
    rng = np.random.default_rng(7)
    mean = np.mean([simulate_response(50.0, bank, rng).bits.mean() for _ in range(10_000)])
    assert mean >= 0.999


def test_simulate_single_symmetric_item():
    bank = ItemBank.from_arrays([1.0], [0.0])
    rng = np.random.default_rng(8)
    n = 100_000
    hits = simulate_responses(np.zeros(n), bank, rng).sum()
    assert abs(hits / n - 0.5) <= 3 * math.sqrt(0.25 / n)
    # single-draw path agrees in distribution too
    hits = sum(simulate_response(0.0, bank, rng).bits[0] for _ in range(20_000))
    assert abs(hits / 20_000 - 0.5) <= 3 * math.sqrt(0.25 / 20_000)


def test_simulate_item_means():
    rng = np.random.default_rng(9)
    bank = random_bank(rng, 20)
    draws = 20_000
    X = simulate_responses(np.full(draws, 0.7), bank, rng)
    p = irf_probs(bank, 0.7)
    sd = np.sqrt(p * (1 - p) / draws)
    assert np.all(np.abs(X.mean(axis=0) - p) <= 4 * sd)


def test_simulate_pattern_distribution_chi2():
    # exhaustive pattern probabilities as oracle, n=4, 10^5 draws
    rng = np.random.default_rng(10)
    bank = random_bank(rng, 4)
    eta = 0.3
    p = irf_probs(bank, eta)
    patterns = list(itertools.product((0, 1), repeat=4))
    expected = np.array([np.prod(np.where(np.array(s) == 1, p, 1 - p)) for s in patterns])
    X = simulate_responses(np.full(100_000, eta), bank, rng)
    codes = X @ (1 << np.arange(3, -1, -1))
    observed = np.bincount(codes, minlength=16)
    _, pval = stats.chisquare(observed, expected * X.shape[0])
    assert pval > 1e-3


def test_simulate_response_uses_caller_rng_only():
    bank = ItemBank.from_arrays(np.ones(5), np.zeros(5))
    a = simulate_response(0.2, bank, np.random.default_rng(11))
    b = simulate_response(0.2, bank, np.random.default_rng(11))
    assert a == b


@settings(max_examples=50)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_pattern_raw_sum_in_range(n, seed):
    rng = np.random.default_rng(seed)
    x = simulate_response(rng.normal(), random_bank(rng, n), rng)
    assert 0 <= x.raw_sum <= n
