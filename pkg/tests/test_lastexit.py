from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from waldlab.dists import DiscreteLogTail, DiscretePowerTail, Exponential, Pareto, PointMass
from waldlab.estimate import summarize
from waldlab.hump import build_gliding_hump
from waldlab.lastexit import (
    AdmissibilityError,
    CertificationError,
    ExplicitSchedule,
    NeedsMoreBlocks,
    make_hump_schedule,
    make_threshold_schedule,
    markov_tail_bound,
    sample_first_exit,
    sample_last_exit,
    sample_naive,
    t_exp_moment,
    t_power_moment,
    time_pmf,
)
from waldlab.streams import make_stream


def brute_force_T(p):
    """Exact law of T = max{k : event k happened} for independent events with probs p_1..p_n."""
    n = len(p)
    out = np.zeros(n + 1)
    for bits in itertools.product((0, 1), repeat=n):
        w = math.prod(pk if b else 1 - pk for pk, b in zip(p, bits))
        last = max((k + 1 for k, b in enumerate(bits) if b), default=0)
        out[last] += w
    return out


@pytest.fixture(scope="module")
def dpt_sched():
    d = DiscretePowerTail(3.0)
    return d, make_hump_schedule(d, build_gliding_hump(d, 2.0, 50))


@pytest.fixture(scope="module")
def pareto_hump_sched():
    d = Pareto(1.5, 1.0)
    return d, make_hump_schedule(d, build_gliding_hump(d, 1.5, 50))


# --- schedules -----------------------------------------------------------------
def test_exponential_schedule_p1():
    s = make_threshold_schedule(Exponential(1.0), "exp", 1.0)
    assert s.probs(1) == pytest.approx(math.exp(-math.e), rel=1e-14)
    assert s.probs(1) == pytest.approx(0.0660, abs=1e-4)


def test_point_mass_zero_schedule():
    d = PointMass(0.0)
    s = make_threshold_schedule(d, "exp", 1.0)
    assert np.all(s.probs(np.arange(1, 50)) == 0)
    law = time_pmf(s)
    assert law.pmf[0] == 1.0
    r = sample_last_exit(s, d, make_stream(1), 100)
    assert np.all(r.T == 0) and np.all(r.X_T == 0) and np.all(r.S_T == 0)
    nv = sample_naive(d, s, make_stream(2), size=100)
    assert np.all(nv.draw.T == 0) and np.all(nv.draw.S_T == 0)


def test_pareto_power_schedule_zeta3():
    s = make_threshold_schedule(Pareto(1.5, 1.0), "power", 2.0)
    k = np.arange(1, 1000)
    np.testing.assert_allclose(s.probs(k), k ** -3.0, rtol=1e-12)
    lo, hi = s.tail_sum_bounds(0)
    z3 = float(mpmath.zeta(3))
    assert lo <= z3 <= hi and hi - lo < 1e-3


def test_inadmissible_schedule():
    with pytest.raises(AdmissibilityError):
        make_threshold_schedule(Pareto(1.5, 1.0), "power", 0.5)  # sum k^{-0.75} diverges


def test_hump_schedule_properties():
    d = DiscretePowerTail(3.0)
    s = make_hump_schedule(d, build_gliding_hump(d, 2.0, 10), max_gap=1.0)
    cap = s.level_cap
    assert cap < 10**6
    assert s.probs(cap + 1) == 0 and s.probs(cap + 1000) == 0
    assert s.probs(cap) > 0


def test_hump_sum_of_probs_is_mean_floor_g():
    # small hump, so the direct expectation over every floor value is a short exact sum
    d = DiscretePowerTail(3.0)
    g = build_gliding_hump(d, 2.0, 10)
    s = make_hump_schedule(d, g, max_gap=1.0)
    j = np.arange(g.top)
    vals = s.values(j.astype(float))
    psi = d.floor_pmf(j)
    direct = math.fsum(psi * np.floor(vals))
    assert math.fsum(s.probs(np.arange(1, s.level_cap + 1))) == pytest.approx(direct, rel=1e-12)
    # p_1 two ways: level-set scan vs direct sum of psi_j 1[g(j) >= 1]
    assert s.probs(1) == pytest.approx(math.fsum(psi[vals >= 1]), rel=1e-12)


def test_needs_more_blocks():
    d = Pareto(1.5, 1.0)
    with pytest.raises(NeedsMoreBlocks):
        make_hump_schedule(d, build_gliding_hump(d, 1.5, 2))


# --- law of T ------------------------------------------------------------------
@pytest.mark.parametrize("p, expected", [
    ([0.5], [0.5, 0.5]),
    ([], [1.0]),
    ([0.5, 0.5], [0.25, 0.25, 0.5]),
])
def test_time_pmf_examples(p, expected):
    law = time_pmf(ExplicitSchedule(tuple(p)))
    np.testing.assert_allclose(law.pmf[: len(expected)], expected, atol=1e-15)
    assert math.fsum(law.pmf) + law.residual == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
def test_time_pmf_brute_force(p):
    law = time_pmf(ExplicitSchedule(tuple(p)))
    ref = brute_force_T(p)
    pmf = np.concatenate([law.pmf, np.zeros(max(0, len(ref) - len(law.pmf)))])
    np.testing.assert_allclose(pmf[: len(ref)], ref, atol=1e-12)


@pytest.mark.parametrize("make", [
    lambda: make_threshold_schedule(Exponential(1.0), "exp", 1.0),
    lambda: make_threshold_schedule(Pareto(1.5, 1.0), "power", 2.0),
    lambda: make_threshold_schedule(DiscreteLogTail(), "exp", 1.0),
])
def test_pmf_mass_plus_residual(make):
    law = time_pmf(make())
    assert math.fsum(law.pmf) + law.residual == pytest.approx(1.0, abs=1e-9)
    assert law.residual <= 1e-6 + 1e-12


def test_pmf_mass_plus_residual_hump(dpt_sched):
    law = time_pmf(dpt_sched[1])
    assert math.fsum(law.pmf) + law.residual == pytest.approx(1.0, abs=1e-9)


def test_larger_thresholds_give_smaller_T():
    d = Pareto(1.5, 1.0)
    cdfs = [time_pmf(make_threshold_schedule(d, "power", r)).cdf() for r in (2.0, 2.5, 3.0)]
    for small, big in zip(cdfs, cdfs[1:]):
        n = min(len(small), len(big))
        assert np.all(big[:n] >= small[:n] - 1e-12)


# --- sampling ------------------------------------------------------------------
def _chisq_vs_pmf(T, law):
    counts = np.bincount(np.minimum(T, 20), minlength=21)
    pm = law.pmf[:21].copy() if law.horizon >= 20 else np.concatenate([law.pmf, np.zeros(20 - law.horizon)])
    probs = np.concatenate([pm[:20], [max(0.0, 1 - pm[:20].sum())]])
    keep = probs * len(T) >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(probs[keep], probs[~keep].sum()) * len(T)
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    exp *= obs.sum() / exp.sum()
    return stats.chisquare(obs, exp).pvalue


@pytest.mark.parametrize("which", ["exp", "power", "hump"])
def test_sampled_T_matches_pmf(which, pareto_hump_sched):
    if which == "hump":
        d, s = pareto_hump_sched
    elif which == "exp":
        d = Exponential(1.0)
        s = make_threshold_schedule(d, "exp", 0.5)
    else:
        d = Pareto(1.5, 1.0)
        s = make_threshold_schedule(d, "power", 2.0)
    r = sample_last_exit(s, d, make_stream(21), 10**5)
    assert _chisq_vs_pmf(r.T, time_pmf(s)) > 0.01


def test_draw_invariants(dpt_sched):
    d, s = dpt_sched
    r = sample_last_exit(s, d, make_stream(3), 10**4)
    assert np.all(r.S_T >= r.X_T)
    assert np.all(r.X_T[r.T == 0] == 0)
    hit = r.T > 0
    assert np.all(s.in_set(r.X_T[hit], r.T[hit]))
    single = sample_last_exit(s, d, make_stream(3))
    assert isinstance(single.T, int)


@pytest.mark.parametrize("which", ["exp", "power", "hump"])
def test_last_exit_identity(which, dpt_sched):
    if which == "hump":
        d, s = dpt_sched
    elif which == "exp":
        d = Exponential(1.0)
        s = make_threshold_schedule(d, "exp", 0.5)
    else:
        d = Pareto(2.5, 1.0)
        s = make_threshold_schedule(d, "power", 1.0)
    r = sample_last_exit(s, d, make_stream(31), 10**5)
    est = summarize(r.S_T - np.maximum(r.T - 1, 0) * d.mean - r.X_T)
    assert est.covers(0.0)


def test_exact_vs_naive():
    d = Exponential(1.0)
    s = make_threshold_schedule(d, "exp", 0.5)
    ex = sample_last_exit(s, d, make_stream(41), 10**5)
    nv = sample_naive(d, s, make_stream(42), size=10**5)
    assert nv.residual <= 1e-6
    top = max(ex.T.max(), nv.draw.T.max()) + 1
    table = np.vstack([np.bincount(ex.T, minlength=top), np.bincount(nv.draw.T, minlength=top)])
    table = table[:, table.sum(axis=0) >= 10]
    assert stats.chi2_contingency(table).pvalue > 0.01
    a, b = summarize(ex.X_T), summarize(nv.draw.X_T)
    assert abs(a.mean - b.mean) <= a.half_width + b.half_width


def test_first_exit_wald():
    d = Pareto(2.5, 1.0)
    r = sample_first_exit(d, 3.0, make_stream(51), 10**5)
    assert summarize(r.S_T - r.T * d.mean).covers(0.0)
    assert summarize(r.T).covers(1 / d.tail(3.0))


# --- certified moments ---------------------------------------------------------
def test_power_moment_examples():
    m = t_power_moment(ExplicitSchedule((0.5,)), 1.0)
    assert m.value == pytest.approx(0.5, abs=1e-15)
    m2 = t_power_moment(ExplicitSchedule((0.5, 0.5)), 2.0)
    assert m2.value == pytest.approx(2.25, abs=1e-15)


def test_exp_moment_examples():
    assert t_exp_moment(ExplicitSchedule(()), 1.0).value == pytest.approx(1.0)
    assert t_exp_moment(ExplicitSchedule((0.5,)), 1.0).value == pytest.approx((1 + math.e) / 2, rel=1e-14)


def test_moments_against_monte_carlo():
    d = Exponential(1.0)
    s = make_threshold_schedule(d, "exp", 1.0)
    T = sample_last_exit(s, d, make_stream(61), 10**6).T
    et = t_power_moment(s, 1.0)
    assert et.value == pytest.approx(0.0671832, abs=1e-7)
    assert summarize(T).covers(et.value)
    ee = t_exp_moment(s, 0.5)
    assert ee.value == pytest.approx(1.04384, abs=1e-5)
    assert summarize(np.exp(0.5 * T)).covers(ee.value)


def test_moment_matches_pmf_series():
    d = Exponential(1.0)
    s = make_threshold_schedule(d, "exp", 1.0)
    law = time_pmf(s, 1e-15)
    assert t_power_moment(s, 2.0, 1e-9).value == pytest.approx(law.mean(lambda k: k**2.0), rel=1e-9)


def test_hump_moments_frozen(dpt_sched, pareto_hump_sched):
    # E T for the beta=3, p=2 hump; an independent direct sum of P(T >= k) = 1 - prod_{j >= k}(1 - p_j)
    # over k <= 2^20 bracketed it in [0.378841840, 0.378841841]
    m = t_power_moment(dpt_sched[1], 1.0)
    assert abs(m.value - 0.3788418405) <= m.error + 1e-9
    assert m.error <= 1e-6 * m.value
    m2 = t_power_moment(pareto_hump_sched[1], 2.0)
    assert m2.value == pytest.approx(0.22391028, abs=2e-7)


def test_direct_tail_sum_oracle():
    # with 10 blocks T <= level_cap, so E T = sum_{k <= cap} (1 - prod_{j >= k}(1 - p_j)) exactly
    d = DiscretePowerTail(3.0)
    s = make_hump_schedule(d, build_gliding_hump(d, 2.0, 10), max_gap=1.0)
    p = s.probs(np.arange(1, s.level_cap + 1))
    log_suffix = np.cumsum(np.log1p(-p)[::-1])[::-1]
    direct = math.fsum(-np.expm1(log_suffix))
    for beta in (1.0, 2.0):
        k = np.arange(1, s.level_cap + 1, dtype=float)
        direct_b = math.fsum((k**beta - (k - 1) ** beta) * -np.expm1(log_suffix))
        m = t_power_moment(s, beta, 1e-9)
        assert m.value == pytest.approx(direct_b, rel=1e-9)
    assert t_power_moment(s, 1.0).value == pytest.approx(direct, rel=1e-6)


def test_certification_limit():
    s = make_threshold_schedule(DiscreteLogTail(), "exp", 1.0)
    assert s.max_exp_rate() == pytest.approx(1.0)
    assert t_exp_moment(s, 0.5).value == pytest.approx(1.16962, abs=1e-5)
    with pytest.raises(CertificationError) as info:
        t_exp_moment(s, 1.0)
    assert info.value.max_rate == pytest.approx(1.0)


def test_markov_tail_bound():
    d = Exponential(1.0)
    law = time_pmf(make_threshold_schedule(d, "exp", 1.0), 1e-12)
    surv = 1 - np.concatenate([[0.0], np.cumsum(law.pmf)])
    for k in range(1, law.horizon + 1):
        b = markov_tail_bound(d.mean, k)
        assert b == pytest.approx(math.exp(1 - k) / (math.e - 1), rel=1e-14)
        assert surv[k] <= b
