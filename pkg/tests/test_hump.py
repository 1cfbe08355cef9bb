from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waldlab.dists import DiscreteLogTail, DiscretePowerTail, Exponential, Pareto
from waldlab.hump import (
    HumpFunction,
    MomentAppearsFinite,
    OutOfRange,
    block_cross_moments,
    build_gliding_hump,
    eval_hump,
    harmonic,
    hump_cross_moment_lower,
    hump_q_moment,
    hump_q_moment_direct,
    level_mass,
    truncation_gap,
)

Z3 = float(mpmath.zeta(3))


@pytest.fixture(scope="module")
def dpt_hump():
    return build_gliding_hump(DiscretePowerTail(3.0), 2.0, 50)


@pytest.fixture(scope="module")
def pareto_hump():
    return build_gliding_hump(Pareto(1.5, 1.0), 1.5, 50)


def test_first_block_dpt(dpt_hump):
    # terms psi_k k^2 = k^{-1} / zeta(3): 1/zeta(3) < 1 <= 1.5/zeta(3)
    assert dpt_hump.boundaries[:2] == (0, 3)
    assert dpt_hump.block_sums[0] == pytest.approx(1.5 / Z3, rel=1e-14)
    assert dpt_hump.block_sums[0] == pytest.approx(1.248, abs=1e-3)


def test_dpt_blocks_match_harmonic_oracle(dpt_hump):
    # block l ends at the first b with sum_{a <= k < b} 1/k >= zeta(3); check the first eight by brute force
    a, bounds = 0, [0]
    for _ in range(8):
        s, k = 0.0, max(a, 1)
        while s < Z3:
            s += 1.0 / k
            k += 1
        bounds.append(k)
        a = k
    assert list(dpt_hump.boundaries[:9]) == bounds


def test_pareto_blocks_valid(pareto_hump):
    d = Pareto(1.5, 1.0)
    b = pareto_hump.boundaries
    assert all(1.0 <= S for S in pareto_hump.block_sums)
    assert all(x < y for x, y in zip(b, b[1:]))
    for ell in range(1, 21):
        lo, hi = b[ell - 1], b[ell]
        # minimality: dropping the last floor value leaves the sum below 1
        assert d.floor_power_sum(1.5, lo, hi - 1) < 1.0 + 1e-12
        top_term = max(d.floor_power_sum(1.5, k, k + 1) for k in range(lo, min(hi, lo + 50)))
        assert pareto_hump.block_sums[ell - 1] <= 1.0 + top_term + 1e-12


def test_finite_moment_rejected():
    with pytest.raises(MomentAppearsFinite):
        build_gliding_hump(Exponential(1.0), 2.0, 3)
    with pytest.raises(MomentAppearsFinite):
        build_gliding_hump(Pareto(2.5, 1.0), 2.0, 20, scan_cap=10**9)  # total mass E X^2 = 5


@pytest.mark.parametrize("p", [0.9, 1.0, 2.5])
def test_p_range(p):
    with pytest.raises(ValueError):
        build_gliding_hump(Pareto(0.5, 1.0), p, 3)


def test_eval_examples(dpt_hump):
    assert eval_hump(dpt_hump, 1.7) == pytest.approx(Z3 / 1.5, rel=1e-14)
    assert eval_hump(dpt_hump, 1.7) == pytest.approx(0.801, abs=1e-3)
    assert eval_hump(dpt_hump, 0.5) == 0.0
    lo, hi = dpt_hump.boundaries[3], dpt_hump.boundaries[4]
    xs = np.linspace(lo, hi - 1e-9, 200)
    assert np.all(np.diff(eval_hump(dpt_hump, xs)) >= 0)
    with pytest.raises(OutOfRange):
        eval_hump(dpt_hump, float(dpt_hump.top))


def test_q_moment_block_formula_vs_direct(dpt_hump, pareto_hump):
    for g, d in ((dpt_hump, DiscretePowerTail(3.0)), (pareto_hump, Pareto(1.5, 1.0))):
        block = hump_q_moment(g, d).value
        assert hump_q_moment_direct(g, d) == pytest.approx(block, rel=1e-9)


def test_q_moment_synthetic():
    L = 100
    g = HumpFunction(2.0, 2.0, tuple(range(L + 1)), (1.0,) * L)
    qm = hump_q_moment(g)
    assert qm.value == pytest.approx(math.fsum(1.0 / np.arange(1, L + 1) ** 2), rel=1e-14)
    assert qm.value + qm.remainder_bound == pytest.approx(math.pi**2 / 6, rel=1e-12)
    assert qm.remainder_bound < 0.01


def test_cross_moment_examples(dpt_hump):
    d = DiscretePowerTail(3.0)
    assert hump_cross_moment_lower(dpt_hump, d, 1) == pytest.approx(1.0, rel=1e-12)
    assert hump_cross_moment_lower(dpt_hump, d, 10) == pytest.approx(2.928968, abs=1e-6)
    assert block_cross_moments(dpt_hump, d)[2] == pytest.approx(1 / 3, rel=1e-9)
    with pytest.raises(OutOfRange):
        block_cross_moments(dpt_hump, d, 51)


@pytest.mark.parametrize("d, p", [(DiscretePowerTail(3.0), 2.0), (Pareto(1.5, 1.0), 1.5), (Pareto(1.2, 1.0), 1.2),
                                  (DiscreteLogTail(), 1.5)])
def test_block_identity_every_block(d, p):
    g = build_gliding_hump(d, p, 30)
    ell = np.arange(1, 31)
    np.testing.assert_allclose(block_cross_moments(g, d) * ell, 1.0, rtol=1e-9)
    assert hump_cross_moment_lower(g, d) == pytest.approx(harmonic(30), rel=1e-9)


def test_harmonic_oracle():
    assert harmonic(50) == pytest.approx(float(mpmath.harmonic(50)), rel=1e-15)


def test_first_boundary_nonincreasing_in_p():
    # each term psi_k k^p grows with p, so the minimal first block can only shrink
    d = DiscretePowerTail(2.2)
    a1 = [build_gliding_hump(d, p, 1).boundaries[1] for p in (1.25, 1.5, 1.75, 2.0)]
    assert all(x >= y for x, y in zip(a1, a1[1:]))
    dp = Pareto(1.1, 1.0)
    a1 = [build_gliding_hump(dp, p, 1).boundaries[1] for p in (1.2, 1.6, 2.0)]
    assert all(x >= y for x, y in zip(a1, a1[1:]))


def test_level_mass_and_gap(dpt_hump):
    d = DiscretePowerTail(3.0)
    assert level_mass(dpt_hump, d, 0) == 1.0
    # P(g(X) >= 1) by direct summation over the first blocks where g can reach 1
    direct = 0.0
    for ell in range(1, dpt_hump.n_blocks + 1):
        lo, hi = dpt_hump.boundaries[ell - 1], dpt_hump.boundaries[ell]
        c = dpt_hump.coefficient(ell)
        j0 = max(lo, math.ceil(1 / c))
        while j0 > lo and c * (j0 - 1) >= 1:
            j0 -= 1
        if j0 < hi:
            direct += float(d.mass_between(float(j0), float(hi)))
    assert level_mass(dpt_hump, d, 1.0) == pytest.approx(direct, rel=1e-12)
    assert 0 <= truncation_gap(dpt_hump, d) < 1e-20


def test_scaled():
    g = build_gliding_hump(DiscretePowerTail(3.0), 2.0, 5)
    h = g.scaled(2.0)
    assert eval_hump(h, 7.5) == pytest.approx(2 * eval_hump(g, 7.5))
    assert hump_q_moment(h).value == pytest.approx(4 * hump_q_moment(g).value)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(1.05, 2.0), frac=st.floats(0.0, 1.0))
def test_block_identity_property(a, frac):
    p = a + frac * (2.0 - a)  # p in [a, 2], so E X^p is infinite
    d = Pareto(a, 1.0)
    g = build_gliding_hump(d, p, 8)
    np.testing.assert_allclose(block_cross_moments(g, d) * np.arange(1, 9), 1.0, rtol=1e-9)
    assert all(S >= 1.0 for S in g.block_sums)
    assert g.q == pytest.approx(g.p / (g.p - 1), rel=1e-12)
