from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from spanforest import gibbs
from spanforest.combinatorics import BouquetConfig, count_binary_shapes, count_bouquets, enumerate_bouquets, set_partitions
from spanforest.limit_laws import I
from spanforest.wilson import rng_stream


@pytest.mark.parametrize("m,w", [(1, Fraction(1)), (2, Fraction(1, 2)), (3, Fraction(3, 4)), (4, Fraction(15, 8))])
def test_block_weights(m, w):
    assert gibbs.block_weight(m) == w


def test_V_examples():
    assert gibbs.V(1, 1, 0.3) == 1.0
    assert gibbs.V(2, 1, 1.0) == pytest.approx(2 * I(2, 1, 1.0))
    assert gibbs.V(2, 1, 1.0) == pytest.approx(0.6886, abs=1e-4)


@given(st.integers(1, 12), st.data(), st.floats(0.05, 20.0))
def test_V_gibbs_recursion(l, data, c):
    r = data.draw(st.integers(1, l))
    rhs = (l - r / 2) * gibbs.V(l + 1, r, c) + gibbs.V(l + 1, r + 1, c)
    assert gibbs.V(l, r, c) == pytest.approx(rhs, rel=1e-10)


def test_eppf_examples():
    assert gibbs.eppf([1], 0.7) == 1.0
    assert gibbs.eppf([2], 1.0) == pytest.approx(I(2, 1, 1.0), rel=1e-14)
    assert gibbs.eppf([1, 1], 1.0) == pytest.approx(I(2, 2, 1.0), rel=1e-14)
    assert gibbs.eppf([2], 1.0) + gibbs.eppf([1, 1], 1.0) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        gibbs.eppf([], 1.0)


@pytest.mark.parametrize("c", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("l", [1, 2, 3, 4, 6])
def test_eppf_sums_to_one(l, c):
    total = math.fsum(gibbs.partition_law(l, c).values())
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("l", range(1, 7))
def test_eppf_is_bouquet_mass_times_shape_count(l):
    c = 1.7
    for blocks, p in gibbs.partition_law(l, c).items():
        shapes = math.prod(count_binary_shapes(len(b)) for b in blocks)
        assert p == pytest.approx(I(l, len(blocks), c) * shapes, rel=1e-12)


def test_new_block_examples():
    assert gibbs.new_block_probability(1, 1, 1.0) == pytest.approx(I(2, 2, 1.0), rel=1e-14)
    for l in (1, 2, 3):
        for r in range(1, l + 1):
            assert gibbs.new_block_probability(l, r, 0.01) < 0.05
            assert gibbs.new_block_probability(l, r, 100.0) > 0.95


@st.composite
def states(draw):
    c = draw(st.floats(0.05, 30.0))
    sizes = draw(st.lists(st.integers(1, 4), min_size=1, max_size=5).filter(lambda s: sum(s) <= 10))
    shapes, nxt = [], 1
    for n in sizes:
        t = nxt
        for x in range(nxt + 1, nxt + n):
            t = (x, t) if draw(st.booleans()) else (t, x)
        shapes.append(t)
        nxt += n
    return gibbs.GibbsState(c, shapes)


@given(states())
def test_insertion_probabilities_sum_to_one(state):
    probs = gibbs.insertion_probabilities(state)
    assert len(probs) == state.r + 1
    assert all(p >= 0 for p in probs)
    assert abs(math.fsum(probs) - 1) <= 1e-12


def test_empty_state():
    assert gibbs.insertion_probabilities(gibbs.GibbsState(1.0)) == [1.0]


def test_single_label_sampler():
    blocks, shapes = gibbs.sequential_sample(1, 0.4, rng_stream(0, 0))
    assert blocks == ((1,),) and len(shapes) == 1


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("l", range(1, 6))
def test_exact_sequential_law(l, c):
    law = gibbs.exact_sequential_law(l, c)
    assert math.fsum(law.values()) == pytest.approx(1.0, abs=1e-12)
    for r in range(1, l + 1):
        for cfg in enumerate_bouquets(range(1, l + 1), r):
            assert abs(law[str(cfg)] - I(l, r, c)) <= 1e-10
    assert len(law) == sum(count_bouquets(l, r) for r in range(1, l + 1))


def test_sampler_frequencies():
    l, c, n = 3, 1.0, 10**5
    counts = Counter()
    for i in range(n):
        blocks, shapes = gibbs.sequential_sample(l, c, rng_stream(42, i))
        counts[str(BouquetConfig(shapes))] += 1
    for r in range(1, l + 1):
        p = I(l, r, c)
        sd = math.sqrt(p * (1 - p) / n)
        for cfg in enumerate_bouquets(range(1, l + 1), r):
            assert abs(counts[str(cfg)] / n - p) <= 4 * sd


@pytest.mark.parametrize("l,r,beta,expected", [(1, 1, 0.0, 1.0), (1, 1, 2.0, 1.0), (2, 2, 0.0, 0.5), (2, 1, 0.0, 0.5)])
def test_mixture_examples(l, r, beta, expected):
    closed, integrated = gibbs.pd_mixture_check(l, r, beta)
    assert closed == pytest.approx(expected, rel=1e-14)
    assert integrated == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("beta", [0.0, 1.0, 2.0, 3.5])
def test_mixture_identity(beta):
    for l in range(1, 6):
        for r in range(1, l + 1):
            a, b = gibbs.pd_mixture_check(l, r, beta)
            assert abs(a - b) <= 1e-6


@pytest.mark.parametrize("beta", [0.0, 1.0, 2.0])
def test_mixed_eppf_is_poisson_dirichlet(beta):
    # mixing over c gives the (1/2, beta/2) two-parameter EPPF, which sums to 1
    for l in range(1, 6):
        total = 0.0
        for blocks in set_partitions(range(1, l + 1)):
            sizes = [len(b) for b in blocks]
            m = gibbs.mixed_eppf(sizes, beta)
            assert m == pytest.approx(gibbs.pitman_yor_eppf(sizes, 0.5, beta / 2), rel=1e-12)
            total += m
        assert total == pytest.approx(1.0, abs=1e-12)


def test_mixture_domain():
    with pytest.raises(ValueError):
        gibbs.mixture_closed_form(2, 1, -1.0)
    with pytest.raises(ValueError):
        gibbs.mixture_closed_form(2, 3, 0.0)
