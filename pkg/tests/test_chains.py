from collections import Counter
from fractions import Fraction

import pytest
from scipy.stats import chisquare

from hypergrid import chains, flows, grid
from hypergrid.grid import GridShape

from . import oracles


def test_chain_mass_examples():
    assert chains.chain_mass(GridShape(3, 2), [(1, 1)]) == 1
    assert chains.chain_mass(GridShape(2, 2), [(0, 0), (1, 0), (1, 1)]) == Fraction(1, 2)
    assert chains.chain_mass(GridShape(4, 2), [(0, 0), (1, 0), (2, 0)]) == Fraction(1, 3)


@pytest.mark.parametrize("t,n", [(2, 2), (3, 2), (2, 3), (3, 3), (4, 2)])
def test_total_mass_is_one(t, n):
    s = GridShape(t, n)
    assert chains.interval_mass(s, s.bottom(), s.top()) == 1
    # against explicit enumeration of all maximal chains
    total = sum(chains.chain_mass(s, c) for c in oracles.maximal_chains(t, n))
    assert total == 1


@pytest.mark.parametrize("flow_kind", ["structured", "averaged"])
@pytest.mark.parametrize("t,n", [(3, 3), (2, 4), (4, 2)])
def test_marginal_regularity(t, n, flow_kind):
    s = GridShape(t, n)
    flow = flows.AveragedFlow(s) if flow_kind == "averaged" else None
    up = chains.masses_from_bottom(s, flow)
    down = chains.masses_to_top(s, flow)
    for x in s.points():
        assert up[x] * down[x] == Fraction(1, s.N(sum(x)))


def test_interval_mass_matches_chain_sum():
    s = GridShape(3, 2)
    x, y = (0, 0), (1, 1)
    by_hand = sum(chains.chain_mass(s, c) for c in [[x, (1, 0), y], [x, (0, 1), y]])
    assert chains.interval_mass(s, x, y) == by_hand
    assert chains.pair_probability(s, x, y) == by_hand
    with pytest.raises(ValueError):
        chains.interval_mass(s, (1, 0), (0, 1))


def test_pair_probability_examples():
    s = GridShape(2, 2)
    assert chains.pair_probability(s, s.bottom(), s.top()) == 1
    assert chains.pair_probability(s, (0, 0), (1, 0)) == Fraction(1, 2)


def test_sample_chain_basics():
    s = GridShape(5, 1)
    assert chains.sample_chain(s, 3) == [(i,) for i in range(5)]
    s = GridShape(3, 3)
    c = chains.sample_chain(s, 42)
    assert len(c) == s.top_rank + 1
    assert all(grid.rank(b) == grid.rank(a) + 1 and grid.leq(a, b) for a, b in zip(c, c[1:]))
    assert chains.sample_chain(s, 42) == c


@pytest.mark.parametrize("t", [2, 3])
def test_sampler_law_chi_square(t):
    s = GridShape(t, 2)
    all_chains = oracles.maximal_chains(t, 2)
    probs = [float(chains.chain_mass(s, c)) for c in all_chains]
    sampler = chains.ChainSampler(s, seed=2024 + t)
    draws = 20_000
    counts = Counter(tuple(sampler.sample()) for _ in range(draws))
    observed = [counts[tuple(c)] for c in all_chains]
    assert sum(observed) == draws
    expected = [p * draws for p in probs]
    assert chisquare(observed, expected).pvalue > 1e-3


def test_sampler_marginals():
    rep = chains.sampler_marginals(GridShape(2, 2), 10 ** 5, seed=1)
    assert rep.ok and rep.max_abs_z <= 3


def test_expected_intersection_is_lym_weight():
    s = GridShape(3, 3)
    A = [(0, 1, 2), (1, 1, 1), (2, 0, 0), (0, 0, 0)]
    assert chains.expected_intersection(s, A) == grid.lym_weight(s, A)
    # Monte Carlo cross-check of E|C n A|
    sampler = chains.ChainSampler(s, seed=5)
    draws = 20_000
    hits = sum(len(set(sampler.sample()) & set(A)) for _ in range(draws))
    assert abs(hits / draws - float(grid.lym_weight(s, A))) < 0.03


def test_pair_bound_check_examples():
    rep = chains.pair_bound_check(GridShape(2, 4), 1)
    assert rep.ok and rep.pairs_checked == 65
    assert chains.pair_bound_check(GridShape(3, 3), 2).ok


def test_cover_pair_probability_is_edge_weight():
    s = GridShape(2, 4)
    f = flows.AveragedFlow(s)
    x = (0, 1, 0, 1)
    y = (1, 1, 0, 1)
    assert chains.pair_probability(s, x, y, f) == f(x, 1) / s.N(2)
