import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypergrid import flows, grid, saturation
from hypergrid.grid import GridShape

from . import oracles


def test_max_degree_examples():
    s = GridShape(3, 3)
    assert saturation.comp_max_degree(s, s.level(3)) == 0
    chain = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (2, 1, 0), (2, 2, 1)]
    assert saturation.comp_max_degree(s, chain) == len(chain) - 1
    s = GridShape(2, 4)
    assert saturation.comp_max_degree(s, s.level(2) + s.level(3)) == 3
    assert saturation.comp_max_degree(s, s.level(1) + s.level(2)) == 3


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)),
                unique=True, max_size=20))
@settings(max_examples=200, deadline=None)
def test_degree_zero_iff_antichain(A):
    s = GridShape(4, 3)
    deg = saturation.comp_max_degree(s, A)
    assert deg == oracles.comparability_degree(A)
    assert (deg == 0) == saturation.is_antichain(A)


def test_full_grid_degree():
    # the bottom element is below every other point
    for t in (4, 8):
        s = GridShape(t, 2)
        assert saturation.comp_max_degree(s, list(s.points())) == t * t - 1


@pytest.mark.parametrize("t,n", [(2, 3), (3, 2), (4, 1), (3, 3), (2, 5), (4, 3), (3, 4)])
def test_uniform_chain_partition(t, n):
    s = GridShape(t, n)
    part = saturation.uniform_chain_partition(s)
    assert part.is_partition() and part.chains_valid()
    assert len(part.chains) == grid.width(s)
    assert part.meets_bound


def test_chain_partition_examples():
    part = saturation.uniform_chain_partition(GridShape(5, 1))
    assert part.lengths == [5]
    part = saturation.uniform_chain_partition(GridShape(2, 3))
    assert len(part.chains) == 3 and min(part.lengths) >= 1
    part = saturation.uniform_chain_partition(GridShape(3, 2))
    assert len(part.chains) == 3 and min(part.lengths) >= 1
    assert part.min_length_bound == Fraction(1)


@pytest.mark.parametrize("t,n", [(2, 2), (3, 4), (2, 6), (3, 5), (2, 7)])
def test_rectangle_partition(t, n):
    s = GridShape(t, n)
    rp = saturation.rectangle_partition(s)
    assert rp.verify() == []
    assert sum(a * b for a, b in rp.side_lengths) == s.size
    assert all(a >= 1 and b >= 1 for a, b in rp.side_lengths)


def test_rectangle_partition_trivial_case():
    rp = saturation.rectangle_partition(GridShape(2, 2))
    assert rp.n1 == 1 and rp.count == 1 and rp.side_lengths == [(2, 2)]


@pytest.mark.parametrize("a", range(1, 7))
@pytest.mark.parametrize("b", range(1, 7))
def test_rectangle_antichain_count_matches_enumeration(a, b):
    pts = [(i, j) for i in range(a) for j in range(b)]
    count = 0

    def grow(start, cur):
        nonlocal count
        count += 1
        for k in range(start, len(pts)):
            p = pts[k]
            if all(not oracles.leq(p, q) and not oracles.leq(q, p) for q in cur):
                cur.append(p)
                grow(k + 1, cur)
                cur.pop()

    if a * b <= 25:
        grow(0, [])
        assert saturation.rectangle_antichain_count(a, b) == count
    assert saturation.rectangle_antichain_count(a, b) == math.comb(a + b, a)


def test_rectangle_antichain_examples():
    assert saturation.rectangle_antichain_count(2, 2) == 6
    assert saturation.rectangle_antichain_count(3, 5) == 56


def test_rectangle_saturation_direct_branch():
    for t in (4, 8):
        A = [(a, b) for a in range(t) for b in range(t)]
        res = saturation.check_rectangle_saturation(t, A)
        assert res.branch == "direct"
        assert res.delta == t * t - 1
        assert res.ok


def test_rectangle_saturation_pigeonhole_branch():
    rng = np.random.Generator(np.random.Philox(3))
    t = 20
    pts = [(a, b) for a in range(t) for b in range(t)]
    for _ in range(50):
        idx = rng.choice(len(pts), size=int(rng.integers(16 * t, t * t + 1)), replace=False)
        res = saturation.check_rectangle_saturation(t, [pts[i] for i in idx])
        assert res.branch == "pigeonhole"
        assert res.ok and 2 * res.delta >= res.k ** 2


def test_strong_saturation_examples():
    s = GridShape(2, 4)
    W = flows.max_good_weight(s).value
    A = s.level(2) + s.level(1)
    w = grid.lym_weight(s, A)
    assert saturation.check_strong_saturation(s, A, 1, w - 1, W).ok
    s = GridShape(3, 3)
    A = s.level(3) + s.level(4)
    w = grid.lym_weight(s, A)
    assert saturation.check_strong_saturation(s, A, 1, w - 1, 1).ok


def test_strong_saturation_preconditions():
    s = GridShape(2, 4)
    with pytest.raises(ValueError):
        saturation.check_strong_saturation(s, s.level(2), 1, Fraction(1, 2), 1)


@pytest.mark.parametrize("t,n", [(2, 4), (3, 3), (2, 3), (4, 2)])
def test_strong_saturation_random(t, n):
    s = GridShape(t, n)
    W = flows.max_good_weight(s).value
    rng = np.random.Generator(np.random.Philox(8))
    for _ in range(500):
        A, w = saturation.random_heavy_subset(s, rng)
        k = int(rng.integers(1, math.ceil(w)))
        r = saturation.check_strong_saturation(s, A, k, w - k, W)
        assert r.ok, r.to_dict()


def test_weak_saturation_examples():
    s = GridShape(3, 3)
    alpha = grid.width(s)
    A = s.level(3) + [(0, 0, 0)]
    assert saturation.check_weak_saturation(s, A).delta >= 1
    s5 = GridShape(2, 5)
    res = saturation.check_weak_saturation(s5, s5.level(1) + s5.level(2) + s5.level(3))
    assert res.delta > 0 and res.ratio > 0
    rng = np.random.Generator(np.random.Philox(4))
    pts = list(s.points())
    for _ in range(200):
        idx = rng.choice(len(pts), size=2 * alpha, replace=False)
        assert saturation.check_weak_saturation(s, [pts[i] for i in idx]).delta >= 1
