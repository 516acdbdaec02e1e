import math

import pytest

from hypergrid import counting, grid
from hypergrid.grid import GridShape, GuardError

from . import oracles


def test_exact_examples():
    assert counting.count_antichains_exact(GridShape(7, 1)) == 8
    assert counting.count_antichains_exact(GridShape(2, 3)) == 20
    assert counting.count_antichains_exact(GridShape(2, 4)) == 168
    assert counting.count_antichains_exact(GridShape(3, 3)) == 980


@pytest.mark.parametrize("t,n", [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3), (4, 3), (5, 2), (8, 2)])
def test_engines_agree(t, n):
    s = GridShape(t, n)
    values = {counting.count_antichains_exact(s, e) for e in ("downset", "transfer", "closed")}
    assert len(values) == 1


@pytest.mark.parametrize("t,n", [(2, 2), (2, 3), (3, 2), (2, 4), (3, 3)])
def test_against_enumeration(t, n):
    assert counting.count_antichains_exact(GridShape(t, n)) == len(oracles.antichains_enum(t, n))


def test_guards():
    with pytest.raises(GuardError):
        counting.count_antichains_exact(GridShape(4, 4), "downset")
    with pytest.raises(GuardError):
        counting.count_transfer(GridShape(2, 4))
    with pytest.raises(ValueError):
        counting.closed_form(GridShape(2, 4))


def test_upto_examples():
    s = GridShape(2, 3)
    assert counting.count_antichains_upto(s, 0) == 1
    assert counting.count_antichains_upto(s, 1) == s.size + 1
    assert counting.count_antichains_upto(s, 2) == 18


@pytest.mark.parametrize("t,n", [(2, 4), (3, 3), (4, 2)])
def test_upto_monotone_and_saturates(t, n):
    s = GridShape(t, n)
    alpha = grid.width(s)
    vals = [counting.count_antichains_upto(s, k) for k in range(alpha + 1)]
    assert vals == sorted(vals)
    assert vals[-1] == counting.count_antichains_exact(s)
    by_size = [0] * (alpha + 1)
    for a in oracles.antichains_enum(t, n):
        by_size[len(a)] += 1
    assert list(counting.antichain_size_profile(s)) == by_size


def test_construction_small_shapes_vacuous():
    for t, n in [(2, 4), (3, 3), (5, 6), (4, 5)]:
        c = counting.lower_bound_construction(GridShape(t, n))
        assert c.k == 0 and c.vacuous and c.value is None


def test_construction_value():
    s = GridShape(5, 12)
    c = counting.lower_bound_construction(s)
    up, mid = s.N(s.m + 1), s.N(s.m)
    assert c.k == up // 4 ** 12 and c.k > 0
    assert c.value == math.comb(up, c.k) * 2 ** (mid - c.k * 12)
    assert counting.construction_spot_check(GridShape(3, 4), 3, samples=50)


def test_trivial_lower_bound():
    for t, n in [(2, 2), (2, 5), (3, 3), (6, 3), (10, 2), (3, 4), (2, 6)]:
        s = GridShape(t, n)
        assert counting.log2_int(counting.exact_count_if_feasible(s)) >= grid.width(s)


def test_bound_report():
    row = counting.bound_report(GridShape(3, 3))
    assert row.count == 980 and row.ramsey_n3 == 981
    assert row.alpha == 7
    assert row.ratio == pytest.approx(math.log2(980) / 7, rel=1e-14)
    assert row.csv_row()[3] == "980"
    assert counting.bound_report(GridShape(3, 6)).count is None


def test_small_antichain_sweep():
    rows = counting.small_antichain_bound_sweep(GridShape(2, 4), [1, 2])
    assert rows[0].constant is None and rows[0].count == 168
    assert rows[1].max_size == 3
    assert rows[1].count == counting.count_antichains_upto(GridShape(2, 4), 3)
    rows = counting.small_antichain_bound_sweep(GridShape(3, 3), [3])
    assert rows[0].max_size == 2 and rows[0].constant > 0
    # k beyond alpha/2 keeps only sizes <= 1
    rows = counting.small_antichain_bound_sweep(GridShape(3, 3), [5])
    assert rows[0].count == 27 + 1


def test_log2_int_precision():
    big = 3 ** 5000
    assert counting.log2_int(big) == pytest.approx(5000 * math.log2(3), rel=1e-14)


def test_three_four_count():
    # nested triples of downsets of [3]^3 give an independent count
    assert oracles.count_nested_downsets(3, 3) == 17792748
    assert counting.count_antichains_exact(GridShape(3, 4)) == 17792748


@pytest.mark.parametrize("t,n", [(2, 2), (2, 3), (3, 2), (4, 2)])
def test_nested_downset_oracle(t, n):
    assert counting.count_antichains_exact(GridShape(t, n + 1)) == oracles.count_nested_downsets(t, n)
