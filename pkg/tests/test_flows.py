import itertools
from fractions import Fraction

import pytest

from hypergrid import flows
from hypergrid.grid import GridShape, GuardError, level_sizes


def test_collapsed_flow_examples():
    g = flows.collapsed_flow([1, 1, 1, 1], 1, 4)
    assert g.diag[:2] == (Fraction(2, 3), Fraction(1, 3))
    assert g.off[:2] == (Fraction(1, 3), Fraction(2, 3))
    g = flows.collapsed_flow([1, 1], 0, 2)
    assert g.diag[0] == Fraction(1, 2) and g.off[0] == Fraction(1, 2)
    g = flows.collapsed_flow([1, 1, 1, 1], 2, 4)
    assert g.diag[0] == Fraction(3, 4) and g.off[0] == Fraction(1, 4)


@pytest.mark.parametrize("t,d", [(2, 1), (3, 2), (4, 1), (4, 3), (5, 2), (6, 2)])
def test_collapsed_flow_conserves(t, d):
    prof = level_sizes(t, d)
    for k in range((t - 1) * (d + 1)):
        g = flows.collapsed_flow(prof, k, t)
        assert g.conservation_errors() == []
        assert g.is_nonnegative()


def test_edge_weight_examples():
    s = GridShape(4, 2)
    assert flows.edge_weight(s, (0, 0), 1) == Fraction(1, 2)
    assert flows.edge_weight(s, (1, 0), 2) == Fraction(1, 3)
    s = GridShape(2, 3)
    assert [flows.edge_weight(s, (0, 0, 0), c) for c in (1, 2, 3)] == [Fraction(1, 3)] * 3
    with pytest.raises(ValueError):
        flows.edge_weight(GridShape(3, 2), (2, 0), 1)
    with pytest.raises(ValueError):
        flows.edge_weight(GridShape(3, 2), (0, 0), 3)


def test_edge_weight_agrees_with_table():
    s = GridShape(3, 4)
    table = flows.flow_table(s)
    for (x, c), w in table.items():
        assert flows.edge_weight(s, x, c) == w
        assert isinstance(w, Fraction)


@pytest.mark.parametrize("t,n", [(4, 2), (2, 5), (5, 3), (3, 4), (2, 1), (7, 1)])
def test_verify_conservation(t, n):
    rep = flows.verify_conservation(GridShape(t, n))
    assert rep.ok
    assert rep.edges == GridShape(t, n).num_edges
    assert all(up == 0 and down == 0 for _, up, down in rep.level_residuals)


def test_verify_conservation_reports_violations():
    s = GridShape(3, 2)
    rep = flows.verify_conservation(s, lambda x, c: Fraction(1, 2))
    assert not rep.ok
    assert ((0, 2), "out", Fraction(-1, 2)) in rep.violations
    with pytest.raises(GuardError):
        flows.verify_conservation(GridShape(10, 6), max_edges=1000)


def test_averaged_flow_examples():
    assert flows.averaged_edge_weight(GridShape(5, 1), (2,), 1) == 1
    assert flows.averaged_edge_weight(GridShape(2, 2), (0, 0), 1) == Fraction(1, 2)


@pytest.mark.parametrize("t,n", [(2, 3), (3, 3), (2, 4), (2, 5)])
def test_averaged_flow_is_snmf(t, n):
    s = GridShape(t, n)
    assert flows.verify_conservation(s, flows.AveragedFlow(s)).ok


def test_averaged_flow_permutation_invariant():
    s = GridShape(3, 3)
    f = flows.AveragedFlow(s)
    for x in s.points():
        for c in range(1, 4):
            if x[c - 1] == 2:
                continue
            for perm in itertools.permutations(range(3)):
                px = tuple(x[p] for p in perm)
                assert f(px, perm.index(c - 1) + 1) == f(x, c)


def test_averaged_flow_monte_carlo_within_three_sigma():
    s = GridShape(3, 6)
    x, c = (0, 1, 2, 1, 0, 1), 2
    exact = flows.averaged_edge_weight(s, x, c)
    est = flows.averaged_edge_weight(s, x, c, mode="monte_carlo", samples=10 ** 5, seed=1)
    assert abs(est.mean - float(exact)) <= 3 * est.stderr + 1e-15
    again = flows.averaged_edge_weight(s, x, c, mode="monte_carlo", samples=10 ** 5, seed=1)
    assert again == est


def test_max_good_weight():
    # every desk-scale grid has good points with a single up-cover, forcing W = 1
    assert flows.max_good_weight(GridShape(2, 2)).value == 1
    w = flows.max_good_weight(GridShape(2, 4))
    assert w.value == 1 and w.mode == "exact"
    mc = flows.max_good_weight(GridShape(3, 7), mode="monte_carlo", samples=200, seed=3)
    assert mc.upper >= mc.value.mean


def test_lambda_window_hand_case():
    lam, nmin, _ = flows.lambda_window((1, 4, 6, 4, 1), 1, 3)
    assert (lam, nmin) == (20, 4)


@pytest.mark.parametrize("t,n", [(3, 5), (2, 6), (4, 4)])
def test_normal_edges_and_right_bound(t, n):
    rep = flows.normal_edge_weight_check(GridShape(t, n))
    assert rep.normal_edges > 0
    assert rep.right_bound_violations == []
    assert rep.max_scaled > 0


@pytest.mark.parametrize("t,n", [(3, 3), (4, 3), (2, 5)])
def test_left_edges_dominated_by_projection(t, n):
    # f_{m+1} on a left edge never exceeds f_m on the projected edge
    for m in range(1, n):
        sub = flows.flow_table(GridShape(t, m))
        for (x, c), w in flows.flow_table(GridShape(t, m + 1)).items():
            if c <= m:
                assert w <= sub[(x[:m], c)]
