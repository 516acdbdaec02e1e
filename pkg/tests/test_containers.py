from fractions import Fraction

import numpy as np
import pytest

from hypergrid import containers, grid
from hypergrid.grid import GridShape
from hypergrid.saturation import comparability_matrix, is_antichain


def test_empty_input():
    s = GridShape(2, 4)
    res = containers.run_container(s, [])
    assert res.fingerprint == frozenset()
    assert res.increments == 0
    assert len(res.body) <= res.threshold
    again = containers.run_container(s, [])
    assert again.body == res.body and again.trace == res.trace
    phases = containers.phase_trace(res, s)
    assert sum(phases.increments.values()) == 0


def test_max_antichain_input():
    s = GridShape(2, 4)
    I = s.level(2)
    res = containers.run_container(s, I)
    assert res.fingerprint <= frozenset(I) <= res.fingerprint | res.body
    phases = containers.phase_trace(res, s)
    assert sum(phases.increments.values()) == res.increments
    assert sum(phases.steps.values()) == len(res.trace)


@pytest.mark.parametrize("t,n,order", [(2, 4, "lex"), (3, 3, "lex"), (3, 3, "rank-lex"),
                                       (2, 5, "lex"), (3, 4, "rank-lex")])
def test_container_properties(t, n, order):
    rep = containers.verify_container_properties(GridShape(t, n), 300, seed=1, order=order)
    assert rep.ok, rep.to_dict()


def test_trace_invariants():
    s = GridShape(3, 3)
    graph = containers.GoodGraph(s)
    comp = comparability_matrix(graph.points)
    np.fill_diagonal(comp, False)
    rng = np.random.Generator(np.random.Philox(5))
    for _ in range(100):
        I = containers.random_antichain(graph, rng)
        res = containers.run_container(s, I, graph=graph)
        alive = set(graph.points)
        before = res.initial_size
        assert len(res.trace) <= len(graph.points)
        for st in res.trace:
            assert st.remaining < before
            if st.increment:
                v = graph.index[st.vertex]
                live_deg = sum(1 for u in np.flatnonzero(comp[v]) if graph.points[u] in alive)
                assert before - st.remaining == live_deg + 1
                alive -= {graph.points[u] for u in np.flatnonzero(comp[v])}
            alive.discard(st.vertex)
            before = st.remaining
        assert is_antichain(res.fingerprint)
        assert res.fingerprint <= frozenset(I)


def test_well_defined_across_equal_fingerprints():
    s = GridShape(2, 4)
    graph = containers.GoodGraph(s)
    rng = np.random.Generator(np.random.Philox(9))
    seen = {}
    collisions = 0
    for _ in range(500):
        res = containers.run_container(s, containers.random_antichain(graph, rng), graph=graph)
        if res.fingerprint in seen:
            collisions += 1
            assert seen[res.fingerprint] == res.body
        seen[res.fingerprint] = res.body
    assert collisions > 0


def test_stop_factor_above_good_set_returns_immediately():
    s = GridShape(2, 3)
    graph = containers.GoodGraph(s)
    res = containers.run_container(s, [], stop_factor=Fraction(100), graph=graph)
    assert res.trace == [] and len(res.body) == len(graph.points)


def test_input_validation():
    s = GridShape(3, 3)
    with pytest.raises(ValueError):
        containers.run_container(s, [(0, 0, 0), (1, 1, 1)])
    with pytest.raises(ValueError):
        containers.GoodGraph(s, order="random")


def test_phase_classification():
    alpha, n = 10, 4
    assert containers.phase_of(40, alpha, n)[0] == "phase1"
    assert containers.phase_of(35, alpha, n) == ("phase2", None)
    assert containers.phase_of(20, alpha, n)[0] == "phase3"
    assert containers.phase_of(12, alpha, n) == ("done", None)


def test_determinism_bit_for_bit():
    s = GridShape(3, 4)
    I = s.level(4)[:5]
    I = [x for x in I if x in set(grid.good_points(s))]
    a = containers.run_container(s, I, order="rank-lex")
    b = containers.run_container(s, I, order="rank-lex")
    assert a.to_dict() == b.to_dict()
