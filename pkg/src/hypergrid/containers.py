"""Fingerprint and container construction for antichains in the good levels."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .grid import GridShape, GuardError, Point, good_levels, width
from .saturation import comparability_matrix, is_antichain

ORDERS: dict[str, Callable[[Point], tuple]] = {
    "lex": lambda x: x,
    "rank-lex": lambda x: (sum(x), x),
}


@dataclass(frozen=True)
class Step:
    index: int
    vertex: Point
    increment: bool
    remaining: int

    def to_dict(self) -> dict:
        return {"step": self.index, "vertex": list(self.vertex),
                "increment": self.increment, "remaining": self.remaining}


@dataclass
class ContainerResult:
    fingerprint: frozenset
    body: frozenset
    trace: list[Step]
    initial_size: int
    threshold: Fraction

    @property
    def increments(self) -> int:
        return sum(s.increment for s in self.trace)

    def to_dict(self) -> dict:
        return {"fingerprint": [list(x) for x in sorted(self.fingerprint)],
                "body": [list(x) for x in sorted(self.body)],
                "initial_size": self.initial_size,
                "threshold": str(self.threshold),
                "trace": [s.to_dict() for s in self.trace]}


class GoodGraph:
    """Comparability graph on the good levels, vertices in a fixed total order."""

    def __init__(self, shape: GridShape, order: str = "lex", max_points: int = 5000):
        if order not in ORDERS:
            raise ValueError(f"unknown order {order!r}; choose from {sorted(ORDERS)}")
        levels = good_levels(shape)
        pts = sorted((x for x in shape.points() if sum(x) in levels), key=ORDERS[order])
        if len(pts) > max_points:
            raise GuardError(f"{len(pts)} good points exceeds guard {max_points}")
        self.shape = shape
        self.order = order
        self.points: list[Point] = pts
        self.index = {x: i for i, x in enumerate(pts)}
        comp = comparability_matrix(pts)
        self.nbrs: list[np.ndarray] = [np.flatnonzero(row) for row in comp]


def run_container(shape: GridShape, I: Iterable[Sequence[int]], stop_factor=None,
                  order: str = "lex", graph: GoodGraph | None = None) -> ContainerResult:
    """Run the max-degree fingerprint algorithm on the independent set I.

    Each step takes the least (in ``order``) vertex of maximum degree in the
    current residual set. If it belongs to I it joins the fingerprint and its
    closed neighbourhood leaves the residual set; otherwise only the vertex
    leaves. The run stops once the residual size is at most
    ``stop_factor * alpha``; the default factor is 1 + 1/n.
    """
    graph = graph or GoodGraph(shape, order)
    if graph.shape != shape or graph.order != order:
        raise ValueError("graph built for a different shape or order")
    inp = {tuple(x) for x in I}
    missing = [x for x in inp if x not in graph.index]
    if missing:
        raise ValueError(f"input not within the good levels: {sorted(missing)[:3]}")
    if not is_antichain(inp):
        raise ValueError("input is not an antichain")
    factor = Fraction(1) + Fraction(1, shape.n) if stop_factor is None else Fraction(stop_factor)
    threshold = factor * width(shape)

    N = len(graph.points)
    alive = np.ones(N, dtype=bool)
    deg = np.array([len(nb) for nb in graph.nbrs], dtype=np.int64)
    in_I = np.zeros(N, dtype=bool)
    for x in inp:
        in_I[graph.index[x]] = True
    size = N
    S: list[Point] = []
    trace: list[Step] = []

    def remove(v: int):
        nonlocal size
        alive[v] = False
        size -= 1
        nb = graph.nbrs[v]
        deg[nb[alive[nb]]] -= 1

    step = 0
    while size > threshold:
        step += 1
        masked = np.where(alive, deg, -1)
        v = int(np.argmax(masked))  # first maximum = least in the order
        if in_I[v]:
            S.append(graph.points[v])
            for u in graph.nbrs[v]:
                if alive[u]:
                    remove(int(u))
            remove(v)
            trace.append(Step(step, graph.points[v], True, size))
        else:
            remove(v)
            trace.append(Step(step, graph.points[v], False, size))
    body = frozenset(graph.points[i] for i in np.flatnonzero(alive))
    return ContainerResult(frozenset(S), body, trace, N, threshold)


def random_antichain(graph: GoodGraph, rng: np.random.Generator) -> list[Point]:
    """Greedy antichain over a random vertex order with a random keep rate."""
    N = len(graph.points)
    keep = rng.random()
    blocked = np.zeros(N, dtype=bool)
    out = []
    for v in rng.permutation(N):
        if blocked[v] or rng.random() > keep:
            continue
        out.append(graph.points[v])
        blocked[v] = True
        blocked[graph.nbrs[v]] = True
    return sorted(out)


@dataclass
class ContainerReport:
    shape: GridShape
    samples: int
    containment_failures: int = 0
    size_failures: int = 0
    antichain_failures: int = 0
    collision_failures: int = 0
    distinct_fingerprints: int = 0
    collisions: int = 0
    max_fingerprint: int = 0
    max_body: int = 0
    threshold: Fraction = Fraction(0)
    scale: float = 0.0
    examples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.containment_failures or self.size_failures
                    or self.antichain_failures or self.collision_failures)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k not in ("shape", "examples")}
        d.update(t=self.shape.t, n=self.shape.n, threshold=str(self.threshold), ok=self.ok,
                 examples=self.examples)
        return d


def verify_container_properties(shape: GridShape, sample_count: int = 1000, seed: int = 0,
                                order: str = "lex", stop_factor=None,
                                extra_inputs: Sequence[Iterable[Point]] = ()) -> ContainerReport:
    """Run the algorithm on random antichains and check the container properties."""
    graph = GoodGraph(shape, order)
    rng = np.random.Generator(np.random.Philox(seed))
    inputs = [sorted(tuple(x) for x in I) for I in extra_inputs]
    inputs += [random_antichain(graph, rng) for _ in range(sample_count)]
    alpha = width(shape)
    rep = ContainerReport(shape, len(inputs))
    rep.scale = alpha * math.log(shape.n) ** 2 / shape.n
    bodies: dict[frozenset, frozenset] = {}
    seen = Counter()
    for I in inputs:
        res = run_container(shape, I, stop_factor, order, graph)
        rep.threshold = res.threshold
        Iset = frozenset(I)
        if not (res.fingerprint <= Iset <= res.fingerprint | res.body):
            rep.containment_failures += 1
            rep.examples.append({"kind": "containment", "input": [list(x) for x in I]})
        if len(res.body) > res.threshold:
            rep.size_failures += 1
        if not is_antichain(res.fingerprint):
            rep.antichain_failures += 1
        prev = bodies.setdefault(res.fingerprint, res.body)
        if prev != res.body:
            rep.collision_failures += 1
            rep.examples.append({"kind": "collision", "input": [list(x) for x in I]})
        seen[res.fingerprint] += 1
        rep.max_fingerprint = max(rep.max_fingerprint, len(res.fingerprint))
        rep.max_body = max(rep.max_body, len(res.body))
    rep.distinct_fingerprints = len(seen)
    rep.collisions = sum(c - 1 for c in seen.values())
    return rep


@dataclass
class PhaseStats:
    thresholds: dict[str, str]
    steps: dict[str, int]
    increments: dict[str, int]
    subphases: dict[str, int]

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def phase_of(size: int, alpha: int, n: int) -> tuple[str, int | None]:
    """Phase and subphase of a step whose residual set before it has ``size``."""
    r = Fraction(size, alpha)
    if r >= n:
        return "phase1", math.floor(math.log2(r)) if r >= 1 else None
    if r >= 3:
        return "phase2", None
    low = 1 + Fraction(1, n)
    if r >= low:
        return "phase3", math.floor(math.log2(n * (r - 1)))
    return "done", None


def phase_trace(result: ContainerResult, shape: GridShape) -> PhaseStats:
    """Count steps and increments per phase, classified by the residual size
    before each step, and increments per dyadic subphase."""
    alpha = width(shape)
    n = shape.n
    names = ("phase1", "phase2", "phase3", "done")
    steps = dict.fromkeys(names, 0)
    incs = dict.fromkeys(names, 0)
    sub: Counter = Counter()
    before = result.initial_size
    for s in result.trace:
        ph, ell = phase_of(before, alpha, n)
        steps[ph] += 1
        if s.increment:
            incs[ph] += 1
            if ell is not None:
                sub[f"{ph}:{ell}"] += 1
        before = s.remaining
    thresholds = {"phase1": n * alpha, "phase2": 3 * alpha,
                  "phase3": str((1 + Fraction(1, n)) * alpha)}
    return PhaseStats(thresholds, steps, incs, dict(sorted(sub.items())))
