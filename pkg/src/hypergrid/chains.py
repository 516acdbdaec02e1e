"""Regular chain covers induced by an SNMF.

A flow assigns each maximal chain the product of its edge weights; the
resulting law has uniform per-level marginals 1/N(i). Interval masses are
computed by forward accumulation over the order interval [x, y], which is
itself a box of the grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .flows import AveragedFlow, Flow, StructuredFlow, flow_table
from .grid import GridShape, GuardError, Point, good_levels, leq


def _default_flow(shape: GridShape, flow: Flow | None) -> Flow:
    return flow if flow is not None else StructuredFlow(shape)


def _step_coord(x: Sequence[int], y: Sequence[int]) -> int | None:
    """1-based coordinate c with y = x + e_c, else None."""
    diff = [b - a for a, b in zip(x, y)]
    if sorted(diff) != [0] * (len(diff) - 1) + [1]:
        return None
    return diff.index(1) + 1


def chain_mass(shape: GridShape, chain: Sequence[Sequence[int]], flow: Flow | None = None) -> Fraction:
    """phi(C): product of flow weights along a skipless chain."""
    flow = _default_flow(shape, flow)
    pts = [tuple(p) for p in chain]
    if not pts:
        raise ValueError("empty chain")
    mass = Fraction(1)
    for a, b in zip(pts, pts[1:]):
        c = _step_coord(a, b)
        if c is None:
            raise ValueError(f"{a} -> {b} is not a cover relation")
        mass *= flow(a, c)
    return mass


def _box(x: Point, y: Point) -> list[Point]:
    pts = itertools.product(*(range(a, b + 1) for a, b in zip(x, y)))
    return sorted(pts, key=sum)


def interval_mass(shape: GridShape, x: Sequence[int], y: Sequence[int],
                  flow: Flow | None = None) -> Fraction:
    """phi([x, y]): total mass of skipless chains from x to y."""
    x, y = tuple(x), tuple(y)
    if not leq(x, y):
        raise ValueError(f"{x} and {y} are not ordered x <= y")
    flow = _default_flow(shape, flow)
    mass: dict[Point, Fraction] = {x: Fraction(1)}
    for z in _box(x, y):
        mz = mass.get(z)
        if not mz:
            continue
        for c in range(shape.n):
            if z[c] < y[c]:
                w = z[:c] + (z[c] + 1,) + z[c + 1:]
                mass[w] = mass.get(w, 0) + mz * flow(z, c + 1)
    return mass.get(y, Fraction(0))


def masses_from_bottom(shape: GridShape, flow: Flow | None = None,
                       max_points: int = 10 ** 5) -> dict[Point, Fraction]:
    """phi([0, x]) for every x in one forward pass over the whole grid."""
    if shape.size > max_points:
        raise GuardError(f"{shape.size} points exceeds guard {max_points}")
    if flow is None:
        table = flow_table(shape)
        weight = lambda z, c: table[(z, c)]  # noqa: E731
    else:
        weight = flow
    mass: dict[Point, Fraction] = {shape.bottom(): Fraction(1)}
    for z in sorted(shape.points(), key=sum):
        mz = mass.get(z, Fraction(0))
        for c in range(shape.n):
            if z[c] < shape.t - 1:
                w = z[:c] + (z[c] + 1,) + z[c + 1:]
                mass[w] = mass.get(w, 0) + mz * weight(z, c + 1)
    return mass


def masses_to_top(shape: GridShape, flow: Flow | None = None,
                  max_points: int = 10 ** 5) -> dict[Point, Fraction]:
    """phi([x, 1]) for every x, accumulated backwards from the top."""
    if shape.size > max_points:
        raise GuardError(f"{shape.size} points exceeds guard {max_points}")
    flow = _default_flow(shape, flow)
    mass: dict[Point, Fraction] = {}
    for z in sorted(shape.points(), key=sum, reverse=True):
        if z == shape.top():
            mass[z] = Fraction(1)
            continue
        mass[z] = sum((flow(z, c + 1) * mass[z[:c] + (z[c] + 1,) + z[c + 1:]]
                       for c in range(shape.n) if z[c] < shape.t - 1), Fraction(0))
    return mass


def sample_chain(shape: GridShape, seed=0, flow: Flow | None = None) -> list[Point]:
    """Draw one maximal chain from the law phi.

    Walks up from the bottom, taking each up-cover with probability equal to
    its weight. Deterministic given ``seed``.
    """
    return ChainSampler(shape, flow, seed).sample()


class ChainSampler:
    """Repeated chain sampling with per-point cumulative weights cached.

    Draws are compared in floating point first; only draws within 1e-12 of
    a cumulative weight fall back to the exact rational comparison.
    """

    def __init__(self, shape: GridShape, flow: Flow | None = None, seed=0):
        self.shape = shape
        self.flow = _default_flow(shape, flow)
        self.rng = np.random.Generator(np.random.Philox(seed))
        self._cum: dict[Point, tuple] = {}

    def _cumulative(self, x: Point):
        got = self._cum.get(x)
        if got is None:
            opts, cums, acc = [], [], Fraction(0)
            for c in range(self.shape.n):
                if x[c] < self.shape.t - 1:
                    acc += self.flow(x, c + 1)
                    opts.append(c)
                    cums.append(acc)
            got = self._cum[x] = (opts, cums, [float(a) for a in cums])
        return got

    def sample(self) -> list[Point]:
        x = self.shape.bottom()
        top = self.shape.top()
        chain = [x]
        while x != top:
            opts, cums, fcums = self._cumulative(x)
            u = self.rng.random()
            chosen = opts[-1]
            for c, acc, facc in zip(opts, cums, fcums):
                if (u < facc - 1e-12) or (abs(u - facc) <= 1e-12 and Fraction(u) < acc):
                    chosen = c
                    break
            x = x[:chosen] + (x[chosen] + 1,) + x[chosen + 1:]
            chain.append(x)
        return chain


@dataclass
class MarginalReport:
    shape: GridShape
    samples: int
    max_abs_z: float
    worst_point: Point
    counts: dict

    @property
    def ok(self) -> bool:
        return self.max_abs_z <= 3

    def to_dict(self) -> dict:
        return {"t": self.shape.t, "n": self.shape.n, "samples": self.samples,
                "max_abs_z": self.max_abs_z, "worst_point": list(self.worst_point),
                "ok": self.ok}


def sampler_marginals(shape: GridShape, samples: int, seed=0,
                      flow: Flow | None = None) -> MarginalReport:
    """Empirical P(x in C) against 1/N(|x|) in standard-error units."""
    sampler = ChainSampler(shape, flow, seed)
    counts: dict[Point, int] = {}
    for _ in range(samples):
        for x in sampler.sample():
            counts[x] = counts.get(x, 0) + 1
    worst, worst_pt = 0.0, shape.bottom()
    for x in shape.points():
        p = 1 / shape.N(sum(x))
        if p == 1:
            continue
        se = math.sqrt(p * (1 - p) / samples)
        z = abs(counts.get(x, 0) / samples - p) / se
        if z > worst:
            worst, worst_pt = z, x
    return MarginalReport(shape, samples, worst, worst_pt, counts)


def all_maximal_chains(shape: GridShape, max_chains: int = 10 ** 5) -> list[list[Point]]:
    """Every maximal chain, as lists of points (small shapes only)."""
    total = math.factorial(shape.top_rank)
    for _ in range(shape.n):
        total //= math.factorial(shape.t - 1)
    if total > max_chains:
        raise GuardError(f"{total} maximal chains exceeds guard {max_chains}")
    out = []

    def walk(path):
        x = path[-1]
        if x == shape.top():
            out.append(list(path))
            return
        for c in range(shape.n):
            if x[c] < shape.t - 1:
                path.append(x[:c] + (x[c] + 1,) + x[c + 1:])
                walk(path)
                path.pop()

    walk([shape.bottom()])
    return out


def pair_probability(shape: GridShape, x: Sequence[int], y: Sequence[int],
                     flow: Flow | None = None) -> Fraction:
    """P(x, y in C) = phi([x, y]) / N(|x|)."""
    return interval_mass(shape, x, y, flow) / shape.N(sum(x))


def expected_intersection(shape: GridShape, A, flow: Flow | None = None) -> Fraction:
    """E|C cap A| computed from exact per-point marginals."""
    up = masses_from_bottom(shape, flow)
    down = masses_to_top(shape, flow)
    return sum((up[tuple(x)] * down[tuple(x)] for x in A), Fraction(0))


@dataclass
class PairBoundReport:
    shape: GridShape
    k: int
    W: Fraction
    pairs_checked: int = 0
    max_ratio: Fraction = Fraction(0)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "t": self.shape.t, "n": self.shape.n, "k": self.k, "W": str(self.W),
            "pairs_checked": self.pairs_checked,
            "max_ratio": str(self.max_ratio),
            "ok": self.ok,
            "violations": [[list(x), list(y), str(p), str(b)] for x, y, p, b in self.violations],
        }


def pair_bound_check(shape: GridShape, k: int, W: Fraction | None = None,
                     flow: Flow | None = None, max_points: int = 2000) -> PairBoundReport:
    """Check P(x, y in C) <= k! W^k / N(|x|) for every qualifying pair.

    Qualifying: x <= y, both on good levels, |y| - |x| >= k. The chain law
    comes from the averaged flow f* unless ``flow`` is given, and W defaults
    to the exact maximum of f* over good edges.
    """
    from .flows import max_good_weight

    if k < 1:
        raise ValueError("k must be a positive integer")
    if shape.size > max_points:
        raise GuardError(f"{shape.size} points exceeds guard {max_points}")
    if flow is None:
        flow = AveragedFlow(shape)
    if W is None:
        W = max_good_weight(shape).value
    levels = good_levels(shape)
    pts = [x for x in shape.points() if sum(x) in levels]
    rep = PairBoundReport(shape, k, W)
    factor = math.factorial(k) * W ** k
    for x in pts:
        # one forward pass from x gives phi([x, y]) for every y above it
        mass: dict[Point, Fraction] = {x: Fraction(1)}
        for z in _box(x, shape.top()):
            mz = mass.get(z)
            if not mz:
                continue
            for c in range(shape.n):
                if z[c] < shape.t - 1:
                    w = z[:c] + (z[c] + 1,) + z[c + 1:]
                    mass[w] = mass.get(w, 0) + mz * flow(z, c + 1)
        nx = shape.N(sum(x))
        bound = factor / nx
        for y, m in mass.items():
            if sum(y) - sum(x) < k or sum(y) not in levels:
                continue
            p = m / nx
            rep.pairs_checked += 1
            rep.max_ratio = max(rep.max_ratio, p / bound)
            if p > bound:
                rep.violations.append((x, y, p, bound))
    return rep
