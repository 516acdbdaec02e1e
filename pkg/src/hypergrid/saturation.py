"""Comparability degrees, chain and rectangle partitions, supersaturation checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .grid import GridShape, GuardError, Point, good_levels, leq, lym_weight, width


def _array(A: Iterable[Sequence[int]]) -> np.ndarray:
    pts = [tuple(x) for x in A]
    if not pts:
        return np.zeros((0, 0), dtype=np.int64)
    return np.asarray(pts, dtype=np.int64)


def comparability_matrix(A: Iterable[Sequence[int]]) -> np.ndarray:
    """Boolean matrix M[i, j] = (a_i, a_j comparable and distinct)."""
    X = _array(A)
    if X.size == 0:
        return np.zeros((0, 0), dtype=bool)
    le = np.all(X[:, None, :] <= X[None, :, :], axis=2)
    comp = le | le.T
    np.fill_diagonal(comp, False)
    return comp


def degrees(A: Iterable[Sequence[int]]) -> np.ndarray:
    return comparability_matrix(A).sum(axis=1)


def comp_max_degree(shape: GridShape | None, A: Iterable[Sequence[int]]) -> int:
    """Delta(A): maximum degree of the comparability graph induced on A."""
    d = degrees(A)
    return int(d.max()) if d.size else 0


def is_antichain(A: Iterable[Sequence[int]]) -> bool:
    return comp_max_degree(None, A) == 0


# -- chain partitions -------------------------------------------------------

@dataclass
class ChainPartition:
    shape: GridShape
    chains: list[list[Point]]
    min_length_bound: Fraction
    moves: int = 0

    @property
    def lengths(self) -> list[int]:
        return [len(c) for c in self.chains]

    @property
    def meets_bound(self) -> bool:
        return min(self.lengths) >= self.min_length_bound

    def is_partition(self) -> bool:
        seen = [x for c in self.chains for x in c]
        return len(seen) == len(set(seen)) == self.shape.size

    def chains_valid(self) -> bool:
        return all(leq(a, b) and a != b for c in self.chains for a, b in zip(c, c[1:]))

    def to_dict(self) -> dict:
        return {"t": self.shape.t, "n": self.shape.n,
                "chains": [[list(x) for x in c] for c in self.chains],
                "min_length_bound": str(self.min_length_bound),
                "meets_bound": self.meets_bound, "moves": self.moves}


def minimum_chain_cover(shape: GridShape, max_points: int = 4096) -> list[list[Point]]:
    """Minimum chain partition from a maximum matching on the strict order.

    Each matched pair (x, y) with x < y links x to its successor y; the
    chains are the paths of the matching, and there are |P| - |matching| of
    them, which is the width by Dilworth.
    """
    if shape.size > max_points:
        raise GuardError(f"{shape.size} points exceeds guard {max_points}")
    pts = sorted(shape.points(), key=lambda x: (sum(x), x))
    G = nx.Graph()
    left = [("L", x) for x in pts]
    G.add_nodes_from(left)
    G.add_nodes_from(("R", y) for y in pts)
    for x in pts:
        for y in pts:
            if x != y and leq(x, y):
                G.add_edge(("L", x), ("R", y))
    matching = nx.bipartite.hopcroft_karp_matching(G, top_nodes=left)
    succ = {x: matching[("L", x)][1] for x in pts if ("L", x) in matching}
    has_pred = set(succ.values())
    chains = []
    for x in pts:
        if x in has_pred:
            continue
        chain = [x]
        while chain[-1] in succ:
            chain.append(succ[chain[-1]])
        chains.append(chain)
    return chains


def _insertable(chain: list[Point], x: Point) -> bool:
    return all(leq(x, y) or leq(y, x) for y in chain)


def _rebalance(chains: list[list[Point]], bound: Fraction, max_moves: int) -> int:
    """Move endpoints from long chains into short compatible chains."""
    moves = 0
    while moves < max_moves:
        order = sorted(range(len(chains)), key=lambda i: (len(chains[i]), chains[i]))
        if len(chains[order[0]]) >= bound:
            break
        moved = False
        for dst in order:
            if len(chains[dst]) >= bound:
                break
            for src in reversed(order):
                if len(chains[src]) < len(chains[dst]) + 2:
                    break
                for end in (0, -1):
                    x = chains[src][end]
                    if _insertable(chains[dst], x):
                        chains[src].pop(end)
                        chains[dst].append(x)
                        chains[dst].sort(key=lambda p: (sum(p), p))
                        moved = True
                        break
                if moved:
                    break
            if moved:
                break
        if not moved:
            break
        moves += 1
    return moves


def uniform_chain_partition(shape: GridShape, max_points: int = 4096,
                            max_moves: int = 10 ** 5) -> ChainPartition:
    """Partition into width(shape) chains, rebalanced toward equal lengths.

    The length bound |P|/(2 alpha) - 1/2 is checked afterwards and exposed
    as ``meets_bound``; it is not forced.
    """
    chains = minimum_chain_cover(shape, max_points)
    bound = Fraction(shape.size, 2 * width(shape)) - Fraction(1, 2)
    moves = _rebalance(chains, bound, max_moves)
    chains.sort(key=lambda c: c[0])
    return ChainPartition(shape, chains, bound, moves)


# -- rectangle partitions ---------------------------------------------------

@dataclass
class RectanglePartition:
    shape: GridShape
    n1: int
    rows: list[list[Point]]
    cols: list[list[Point]]

    @property
    def side_lengths(self) -> list[tuple[int, int]]:
        return [(len(a), len(b)) for a in self.rows for b in self.cols]

    @property
    def count(self) -> int:
        return len(self.rows) * len(self.cols)

    @property
    def u(self) -> int:
        return 3 * max(max(map(len, self.rows)), max(map(len, self.cols)))

    def rectangles(self) -> Iterable[list[list[Point]]]:
        """Each rectangle as a matrix of points indexed by (row pos, col pos)."""
        for a in self.rows:
            for b in self.cols:
                yield [[x + y for y in b] for x in a]

    def verify(self) -> list[str]:
        errors = []
        seen: set[Point] = set()
        total = 0
        for rect in self.rectangles():
            flat = [p for row in rect for p in row]
            total += len(flat)
            seen.update(flat)
            idx = [(i, j) for i in range(len(rect)) for j in range(len(rect[0]))]
            for (i, j) in idx:
                for (k, l) in idx:
                    if leq(rect[i][j], rect[k][l]) != (i <= k and j <= l):
                        errors.append(f"block at {rect[0][0]} is not a grid")
                        break
                else:
                    continue
                break
        if total != self.shape.size or len(seen) != self.shape.size:
            errors.append(f"cover mismatch: {total} cells, {len(seen)} distinct, {self.shape.size} points")
        return errors

    def to_dict(self) -> dict:
        return {"t": self.shape.t, "n": self.shape.n, "n1": self.n1,
                "rows": [[list(x) for x in c] for c in self.rows],
                "cols": [[list(x) for x in c] for c in self.cols],
                "side_lengths": [list(s) for s in self.side_lengths],
                "count": self.count, "u": self.u}


def split_chain(chain: list[Point], upper: Fraction) -> list[list[Point]]:
    """Cut a chain longer than ``upper`` into near-equal consecutive pieces."""
    L = len(chain)
    if L <= upper:
        return [chain]
    cap = max(1, math.floor(upper))
    pieces = -(-L // cap)
    base, extra = divmod(L, pieces)
    out, pos = [], 0
    for i in range(pieces):
        size = base + (1 if i < extra else 0)
        out.append(chain[pos:pos + size])
        pos += size
    return out


def _factor_chains(t: int, d: int, max_points: int) -> list[list[Point]]:
    shape = GridShape(t, d)
    part = uniform_chain_partition(shape, max_points)
    upper = Fraction(shape.size, width(shape))
    return [piece for c in part.chains for piece in split_chain(c, upper)]


def rectangle_partition(shape: GridShape, n1: int | None = None,
                        max_points: int = 4096) -> RectanglePartition:
    """Products of chain pieces of [t]^n1 and [t]^(n - n1)."""
    if shape.n < 2:
        raise ValueError("rectangle partition needs n >= 2")
    n1 = shape.n // 2 if n1 is None else n1
    if not 1 <= n1 < shape.n:
        raise ValueError(f"half split n1={n1} must lie in [1, {shape.n - 1}]")
    n2 = shape.n - n1
    if shape.t ** max(n1, n2) > max_points:
        raise GuardError(f"factor size {shape.t ** max(n1, n2)} exceeds guard {max_points}")
    rows = _factor_chains(shape.t, n1, max_points)
    cols = rows if n2 == n1 else _factor_chains(shape.t, n2, max_points)
    return RectanglePartition(shape, n1, rows, cols)


# -- rectangle antichain counts ---------------------------------------------

def rectangle_antichain_count(a: int, b: int) -> int:
    """Antichains of [a] x [b]; equal to the monotone lattice paths C(a+b, a)."""
    if a < 1 or b < 1:
        raise ValueError("rectangle sides must be positive")
    return math.comb(a + b, a)


def rectangle_antichains_of_size(a: int, b: int, s: int) -> int:
    """An s-antichain of [a] x [b] is fixed by its s rows and s columns."""
    return math.comb(a, s) * math.comb(b, s)


@dataclass(frozen=True)
class RectangleBound:
    a: int
    b: int
    u: int
    beta: Fraction
    count: int
    total_bound: int
    size: int
    size_count: int
    size_bound_log2: float

    @property
    def ok(self) -> bool:
        size_ok = self.size_count == 0 or math.log2(self.size_count) <= self.size_bound_log2 + 1e-12
        if self.size == 0:
            size_ok = self.size_count <= 1
        return self.count <= self.total_bound and size_ok


def rectangle_bound_check(a: int, b: int, u: int, beta) -> RectangleBound:
    """Total antichains <= 4^u and floor(beta u)-antichains <= 2^(4 log2(1/beta) beta u)."""
    beta = Fraction(beta)
    if a < 1 or b < 1 or 3 * a > u or 3 * b > u:
        raise ValueError(f"need 1 <= a, b <= u/3, got a={a}, b={b}, u={u}")
    if not 0 <= beta <= Fraction(1, 3):
        raise ValueError(f"beta must lie in [0, 1/3], got {beta}")
    s = math.floor(beta * u)
    if beta == 0:
        log_bound = 0.0
    else:
        log_bound = 4 * math.log2(1 / float(beta)) * float(beta) * u
    return RectangleBound(a, b, u, beta, rectangle_antichain_count(a, b), 4 ** u,
                          s, rectangle_antichains_of_size(a, b, s), log_bound)


# -- supersaturation checks -------------------------------------------------

@dataclass
class RectangleSaturation:
    t: int
    size: int
    delta: int
    branch: str
    k: int | None = None
    s: int | None = None
    class_offset: int | None = None
    class_size: int | None = None
    witness: Point | None = None
    witness_degree: int | None = None
    ok: bool = True
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["witness"] = list(self.witness) if self.witness else None
        return d


def check_rectangle_saturation(t: int, A: Iterable[Sequence[int]]) -> RectangleSaturation:
    """Replay the diagonal-block pigeonhole argument on A within [t]^2.

    With k = floor(|A|/16t) and blocks of side k, the block classes along
    the diagonal direction number 2s - 1. The densest class B has more than
    k^2 points, so some block holds at most half of B; any point in it is
    comparable to everything in B outside its block.
    """
    pts = sorted({tuple(x) for x in A})
    shape = GridShape(t, 2)
    if any(not shape.contains(x) for x in pts):
        raise ValueError(f"points outside [{t}]^2")
    size = len(pts)
    if size <= t:
        raise ValueError(f"need |A| > t, got |A| = {size}")
    delta = comp_max_degree(shape, pts)
    if size < 16 * t:
        return RectangleSaturation(t, size, delta, "direct", ok=delta >= 1)

    k = size // (16 * t)
    s = -(-t // k)
    classes: dict[int, list[Point]] = {}
    for x in pts:
        u, v = x[0] // k, x[1] // k
        classes.setdefault(v - u, []).append(x)
    offset, B = max(sorted(classes.items()), key=lambda kv: len(kv[1]))
    rep = RectangleSaturation(t, size, delta, "pigeonhole", k=k, s=s,
                              class_offset=offset, class_size=len(B))
    if 2 * s * len(B) < size:
        rep.notes.append("densest class below |A|/2s")
    if len(B) <= k * k:
        rep.notes.append("densest class not larger than k^2")
    blocks: dict[tuple[int, int], list[Point]] = {}
    for x in B:
        blocks.setdefault((x[0] // k, x[1] // k), []).append(x)
    key = min(sorted(blocks), key=lambda b: len(blocks[b]))
    x = blocks[key][0]
    outside = len(B) - len(blocks[key])
    deg = int(sum(1 for y in pts if y != x and (leq(x, y) or leq(y, x))))
    rep.witness, rep.witness_degree = x, deg
    if 2 * outside < k * k:
        rep.notes.append("witness block holds more than half the class")
    if 2 * deg < k * k:
        rep.notes.append("witness degree below k^2/2")
    rep.ok = not rep.notes and 2 * delta >= k * k
    return rep


@dataclass(frozen=True)
class StrongSaturation:
    delta: int
    bound: Fraction
    weight: Fraction
    k: int
    slack: Fraction

    @property
    def ok(self) -> bool:
        return self.delta >= self.bound

    def to_dict(self) -> dict:
        return {"delta": self.delta, "bound": str(self.bound), "weight": str(self.weight),
                "k": self.k, "slack": str(self.slack), "ok": self.ok}


def strong_saturation_bound(k: int, slack, W) -> Fraction:
    slack, W = Fraction(slack), Fraction(W)
    return slack / (W ** k * math.factorial(k) * (k + slack))


def check_strong_saturation(shape: GridShape, A: Iterable[Sequence[int]], k: int,
                            slack, W) -> StrongSaturation:
    """Delta(A) >= slack W^-k / (k! (k + slack)) for A within the good levels."""
    pts = [tuple(x) for x in A]
    slack, W = Fraction(slack), Fraction(W)
    if k < 1 or slack <= 0 or W <= 0:
        raise ValueError("need k >= 1, slack > 0 and W > 0")
    levels = good_levels(shape)
    if any(sum(x) not in levels for x in pts):
        raise ValueError("A must lie within the good levels")
    w = lym_weight(shape, pts)
    if w < k + slack:
        raise ValueError(f"weight {w} below k + slack = {k + slack}")
    return StrongSaturation(comp_max_degree(shape, pts), strong_saturation_bound(k, slack, W),
                            w, k, slack)


@dataclass(frozen=True)
class WeakSaturation:
    delta: int
    size: int
    alpha: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.size, self.alpha)

    @property
    def normalized(self) -> Fraction:
        """Delta(A) (alpha/|A|)^2, the implied constant."""
        return self.delta / self.ratio ** 2

    @property
    def ok(self) -> bool:
        return self.delta >= 1

    def to_dict(self) -> dict:
        return {"delta": self.delta, "size": self.size, "alpha": self.alpha,
                "ratio": str(self.ratio), "normalized": str(self.normalized), "ok": self.ok}


def check_weak_saturation(shape: GridShape, A: Iterable[Sequence[int]]) -> WeakSaturation:
    pts = [tuple(x) for x in A]
    alpha = width(shape)
    if len(set(pts)) <= alpha:
        raise ValueError(f"need |A| > width = {alpha}")
    return WeakSaturation(comp_max_degree(shape, pts), len(set(pts)), alpha)


def random_heavy_subset(shape: GridShape, rng: np.random.Generator,
                        points: Sequence[Point] | None = None,
                        min_weight=1) -> tuple[list[Point], Fraction]:
    """A uniformly sized random subset of the good levels with w(A) > min_weight."""
    if points is None:
        levels = good_levels(shape)
        points = [x for x in shape.points() if sum(x) in levels]
    total = lym_weight(shape, points)
    if total <= min_weight:
        raise ValueError("good levels carry too little weight")
    while True:
        size = int(rng.integers(1, len(points) + 1))
        idx = rng.choice(len(points), size=size, replace=False)
        A = [points[i] for i in sorted(idx)]
        w = lym_weight(shape, A)
        if w > min_weight:
            return A, w
