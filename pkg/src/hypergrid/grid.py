"""The hypergrid poset [t]^n: points, grading, level sizes and width.

Points are plain tuples of ints in ``range(t)``. Everything here is exact;
level sizes are Python ints and weights are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Sequence

import mpmath
import numpy as np

Point = tuple[int, ...]

GOOD_EXPONENT = Fraction(3, 5)
NORMAL_CONSTANT = 2


class GuardError(ValueError):
    """Raised when a computation would exceed its configured size guard."""


@lru_cache(maxsize=None)
def _level_sizes(t: int, n: int) -> tuple[int, ...]:
    sizes = [1]
    for _ in range(n):
        new = [0] * (len(sizes) + t - 1)
        for i, a in enumerate(sizes):
            for j in range(t):
                new[i + j] += a
        sizes = new
    return tuple(sizes)


def level_sizes(t: int, n: int) -> tuple[int, ...]:
    """Rank sequence N(0), ..., N((t-1)n) of [t]^n.

    Computed by n-fold exact convolution of the all-ones vector of length t.
    ``n = 0`` gives the one-point poset ``(1,)``.
    """
    if t < 1 or n < 0:
        raise ValueError(f"invalid shape t={t}, n={n}")
    return _level_sizes(t, n)


def profile_at(profile: Sequence[int], i: int) -> int:
    """N(i) with the convention N(i) = 0 outside the level range."""
    if 0 <= i < len(profile):
        return profile[i]
    return 0


@dataclass(frozen=True)
class GridShape:
    t: int
    n: int

    def __post_init__(self):
        if self.t < 2 or self.n < 1:
            raise ValueError(f"need t >= 2 and n >= 1, got t={self.t}, n={self.n}")

    @property
    def top_rank(self) -> int:
        return (self.t - 1) * self.n

    @property
    def num_levels(self) -> int:
        return self.top_rank + 1

    @property
    def m(self) -> int:
        """Index of the (lower) middle level."""
        return self.top_rank // 2

    @property
    def size(self) -> int:
        return self.t ** self.n

    @property
    def profile(self) -> tuple[int, ...]:
        return level_sizes(self.t, self.n)

    @property
    def num_edges(self) -> int:
        return self.n * (self.t - 1) * self.t ** (self.n - 1)

    def N(self, i: int) -> int:
        return profile_at(self.profile, i)

    def points(self) -> Iterator[Point]:
        """All points in lexicographic order."""
        return itertools.product(range(self.t), repeat=self.n)

    def level(self, i: int) -> list[Point]:
        """Points of rank i, lexicographic."""
        return [x for x in self.points() if sum(x) == i]

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.n and all(0 <= c < self.t for c in x)

    def bottom(self) -> Point:
        return (0,) * self.n

    def top(self) -> Point:
        return (self.t - 1,) * self.n


def rank(x: Sequence[int]) -> int:
    return sum(x)


def comparable(x: Sequence[int], y: Sequence[int]) -> bool:
    return leq(x, y) or leq(y, x)


def leq(x: Sequence[int], y: Sequence[int]) -> bool:
    """Coordinate-wise x <= y."""
    return all(a <= b for a, b in zip(x, y))


def covers_up(shape: GridShape, x: Point) -> list[Point]:
    """Upper covers of x, ordered by the coordinate that increases."""
    out = []
    for i, c in enumerate(x):
        if c + 1 < shape.t:
            out.append(x[:i] + (c + 1,) + x[i + 1:])
    return out


def covers_down(shape: GridShape, x: Point) -> list[Point]:
    out = []
    for i, c in enumerate(x):
        if c > 0:
            out.append(x[:i] + (c - 1,) + x[i + 1:])
    return out


def width(shape: GridShape) -> int:
    """alpha(t, n) = N(m) with m = floor((t-1)n/2)."""
    return shape.N(shape.m)


def is_log_concave(profile: Sequence[int]) -> bool:
    return all(profile[i] ** 2 >= profile[i - 1] * profile[i + 1]
               for i in range(1, len(profile) - 1))


@dataclass(frozen=True)
class VertexSet:
    """A set of grid points with per-level counts."""

    shape: GridShape
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        bad = [x for x in self.members if not self.shape.contains(x)]
        if bad:
            raise ValueError(f"points outside {self.shape}: {bad[:3]}")

    @classmethod
    def of(cls, shape: GridShape, points: Iterable[Sequence[int]]) -> "VertexSet":
        return cls(shape, frozenset(tuple(p) for p in points))

    @cached_property
    def per_level_counts(self) -> tuple[int, ...]:
        counts = [0] * self.shape.num_levels
        for x in self.members:
            counts[sum(x)] += 1
        return tuple(counts)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def __contains__(self, x):
        return tuple(x) in self.members


def lym_weight(shape: GridShape, A: Iterable[Sequence[int]]) -> Fraction:
    """w(A) = sum_i |A cap L(i)| / N(i), exactly."""
    counts: dict[int, int] = {}
    for x in A:
        r = sum(x)
        counts[r] = counts.get(r, 0) + 1
    return sum((Fraction(c, shape.N(r)) for r, c in counts.items()), Fraction(0))


def good_levels(shape: GridShape, exponent=GOOD_EXPONENT, const=1) -> range:
    """Levels i with |i - (t-1)n/2| <= const * t * n^exponent, as a range."""
    half_width = const * shape.t * float(shape.n) ** float(exponent)
    center = Fraction(shape.top_rank, 2)
    lo = max(0, math.ceil(center - Fraction(half_width)))
    hi = min(shape.top_rank, math.floor(center + Fraction(half_width)))
    return range(lo, hi + 1)


def good_points(shape: GridShape, exponent=GOOD_EXPONENT) -> list[Point]:
    levels = good_levels(shape, exponent)
    return [x for x in shape.points() if sum(x) in levels]


def is_normal_prefix(x: Sequence[int], m0: int, t: int,
                     exponent=GOOD_EXPONENT, const=NORMAL_CONSTANT) -> bool:
    """Whether the prefix x[:m0] is normal in [t]^m0."""
    dev = abs(Fraction(sum(x[:m0])) - Fraction((t - 1) * m0, 2))
    return dev <= Fraction(const * t * float(m0) ** float(exponent))


@dataclass(frozen=True)
class TailCheck:
    index: int
    offset: Fraction
    count: int
    bound: mpmath.mpf
    ok: bool


def level_tail_check(shape: GridShape, r: int, dps: int = 50) -> list[TailCheck]:
    """Compare N((t-1)n/2 - r) against t^(n-1) exp(-r^2 / (2 t^2 (n-1))).

    When (t-1)n is odd the middle is a half-integer; the inequality is then
    checked at both integer levels around it, each with its own real offset.
    The right-hand side is evaluated with ``dps`` digits so the comparison
    is decided far beyond double precision.
    """
    t, n = shape.t, shape.n
    if abs(r) <= t:
        raise ValueError(f"tail check needs |r| > t, got r={r}, t={t}")
    center = Fraction(shape.top_rank, 2)
    r_abs = abs(r)
    if center.denominator == 1:
        offsets = [Fraction(r_abs)]
    else:
        offsets = [Fraction(r_abs) - Fraction(1, 2), Fraction(r_abs) + Fraction(1, 2)]
    out = []
    with mpmath.workdps(dps):
        for off in offsets:
            idx = int(center - off)
            count = shape.N(idx)
            if n == 1:
                bound = mpmath.mpf(0)
            else:
                off_mp = mpmath.mpf(off.numerator) / off.denominator
                bound = mpmath.mpf(t) ** (n - 1) * mpmath.exp(-off_mp ** 2 / (2 * t * t * (n - 1)))
            out.append(TailCheck(idx, off, count, bound, count <= bound))
    return out


def normalized_matching_bruteforce(shape: GridShape, i: int, max_level: int = 20) -> bool:
    """Check |N(X)|/N(i+1) >= |X|/N(i) for every X in L(i), exhaustively."""
    if not 0 <= i < shape.top_rank:
        raise ValueError(f"level {i} has no level above it in {shape}")
    lower = shape.level(i)
    if len(lower) > max_level:
        raise GuardError(f"N({i}) = {len(lower)} exceeds subset guard {max_level}")
    upper_index = {y: j for j, y in enumerate(shape.level(i + 1))}
    nbr = [sum(1 << upper_index[y] for y in covers_up(shape, x)) for x in lower]
    a, b = len(lower), len(upper_index)
    # masks[s] = neighbourhood of subset s, built from s minus its lowest bit
    masks = [0] * (1 << a)
    for s in range(1, 1 << a):
        low = s & -s
        masks[s] = masks[s ^ low] | nbr[low.bit_length() - 1]
        if masks[s].bit_count() * a < s.bit_count() * b:
            return False
    return True


def points_array(points: Sequence[Point]) -> np.ndarray:
    return np.asarray(points, dtype=np.int64).reshape(len(points), -1)
