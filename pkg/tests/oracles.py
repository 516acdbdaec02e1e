"""Independent brute-force oracles. Nothing here imports the package's
algorithms; only plain enumeration over tuples."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def points(t, n):
    return list(itertools.product(range(t), repeat=n))


def leq(x, y):
    return all(a <= b for a, b in zip(x, y))


def level_sizes_enum(t, n):
    out = [0] * ((t - 1) * n + 1)
    for x in points(t, n):
        out[sum(x)] += 1
    return out


def antichains_enum(t, n):
    """Every antichain of [t]^n by exhaustive extension (tiny shapes only)."""
    pts = points(t, n)
    found = []

    def grow(start, cur):
        found.append(tuple(cur))
        for j in range(start, len(pts)):
            p = pts[j]
            if all(not leq(p, q) and not leq(q, p) for q in cur):
                cur.append(p)
                grow(j + 1, cur)
                cur.pop()

    grow(0, [])
    return found


def width_enum(t, n):
    return max(len(a) for a in antichains_enum(t, n))


def monotone_functions(n):
    """All monotone Boolean functions of n variables as truth-table tuples."""
    if n == 0:
        return [(0,), (1,)]
    prev = monotone_functions(n - 1)
    # f = (f0, f1) with f0 <= f1 pointwise, f0 the x_n = 0 half
    return [a + b for a in prev for b in prev if all(u <= v for u, v in zip(a, b))]


def maximal_chains(t, n):
    """All maximal chains from bottom to top by explicit path enumeration."""
    top = (t - 1,) * n

    def walk(path):
        x = path[-1]
        if x == top:
            yield list(path)
            return
        for c in range(n):
            if x[c] < t - 1:
                yield from walk(path + [x[:c] + (x[c] + 1,) + x[c + 1:]])

    return list(walk([(0,) * n]))


def macmahon(a, b, c):
    num = den = 1
    for i in range(1, a + 1):
        for j in range(1, b + 1):
            for k in range(1, c + 1):
                num *= i + j + k - 1
                den *= i + j + k - 2
    return num // den


def lym(t, n, A):
    sizes = level_sizes_enum(t, n)
    return sum((Fraction(1, sizes[sum(x)]) for x in A), Fraction(0))


def comparability_degree(A):
    A = list(A)
    return max((sum(1 for y in A if y != x and (leq(x, y) or leq(y, x))) for x in A), default=0)


def binom(a, b):
    return math.comb(a, b)


def downsets_as_masks(t, n):
    """Downsets of [t]^n as bitmasks, generated from enumerated antichains."""
    pts = points(t, n)
    out = []
    for A in antichains_enum(t, n):
        m = 0
        for j, p in enumerate(pts):
            if any(leq(p, a) for a in A):
                m |= 1 << j
        out.append(m)
    return out


def count_nested_downsets(t, n):
    """A(t, n+1) as the number of chains D_1 >= ... >= D_t of downsets of [t]^n."""
    ds = downsets_as_masks(t, n)
    ways = [1] * len(ds)  # chains of length 1 ending at each downset
    for _ in range(t - 1):
        ways = [sum(w for d, w in zip(ds, ways) if d & e == e) for e in ds]
    return sum(ways)
