"""Exact antichain counts of [t]^n and the bound reports built from them."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import GridShape, GuardError, leq, width

DEFAULT_DOWNSET_GUARD = int(os.environ.get("HYPERGRID_DOWNSET_GUARD", "81"))
DEFAULT_TRANSFER_GUARD = int(os.environ.get("HYPERGRID_TRANSFER_GUARD", "7"))


def _comparability_masks(shape: GridShape) -> list[int]:
    """Bitmask of every point comparable to point i (itself included)."""
    pts = list(shape.points())
    masks = []
    for x in pts:
        m = 0
        for j, y in enumerate(pts):
            if leq(x, y) or leq(y, x):
                m |= 1 << j
        masks.append(m)
    return masks


def _count_by_exclusion(masks: list[int], full: int, max_size: int | None) -> list[int]:
    """Antichain counts by size, splitting on the lowest remaining element.

    f(M) = f(M - v) + x * f(M - comp[v]), with sizes truncated at max_size.
    """
    cap = None if max_size is None else max_size + 1
    memo: dict[int, list[int]] = {}

    def add(a, b):
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, v in enumerate(b):
            out[i] += v
        return out

    def f(mask: int) -> list[int]:
        if mask == 0:
            return [1]
        got = memo.get(mask)
        if got is not None:
            return got
        low = mask & -mask
        v = low.bit_length() - 1
        without = f(mask ^ low)
        with_v = [0] + f(mask & ~masks[v])
        if cap is not None:
            with_v = with_v[:cap]
        res = add(without, with_v)
        memo[mask] = res
        return res

    import sys
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10 * len(masks) + 100))
    try:
        return f(full)
    finally:
        sys.setrecursionlimit(limit)


def count_downsets_recursive(shape: GridShape, guard: int = DEFAULT_DOWNSET_GUARD) -> int:
    if shape.size > guard:
        raise GuardError(f"t^n = {shape.size} exceeds downset guard {guard}")
    masks = _comparability_masks(shape)
    return sum(_count_by_exclusion(masks, (1 << shape.size) - 1, None))


def count_transfer(shape: GridShape, guard_t: int = DEFAULT_TRANSFER_GUARD) -> int:
    """Downsets of [t]^n for n <= 3 as chains of downsets of [t]^(n-1).

    A downset of [t]^n is a weakly decreasing sequence of t downsets of
    [t]^(n-1), each encoded as a monotone height function on [t]^(n-2)
    with values in 0..t. The sequence count is a t-fold iterated suffix
    sum over the height-function lattice, done with cumulative sums on an
    object array (exact Python ints).
    """
    t, n = shape.t, shape.n
    if n == 1:
        return t + 1
    if n > 3:
        raise GuardError("transfer engine handles n <= 3 only")
    if t > guard_t and n == 3:
        raise GuardError(f"t = {t} exceeds transfer guard {guard_t}")
    dims = t ** (n - 2)
    shape_arr = (t + 1,) * dims
    grid = np.indices(shape_arr).reshape(dims, -1).T
    # heights over [t]^(n-2) in lex order; for n = 3 that is a chain, so
    # monotone means nonincreasing along the tuple
    mono = np.all(grid[:, :-1] >= grid[:, 1:], axis=1) if dims > 1 else np.ones(len(grid), bool)
    mask = mono.reshape(shape_arr)
    counts = np.where(mask, 1, 0).astype(object)
    for _ in range(t - 1):
        acc = counts
        for ax in range(dims):
            acc = np.flip(np.cumsum(np.flip(acc, axis=ax), axis=ax), axis=ax)
        counts = np.where(mask, acc, 0).astype(object)
    return int(sum(counts.ravel().tolist()))


def count_grid2(t: int) -> int:
    if t < 1:
        raise ValueError("t must be positive")
    return math.comb(2 * t, t)


def count_macmahon(t: int) -> int:
    """Plane partitions in a t x t x t box, the MacMahon triple product."""
    if t < 1:
        raise ValueError("t must be positive")
    num, den = 1, 1
    for i in range(1, t + 1):
        for j in range(1, t + 1):
            for k in range(1, t + 1):
                num *= i + j + k - 1
                den *= i + j + k - 2
    q, r = divmod(num, den)
    assert r == 0
    return q


def count_antichains_exact(shape: GridShape, engine: str = "auto",
                           guard: int = DEFAULT_DOWNSET_GUARD) -> int:
    """A(t, n), the number of antichains (equivalently downsets)."""
    if engine == "downset":
        return count_downsets_recursive(shape, guard)
    if engine == "transfer":
        return count_transfer(shape)
    if engine == "closed":
        return closed_form(shape)
    if engine != "auto":
        raise ValueError(f"unknown engine {engine!r}")
    if shape.n <= 3:
        try:
            return count_transfer(shape)
        except GuardError:
            pass
    return count_downsets_recursive(shape, guard)


def closed_form(shape: GridShape) -> int:
    if shape.n == 1:
        return shape.t + 1
    if shape.n == 2:
        return count_grid2(shape.t)
    if shape.n == 3:
        return count_macmahon(shape.t)
    raise ValueError("no closed form for n > 3")


@lru_cache(maxsize=64)
def antichain_size_profile(shape: GridShape, max_size: int | None = None,
                           guard: int = DEFAULT_DOWNSET_GUARD) -> tuple[int, ...]:
    """Number of antichains of each size 0, 1, ... (truncated at max_size)."""
    if shape.size > guard:
        raise GuardError(f"t^n = {shape.size} exceeds downset guard {guard}")
    masks = _comparability_masks(shape)
    return tuple(_count_by_exclusion(masks, (1 << shape.size) - 1, max_size))


def count_antichains_upto(shape: GridShape, max_size: int,
                          guard: int = DEFAULT_DOWNSET_GUARD) -> int:
    if max_size < 0:
        raise ValueError("max_size must be nonnegative")
    return sum(antichain_size_profile(shape, max_size, guard)[:max_size + 1])


@dataclass(frozen=True)
class Construction:
    t: int
    n: int
    k: int
    upper: int
    middle: int
    value: int | None

    @property
    def vacuous(self) -> bool:
        return self.k == 0

    @property
    def log2_value(self) -> float | None:
        return None if self.value is None else log2_int(self.value)

    def to_dict(self) -> dict:
        return {"t": self.t, "n": self.n, "k": self.k, "vacuous": self.vacuous,
                "log2_value": self.log2_value,
                "value": self.value}


def lower_bound_construction(shape: GridShape) -> Construction:
    """C(N(m+1), k) * 2^(N(m) - kn) with k = floor(N(m+1) / 4^n).

    Counts sets A + B with A a k-subset of L(m+1) and B any subset of L(m)
    avoiding the neighbourhood of A. The value is withheld when k = 0.
    """
    if shape.n < 2:
        raise ValueError("construction needs n >= 2")
    up, mid = shape.N(shape.m + 1), shape.N(shape.m)
    k = up // 4 ** shape.n
    value = None if k == 0 else math.comb(up, k) * 2 ** (mid - k * shape.n)
    return Construction(shape.t, shape.n, k, up, mid, value)


def construction_spot_check(shape: GridShape, size: int, samples: int = 100,
                            seed: int = 0) -> bool:
    """Random A in L(m+1) of the given size plus all of L(m) minus N(A) is an antichain."""
    from .saturation import is_antichain

    rng = np.random.Generator(np.random.Philox(seed))
    upper = shape.level(shape.m + 1)
    middle = shape.level(shape.m)
    for _ in range(samples):
        idx = rng.choice(len(upper), size=min(size, len(upper)), replace=False)
        A = [upper[i] for i in idx]
        B = [x for x in middle if not any(leq(x, a) for a in A)]
        keep = rng.random(len(B)) < 0.5
        if not is_antichain(A + [b for b, kp in zip(B, keep) if kp]):
            return False
    return True


def log2_int(x: int) -> float:
    if x <= 0:
        raise ValueError("log2 of a nonpositive integer")
    return math.log2(x)


def exact_count_if_feasible(shape: GridShape, guard: int = DEFAULT_DOWNSET_GUARD) -> int | None:
    if shape.n <= 3:
        return closed_form(shape)
    if shape.size <= guard:
        return count_downsets_recursive(shape, guard)
    return None


@dataclass(frozen=True)
class BoundRow:
    t: int
    n: int
    alpha: int
    count: int | None
    log2A: float | None
    ratio: float | None
    main_rhs: float
    lower_bound: float | None
    construction_k: int | None
    ramsey_n3: int | None

    CSV_COLUMNS = ("t", "n", "alpha", "A", "log2A", "ratio", "main_rhs", "lower_bound")

    def csv_row(self) -> list:
        return [self.t, self.n, self.alpha, "" if self.count is None else str(self.count),
                _fmt(self.log2A), _fmt(self.ratio),
                _fmt(self.main_rhs), _fmt(self.lower_bound)]

    def to_dict(self) -> dict:
        return {"t": self.t, "n": self.n, "alpha": self.alpha,
                "A": self.count,
                "log2A": self.log2A, "ratio": self.ratio, "trivial_lower": self.alpha,
                "main_rhs": self.main_rhs, "lower_bound": self.lower_bound,
                "construction_k": self.construction_k,
                "ramsey_n3": self.ramsey_n3}


def _fmt(v) -> str:
    return "" if v is None else f"{v:.12g}"


def bound_report(shape: GridShape, c=1, guard: int = DEFAULT_DOWNSET_GUARD) -> BoundRow:
    """alpha, log2 A, the main upper bound (1 + c ln(n)^3/n) alpha and the
    lower-bound construction, with the Ramsey number N_3(n, t) = A + 1."""
    alpha = width(shape)
    count = exact_count_if_feasible(shape, guard)
    log2A = None if count is None else log2_int(count)
    main_rhs = (1 + float(c) * math.log(shape.n) ** 3 / shape.n) * alpha
    if shape.n >= 2:
        cons = lower_bound_construction(shape)
        lower, k = cons.log2_value, cons.k
    else:
        lower, k = None, None
    return BoundRow(shape.t, shape.n, alpha, count, log2A,
                    None if log2A is None else log2A / alpha, main_rhs, lower, k,
                    None if count is None else count + 1)


@dataclass(frozen=True)
class SmallAntichainRow:
    k: int
    max_size: int
    count: int
    constant: float | None

    def to_dict(self) -> dict:
        return {"k": self.k, "max_size": self.max_size, "count": self.count,
                "constant": self.constant}


def small_antichain_bound_sweep(shape: GridShape, ks, guard: int = DEFAULT_DOWNSET_GUARD
                                ) -> list[SmallAntichainRow]:
    """log2(#antichains of size <= alpha/k) * k / (log2(k) alpha) per k."""
    alpha = width(shape)
    rows = []
    for k in ks:
        if k < 1:
            raise ValueError("k must be positive")
        s = alpha // k
        cnt = count_antichains_upto(shape, s, guard)
        const = None if k == 1 else log2_int(cnt) * k / (math.log2(k) * alpha)
        rows.append(SmallAntichainRow(k, s, cnt, const))
    return rows

