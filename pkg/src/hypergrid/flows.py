"""Scaled normalized matching flows (SNMF) on [t]^n.

The flow is built by the product recursion [t]^{d+1} = [t]^d x [t]: each
step collapses the slices L_P(k - i) x {i} of two consecutive levels into a
path graph a_0 b_0 a_1 b_1 ... and takes its unique flow g. Edge weights of
the n-fold construction factor into one "right edge" term (the dimension
where the edge lives) times "left edge" terms for every later dimension, so
a single weight costs O(n) cached rational operations (gmpy2 internally).

Edges are addressed as ``(x, coord)`` with ``coord`` 1-based: the edge from
x to x + e_coord. Every weight is an exact :class:`~fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from gmpy2 import mpq

from .grid import (GridShape, GuardError, Point, good_levels, is_normal_prefix,
                   level_sizes, profile_at)

Flow = Callable[[Point, int], Fraction]


@dataclass(frozen=True)
class CollapsedFlow:
    """Flow g on the collapsed path graph between levels k and k+1 of P x [t].

    ``diag[l]`` is g(a_l b_l) and ``off[l]`` is g(a_l b_{l+1}).
    """

    k: int
    diag: tuple[Fraction, ...]
    off: tuple[Fraction, ...]
    sigma_a: tuple[int, ...]
    sigma_b: tuple[Fraction, ...]

    def conservation_errors(self) -> list[str]:
        t = len(self.diag)
        errs = []
        if self.diag[0] != self.sigma_b[0]:  # b_0 is adjacent to a_0 only
            errs.append("b_0")
        for l in range(t):
            out = self.diag[l] + (self.off[l] if l < t - 1 else 0)
            if out != self.sigma_a[l]:
                errs.append(f"a_{l}")
        for l in range(1, t):
            into = self.diag[l] + self.off[l - 1]
            if into != self.sigma_b[l]:
                errs.append(f"b_{l}")
        return errs

    def is_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.diag + self.off)


@lru_cache(maxsize=256)
def _padded(profile_p: tuple, t: int) -> tuple:
    return (0,) * (t + 1) + tuple(profile_p) + (0,) * (t + 1)


def _window(profile_p: Sequence[int], k: int, t: int) -> list[int]:
    # N_P(k + 1 - i) for i = 0..t, zero outside the profile
    return _padded(tuple(profile_p), t)[k + 2:k + t + 3][::-1]


def _collapsed_values(profile_p: Sequence[int], k: int, t: int):
    win = _window(profile_p, k, t)
    nr_k = sum(win[1:])
    nr_k1 = sum(win[:t])
    if nr_k == 0 or nr_k1 == 0:
        raise ValueError(f"levels {k}, {k + 1} of P x [{t}] must be nonempty")
    sigma_a = tuple(win[1:])
    # partial sums of sigma_a and (scaled by nr_k1) sigma_b along the path
    acc_a = list(itertools.accumulate(sigma_a))
    acc_b = [nr_k * v for v in itertools.accumulate(win[:t])]
    diag_num = [acc_b[l] - nr_k1 * (acc_a[l - 1] if l else 0) for l in range(t)]
    off_num = [nr_k1 * acc_a[l] - acc_b[l] for l in range(t - 1)]
    if min(diag_num) < 0 or (off_num and min(off_num) < 0):
        raise ArithmeticError(f"negative collapsed flow at k={k}; profile not log-concave?")
    return diag_num, off_num, nr_k, nr_k1, win


def collapsed_flow(profile_p: Sequence[int], k: int, t: int) -> CollapsedFlow:
    """The unique flow of (H, sigma) for R = P x [t] between levels k, k+1.

    sigma(a_i) = N_P(k - i) and sigma(b_i) = N_R(k)/N_R(k+1) * N_P(k + 1 - i).
    Values are alternating partial sums of sigma along the path.
    """
    diag, off, nr_k, nr_k1, win = _collapsed_values(profile_p, k, t)
    return CollapsedFlow(k, tuple(Fraction(v, nr_k1) for v in diag),
                         tuple(Fraction(v, nr_k1) for v in off), tuple(win[1:]),
                         tuple(Fraction(nr_k * v, nr_k1) for v in win[:t]))


def _plain(v):
    return to_fraction(mpq(v)) if not isinstance(v, Fraction) else v


def to_fraction(q) -> Fraction:
    """Convert an internal gmpy2 rational to a plain Fraction."""
    return Fraction(int(q.numerator), int(q.denominator))


# Internally weights are gmpy2.mpq, which is an order of magnitude faster
# than Fraction; public functions convert on the way out.

@lru_cache(maxsize=None)
def _collapsed(t: int, d: int, k: int):
    """Factor rows at level k of [t]^d x [t]: (left, right) lists over i.

    The left factor divides g(a_i b_i) by N_P(k - i); the right factor does
    the same for g(a_i b_{i+1}). Each is built as a single rational.
    """
    diag, off, _, den, win = _collapsed_values(level_sizes(t, d), k, t)
    sizes = win[1:]  # N_P(k - i)
    left = [mpq(g, den * N) if N else _ZERO for g, N in zip(diag, sizes)]
    right = [mpq(g, den * N) if N else _ZERO for g, N in zip(off, sizes)]
    return left, right


_ZERO = mpq(0)


def _right_factor(t: int, d: int, k: int, i: int):
    # right edge (x, i)(x, i+1) of [t]^d x [t], |x| + i = k
    return _collapsed(t, d, k)[1][i]


def _left_factor(t: int, d: int, k: int, i: int):
    # left edge (x, i)(y, i): multiplier applied to f_P(xy)
    return _collapsed(t, d, k)[0][i]


def _check_edge(shape: GridShape, x: Sequence[int], coord: int):
    if not shape.contains(x):
        raise ValueError(f"{x} is not a point of {shape}")
    if not 1 <= coord <= shape.n:
        raise ValueError(f"coordinate {coord} out of range 1..{shape.n}")
    if x[coord - 1] > shape.t - 2:
        raise ValueError(f"no edge ({x}; {coord}): coordinate already maximal")


def edge_weight(shape: GridShape, x: Sequence[int], coord: int) -> Fraction:
    """Weight of the structured SNMF f_n on the edge (x; coord)."""
    _check_edge(shape, x, coord)
    t = shape.t
    prefix = sum(x[:coord])
    w = _right_factor(t, coord - 1, prefix, x[coord - 1])
    for j in range(coord + 1, shape.n + 1):
        prefix += x[j - 1]
        if not w:
            break
        w *= _left_factor(t, j - 1, prefix, x[j - 1])
    return to_fraction(w)


def flow_table(shape: GridShape, max_edges: int = 10 ** 6) -> dict[tuple[Point, int], Fraction]:
    """All edge weights of f_n, sharing suffix products between coordinates."""
    return {e: to_fraction(w) for e, w in _flow_table_q(shape, max_edges).items()}


def _flow_table_q(shape: GridShape, max_edges: int) -> dict:
    if shape.num_edges > max_edges:
        raise GuardError(f"{shape.num_edges} edges exceeds guard {max_edges}")
    t, n = shape.t, shape.n
    table = {}
    for x in shape.points():
        first = next((c for c in range(n) if x[c] < t - 1), None)
        if first is None:
            continue
        prefixes = list(itertools.accumulate(x))
        suffix = [mpq(1)] * (n + 1)
        # suffix[j]: product of the left factors of coordinates j.. (0-based)
        for j in range(n - 1, first, -1):
            nxt = suffix[j + 1]
            suffix[j] = nxt * _left_factor(t, j, prefixes[j], x[j]) if nxt else nxt
        for c in range(n):
            if x[c] < t - 1:
                table[(x, c + 1)] = _right_factor(t, c, prefixes[c], x[c]) * suffix[c + 1]
    return table


class StructuredFlow:
    """The recursive SNMF f = f_n as a callable ``flow(x, coord)``."""

    def __init__(self, shape: GridShape):
        self.shape = shape

    def __call__(self, x: Point, coord: int) -> Fraction:
        return edge_weight(self.shape, x, coord)


@dataclass
class ConservationReport:
    shape: GridShape
    edges: int
    violations: list = field(default_factory=list)
    level_residuals: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "t": self.shape.t, "n": self.shape.n, "edges": self.edges,
            "ok": self.ok,
            "violations": [[list(p), kind, str(v)] for p, kind, v in self.violations],
            "level_residuals": [[i, str(up), str(down)] for i, up, down in self.level_residuals],
        }


@lru_cache(maxsize=64)
def _factor_arrays(t: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Right and left factors of [t]^d x [t] as object arrays indexed [k, i]."""
    top = (t - 1) * (d + 1)
    R = np.full((top + 1, t), mpq(0), dtype=object)
    L = np.full((top + 1, t), mpq(0), dtype=object)
    for k in range(top):
        L[k], R[k, :t - 1] = _collapsed(t, d, k)
    return R, L


def _structured_arrays(shape: GridShape) -> list[np.ndarray]:
    """Weight of every edge (x; c+1) as an object array over x, zero where absent."""
    t, n = shape.t, shape.n
    idx = np.indices((t,) * n)
    pref = np.cumsum(idx, axis=0)
    tables = [_factor_arrays(t, d) for d in range(n)]
    out = []
    for c in range(n):
        w = tables[c][0][pref[c], idx[c]]
        for j in range(c + 1, n):
            w = w * tables[j][1][pref[j], idx[j]]
        out.append(w)
    return out


def verify_conservation(shape: GridShape, flow: Flow | None = None,
                        max_edges: int = 10 ** 6) -> ConservationReport:
    """Check the SNMF identities exactly on every vertex.

    Out-flow of each x in L(i) is 1 and in-flow of each y in L(i+1) is
    N(i)/N(i+1). ``flow=None`` uses the structured flow, evaluated for all
    edges at once on object arrays of exact rationals.
    """
    if shape.num_edges > max_edges:
        raise GuardError(f"{shape.num_edges} edges exceeds guard {max_edges}")
    t, n = shape.t, shape.n
    if flow is None:
        weights = _structured_arrays(shape)
    else:
        weights = [np.full((t,) * n, mpq(0), dtype=object) for _ in range(n)]
        for x in shape.points():
            for c in range(n):
                if x[c] < t - 1:
                    weights[c][x] = flow(x, c + 1)
    for c, w in enumerate(weights):
        bad = np.argwhere((w < 0) | (w > 1))
        if len(bad):
            x = tuple(int(v) for v in bad[0])
            raise ArithmeticError(f"weight {w[x]} outside [0, 1] at ({x}; {c + 1})")
    out_sum = sum(weights)
    in_sum = np.full((t,) * n, mpq(0), dtype=object)
    for c, w in enumerate(weights):
        src = [slice(None)] * n
        dst = [slice(None)] * n
        src[c], dst[c] = slice(0, t - 1), slice(1, t)
        in_sum[tuple(dst)] += w[tuple(src)]
    rank = np.indices((t,) * n).sum(axis=0)
    prof = shape.profile
    top = shape.top_rank
    in_target = np.array([mpq(0)] + [mpq(prof[r - 1], prof[r]) for r in range(1, top + 1)],
                         dtype=object)
    res_up = np.where(rank < top, out_sum - 1, mpq(0))
    res_down = np.where(rank > 0, in_sum - in_target[rank], mpq(0))
    report = ConservationReport(shape, shape.num_edges)
    worst_up = [Fraction(0)] * shape.num_levels
    worst_down = [Fraction(0)] * shape.num_levels
    for kind, res, worst in (("out", res_up, worst_up), ("in", res_down, worst_down)):
        for pos in np.argwhere(res != 0):
            x = tuple(int(v) for v in pos)
            v = _plain(res[x])
            worst[sum(x)] = max(worst[sum(x)], abs(v))
            report.violations.append((x, kind, v))
    report.violations.sort(key=lambda e: (e[0], e[1]))
    report.level_residuals = [(i, worst_up[i], worst_down[i]) for i in range(shape.num_levels)]
    return report


# -- permutation-averaged flow f* ------------------------------------------

@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int

    @property
    def upper(self) -> float:
        return self.mean + 3 * self.stderr


def _orbit_key(x: Sequence[int], coord: int) -> tuple:
    rest = list(x[:coord - 1]) + list(x[coord:])
    return x[coord - 1], tuple(sorted(rest))


def averaged_edge_weight(shape: GridShape, x: Sequence[int], coord: int,
                         mode: str = "exact", samples: int = 10 ** 5,
                         seed: int = 0, max_n: int = 8):
    """f*(x; coord), the average of f over all coordinate permutations.

    ``mode="exact"`` sums over S_n (grouping permutations that give the same
    permuted edge) and returns a Fraction; ``mode="monte_carlo"`` returns a
    :class:`MonteCarloEstimate` from ``samples`` uniform permutations drawn
    from a Philox stream keyed by ``seed``.
    """
    _check_edge(shape, x, coord)
    n = shape.n
    x = tuple(x)
    m = coord - 1
    if mode == "exact":
        if n > max_n:
            raise GuardError(f"exact averaging needs n <= {max_n}, got n={n}")
        counts: Counter = Counter()
        for perm in itertools.permutations(range(n)):
            px = tuple(x[p] for p in perm)
            counts[(px, perm.index(m) + 1)] += 1
        total = sum(cnt * edge_weight(shape, px, pc) for (px, pc), cnt in counts.items())
        return Fraction(total, math.factorial(n))
    if mode == "monte_carlo":
        rng = np.random.Generator(np.random.Philox(seed))
        memo: dict = {}
        vals = np.empty(samples)
        for s in range(samples):
            perm = rng.permutation(n)
            px = tuple(x[p] for p in perm)
            key = (px, int(np.flatnonzero(perm == m)[0]) + 1)
            if key not in memo:
                memo[key] = float(edge_weight(shape, *key))
            vals[s] = memo[key]
        se = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
        return MonteCarloEstimate(float(vals.mean()), se, samples)
    raise ValueError(f"unknown mode {mode!r}")


class AveragedFlow:
    """Exact f* as a callable, cached per permutation orbit of the edge."""

    def __init__(self, shape: GridShape, max_n: int = 8):
        if shape.n > max_n:
            raise GuardError(f"exact averaging needs n <= {max_n}, got n={shape.n}")
        self.shape = shape
        self._cache: dict = {}

    def __call__(self, x: Point, coord: int) -> Fraction:
        key = _orbit_key(x, coord)
        w = self._cache.get(key)
        if w is None:
            w = averaged_edge_weight(self.shape, x, coord)
            self._cache[key] = w
        return w


def _good_edge_orbits(shape: GridShape, exponent) -> dict:
    levels = good_levels(shape, exponent)
    reps = {}
    for x in shape.points():
        if sum(x) not in levels:
            continue
        for c in range(1, shape.n + 1):
            if x[c - 1] < shape.t - 1:
                reps.setdefault(_orbit_key(x, c), (x, c))
    return reps


@dataclass(frozen=True)
class MaxWeight:
    value: object  # Fraction (exact) or MonteCarloEstimate
    edge: tuple
    mode: str

    @property
    def upper(self):
        return self.value if self.mode == "exact" else self.value.upper


def max_good_weight(shape: GridShape, mode: str = "exact", samples: int = 10 ** 4,
                    seed: int = 0, exponent=Fraction(3, 5),
                    max_points: int = 10 ** 5) -> MaxWeight:
    """W: the largest f* weight over edges whose lower end is good.

    In Monte Carlo mode each orbit draws from its own Philox stream, spawned
    from ``seed`` by orbit index, and the orbit with the largest upper
    confidence value is reported.
    """
    if shape.size > max_points:
        raise GuardError(f"{shape.size} points exceeds guard {max_points}")
    reps = _good_edge_orbits(shape, exponent)
    best = None
    for idx, (key, (x, c)) in enumerate(sorted(reps.items())):
        if mode == "exact":
            w = averaged_edge_weight(shape, x, c)
            score = w
        else:
            w = averaged_edge_weight(shape, x, c, mode="monte_carlo",
                                     samples=samples,
                                     seed=np.random.SeedSequence(seed, spawn_key=(idx,)))
            score = w.upper
        if best is None or score > best[0]:
            best = (score, w, (x, c))
    if best is None:
        raise ValueError(f"no good edges in {shape}")
    return MaxWeight(best[1], best[2], mode)


# -- weight bounds -----------------------------------------------------------

def lambda_window(profile: Sequence[int], lo: int, hi: int) -> tuple[int, int, tuple]:
    """Lambda and N_min over the window [lo, hi] of ``profile``.

    Lambda is the max of N(z1)N(z2) - N(z3)N(z4) over z1 + z2 = z3 + z4 in
    the window; out-of-range levels count as 0. Returns the maximizing
    quadruple as the third element.
    """
    vals = {z: profile_at(profile, z) for z in range(lo, hi + 1)}
    best, arg = 0, (lo, lo, lo, lo)
    for z1 in range(lo, hi + 1):
        for z2 in range(z1, hi + 1):
            prod = vals[z1] * vals[z2]
            for z3 in range(lo, hi + 1):
                z4 = z1 + z2 - z3
                if z4 < z3 or not lo <= z4 <= hi:
                    continue
                diff = prod - vals[z3] * vals[z4]
                if diff > best:
                    best, arg = diff, (z1, z2, z3, z4)
    return best, min(vals.values()), arg


def right_edge_bound(t: int, d: int, k: int):
    """Lambda / N_min^2 for right edges of [t]^d x [t] leaving level k.

    Returns None when the window touches an empty level (bound is vacuous).
    """
    lam, nmin, _ = lambda_window(level_sizes(t, d), k - t + 1, k + 1)
    if nmin == 0:
        return None
    return Fraction(lam, nmin * nmin)


@dataclass
class NormalEdgeReport:
    shape: GridShape
    normal_edges: int = 0
    max_scaled: Fraction = Fraction(0)
    argmax: tuple | None = None
    per_coord_max: dict = field(default_factory=dict)
    right_bound_violations: list = field(default_factory=list)
    right_bound_checked: int = 0

    def to_dict(self) -> dict:
        return {
            "t": self.shape.t, "n": self.shape.n,
            "normal_edges": self.normal_edges,
            "max_m_times_f": str(self.max_scaled),
            "max_m_times_f_float": float(self.max_scaled),
            "argmax": [list(self.argmax[0]), self.argmax[1]] if self.argmax else None,
            "per_coord_max": {str(m): str(v) for m, v in sorted(self.per_coord_max.items())},
            "right_bound_checked": self.right_bound_checked,
            "right_bound_violations": [[list(x), m, str(w), str(b)]
                                       for x, m, w, b in self.right_bound_violations],
        }


def normal_edge_weight_check(shape: GridShape, max_edges: int = 10 ** 6) -> NormalEdgeReport:
    """Sweep all normal edges (x; m), recording m * f((x; m)).

    Also checks, for each such edge, that the right-edge weight at its own
    dimension, f_m((x[:m]; m)), is at most Lambda/N_min^2 computed from the
    profile of [t]^(m-1).
    """
    table = flow_table(shape, max_edges)
    rep = NormalEdgeReport(shape)
    t = shape.t
    seen_right = set()
    for (x, m), w in table.items():
        if not is_normal_prefix(x, m, t):
            continue
        rep.normal_edges += 1
        scaled = m * w
        if scaled > rep.max_scaled or rep.argmax is None:
            rep.max_scaled, rep.argmax = scaled, (x, m)
        rep.per_coord_max[m] = max(rep.per_coord_max.get(m, Fraction(0)), scaled)
        key = (x[:m], m)
        if key in seen_right:
            continue
        seen_right.add(key)
        k = sum(x[:m])
        fm = to_fraction(_right_factor(t, m - 1, k, x[m - 1]))
        bound = right_edge_bound(t, m - 1, k)
        rep.right_bound_checked += 1
        if bound is not None and fm > bound:
            rep.right_bound_violations.append((x[:m], m, fm, bound))
    return rep
