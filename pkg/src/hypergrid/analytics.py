"""Tilted coordinate distribution, its characteristic function and the
Fourier-inversion density of the centred sum.

This is the only floating-point module. Exact references (level sizes,
window ratios) stay in integers or :class:`fractions.Fraction`; numeric
results carry quadrature error estimates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, optimize

from .flows import lambda_window
from .grid import GridShape, level_sizes

IMAG_TOL = 1e-10
QUAD_EPSREL = 1e-13
QUAD_EPSABS = 1e-15


def _moments(theta: float, t: int) -> tuple[float, float]:
    """Mean and variance of X_1 under weights e^(j theta), j < t."""
    j = np.arange(t, dtype=float)
    logw = j * theta
    w = np.exp(logw - logw.max())
    w /= w.sum()
    mu = float(w @ j)
    var = float(w @ (j - mu) ** 2)
    return mu, var


def _solve_theta(target: float, t: int) -> float:
    """theta = ln p with mean(theta) = target, for 0 < target < t - 1."""
    lo, hi = -1.0, 1.0
    while _moments(lo, t)[0] > target:
        lo *= 2
    while _moments(hi, t)[0] < target:
        hi *= 2
    theta = optimize.brentq(lambda th: _moments(th, t)[0] - target, lo, hi,
                            xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(3):
        mu, var = _moments(theta, t)
        if var <= 0:
            break
        step = (mu - target) / var
        if not math.isfinite(step) or abs(step) > 1e-6:
            break
        theta -= step
    return theta


@dataclass(frozen=True)
class TiltedModel:
    shape: GridShape
    k: int
    q: Fraction
    p: float
    alpha_p: float
    mu_p: float

    @property
    def t(self) -> int:
        return self.shape.t

    @property
    def n(self) -> int:
        return self.shape.n

    @property
    def variance(self) -> float:
        if self.p == 0:
            return 0.0
        return _moments(math.log(self.p), self.t)[1]

    def to_dict(self) -> dict:
        return {"t": self.t, "n": self.n, "k": self.k, "q": str(self.q), "p": self.p,
                "alpha_p": self.alpha_p, "mu_p": self.mu_p,
                "residual": self.mu_p - self.k / self.n}


def _alpha(p: float, t: int) -> float:
    return float(sum(p ** j for j in range(t)))


def solve_tilt(shape: GridShape, k: int) -> TiltedModel:
    """The unique p >= 0 with mean k/n for the p-geometric weights on [t]."""
    t, n = shape.t, shape.n
    top = shape.top_rank
    if not 0 <= k <= top:
        raise ValueError(f"k={k} outside 0..{top}")
    if k == top:
        raise ValueError(f"k={k} is the top level: the mean k/n = t-1 needs p = infinity")
    q = Fraction(top, 2) - k
    if k == 0:
        return TiltedModel(shape, k, q, 0.0, 1.0, 0.0)
    if q == 0:
        return TiltedModel(shape, k, q, 1.0, float(t), (t - 1) / 2)
    theta = _solve_theta(k / n, t)
    p = math.exp(theta)
    mu, _ = _moments(theta, t)
    return TiltedModel(shape, k, q, p, _alpha(p, t), mu)


def char_fn(model: TiltedModel, y):
    """phi(y) = (1/alpha) sum_j p^j e^(i y (j - k/n)); accepts arrays."""
    y = np.asarray(y, dtype=float)
    j = np.arange(model.t, dtype=float)
    c = model.k / model.n
    w = model.p ** j / model.alpha_p if model.p > 0 else (j == 0).astype(float)
    return np.exp(1j * np.multiply.outer(y, j - c)) @ w


def _scalar_char(weights: tuple, shifts: tuple):
    def phi(y: float) -> complex:
        return sum(w * cmath.exp(1j * y * s) for w, s in zip(weights, shifts))
    return phi


@dataclass(frozen=True)
class DensityEval:
    x: float
    value: float
    abs_error_estimate: float
    order: int = 0
    method: str = "real-line"
    imag_residue: float = 0.0

    def to_dict(self) -> dict:
        return self.__dict__.copy()


_WEIGHT = {0: lambda y: 1.0, 1: lambda y: -1j * y, 2: lambda y: -y * y}


def _breakpoints(sigma: float, n: int, upper: float = math.pi, count: int = 40) -> list[float]:
    width = 1.0 / max(sigma * math.sqrt(n), 1e-3)
    pts = [width * i for i in range(1, count + 1) if width * i < upper]
    return pts


def _real_line(model: TiltedModel, x: float, order: int, check_imag: bool) -> DensityEval:
    t, n = model.t, model.n
    c = model.k / model.n
    if model.p == 0:
        weights, shifts = (1.0,), (-c,)
    else:
        weights = tuple(model.p ** j / model.alpha_p for j in range(t))
        shifts = tuple(j - c for j in range(t))
    phi = _scalar_char(weights, shifts)
    wfun = _WEIGHT[order]
    sigma = math.sqrt(max(model.variance, 1e-12))
    pts = _breakpoints(sigma, n)

    def re(y):
        return (wfun(y) * cmath.exp(-1j * x * y) * phi(y) ** n).real

    val, err = integrate.quad(re, 0.0, math.pi, points=pts or None, limit=1000,
                              epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL)
    value = val / math.pi
    imag = 0.0
    if check_imag:
        def im(y):
            return (wfun(y) * cmath.exp(-1j * x * y) * phi(y) ** n).imag
        sym = sorted(set([-p for p in pts] + [0.0] + pts))
        iv, _ = integrate.quad(im, -math.pi, math.pi, points=sym, limit=1000,
                               epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL)
        imag = abs(iv) / (2 * math.pi)
        if imag > IMAG_TOL:
            raise ArithmeticError(f"imaginary residue {imag:.3e} at x={x}")
    return DensityEval(float(x), value, err / math.pi, order, "real-line", imag)


@lru_cache(maxsize=None)
def _centred_mass(t: int, n: int, s: int) -> tuple[float, float, float, float]:
    """P'(X_1 + ... + X_n = s) under the tilt whose mean is s/n.

    Returns (log p', log alpha', value, error). The target mean is pulled
    half a unit inside the support at the two extreme levels, where the
    exact tilt degenerates.
    """
    top = (t - 1) * n
    target = min(max(s, 0.5), top - 0.5) / n
    theta = _solve_theta(target, t)
    j = np.arange(t, dtype=float)
    logw = j * theta
    shift = logw.max()
    w = np.exp(logw - shift)
    log_alpha = shift + math.log(w.sum())
    w /= w.sum()
    c = s / n
    weights = tuple(float(v) for v in w)
    shifts = tuple(float(v) - c for v in j)
    phi = _scalar_char(weights, shifts)
    sigma = math.sqrt(float(w @ (j - float(w @ j)) ** 2))
    pts = _breakpoints(sigma, n)
    val, err = integrate.quad(lambda y: (phi(y) ** n).real, 0.0, math.pi, points=pts or None,
                              limit=1000, epsabs=0.0, epsrel=QUAD_EPSREL)
    return theta, log_alpha, val / math.pi, err / math.pi


def _lattice_point(model: TiltedModel, x: int) -> DensityEval:
    """f at an integer, evaluated on the contour shifted to the local tilt.

    For integer x the integrand is 2 pi periodic, so moving the contour to
    Im y = -ln(p'/p) does not change the integral; it turns the value into
    (p/p')^s (alpha'/alpha)^n times a centred integral of order 1/sqrt(n),
    which keeps the relative error small far into the tails.
    """
    s = x + model.k
    top = model.shape.top_rank
    if s < 0 or s > top:
        return DensityEval(float(x), 0.0, 0.0, 0, "support")
    if model.p == 0:
        return DensityEval(float(x), 1.0 if s == 0 else 0.0, 0.0, 0, "support")
    theta, log_alpha, val, err = _centred_mass(model.t, model.n, s)
    log_scale = s * (math.log(model.p) - theta) + model.n * (log_alpha - math.log(model.alpha_p))
    scale = math.exp(log_scale)
    return DensityEval(float(x), val * scale, err * scale, 0, "shifted-contour")


def density(model: TiltedModel, x: float, order: int = 0, check_imag: bool = True,
            shifted: bool = True) -> DensityEval:
    """f^(order)(x) = (1/2 pi) int_{-pi}^{pi} w(y) e^(-ixy) phi(y)^n dy.

    w is 1, -iy or -y^2 for order 0, 1, 2. Integer arguments at order 0
    use the shifted contour unless ``shifted`` is False.
    """
    if order not in _WEIGHT:
        raise ValueError("order must be 0, 1 or 2")
    if order == 0 and shifted and float(x).is_integer():
        return _lattice_point(model, int(x))
    return _real_line(model, float(x), order, check_imag)


def density_batch(model: TiltedModel, xs, order: int = 0) -> np.ndarray:
    """Real-line values on many points at once (vector quadrature)."""
    xs = np.asarray(xs, dtype=float)
    c = model.k / model.n
    j = np.arange(model.t, dtype=float)
    w = model.p ** j / model.alpha_p if model.p > 0 else (j == 0).astype(float)
    n = model.n

    def g(y):
        phi = np.sum(w * np.exp(1j * y * (j - c)))
        base = phi ** n * _WEIGHT[order](y)
        return (base * np.exp(-1j * xs * y)).real

    sigma = math.sqrt(max(model.variance, 1e-12))
    pts = _breakpoints(sigma, n)
    edges = [0.0] + pts + [math.pi]
    total = np.zeros_like(xs)
    for a, b in zip(edges, edges[1:]):
        v, _ = integrate.quad_vec(g, a, b, epsabs=1e-15, epsrel=1e-12)
        total += v
    return total / math.pi


def exact_point_mass(model: TiltedModel, s: int, dps: int = 40) -> mpmath.mpf:
    """alpha^-n p^s N(s), in high precision from the float p of the model."""
    N = level_sizes(model.t, model.n)
    if not 0 <= s < len(N):
        return mpmath.mpf(0)
    with mpmath.workdps(dps):
        p = mpmath.mpf(model.p)
        alpha = mpmath.fsum(p ** j for j in range(model.t))
        return (p ** s if s else mpmath.mpf(1)) * N[s] / alpha ** model.n


# -- window ratio ----------------------------------------------------------

@dataclass(frozen=True)
class LambdaRatio:
    t: int
    n: int
    k: int
    profile: str
    window: tuple[int, int]
    clamped: bool
    Lambda: int
    N_min: int
    argmax: tuple
    ratio: Fraction

    def to_dict(self) -> dict:
        return {"t": self.t, "n": self.n, "k": self.k, "profile": self.profile,
                "window": list(self.window), "clamped": self.clamped,
                "Lambda": self.Lambda, "N_min": self.N_min,
                "argmax": list(self.argmax), "ratio": str(self.ratio)}


def lambda_ratio(shape: GridShape, k: int, profile: str = "grid",
                 check_range: bool = True) -> LambdaRatio:
    """Lambda / N_min^2 over the window [k-t+1, k+1], exactly.

    ``profile`` selects the level sizes used: "grid" for [t]^n itself and
    "factor" for [t]^(n-1).
    """
    t, n = shape.t, shape.n
    if check_range and abs(Fraction(k) - Fraction(shape.top_rank, 2)) > t * n ** (2 / 3):
        raise ValueError(f"k={k} too far from the middle of {shape}")
    if profile == "grid":
        prof = level_sizes(t, n)
    elif profile == "factor":
        prof = level_sizes(t, n - 1)
    else:
        raise ValueError("profile must be 'grid' or 'factor'")
    lo, hi = k - t + 1, k + 1
    clo, chi = max(lo, 0), min(hi, len(prof) - 1)
    Lam, Nmin, arg = lambda_window(prof, clo, chi)
    if Nmin == 0:
        raise ZeroDivisionError("window minimum is zero")
    return LambdaRatio(t, n, k, profile, (clo, chi), (clo, chi) != (lo, hi), Lam, Nmin, arg,
                       Fraction(Lam, Nmin * Nmin))


# -- characteristic-function inequalities ----------------------------------

@dataclass
class ClaimResult:
    name: str
    passed: bool
    worst_margin: float
    worst_at: float
    failures: int

    def to_dict(self) -> dict:
        return self.__dict__.copy()


@dataclass
class ClaimsReport:
    t: int
    n: int
    k: int
    p: float
    claims: list[ClaimResult] = field(default_factory=list)
    asserted: bool = True
    equality_gap: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.claims)

    def to_dict(self) -> dict:
        return {"t": self.t, "n": self.n, "k": self.k, "p": self.p, "ok": self.ok,
                "asserted": self.asserted, "equality_gap": self.equality_gap,
                "claims": [c.to_dict() for c in self.claims]}


def _claim(name: str, ys: np.ndarray, margin: np.ndarray, tol: float = 0.0,
           strict: bool = False) -> ClaimResult:
    i = int(np.argmin(margin))
    bad = int(np.sum(margin <= 0)) if strict else int(np.sum(margin < -tol))
    return ClaimResult(name, bad == 0, float(margin[i]), float(ys[i]), bad)


def appendix_inequality_checks(model: TiltedModel, delta: float = 1 / 48000,
                               grid_step: float = 1e-4 * math.pi,
                               n_threshold: int = 100) -> ClaimsReport:
    """Dense-grid checks of the three bounds on |phi| and the cosine bound.

    Margins are right-hand side minus left-hand side; a claim passes when
    every margin is nonnegative (strictly positive away from y = 0 for the
    quadratic decay bound). Shapes with n below ``n_threshold`` are
    reported but flagged as not asserted.
    """
    t, p = model.t, model.p
    rep = ClaimsReport(t, model.n, model.k, p, asserted=model.n >= n_threshold)

    ys = np.arange(grid_step, 2.26 / t + grid_step / 2, grid_step)
    ys = ys[ys <= 2.26 / t]
    mod = np.abs(char_fn(model, ys))
    rep.claims.append(_claim("quadratic_decay", ys, 1 - delta * ys ** 2 * t ** 2 - mod,
                             strict=True))

    ys = np.arange(0.0, math.pi / 2 + grid_step / 2, grid_step)
    ys = np.append(ys[ys < math.pi / 2], math.pi / 2)
    a = 1 + p * p - 2 * p * np.cos(ys) - 4 * (1 + p * p) / math.pi ** 2 * ys ** 2
    rep.claims.append(_claim("cosine_quadratic", ys, a, tol=1e-12))
    rep.equality_gap = float(abs(a[-1]))

    ys = np.arange(grid_step, math.pi / 2 + grid_step / 2, grid_step)
    ys = np.append(ys[ys < math.pi / 2], math.pi / 2)
    mod = np.abs(char_fn(model, ys))
    rep.claims.append(_claim("inverse_decay", ys, 2.25 / (ys * t) - mod))

    ys = np.arange(math.pi / 2, math.pi + grid_step / 2, grid_step)
    ys = np.append(ys[ys < math.pi], math.pi)
    mod = np.abs(char_fn(model, ys))
    rep.claims.append(_claim("flat_tail", ys, 1.5 / t - mod))
    return rep


def claims_threshold(t: int, n_values, offset: str = "max", **kw) -> dict[str, int | None]:
    """Smallest n (among n_values) from which each claim holds for all larger n tried.

    ``offset`` "max" uses k with |q| as large as allowed; "central" uses q = 0
    when (t-1)n is even and the nearest level otherwise.
    """
    results: dict[str, list[tuple[int, bool]]] = {}
    for n in sorted(n_values):
        shape = GridShape(t, n)
        if offset == "max":
            k = max(1, math.ceil(shape.top_rank / 2 - t * n ** (2 / 3)))
        else:
            k = shape.top_rank // 2
        rep = appendix_inequality_checks(solve_tilt(shape, k), **kw)
        for c in rep.claims:
            results.setdefault(c.name, []).append((n, c.passed))
    out = {}
    for name, seq in results.items():
        first = None
        for n, ok in reversed(seq):
            if not ok:
                break
            first = n
        out[name] = first
    return out


# -- derivative norms ------------------------------------------------------

@dataclass(frozen=True)
class DerivativeNorms:
    t: int
    n: int
    k: int
    d1: float
    d1_at: float
    d2: float
    d2_at: float

    @property
    def d1_scaled(self) -> float:
        return self.d1 * self.t ** 2 * self.n

    @property
    def d2_scaled(self) -> float:
        return self.d2 * self.t ** 3 * self.n ** 1.5

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d.update(d1_scaled=self.d1_scaled, d2_scaled=self.d2_scaled)
        return d


def _sup_norm(model: TiltedModel, order: int) -> tuple[float, float]:
    sd = math.sqrt(max(model.variance * model.n, 1e-12))
    span = max(2 * model.t, 6 * sd)
    xs = np.linspace(-span, span, 801)
    vals = np.abs(density_batch(model, xs, order))
    i = int(np.argmax(vals))
    h = xs[1] - xs[0]
    res = optimize.minimize_scalar(lambda x: -abs(_real_line(model, x, order, False).value),
                                   bounds=(xs[i] - h, xs[i] + h), method="bounded",
                                   options={"xatol": 1e-8})
    if -res.fun >= vals[i]:
        return float(-res.fun), float(res.x)
    return float(vals[i]), float(xs[i])


def derivative_norms(shape: GridShape, k: int | None = None) -> DerivativeNorms:
    k = shape.top_rank // 2 if k is None else k
    model = solve_tilt(shape, k)
    d1, x1 = _sup_norm(model, 1)
    d2, x2 = _sup_norm(model, 2)
    return DerivativeNorms(shape.t, shape.n, k, d1, x1, d2, x2)


def derivative_norm_sweep(t_range, n_range) -> list[DerivativeNorms]:
    return [derivative_norms(GridShape(t, n)) for t in t_range for n in n_range]


def tilt_deviation(shape: GridShape, k: int) -> float | None:
    """|1 - p| t^2 n / |q|, the scaled distance of the tilt from 1."""
    model = solve_tilt(shape, k)
    if model.q == 0:
        return None
    return abs(1 - model.p) * shape.t ** 2 * shape.n / abs(float(model.q))
