"""Equispaced converse construction and its analytic bounds.

For odd ``m = 2K+1`` and ``delta > 1`` the support ``X_{m,delta}`` holds the
``m`` points ``k * h``, ``|k| <= K``, with spacing ``h = 1/m - delta/m**2``.
Any diagonalizing polynomial for the centre node factors as ``Z * R_gamma``;
``L(m, delta)`` is the smallest sup-norm such a product can reach, and a
value above one rules out a stable diagonalizing family.

Indices into a ``SupportSet`` are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from resolimit.trigpoly import (
    TWO_PI,
    TrigPoly,
    derivative,
    evaluate,
    log_abs_sin_pi,
    multiply,
    sup_norm,
    torus_distance,
    wrap,
)


class InvalidParameters(ValueError):
    """Construction parameters violate a precondition."""


class BudgetExceeded(RuntimeError):
    """The requested computation is above the configured size cap."""


class BracketError(RuntimeError):
    """No finite minimizer could be bracketed."""


class ThresholdNotFound(RuntimeError):
    """No threshold was found below the cap."""


def min_separation(points) -> float:
    """Minimal wrap-around distance between distinct points (``inf`` for one point)."""
    x = np.sort(wrap(np.asarray(points, float).ravel()))
    if x.size < 2:
        return math.inf
    gaps = np.diff(np.concatenate([x, [x[0] + 1.0]]))
    return float(gaps.min())


def exact_min_separation(points: Sequence[Fraction]) -> Fraction:
    """Rational counterpart of :func:`min_separation`."""
    x = sorted(p % 1 for p in points)
    gaps = [b - a for a, b in zip(x, x[1:])] + [x[0] + 1 - x[-1]]
    return min(gaps)


@dataclass(frozen=True, eq=False)
class SupportSet:
    """Finite ordered subset of the torus; coordinates are stored in ``[0, 1)``."""

    points: np.ndarray

    def __post_init__(self):
        p = np.array(wrap(np.asarray(self.points, float).ravel()), float).ravel()
        if p.size == 0:
            raise ValueError("a support set needs at least one point")
        if p.size > 1 and not min_separation(p) > 0:
            raise ValueError("support points must be pairwise distinct modulo 1")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def s(self) -> int:
        return int(self.points.size)

    def __len__(self):
        return self.s

    @property
    def min_separation(self) -> float:
        return min_separation(self.points)

    def signed(self) -> np.ndarray:
        """Coordinates mapped to ``[-1/2, 1/2)``."""
        return np.mod(self.points + 0.5, 1.0) - 0.5


@dataclass(frozen=True)
class ConverseParams:
    """Odd degree ``m`` and second-order term ``delta`` of the construction."""

    m: int
    delta: float

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m:
            raise InvalidParameters(f"m must be an integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        if self.m < 1 or self.m % 2 == 0:
            raise InvalidParameters(
                f"m must be odd (m = 2K+1); the construction is only defined for odd m, got m={self.m}"
            )
        if not self.delta > 1:
            raise InvalidParameters(f"delta must exceed 1, got {self.delta}")
        if not self.m > self.delta:
            raise InvalidParameters(f"need m > delta so that 1/m - delta/m^2 > 0 (m={self.m}, delta={self.delta})")

    @property
    def K(self) -> int:
        return (self.m - 1) // 2

    @property
    def spacing(self) -> float:
        """``alpha_m / (m+1) = 1/m - delta/m^2``, also the half-width of ``Omega_m``."""
        m = float(self.m)
        return 1.0 / m - self.delta / m**2

    @property
    def alpha(self) -> float:
        m = float(self.m)
        return (m + 1.0) * (m - self.delta) / m**2

    @property
    def beta(self) -> float:
        m = float(self.m)
        # (1 - alpha)/2 without cancellation
        return ((self.delta - 1.0) * m + self.delta) / (2.0 * m**2)

    @property
    def omega_max(self) -> float:
        return self.spacing

    @property
    def beta_ratio(self) -> float:
        """``beta_m (m+1) / alpha_m``; lies in ``[(delta-1)/2, delta-1]`` once m is large enough."""
        return ((self.delta - 1.0) * self.m + self.delta) / (2.0 * (self.m - self.delta))

    def beta_ratio_in_range(self) -> bool:
        r = self.beta_ratio
        return (self.delta - 1.0) / 2.0 <= r <= self.delta - 1.0

    def exact_spacing(self) -> Fraction:
        d = Fraction(self.delta) if not isinstance(self.delta, Fraction) else self.delta
        return Fraction(1, self.m) - d / self.m**2


def smallest_odd_m(delta: float) -> int:
    """Least odd ``m`` with ``m > delta``."""
    m = max(1, math.floor(delta) + 1)
    return m if m % 2 else m + 1


def build_support(params: ConverseParams) -> SupportSet:
    """The ``m`` equispaced points ``k h``, ``k = -K..K`` (centre node at index ``K``)."""
    k = np.arange(-params.K, params.K + 1)
    return SupportSet(k * params.spacing)


def build_support_exact(m: int, delta) -> list[Fraction]:
    """Rational support for rational ``delta``, used to check identities exactly."""
    params = ConverseParams(m, float(delta))
    h = Fraction(1, m) - Fraction(delta) / m**2
    return [(k * h) % 1 for k in range(-params.K, params.K + 1)]


def center_index(params: ConverseParams) -> int:
    return params.K


def _check_index(X: SupportSet, l: int) -> None:
    if not 0 <= l < X.s:
        raise IndexError(f"node index {l} out of range for a support of size {X.s}")


def log_vanishing(X: SupportSet, l: int, w) -> np.ndarray:
    """``log Z_{X,l}(w)``; ``-inf`` exactly at the other nodes."""
    _check_index(X, l)
    w = np.asarray(w, float)
    others = np.delete(X.points, l)
    xl = X.points[l]
    out = np.zeros(w.shape)
    with np.errstate(divide="ignore"):
        for x in others:
            r = np.mod(w - x + 0.5, 1.0) - 0.5
            out += 2.0 * np.log(np.abs(np.sin(np.pi * r)))
    out -= 2.0 * float(np.sum(log_abs_sin_pi(xl - others)))
    return out


def vanishing_poly(X: SupportSet, l: int) -> TrigPoly:
    """``Z_{X,l}``: degree ``s-1``, double roots at every node but ``x_l``, ``Z(x_l) = 1``.

    Coefficients are the DFT of exact (log-domain) samples on ``2s-1``
    points, which is alias-free for this degree.
    """
    _check_index(X, l)
    s = X.s
    if s == 1:
        return TrigPoly.constant(1.0)
    n = 2 * s - 1
    vals = np.exp(log_vanishing(X, l, np.arange(n) / n))
    spec = np.fft.fft(vals) / n
    d = s - 1
    k = np.arange(-d, d + 1)
    q = spec[np.mod(k, n)]
    # Z is real on the torus
    q = 0.5 * (q + np.conj(q[::-1]))
    return TrigPoly(q)


def eta(X: SupportSet, l: int) -> float:
    """``Z'_{X,l}(x_l) = 2 pi sum_{k != l} cot(pi (x_l - x_k))``."""
    _check_index(X, l)
    d = X.points[l] - np.delete(X.points, l)
    return float(TWO_PI * np.sum(1.0 / np.tan(np.pi * d)))


def r_gamma(gamma: complex) -> TrigPoly:
    """``R_gamma(w) = (1 - gamma) + gamma cos(2 pi w)``."""
    return TrigPoly([gamma / 2.0, 1.0 - gamma, gamma / 2.0])


def z_converse(params: ConverseParams) -> TrigPoly:
    """``Z_{m,delta}``: the vanishing polynomial of the centre node."""
    return vanishing_poly(build_support(params), center_index(params))


def p_converse(params: ConverseParams, gamma: complex, Z: TrigPoly | None = None) -> TrigPoly:
    """``P_{m,delta,gamma} = Z_{m,delta} R_gamma``."""
    Z = z_converse(params) if Z is None else Z
    return multiply(Z, r_gamma(gamma))


@dataclass(frozen=True)
class GammaSearch:
    """Outer minimization over real ``gamma`` in :func:`L_numeric`."""

    bracket: tuple[float, float] = (-1.25, 1.25)
    widenings: int = 3
    samples: int = 41
    tol: float = 1e-10
    oversampling: int = 8
    cap: int = 2001


@dataclass(frozen=True)
class LResult:
    L: float
    gamma: float
    argmax: float
    evaluations: int


def minimize_convex(f: Callable[[float], float], cfg: GammaSearch) -> tuple[float, float, int]:
    """Golden-section search for a convex function of one real variable.

    The bracket is sampled first; it is doubled (at most ``cfg.widenings``
    times) while the sampled minimum sits on its boundary.
    """
    lo, hi = cfg.bracket
    nev = 0
    for attempt in range(cfg.widenings + 1):
        g = np.linspace(lo, hi, cfg.samples)
        v = np.array([f(x) for x in g])
        nev += len(g)
        if not np.all(np.isfinite(v)):
            raise BracketError("objective is not finite on the bracket")
        i = int(np.argmin(v))
        if 0 < i < len(g) - 1:
            break
        if attempt == cfg.widenings:
            raise BracketError(f"no interior minimizer in [{lo}, {hi}] after {cfg.widenings} widenings")
        lo, hi = 2.0 * lo, 2.0 * hi
    # unimodality of the samples (they come from a convex function)
    scale = 1e-9 * max(1.0, float(np.max(np.abs(v))))
    if np.any(np.diff(v[: i + 1]) > scale) or np.any(np.diff(v[i:]) < -scale):
        raise BracketError("sampled objective is not unimodal")
    a, b = g[i - 1], g[i + 1]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    nev += 2
    while b - a > cfg.tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        nev += 1
    x = 0.5 * (a + b)
    fx = f(x)
    best = min((fx, x), (fc, c), (fd, d), (float(v[i]), float(g[i])))
    return best[1], best[0], nev + 1


def L_numeric(params: ConverseParams, search: GammaSearch = GammaSearch()) -> LResult:
    """``min_gamma ||Z_{m,delta} R_gamma||_inf`` over real ``gamma``.

    Restricting to real ``gamma`` is exact because ``Z >= 0`` and the
    imaginary part of ``gamma`` only adds ``(Im gamma)^2 (1 - cos)^2`` to
    ``|R_gamma|^2`` pointwise.
    """
    if params.m > search.cap:
        raise BudgetExceeded(f"m={params.m} exceeds the sup-norm cap {search.cap}")
    Z = z_converse(params)

    def objective(g: float) -> float:
        return sup_norm(p_converse(params, g, Z), search.oversampling)[0]

    gamma, L, nev = minimize_convex(objective, search)
    _, arg = sup_norm(p_converse(params, gamma, Z), search.oversampling)
    return LResult(L=L, gamma=gamma, argmax=arg, evaluations=nev)


def C_delta(delta: float) -> float:
    """``C(delta) = exp(-4 (1 + (delta-1)^2))``."""
    return math.exp(-4.0 * (1.0 + (delta - 1.0) ** 2))


def log_analytic_lower_bound(m: int, delta: float) -> float:
    """Log of ``C(delta) pi^2 alpha_m^2 / 2 (m+1)^(2(delta-2))``; safe for huge ``m``."""
    mf = float(m)
    alpha = (mf + 1.0) * (mf - delta) / mf**2
    return (
        -4.0 * (1.0 + (delta - 1.0) ** 2)
        + math.log(math.pi**2 / 2.0)
        + 2.0 * math.log(alpha)
        + 2.0 * (delta - 2.0) * math.log1p(mf)
    )


def analytic_lower_bound(params: ConverseParams) -> float:
    return math.exp(log_analytic_lower_bound(params.m, params.delta))


def ztilde_log(params: ConverseParams, w) -> np.ndarray:
    """``log Z_{m,delta}(1/2 - w)`` from the root-pair expansion around ``1/2``.

    Valid on ``Omega_m``, where no root is met.
    """
    w = np.asarray(w, float)
    h = params.spacing
    b = params.beta
    k = np.arange(1, params.K + 1).reshape((-1,) + (1,) * w.ndim)
    terms = (
        2.0 * log_abs_sin_pi(b + k * h - w)
        + 2.0 * log_abs_sin_pi(b + k * h + w)
        - 4.0 * log_abs_sin_pi(k * h)
    )
    return np.sum(terms, axis=0)


def omega_grid(params: ConverseParams, n: int = 2001) -> np.ndarray:
    """Uniform grid over ``Omega_m`` with both endpoints and 0 (``n`` odd)."""
    n = n if n % 2 else n + 1
    return np.linspace(-params.omega_max, params.omega_max, n)


def ztilde_inf_log(params: ConverseParams, n: int = 2001) -> float:
    """``log inf_{Omega_m} Ztilde``.

    Each log-sine pair is concave in ``w`` on ``Omega_m``, so the infimum
    sits at an endpoint; the grid minimum is included as a guard.
    """
    w = omega_grid(params, n)
    v = ztilde_log(params, w)
    return float(min(v.min(), v[0], v[-1]))


def lemma_log_bound(params: ConverseParams) -> float:
    """``log C(delta) + 2 (delta-1) log(m+1)``."""
    return math.log(C_delta(params.delta)) + 2.0 * (params.delta - 1.0) * math.log(params.m + 1.0)


def kappa_closed_form(omega_max: float) -> float:
    """``inf_gamma sup_{|w| <= omega_max} |Rtilde_gamma(w)| = (1 - c) / (1 + c)``, ``c = cos^2(pi omega_max)``."""
    # (1 - c) / (1 + c) = sin^2 / (1 + cos^2) avoids cancellation for small omega_max
    s2 = math.sin(math.pi * omega_max) ** 2
    return s2 / (2.0 - s2)


def kappa_closed_form_gamma(omega_max: float) -> float:
    """Minimizing ``gamma = 1 / (1 + c)``."""
    return 1.0 / (1.0 + math.cos(math.pi * omega_max) ** 2)


def kappa(params: ConverseParams) -> tuple[float, float]:
    """``(closed form, analytic lower bound pi^2 omega_max^2 / 2)``."""
    w = params.omega_max
    return kappa_closed_form(w), math.pi**2 * w**2 / 2.0


def L_omega(params: ConverseParams, n: int = 2001, search: GammaSearch = GammaSearch()) -> tuple[float, float]:
    """``inf_gamma sup_{Omega_m} |Ztilde Rtilde_gamma|`` on a grid containing 0 and both endpoints."""
    w = omega_grid(params, n)
    z = np.exp(ztilde_log(params, w))
    c = np.cos(np.pi * w) ** 2

    def objective(g: float) -> float:
        return float(np.max(np.abs(z * (1.0 - 2.0 * g * c))))

    gamma, val, _ = minimize_convex(objective, search)
    return val, gamma


@dataclass
class BoundReport:
    m: int
    delta: float
    numeric_L: float | None
    gamma_star: float | None
    L_omega: float
    ztilde_inf: float
    ztilde_lemma_bound: float
    kappa_numeric: float
    kappa_analytic: float
    C_delta: float
    analytic_lower_bound: float
    links: dict = field(default_factory=dict)

    @property
    def chain_holds(self) -> bool:
        return all(self.links.values())


def bound_report(params: ConverseParams, search: GammaSearch = GammaSearch(), with_L: bool = True) -> BoundReport:
    """Every quantity of the lower-bound chain for ``L(m, delta)`` with each link checked separately."""
    Lres = L_numeric(params, search) if with_L else None
    Lw, _ = L_omega(params, search=search)
    zinf = math.exp(ztilde_inf_log(params))
    zlem = math.exp(lemma_log_bound(params))
    kn, ka = kappa(params)
    alb = analytic_lower_bound(params)
    links = {
        "L>=L_omega": Lres is None or Lres.L >= Lw * (1 - 1e-12),
        "L_omega>=zinf*kappa": Lw >= zinf * kn * (1 - 1e-12),
        "zinf>=lemma": zinf >= zlem,
        "kappa>=analytic": kn >= ka,
        "zinf*kappa>=analytic_bound": zinf * kn >= alb,
    }
    return BoundReport(
        m=params.m,
        delta=params.delta,
        numeric_L=None if Lres is None else Lres.L,
        gamma_star=None if Lres is None else Lres.gamma,
        L_omega=Lw,
        ztilde_inf=zinf,
        ztilde_lemma_bound=zlem,
        kappa_numeric=kn,
        kappa_analytic=ka,
        C_delta=C_delta(params.delta),
        analytic_lower_bound=alb,
        links=links,
    )


def _analytic_threshold(delta: float) -> int:
    if not delta > 2:
        raise InvalidParameters(f"analytic threshold needs delta > 2, got {delta}")
    lo = smallest_odd_m(delta)
    if log_analytic_lower_bound(lo, delta) > 0:
        return lo
    hi = lo
    while log_analytic_lower_bound(hi, delta) <= 0:
        hi = 2 * hi + 1
    # bound is increasing in m for delta > 2; bisect over odd integers
    while hi - lo > 2:
        mid = (lo + hi) // 2
        mid += 1 - mid % 2
        if mid >= hi:
            mid = hi - 2
        if log_analytic_lower_bound(mid, delta) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def m_delta_envelope(delta: float, n_grid: int = 400) -> int:
    """Smallest analytic threshold over ``delta' in (2, delta]``.

    A support good for ``delta'`` has separation at least ``1/m - delta/m^2``
    for every ``delta >= delta'``, so each of these thresholds bounds ``M_delta``.
    """
    best = _analytic_threshold(delta)
    for d in np.linspace(2.0, delta, n_grid + 1)[1:-1]:
        try:
            best = min(best, _analytic_threshold(float(d)))
        except OverflowError:
            # threshold beyond double range: cannot improve on ``best``
            continue
    return best


def m_delta_threshold(
    delta: float,
    mode: str = "analytic",
    cap: int = 2001,
    search: GammaSearch = GammaSearch(),
    tol: float = 1e-8,
    start: int | None = None,
    progress: Callable[[int, float], None] | None = None,
) -> int:
    """Smallest odd ``m`` past which the construction defeats TV regularization.

    ``analytic``: the analytic lower bound on ``L`` exceeds one.
    ``numeric``: the computed ``L(m, delta)`` exceeds ``1 + tol`` (scan up to
    ``cap``; ``L`` is never below one since ``P(0) = 1``).
    """
    if mode == "analytic":
        return _analytic_threshold(delta)
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    if not delta > 1:
        raise InvalidParameters(f"numeric threshold needs delta > 1, got {delta}")
    m = smallest_odd_m(delta) if start is None else start
    capped = replace(search, cap=max(cap, search.cap))
    while m <= cap:
        L = L_numeric(ConverseParams(m, delta), capped).L
        if progress is not None:
            progress(m, L)
        if L > 1.0 + tol:
            return m
        m += 2
    raise ThresholdNotFound(f"L(m, {delta}) <= 1 for every odd m <= {cap}")


@dataclass
class FactsReport:
    m: int
    alpha: float
    fact1_min_margin: float
    fact1_holds: bool
    cot_sum: float
    cot_bound: float
    csc2_sum: float
    csc2_bound: float

    @property
    def cot_margin(self) -> float:
        return self.cot_sum - self.cot_bound

    @property
    def csc2_margin(self) -> float:
        return self.csc2_bound - self.csc2_sum

    @property
    def fact2_cot_holds(self) -> bool:
        return self.cot_margin >= 0

    @property
    def fact2_csc2_holds(self) -> bool:
        return self.csc2_margin >= 0


def fact1_margins(t: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``ln sin(t+h) - ln sin t - (h cot t - h^2/2 csc^2 t)``."""
    return (
        np.log(np.sin(t + h))
        - np.log(np.sin(t))
        - (h / np.tan(t) - 0.5 * h**2 / np.sin(t) ** 2)
    )


def fact2_sums(m: int, alpha: float) -> tuple[float, float, float, float]:
    """``(sum cot, its lower bound, sum csc^2, its upper bound)`` for ``k = 1..K``."""
    K = (m - 1) // 2
    t = np.pi * np.arange(1, K + 1) * alpha / (m + 1)
    cot_sum = float(np.sum(1.0 / np.tan(t)))
    csc2_sum = float(np.sum(1.0 / np.sin(t) ** 2))
    cot_bound = (m + 1) / (np.pi * alpha) * math.log(m + 1)
    csc2_bound = 2.0 * (m + 1) ** 2 / (np.pi**2 * alpha**2)
    return cot_sum, float(cot_bound), csc2_sum, float(csc2_bound)


def verify_facts(m: int, alpha: float, n_t: int = 200, n_h: int = 200) -> FactsReport:
    """Numerical scan of the two elementary facts behind the ``Ztilde`` lemma."""
    if m < 1 or m % 2 == 0:
        raise InvalidParameters(f"m must be odd, got {m}")
    if not 0 < alpha < 1:
        raise InvalidParameters(f"alpha must lie in (0, 1), got {alpha}")
    half = np.pi / 2.0
    t = np.linspace(half / n_t, half, n_t)[:, None]
    frac = np.linspace(0.0, 1.0, n_h)[None, :]
    h = frac * (half - t)
    marg = fact1_margins(t, h)
    # roundoff floor of the log-sine difference
    floor = -1e-12 * (1.0 + np.abs(np.log(np.sin(t))) + h / np.tan(t))
    cot_sum, cot_bound, csc2_sum, csc2_bound = fact2_sums(m, alpha)
    return FactsReport(
        m=m,
        alpha=alpha,
        fact1_min_margin=float(marg.min()),
        fact1_holds=bool(np.all(marg >= floor)),
        cot_sum=cot_sum,
        cot_bound=cot_bound,
        csc2_sum=csc2_sum,
        csc2_bound=csc2_bound,
    )


def interpolation_residuals(params: ConverseParams, gamma: float) -> dict[str, float]:
    """Deviation of ``P_{m,delta,gamma}`` from the diagonalizing conditions at the nodes."""
    X = build_support(params)
    l = center_index(params)
    P = p_converse(params, gamma)
    dP = derivative(P)
    vals = evaluate(P, X.points)
    slopes = evaluate(dP, X.points)
    others = np.delete(np.arange(X.s), l)
    return {
        "value_at_center": float(abs(vals[l] - 1.0)),
        "value_elsewhere": float(np.max(np.abs(vals[others]))) if others.size else 0.0,
        "slope": float(np.max(np.abs(slopes)) / (TWO_PI * max(P.degree, 1))),
    }


def distance_to_support(X: SupportSet, w) -> np.ndarray:
    return np.min(torus_distance(np.asarray(w, float)[..., None], X.points), axis=-1)
