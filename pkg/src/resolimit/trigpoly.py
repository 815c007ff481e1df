"""1-periodic complex trigonometric polynomials.

A polynomial of degree ``m`` is stored by its ``2m+1`` coefficients in
ascending frequency order, ``coeffs[j]`` being the coefficient of
``exp(i 2 pi (j - m) w)``.  Every function here is pure; ``TrigPoly``
instances are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi

# evaluation is chunked so that (points x coefficients) stays below this size
_CHUNK = 1 << 20


class SineDomainError(ValueError):
    """A sine factor vanishes at the requested evaluation point."""


def wrap(x):
    """Reduce torus coordinates to ``[0, 1)``."""
    r = np.mod(x, 1.0)
    # np.mod(-1e-18, 1.0) == 1.0 in floating point
    r = np.where(r >= 1.0, 0.0, r)
    if np.ndim(r) == 0:
        return float(r)
    return r


def torus_distance(x, y):
    """Wrap-around distance ``min_p |x - y + p|``."""
    d = np.abs(np.mod(np.asarray(x, float) - np.asarray(y, float) + 0.5, 1.0) - 0.5)
    if np.ndim(d) == 0:
        return float(d)
    return d


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Trigonometric polynomial ``Q(w) = sum_{k=-m}^{m} q_k exp(i 2 pi k w)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size % 2 != 1:
            raise ValueError(f"coefficient vector must have odd length 2m+1, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, degree: int = 0) -> "TrigPoly":
        return cls(np.zeros(2 * degree + 1, complex))

    @classmethod
    def constant(cls, value: complex = 1.0, degree: int = 0) -> "TrigPoly":
        c = np.zeros(2 * degree + 1, complex)
        c[degree] = value
        return cls(c)

    @classmethod
    def monomial(cls, k: int, value: complex = 1.0, degree: int | None = None) -> "TrigPoly":
        """``value * exp(i 2 pi k w)`` embedded in degree ``max(|k|, degree)``."""
        d = abs(k) if degree is None else max(abs(k), degree)
        c = np.zeros(2 * d + 1, complex)
        c[d + k] = value
        return cls(c)

    @property
    def degree(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def frequencies(self) -> np.ndarray:
        m = self.degree
        return np.arange(-m, m + 1)

    def coeff(self, k: int) -> complex:
        m = self.degree
        return complex(self.coeffs[m + k]) if abs(k) <= m else 0j

    def __call__(self, w):
        return evaluate(self, w)

    def derivative(self, order: int = 1) -> "TrigPoly":
        return derivative(self, order)

    def pad(self, degree: int) -> "TrigPoly":
        """Same polynomial viewed in a space of (larger) degree."""
        m = self.degree
        if degree < m:
            raise ValueError("cannot pad to a smaller degree")
        c = np.zeros(2 * degree + 1, complex)
        c[degree - m : degree + m + 1] = self.coeffs
        return TrigPoly(c)

    def trim(self, tol: float = 0.0) -> "TrigPoly":
        """Drop outer coefficient pairs whose magnitude is at most ``tol``."""
        c = self.coeffs
        while c.size > 1 and abs(c[0]) <= tol and abs(c[-1]) <= tol:
            c = c[1:-1]
        return TrigPoly(c)

    def shift(self, x: float) -> "TrigPoly":
        """The polynomial ``w -> Q(w - x)``."""
        return TrigPoly(self.coeffs * np.exp(-1j * TWO_PI * self.frequencies * x))

    def reflect(self) -> "TrigPoly":
        """The polynomial ``w -> Q(-w)``."""
        return TrigPoly(self.coeffs[::-1])

    def conj(self) -> "TrigPoly":
        """The polynomial ``w -> conj(Q(w))`` on the real torus."""
        return TrigPoly(np.conj(self.coeffs[::-1]))

    def l1(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def samples(self, n: int) -> np.ndarray:
        """Values on the uniform grid ``j / n``, ``j = 0..n-1``."""
        return uniform_samples(self, n)

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other)
        d = max(self.degree, other.degree)
        return TrigPoly(self.pad(d).coeffs + other.pad(d).coeffs)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return multiply(self, other)
        return TrigPoly(self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return TrigPoly(self.coeffs / scalar)

    def __repr__(self):
        return f"TrigPoly(degree={self.degree})"


def evaluate(Q: TrigPoly, w):
    """Evaluate ``Q`` at torus points ``w`` (scalar or array)."""
    w_arr = np.asarray(w, dtype=float)
    flat = w_arr.ravel()
    k = Q.frequencies
    out = np.empty(flat.size, complex)
    step = max(1, _CHUNK // k.size)
    for start in range(0, flat.size, step):
        block = flat[start : start + step]
        # reducing k*w mod 1 keeps the phase argument small
        phase = np.mod(np.outer(block, k), 1.0)
        out[start : start + step] = np.exp(1j * TWO_PI * phase) @ Q.coeffs
    if w_arr.ndim == 0:
        return complex(out[0])
    return out.reshape(w_arr.shape)


def uniform_samples(Q: TrigPoly, n: int) -> np.ndarray:
    """``Q(j/n)`` for ``j = 0..n-1`` via one inverse FFT."""
    if n < 1:
        raise ValueError("n must be positive")
    buf = np.zeros(n, complex)
    np.add.at(buf, np.mod(Q.frequencies, n), Q.coeffs)
    return np.fft.ifft(buf) * n


def derivative(Q: TrigPoly, order: int = 1) -> TrigPoly:
    """Coefficient-wise ``(i 2 pi k)^order q_k``; the degree is unchanged."""
    return TrigPoly(Q.coeffs * (1j * TWO_PI * Q.frequencies) ** order)


def multiply(A: TrigPoly, B: TrigPoly) -> TrigPoly:
    """Product polynomial of degree ``deg A + deg B`` (direct convolution)."""
    return TrigPoly(np.convolve(A.coeffs, B.coeffs))


def _in_balls(w: np.ndarray, centers: np.ndarray, radius: float) -> np.ndarray:
    if centers.size == 0 or radius <= 0:
        return np.zeros(w.shape, bool)
    d = torus_distance(w[:, None], centers[None, :])
    return np.any(d < radius, axis=1)


def sup_norm(
    Q: TrigPoly,
    oversampling: int = 8,
    exclude: Sequence[float] | np.ndarray | None = None,
    radius: float = 0.0,
) -> tuple[float, float]:
    """Maximum of ``|Q|`` over the torus and a point where it is attained.

    The torus is sampled on ``oversampling * (2m+1)`` points; every discrete
    local maximum that can still beat the grid maximum is then polished by
    safeguarded Newton iterations on ``|Q(w)|^2``.

    With ``exclude`` the maximum is taken over the torus minus the open
    wrap-around balls of the given ``radius`` around those centers; the
    ball boundaries are always included as candidates.
    """
    if oversampling < 4:
        raise ValueError("oversampling must be at least 4")
    m = Q.degree
    n = oversampling * (2 * m + 1)
    grid = np.arange(n) / n
    f = np.abs(uniform_samples(Q, n)) ** 2

    centers = np.array([] if exclude is None else wrap(np.asarray(exclude, float)), float).ravel()
    allowed = ~_in_balls(grid, centers, radius)

    cand_w = []
    if centers.size and radius > 0:
        edges = wrap(np.concatenate([centers - radius, centers + radius]))
        edges = edges[~_in_balls(edges, centers, radius * (1 - 1e-12))]
        cand_w.append(edges)

    if allowed.any():
        fa = np.where(allowed, f, -np.inf)
        fmax = fa.max()
        is_peak = allowed & (f >= np.roll(f, 1)) & (f >= np.roll(f, -1))
        # a maximum between grid points exceeds its neighbours by a bounded amount
        slack = min(1.0, 8.0 * np.pi**2 * m**2 / n**2)
        is_peak &= f >= fmax * (1.0 - slack)
        peaks = grid[is_peak]
        polished = _newton_polish(Q, peaks, 1.0 / n)
        keep = ~_in_balls(polished, centers, radius) if centers.size else np.ones(polished.size, bool)
        cand_w.append(np.where(keep, polished, peaks))
        cand_w.append(grid[allowed][[int(np.argmax(f[allowed]))]])

    if not cand_w or sum(c.size for c in cand_w) == 0:
        return 0.0, 0.0
    cand = np.concatenate(cand_w)
    vals = np.abs(evaluate(Q, cand))
    i = int(np.argmax(vals))
    return float(vals[i]), float(wrap(cand[i]))


def _newton_polish(Q: TrigPoly, w0: np.ndarray, width: float, max_iter: int = 50) -> np.ndarray:
    """Local maximizers of ``|Q|^2`` in ``w0 +- width``.

    Safeguarded Newton on ``g = d/dw |Q|^2``: a step leaving the current
    sign-change bracket of ``g`` is replaced by bisection; brackets without a
    sign change fall back to golden-section search on ``|Q|^2``.
    """
    if w0.size == 0:
        return w0
    d1 = derivative(Q)
    d2 = derivative(d1)

    def parts(w):
        q, q1, q2 = evaluate(Q, w), evaluate(d1, w), evaluate(d2, w)
        g = 2.0 * np.real(q1 * np.conj(q))
        h = 2.0 * (np.abs(q1) ** 2 + np.real(q2 * np.conj(q)))
        return g, h

    w0 = w0.astype(float)
    a, b = w0 - width, w0 + width
    ga, _ = parts(a)
    gb, _ = parts(b)
    bracketed = (ga > 0) & (gb < 0)
    w = w0.copy()

    idx = np.flatnonzero(bracketed)
    lo, hi, x = a[idx], b[idx], w0[idx]
    active = np.ones(idx.size, bool)
    for _ in range(max_iter):
        if not active.any():
            break
        g, h = parts(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            nx = x - g / h
        lo = np.where(g > 0, x, lo)
        hi = np.where(g < 0, x, hi)
        inside = np.isfinite(nx) & (nx > lo) & (nx < hi)
        nx = np.where(inside, nx, 0.5 * (lo + hi))
        step = np.abs(nx - x)
        x = np.where(active, nx, x)
        active &= (step >= 1e-14) & (g != 0)
    w[idx] = x

    idx = np.flatnonzero(~bracketed)
    if idx.size:
        lo, hi = a[idx], b[idx]
        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
        fc, fd = np.abs(evaluate(Q, c)), np.abs(evaluate(Q, d))
        for _ in range(80):
            left = fc >= fd
            hi = np.where(left, d, hi)
            lo = np.where(left, lo, c)
            c_new = np.where(left, hi - invphi * (hi - lo), d)
            d_new = np.where(left, c, lo + invphi * (hi - lo))
            c, d = c_new, d_new
            fc, fd = np.abs(evaluate(Q, c)), np.abs(evaluate(Q, d))
        best = np.where(fc >= fd, c, d)
        start = w0[idx]
        w[idx] = np.where(np.abs(evaluate(Q, best)) >= np.abs(evaluate(Q, start)), best, start)
    return wrap(w)


def log_abs_sin_pi(x) -> np.ndarray:
    """``log|sin(pi x)|`` with the argument reduced to ``[-1/2, 1/2]`` first.

    Raises ``SineDomainError`` when some ``x`` is an integer.
    """
    x = np.asarray(x, float)
    r = np.mod(x + 0.5, 1.0) - 0.5
    if np.any(r == 0.0):
        raise SineDomainError("sine factor vanishes (argument is an integer multiple of pi)")
    return np.log(np.abs(np.sin(np.pi * r)))


def log_eval_sine_product(factors: Iterable[tuple[float, float]]) -> float:
    """``log prod_j |sin(pi offset_j)| / |sin(pi scale_j)|`` summed in the log domain."""
    pairs = np.asarray(list(factors), float).reshape(-1, 2)
    if pairs.size == 0:
        return 0.0
    return float(np.sum(log_abs_sin_pi(pairs[:, 0])) - np.sum(log_abs_sin_pi(pairs[:, 1])))
