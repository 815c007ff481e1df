"""Dual certificates and diagonalizing families.

A certificate for support ``X`` and unimodular signs ``u`` is a polynomial
``Q`` of degree ``m`` with ``Q(x_k) = u_k`` and ``|Q| < 1`` away from ``X``;
it exists exactly when TV minimization recovers every measure with that
support and sign pattern.  Two routes are offered:

* :func:`construct_certificate` builds one candidate by kernel interpolation
  (success proves existence, failure proves nothing);
* :func:`certificate_feasibility` decides, up to discretization, whether any
  polynomial of degree ``m`` does the job, and returns rigorous bracketing
  bounds on the best achievable off-support modulus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from resolimit.converse import SupportSet, eta, vanishing_poly
from resolimit.trigpoly import (
    TWO_PI,
    TrigPoly,
    derivative,
    evaluate,
    multiply,
    sup_norm,
    torus_distance,
    uniform_samples,
)


class DegenerateSupport(ValueError):
    """Interpolation system is singular (nodes too close for the kernel)."""


class CapacityError(ValueError):
    """More nodes than the polynomial degree allows."""


class PatternError(ValueError):
    """Certificates do not carry the expected Fourier sign patterns."""


class FactorizationFailed(RuntimeError):
    """The polynomial does not lie in the ideal generated by ``Z_{X,l}``."""


def sign_pattern(values) -> np.ndarray:
    """Validated unimodular vector."""
    u = np.asarray(values, complex).ravel()
    if np.any(np.abs(np.abs(u) - 1.0) > 1e-12):
        raise ValueError("sign pattern entries must have modulus one")
    return u


def fourier_patterns(s: int) -> list[np.ndarray]:
    """The ``s`` DFT columns ``u^(k)_j = exp(i 2 pi k j / s)``, ``k, j = 0..s-1``."""
    j = np.arange(s)
    return [np.exp(1j * TWO_PI * k * j / s) for k in range(s)]


def random_pattern(s: int, rng: np.random.Generator) -> np.ndarray:
    return np.exp(1j * TWO_PI * rng.random(s))


def fejer_kernel(m: int, power: int = 2) -> TrigPoly:
    """``F_M^power`` with ``F_M(t) = (sin(pi M t) / (M sin(pi t)))^2``, of degree at most ``m``.

    ``M = floor(m / power) + 1``; ``K(0) = 1`` and the result is padded to degree ``m``.
    """
    if power < 1:
        raise ValueError("kernel power must be positive")
    M = m // power + 1
    k = np.arange(-(M - 1), M)
    base = TrigPoly((M - np.abs(k)) / M**2)
    K = base
    for _ in range(power - 1):
        K = multiply(K, base)
    K = TrigPoly(K.coeffs.real)
    return K.pad(m)


def default_exclusion(m: int) -> float:
    return 0.1 / m


@dataclass
class CertificateReport:
    polynomial: TrigPoly
    interp_residual: float
    off_support_max: float
    off_support_argmax: float
    valid: bool
    support: SupportSet
    pattern: np.ndarray
    margin: float = 1e-6
    r_excl: float = 0.0


def _interp_residual(Q: TrigPoly, X: SupportSet, u: np.ndarray) -> float:
    vals = evaluate(Q, X.points)
    slopes = evaluate(derivative(Q), X.points) / (TWO_PI * max(Q.degree, 1))
    return float(max(np.max(np.abs(vals - u)), np.max(np.abs(slopes))))


def validate_certificate(
    Q: TrigPoly,
    X: SupportSet,
    u,
    r_excl: float | None = None,
    margin: float = 1e-6,
    oversampling: int = 8,
) -> CertificateReport:
    """Measure how far ``Q`` is from satisfying the certificate conditions.

    Derivative residuals are reported relative to ``2 pi m``.
    """
    u = sign_pattern(u)
    m = Q.degree
    r = default_exclusion(max(m, 1)) if r_excl is None else r_excl
    resid = _interp_residual(Q, X, u)
    off, arg = sup_norm(Q, oversampling, exclude=X.points, radius=r)
    valid = resid <= 1e-8 and off < 1.0 - margin
    return CertificateReport(Q, resid, off, arg, bool(valid), X, u, margin, r)


def construct_certificate(
    X: SupportSet,
    u,
    m: int,
    power: int = 2,
    r_excl: float | None = None,
    margin: float = 1e-6,
) -> CertificateReport:
    """Kernel interpolation ``Q = sum_k a_k K(w - x_k) + b_k K'(w - x_k)``.

    ``(a, b)`` solve ``Q(x_j) = u_j`` and ``Q'(x_j) = 0``.  The report is
    returned whether or not the result is a valid certificate.
    """
    u = sign_pattern(u)
    s = X.s
    if u.size != s:
        raise ValueError("sign pattern and support have different lengths")
    if s > m:
        raise CapacityError(f"{s} nodes cannot be certified by a polynomial of degree {m}")
    K = fejer_kernel(m, power)
    scale = TWO_PI * m
    K1 = derivative(K) / scale
    K2 = derivative(K1) / scale
    d = X.points[:, None] - X.points[None, :]
    k0, k1, k2 = (np.real(evaluate(P, d)) for P in (K, K1, K2))
    A = np.block([[k0, k1], [k1, k2]])
    if np.linalg.cond(A) > 1e12:
        raise DegenerateSupport("interpolation system is numerically singular")
    rhs = np.concatenate([u, np.zeros(s, complex)])
    sol = np.linalg.solve(A.astype(complex), rhs)
    a, b = sol[:s], sol[s:]
    freq = K.frequencies
    phases = np.exp(-1j * TWO_PI * np.outer(X.points, freq))
    coeffs = K.coeffs * ((a @ phases) + (b @ phases) * (1j * TWO_PI * freq) / scale)
    return validate_certificate(TrigPoly(coeffs), X, u, r_excl, margin)


@dataclass
class FeasibilityResult:
    """Outcome of the discretized certificate-existence problem.

    ``lower_bound <= t* <= best_offmax`` where ``t*`` is the least possible
    maximum of ``|Q|`` over the off-support grid among interpolating ``Q``.
    Both ends are certified: ``best_offmax`` by the returned polynomial,
    ``lower_bound`` by a dual vector orthogonal to the interpolation space.
    """

    status: str
    best_offmax: float
    lower_bound: float
    threshold: float
    guard: float
    iterations: int
    polynomial: TrigPoly | None = None
    history: list = field(default_factory=list, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _constraint_matrix(X: SupportSet, m: int) -> np.ndarray:
    k = np.arange(-m, m + 1)
    E0 = np.exp(1j * TWO_PI * np.outer(X.points, k))
    E1 = E0 * (1j * k / max(m, 1))
    return np.vstack([E0, E1])


def interpolation_space(X: SupportSet, u, m: int, rcond: float = 1e-10) -> tuple[np.ndarray, np.ndarray, float]:
    """Particular coefficient vector, null-space basis and consistency residual.

    Coefficients satisfy ``Q(x_j) = u_j`` and ``Q'(x_j) = 0``.
    """
    u = sign_pattern(u)
    E = _constraint_matrix(X, m)
    b = np.concatenate([u, np.zeros(X.s, complex)])
    U, sv, Vh = np.linalg.svd(E)
    r = int(np.sum(sv > rcond * sv[0]))
    coef = (U[:, :r].conj().T @ b) / sv[:r]
    q0 = Vh[:r].conj().T @ coef
    N = Vh[r:].conj().T
    resid = float(np.max(np.abs(E @ q0 - b)))
    return q0, N, resid


def _clip(v: np.ndarray, t: float) -> np.ndarray:
    a = np.abs(v)
    return np.where(a > t, v * (t / np.maximum(a, 1e-300)), v)


def certificate_feasibility(
    X: SupportSet,
    u,
    m: int,
    grid_n: int | None = None,
    r_excl: float | None = None,
    max_iter: int = 10_000,
    tol: float = 1e-7,
    relaxation: float = 1.5,
    refine: bool = True,
    start: TrigPoly | None = None,
) -> FeasibilityResult:
    """Decide whether some ``Q`` of degree ``m`` interpolates ``u`` on ``X`` with ``|Q| < 1`` off ``X``.

    The constraints ``|Q(w_i)| <= t`` are imposed on the uniform grid of
    ``grid_n`` points minus the exclusion balls around the nodes; relaxed
    alternating projections run between that ball product and the affine
    interpolation set.  ``feasible`` means ``t* < 1 - guard`` with
    ``guard = pi^2 m^2 / (2 grid_n^2) * t*``; ``infeasible`` means the dual
    bound already reaches that threshold; anything unresolved within the
    iteration budget is ``inconclusive``.
    """
    u = sign_pattern(u)
    if X.s > m:
        raise CapacityError(f"{X.s} nodes exceed degree {m}")
    if u.size != X.s:
        raise ValueError("sign pattern and support have different lengths")
    grid_n = 8 * (2 * m + 1) if grid_n is None else grid_n
    if grid_n < 8 * (2 * m + 1):
        raise ValueError("grid_n must be at least 8(2m+1)")
    r = default_exclusion(m) if r_excl is None else r_excl
    g_rate = np.pi**2 * m**2 / (2.0 * grid_n**2)
    tau = 1.0 / (1.0 + g_rate)

    q0, N, cons = interpolation_space(X, u, m)
    if cons > 1e-8:
        return FeasibilityResult("infeasible", np.inf, np.inf, tau, g_rate * tau, 0)

    grid = np.arange(grid_n) / grid_n
    dist = np.min(torus_distance(grid[:, None], X.points[None, :]), axis=1)
    off = grid[dist >= r]
    k = np.arange(-m, m + 1)
    S = np.exp(1j * TWO_PI * np.mod(np.outer(off, k), 1.0))
    g = S @ q0
    if N.shape[1]:
        Uo, _ = np.linalg.qr(S @ N)
    else:
        Uo = np.zeros((off.size, 0), complex)

    def to_affine(v):
        return g + Uo @ (Uo.conj().T @ (v - g))

    def dual_bound(w):
        w = w - Uo @ (Uo.conj().T @ w)
        n1 = np.sum(np.abs(w))
        if n1 <= 0:
            return 0.0
        return float(abs(np.vdot(w, g)) / n1)

    v = to_affine(S @ start.pad(m).coeffs) if start is not None else g.copy()
    best_v = v
    hi = float(np.max(np.abs(v)))
    lo = dual_bound(_clip(v, tau) - v) if hi > tau else 0.0
    it = 0
    history = []

    def run(t: float, budget: int):
        nonlocal v, best_v, hi, lo, it
        for _ in range(budget):
            it += 1
            b = _clip(v, t)
            w = b - v
            if not np.any(w):
                return "below"
            step = Uo @ (Uo.conj().T @ w)
            v_new = v + relaxation * step
            # reproject to keep v exactly affine-feasible despite roundoff
            if it % 200 == 0:
                v_new = to_affine(v_new)
            cur = float(np.max(np.abs(v_new)))
            if cur < hi:
                hi, best_v = cur, v_new
            lb = dual_bound(w)
            lo = max(lo, lb)
            moved = float(np.linalg.norm(v_new - v))
            v = v_new
            if hi < t or (t < tau and hi <= t * (1.0 + tol)):
                return "below"
            if lo >= t:
                return "above"
            if moved <= tol * 1e-3 * (1.0 + np.linalg.norm(v)):
                return "stalled"
        return "budget"

    outcome = "below" if hi < tau else ("above" if lo >= tau else run(tau, max_iter))
    if outcome == "below":
        status = "feasible"
    elif outcome == "above":
        status = "infeasible"
    else:
        status = "inconclusive"
    history.append((tau, outcome))

    # tighten the bracket around t* with the remaining budget
    if refine and status != "inconclusive":
        t = 0.5 * (lo + hi)
        while it < max_iter and hi - lo > tol * max(hi, 1e-12):
            per = max(50, (max_iter - it) // 8)
            res = run(t, min(per, max_iter - it))
            history.append((t, res))
            # an unresolved level is retried closer to the certified upper end
            t = 0.5 * (lo + hi) if res in ("below", "above") else 0.5 * (t + hi)

    coeffs = q0 + N @ (N.conj().T @ _lstsq_coeffs(S, best_v, q0))
    Q = TrigPoly(coeffs)
    return FeasibilityResult(status, hi, lo, tau, g_rate * hi, it, Q, history)


def _lstsq_coeffs(S: np.ndarray, v: np.ndarray, q0: np.ndarray) -> np.ndarray:
    """Coefficient offset from ``q0`` reproducing samples ``v``."""
    delta, *_ = np.linalg.lstsq(S, v - S @ q0, rcond=None)
    return delta


@dataclass
class DiagFamilyReport:
    members: list[TrigPoly]
    kronecker_residual: float
    derivative_residual: float
    sup_norms: list[float]
    stable: bool


def build_diag_family(certs: Sequence[CertificateReport], tol: float = 1e-6) -> DiagFamilyReport:
    """Inverse-DFT combination ``P_l = (1/s) sum_k exp(-i 2 pi k l / s) Q_k`` of Fourier-pattern certificates."""
    s = len(certs)
    if s == 0:
        raise ValueError("need at least one certificate")
    if not all(c.valid for c in certs):
        raise ValueError("every input certificate must be valid")
    X = certs[0].support
    if X.s != s or any(c.support is not X and not np.array_equal(c.support.points, X.points) for c in certs):
        raise PatternError("certificates must share one support of size s")
    for k, (c, ref) in enumerate(zip(certs, fourier_patterns(s))):
        if np.max(np.abs(c.pattern - ref)) > 1e-12:
            raise PatternError(f"certificate {k} does not carry Fourier pattern {k}")
    m = max(c.polynomial.degree for c in certs)
    Qs = np.array([c.polynomial.pad(m).coeffs for c in certs])
    kk = np.arange(s)
    W = np.exp(-1j * TWO_PI * np.outer(kk, kk) / s) / s
    members = [TrigPoly(row) for row in W @ Qs]
    vals = np.array([evaluate(P, X.points) for P in members])
    slopes = np.array([evaluate(derivative(P), X.points) for P in members]) / (TWO_PI * max(m, 1))
    kron = float(np.max(np.abs(vals - np.eye(s))))
    dres = float(np.max(np.abs(slopes)))
    norms = [sup_norm(P, 8)[0] for P in members]
    stable = all(abs(n - 1.0) <= tol for n in norms)
    return DiagFamilyReport(members, kron, dres, norms, stable)


@dataclass
class FactorCheck:
    R: TrigPoly
    residual: float
    value_error: float
    slope_error: float

    def __iter__(self):
        yield self.R
        yield self.residual


def forced_factor_check(X: SupportSet, l: int, P: TrigPoly, vanish_tol: float = 1e-7) -> FactorCheck:
    """Recover ``R`` with ``P = Z_{X,l} R`` by least-squares deconvolution.

    Raises ``FactorizationFailed`` if ``P`` does not vanish doubly on the
    other nodes (checked up front) or if the deconvolution leaves a residual
    above ``1e-4``.
    """
    s = X.s
    m = P.degree
    if m < s - 1:
        raise ValueError(f"degree {m} is below s-1 = {s - 1}")
    others = np.delete(X.points, l)
    scale = max(1.0, float(np.max(np.abs(P.coeffs))) * (2 * m + 1))
    if others.size:
        v = np.max(np.abs(evaluate(P, others)))
        d = np.max(np.abs(evaluate(derivative(P), others))) / (TWO_PI * max(m, 1))
        if max(v, d) > vanish_tol * scale:
            raise FactorizationFailed(f"P and P' must vanish at every node other than x_l (defect {max(v, d):.3g})")
    Z = vanishing_poly(X, l)
    dr = m - (s - 1)
    # convolution matrix: coeffs(Z * R) = T @ coeffs(R)
    T = np.zeros((2 * m + 1, 2 * dr + 1), complex)
    for j in range(2 * dr + 1):
        T[j : j + Z.coeffs.size, j] = Z.coeffs
    r, *_ = np.linalg.lstsq(T, P.coeffs, rcond=None)
    R = TrigPoly(r)
    n = 8 * (2 * m + 1)
    resid = float(np.max(np.abs(uniform_samples(P, n) - uniform_samples(multiply(Z, R), n))))
    if resid > 1e-4:
        raise FactorizationFailed(f"P is not a multiple of Z_(X,l): grid residual {resid:.3g}")
    xl = X.points[l]
    value_error = abs(complex(evaluate(R, xl)) - complex(evaluate(P, xl)))
    slope_error = abs(complex(evaluate(derivative(R), xl)) + eta(X, l) * complex(evaluate(P, xl))
                      - complex(evaluate(derivative(P), xl)))
    return FactorCheck(R, resid, float(value_error), float(slope_error))
