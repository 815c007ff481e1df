"""Moment model and a grid-then-refine solver for total-variation recovery.

Moment convention: for ``mu = sum_j c_j delta_{x_j}``

    y_k = sum_j c_j exp(-i 2 pi k x_j),    k = -m..m,

stored in ascending ``k``, so ``moments(delta_0)`` is the all-ones vector.
With ``Q(w) = sum_k q_k exp(i 2 pi k w)`` this gives the pairing
``<y, q> = q^H y = sum_j c_j conj(Q(x_j))``.

The grid program ``min sum_i |c_i|  s.t.  A c = y`` over amplitudes on the
uniform grid ``i / n`` is solved through its dual

    max Re(q^H y)   s.t.   |Q(i/n)| <= 1 for every grid point,

with a log-barrier Newton method on ``q``.  The Newton matrix is a
Toeplitz-plus-Hankel form whose entries come from one FFT of per-point
weights; near-active points, whose weights are too large to be summed that
way, are added as explicit rank-two blocks.  The grid primal is read off
the barrier as ``2 Q_i / (t (1 - |Q_i|^2))`` plus a minimum-norm equality
correction.

Refinement clusters the barrier weights, then polishes positions and
amplitudes by nonlinear least squares on the moment residual.  The emitted
dual polynomial is the interpolant of the estimated signs with the
smallest grid sup-norm, which doubles as the optimality certificate.
"""

from __future__ import annotations

import concurrent.futures as cf
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import least_squares, linear_sum_assignment

from .certificates import interpolation_space
from .converse import SupportSet
from .trigpoly import TWO_PI, TrigPoly, evaluate, torus_distance, uniform_samples, wrap


@dataclass(frozen=True, eq=False)
class SparseMeasure:
    """``sum_k c_k delta_{x_k}`` on the torus."""

    support: SupportSet
    amplitudes: np.ndarray

    def __post_init__(self):
        c = np.array(self.amplitudes, dtype=complex).ravel()
        if c.size != self.support.s:
            raise ValueError(f"{self.support.s} support points but {c.size} amplitudes")
        if np.any(np.abs(c) <= 0):
            raise ValueError("amplitudes must be nonzero")
        c.setflags(write=False)
        object.__setattr__(self, "amplitudes", c)

    @classmethod
    def from_arrays(cls, points, amplitudes) -> "SparseMeasure":
        return cls(SupportSet(np.atleast_1d(np.asarray(points, float))), amplitudes)

    @property
    def s(self) -> int:
        return self.support.s

    @property
    def points(self) -> np.ndarray:
        return self.support.points

    @property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.amplitudes)))


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Moments ``y_{-m..m}`` in ascending frequency order."""

    m: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).ravel()
        if v.size != 2 * self.m + 1:
            raise ValueError(f"expected {2 * self.m + 1} moments, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)

    def conjugate_symmetry_error(self) -> float:
        """``max_k |y_{-k} - conj(y_k)|``; zero for real measures."""
        return float(np.max(np.abs(self.values[::-1] - np.conj(self.values))))


def atom(w: float, m: int) -> np.ndarray:
    """``exp(-i 2 pi k w)`` for ``k = -m..m``; the moments are ``int atom dmu``."""
    k = np.arange(-m, m + 1)
    return np.exp(-1j * TWO_PI * np.mod(k * float(w), 1.0))


def moment_matrix(points, m: int) -> np.ndarray:
    """Columns ``atom(x_j, m)``."""
    k = np.arange(-m, m + 1)
    x = np.atleast_1d(np.asarray(points, float))
    return np.exp(-1j * TWO_PI * np.mod(np.outer(k, x), 1.0))


def moments(mu: SparseMeasure, m: int) -> MomentVector:
    return MomentVector(m, moment_matrix(mu.points, m) @ mu.amplitudes)


def pairing(y: MomentVector, q) -> complex:
    """``q^H y``, equal to ``sum_j c_j conj(Q(x_j))``."""
    return complex(np.vdot(np.asarray(q, complex), y.values))


# ---------------------------------------------------------------- matching


def hausdorff(a, b) -> float:
    """Wrap-around Hausdorff distance between two finite point sets."""
    a = np.atleast_1d(np.asarray(a, float))
    b = np.atleast_1d(np.asarray(b, float))
    if a.size == 0 or b.size == 0:
        return 0.0 if a.size == b.size else float("inf")
    D = torus_distance(a[:, None], b[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def amplitude_error(truth: SparseMeasure, est: SparseMeasure) -> float:
    """Max relative amplitude error after optimal one-to-one matching; inf on count mismatch."""
    if truth.s != est.s:
        return float("inf")
    D = torus_distance(truth.points[:, None], est.points[None, :])
    rows, cols = linear_sum_assignment(D)
    rel = np.abs(est.amplitudes[cols] - truth.amplitudes[rows]) / np.abs(truth.amplitudes[rows])
    return float(rel.max())


# ---------------------------------------------------------------- solver


@dataclass(frozen=True)
class SolverConfig:
    grid_factor: int = 8
    barrier_factor: float = 20.0  # barrier weight shrinks geometrically by this factor
    gap_tol: float = 1e-7  # relative duality-gap target of the barrier path
    newton_tol: float = 1e-6  # inner stopping rule on the Newton decrement
    split_tol: float = 1e-4  # points with 1 - |Q|^2 below this enter the Newton matrix explicitly
    max_newton: int = 3000
    residual_tol: float = 1e-8
    inconclusive_tol: float = 1e-6
    atom_tol: float = 1e-13  # relative amplitude below which grid atoms are not reported
    prune_tol: float = 1e-7
    peak_tol: float = 1e-3
    seed_tol: float = 1e-3
    merge_radius: float = 0.02  # in units of 1/m
    cert_tol: float = 1e-6
    interp_tol: float = 1e-5
    match_tol: float = 0.05  # in units of 1/m
    amp_tol: float = 1e-3


@dataclass(frozen=True, eq=False)
class GridSolution:
    points: np.ndarray
    amplitudes: np.ndarray
    dual: np.ndarray
    grid_n: int
    objective: float
    dual_objective: float
    residual: float
    newton_steps: int
    converged: bool

    @property
    def gap(self) -> float:
        return abs(self.objective - self.dual_objective) / max(1.0, abs(self.objective))


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    estimated: SparseMeasure | None
    dual_poly: TrigPoly | None
    objective: float
    support_error: float | None
    status: str
    amplitude_error: float | None = None
    grid: GridSolution | None = None
    certificate_ok: bool = False
    certificate_max: float = float("nan")
    interp_residual: float = float("nan")
    residual: float = float("nan")
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def success(self) -> bool:
        return self.status == "success"


class _Toeplitz:
    """Index maps for the Toeplitz and Hankel parts of the Newton matrix."""

    def __init__(self, m: int, n: int):
        k = np.arange(-m, m + 1)
        self.m, self.n, self.d = m, n, 2 * m + 1
        self.k_mod = np.mod(k, n)
        self.t_idx = np.mod(k[None, :] - k[:, None], n)
        self.h_idx = np.mod(-(k[None, :] + k[:, None]), n)

    def values(self, q: np.ndarray) -> np.ndarray:
        buf = np.zeros(self.n, complex)
        buf[self.k_mod] = q
        return np.fft.ifft(buf) * self.n

    def adjoint(self, z: np.ndarray) -> np.ndarray:
        """``sum_i z_i exp(-i 2 pi k i/n)`` for ``k = -m..m``."""
        return np.fft.fft(z)[self.k_mod]

    def sums(self, w: np.ndarray) -> np.ndarray:
        """``S(j) = sum_i w_i exp(i 2 pi j i/n)`` for every residue ``j``."""
        return np.fft.ifft(w) * self.n


def _sym_solve(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve with a symmetric positive (semi)definite ``M``; jitter the diagonal if needed."""
    try:
        return sla.cho_solve(sla.cho_factor(M, check_finite=False), rhs, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-13 * float(np.max(np.abs(np.diag(M))))
    try:
        return sla.cho_solve(sla.cho_factor(M + jitter * np.eye(M.shape[0]), check_finite=False), rhs)
    except np.linalg.LinAlgError:
        with warnings.catch_warnings():
            # an ill-conditioned LDL solve still yields a usable search direction
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            return sla.solve(M, rhs, assume_a="sym", check_finite=False)


def _newton_direction(ops: _Toeplitz, Q: np.ndarray, u: np.ndarray, rhs: np.ndarray, split_tol: float) -> np.ndarray:
    """Solve ``H dx = rhs`` for the real Hessian of ``-sum log(1 - |Q_i|^2)``.

    Points with ``u_i < split_tol`` carry weights too large to be summed by
    FFT without swamping the rest; their rank-two blocks are added
    explicitly to the Toeplitz/Hankel part of the remaining points.
    """
    big = u < split_tol
    w = np.where(big, 0.0, 1.0 / u**2)
    H1 = ops.sums(w)[ops.t_idx]
    H2 = ops.sums(np.where(big, 0.0, Q**2) * w)[ops.h_idx]
    H = 2.0 * np.block([[H1.real + H2.real, H2.imag - H1.imag], [H1.imag + H2.imag, H1.real - H2.real]])
    if big.any():
        idx = np.flatnonzero(big)
        k = np.arange(-ops.m, ops.m + 1)
        e = np.exp(1j * TWO_PI * np.mod(np.outer(idx, k) / ops.n, 1.0))
        # rows map x = [Re q; Im q] to Re Q_i and Im Q_i
        Br = np.hstack([e.real, -e.imag])
        Bi = np.hstack([e.imag, e.real])
        zr, zi, ub = Q[idx].real, Q[idx].imag, u[idx]
        a = 2.0 / ub
        b = 4.0 / ub**2
        # Hessian block 2I/u + 4 z z^T/u^2, applied as B^T D B
        R = b * zr
        I_ = b * zi
        H += (Br.T * (a + R * zr)) @ Br + (Bi.T * (a + I_ * zi)) @ Bi
        cross = (Br.T * (R * zi)) @ Bi
        H += cross + cross.T
    sc = 1.0 / np.sqrt(np.maximum(np.diag(H), 1e-300))
    return sc * _sym_solve(H * sc[:, None] * sc[None, :], sc * rhs)


def _max_step(Q: np.ndarray, dQ: np.ndarray) -> float:
    """Largest ``s`` with ``|Q + s dQ| < 1`` everywhere."""
    a = np.abs(dQ) ** 2
    b = 2.0 * np.real(np.conj(Q) * dQ)
    c = np.abs(Q) ** 2 - 1.0
    disc = np.sqrt(np.maximum(b * b - 4.0 * a * c, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(a > 0, (-b + disc) / (2.0 * a), np.inf)
    return float(np.min(root))


def _barrier_dual(y: np.ndarray, ops: _Toeplitz, cfg: SolverConfig):
    """Barrier path for ``max Re(q^H y)`` s.t. ``|Q(grid)| < 1``; returns ``(q, t, steps, converged)``."""
    d, n = ops.d, ops.n
    q = np.zeros(d, complex)
    ynorm = float(np.sum(np.abs(y)))
    if ynorm == 0.0:
        return q, np.inf, 0, True
    t = n / ynorm
    steps = 0
    while True:
        history: list[float] = []
        for _ in range(200):
            if steps >= cfg.max_newton:
                return q, t, steps, False
            Q = ops.values(q)
            u = 1.0 - np.abs(Q) ** 2
            g = -0.5 * t * y + ops.adjoint(Q / u)
            dx = _newton_direction(ops, Q, u, -2.0 * np.concatenate([g.real, g.imag]), cfg.split_tol)
            steps += 1
            dq = dx[:d] + 1j * dx[d:]
            dQ = ops.values(dq)
            s = min(1.0, 0.99 * _max_step(Q, dQ))
            f0 = -t * float(np.real(np.vdot(y, q))) - float(np.sum(np.log(u)))
            slope = float(2.0 * np.concatenate([g.real, g.imag]) @ dx)
            if not slope < 0.0:
                # the Hessian solve is no longer accurate enough to descend
                return q, t, steps, n / t <= 1e-6 * max(1.0, float(np.real(np.vdot(y, q))))
            while True:
                qn = q + s * dq
                # recompute rather than extrapolate so that the next iterate sees the same u
                un = 1.0 - np.abs(ops.values(qn)) ** 2
                if np.all(un > 0):
                    f1 = -t * float(np.real(np.vdot(y, qn))) - float(np.sum(np.log(un)))
                    if f1 <= f0 + 0.25 * s * slope or s < 1e-14:
                        break
                s *= 0.5
            q = qn
            dec = -0.5 * slope
            history.append(dec if s == 1.0 else np.inf)
            if dec < cfg.newton_tol:
                break
            # rounding floor: full steps that no longer shrink the decrement
            recent = history[-8:]
            if (
                len(recent) == 8
                and np.all(np.isfinite(recent))
                and dec > 0.5 * min(recent[:-1])
                and n / t <= 1e-6 * max(1.0, float(np.real(np.vdot(y, q))))
            ):
                return q, t, steps, True
        # each point contributes a barrier of parameter one to the gap bound
        if n / t <= cfg.gap_tol * max(1.0, float(np.real(np.vdot(y, q)))):
            return q, t, steps, True
        t *= cfg.barrier_factor


def _recover_primal(y: np.ndarray, Q: np.ndarray, t: float, ops: _Toeplitz) -> np.ndarray:
    """Barrier primal ``c_i = 2 Q_i / (t (1 - |Q_i|^2))`` plus the minimum-norm equality correction.

    On the uniform grid ``A A^H = n I``, so the correction is ``A^H r / n``.
    """
    c = 2.0 * Q / (t * (1.0 - np.abs(Q) ** 2))
    r = y - ops.adjoint(c)
    return c + ops.values(r) / ops.n


def solve_grid(y: MomentVector, grid_n: int | None = None, config: SolverConfig | None = None) -> GridSolution:
    """Grid-restricted TV program with a primal-dual pair and its KKT residual."""
    cfg = config or SolverConfig()
    m = y.m
    n = cfg.grid_factor * (2 * m + 1) if grid_n is None else int(grid_n)
    if n < 8 * (2 * m + 1):
        raise ValueError(f"grid_n must be at least 8(2m+1) = {8 * (2 * m + 1)}, got {n}")
    ops = _Toeplitz(m, n)
    yv = np.asarray(y.values, complex)
    q, t, steps, converged = _barrier_dual(yv, ops, cfg)
    grid = np.arange(n) / n
    Q = ops.values(q)
    scale = max(1.0, float(np.abs(Q).max()))
    dual_obj = float(np.real(np.vdot(yv, q))) / scale
    c = _recover_primal(yv, Q, t, ops) if np.isfinite(t) else np.zeros(n, complex)
    # an off-centre barrier iterate spreads the correction over the whole grid;
    # least squares on the heavy points is then the better primal
    with np.errstate(divide="ignore"):
        wgt = np.abs(Q) / np.maximum(1.0 - np.abs(Q) ** 2, 1e-300)
    heavy = np.flatnonzero(wgt > cfg.seed_tol * wgt.max()) if np.any(yv) else np.empty(0, int)
    if 0 < heavy.size <= 4 * (2 * m + 1):
        c2 = np.zeros(n, complex)
        c2[heavy] = np.linalg.lstsq(moment_matrix(heavy / n, m), yv, rcond=None)[0]
        ok2 = np.linalg.norm(ops.adjoint(c2) - yv) <= cfg.residual_tol * max(1.0, float(np.linalg.norm(yv)))
        if ok2 and np.sum(np.abs(c2)) < np.sum(np.abs(c)):
            c = c2
    c = np.where(np.abs(c) > cfg.atom_tol * max(float(np.abs(c).max(initial=0.0)), 1e-300), c, 0.0)
    res = float(np.linalg.norm(ops.adjoint(c) - yv))
    obj = float(np.sum(np.abs(c)))
    nz = np.flatnonzero(c)
    sol = GridSolution(
        points=grid[nz],
        amplitudes=c[nz],
        dual=q / scale,
        grid_n=n,
        objective=obj,
        dual_objective=dual_obj,
        residual=res / max(1.0, float(np.linalg.norm(yv))),
        newton_steps=steps,
        converged=converged,
    )
    return sol


def _clusters(idx: np.ndarray, n: int) -> list[np.ndarray]:
    """Runs of consecutive grid indices, joined across the wrap point."""
    if idx.size == 0:
        return []
    idx = np.sort(idx)
    breaks = np.flatnonzero(np.diff(idx) > 1) + 1
    runs = np.split(idx, breaks)
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == n - 1:
        runs[0] = np.concatenate([runs[-1] - n, runs[0]])
        runs.pop()
    return runs


def _nls(y: np.ndarray, x0: np.ndarray, c0: np.ndarray, m: int):
    s = x0.size
    k = np.arange(-m, m + 1).astype(float)

    def split(p):
        return p[:s], p[s : 2 * s] + 1j * p[2 * s :]

    def fun(p):
        x, c = split(p)
        r = moment_matrix(x, m) @ c - y
        return np.concatenate([r.real, r.imag])

    def jac(p):
        x, c = split(p)
        E = moment_matrix(x, m)
        Jx = (-1j * TWO_PI * k[:, None]) * E * c[None, :]
        J = np.hstack([Jx, E, 1j * E])
        return np.vstack([J.real, J.imag])

    p0 = np.concatenate([x0, c0.real, c0.imag])
    sol = least_squares(fun, p0, jac=jac, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    x, c = split(sol.x)
    return wrap(x), c, float(np.linalg.norm(fun(sol.x)))


def _dual_peaks(Qv: np.ndarray, tol: float) -> np.ndarray:
    """Grid indices of discrete local maxima of ``|Q|`` that reach ``1 - tol``."""
    a = np.abs(Qv)
    peak = (a >= np.roll(a, 1)) & (a > np.roll(a, -1)) & (a >= 1.0 - tol)
    return np.flatnonzero(peak)


def _polish(y: np.ndarray, x: np.ndarray, m: int, cfg: SolverConfig):
    if x.size == 0:
        return x, np.empty(0, complex), float(np.linalg.norm(y))
    c = np.linalg.lstsq(moment_matrix(x, m), y, rcond=None)[0]
    for _ in range(8):
        x, c, _ = _nls(y, x, c, m)
        n_before = x.size
        big = np.abs(c) > cfg.prune_tol * np.abs(c).max()
        x, c = _merge_close(x[big], c[big], cfg.merge_radius / m)
        if x.size == n_before:
            break
    return x, c, float(np.linalg.norm(moment_matrix(x, m) @ c - y))


def _refine(y: np.ndarray, gs: GridSolution, m: int, cfg: SolverConfig):
    """Off-grid spikes polished by NLS from grid seeds.

    Seeds are the mass centres of clusters of the barrier weights
    ``|Q|/(1 - |Q|^2)``; those stay informative even when the equality
    correction of the primal is not.  If that start fails to fit the
    moments, the near-unimodular peaks of the dual are tried instead.
    """
    n = gs.grid_n
    Qv = uniform_samples(TrigPoly(gs.dual), n)
    with np.errstate(divide="ignore"):
        wgt = np.abs(Qv) / np.maximum(1.0 - np.abs(Qv) ** 2, 1e-300)
    idx = np.flatnonzero(wgt > cfg.seed_tol * wgt.max())
    seeds = []
    for run in _clusters(idx, n):
        w = wgt[run % n]
        seeds.append(float(np.sum(w * run) / np.sum(w)) / n)
    best = _polish(y, wrap(np.array(seeds, float)), m, cfg)
    if best[2] > cfg.inconclusive_tol * max(1.0, float(np.linalg.norm(y))):
        alt = _polish(y, wrap(_dual_peaks(Qv, cfg.peak_tol) / n), m, cfg)
        if alt[2] < best[2]:
            best = alt
    return best


def _merge_close(x: np.ndarray, c: np.ndarray, radius: float):
    """Merge spikes closer than ``radius`` into their amplitude-weighted midpoint."""
    x, c = np.asarray(x, float), np.asarray(c, complex)
    while x.size > 1:
        order = np.argsort(x)
        x, c = x[order], c[order]
        gaps = torus_distance(x, np.roll(x, -1))
        j = int(np.argmin(gaps))
        if gaps[j] >= radius:
            break
        j2 = (j + 1) % x.size
        w1, w2 = abs(c[j]), abs(c[j2])
        wsum = w1 + w2 if w1 + w2 > 0 else 1.0
        xm = wrap(x[j] + torus_signed(x[j2] - x[j]) * w2 / wsum)
        cm = c[j] + c[j2]
        x = np.append(np.delete(x, [j, j2]), xm)
        c = np.append(np.delete(c, [j, j2]), cm)
    return x, c


def torus_signed(d):
    """Signed representative of a torus difference in ``[-1/2, 1/2)``."""
    return np.mod(np.asarray(d, float) + 0.5, 1.0) - 0.5


@dataclass(frozen=True, eq=False)
class InterpolantSearch:
    """Outcome of minimizing the grid sup-norm over interpolating polynomials."""

    coeffs: np.ndarray
    grid_max: float
    lower_bound: float
    steps: int
    verdict: str  # "certified", "refuted" or "undecided"


def min_sup_interpolant(
    points,
    signs,
    m: int,
    n: int,
    start: np.ndarray | None = None,
    level: float = 1.0,
    config: SolverConfig | None = None,
) -> InterpolantSearch:
    """Barrier method for ``min tau`` s.t. ``|Q(i/n)| <= tau``, ``Q(x_j) = u_j``, ``Q'(x_j) = 0``.

    Stops as soon as the iterate has grid maximum at most ``level + cert_tol``
    ("certified") or the barrier lower bound on the optimum exceeds that
    value ("refuted").
    """
    cfg = config or SolverConfig()
    X = SupportSet(np.atleast_1d(np.asarray(points, float)))
    u = np.asarray(signs, complex)
    u = u / np.abs(u)
    q0, N, _ = interpolation_space(X, u, m)
    ops = _Toeplitz(m, n)
    target = level + cfg.cert_tol
    d, r = ops.d, N.shape[1]
    if r == 0:
        gmax = float(np.abs(ops.values(q0)).max())
        return InterpolantSearch(q0, gmax, gmax, 0, "certified" if gmax <= target else "refuted")
    T = np.block([[N.real, -N.imag], [N.imag, N.real]])
    v = np.zeros(2 * r) if start is None else T.T @ np.concatenate([(start - q0).real, (start - q0).imag])

    def coeffs(vv):
        z = T @ vv
        return q0 + z[:d] + 1j * z[d:]

    q = coeffs(v)
    Q = ops.values(q)
    tau = 1.05 * float(np.abs(Q).max()) + 1e-3
    t = n / tau
    steps = 0
    best = (float(np.abs(Q).max()), q)
    lower = 0.0
    while steps < cfg.max_newton:
        for _ in range(100):
            Q = ops.values(q)
            gmax = float(np.abs(Q).max())
            if gmax < best[0]:
                best = (gmax, q)
            if gmax <= target:
                return InterpolantSearch(q, gmax, lower, steps, "certified")
            uu = tau**2 - np.abs(Q) ** 2
            g = ops.adjoint(Q / uu)
            S1 = ops.sums(tau**2 / uu**2)
            S2 = ops.sums(Q**2 / uu**2)
            H1, H2 = S1[ops.t_idx], S2[ops.h_idx]
            M = 2.0 * np.block([[H1.real + H2.real, H2.imag - H1.imag], [H1.imag + H2.imag, H1.real - H2.real]])
            h = ops.adjoint(-2.0 * tau * Q / uu**2)
            cross = 2.0 * np.concatenate([h.real, h.imag])
            H = np.empty((2 * r + 1, 2 * r + 1))
            H[:-1, :-1] = T.T @ M @ T
            H[:-1, -1] = H[-1, :-1] = T.T @ cross
            H[-1, -1] = float(np.sum(-2.0 / uu + 4.0 * tau**2 / uu**2))
            grad = np.concatenate([T.T @ (2.0 * np.concatenate([g.real, g.imag])), [t - float(np.sum(2.0 * tau / uu))]])
            step = -_sym_solve(H, grad)
            steps += 1
            dec = -float(grad @ step)
            dv, dtau = step[:-1], float(step[-1])
            dq = coeffs(dv) - q0
            dQ = ops.values(dq) - ops.values(np.zeros(d, complex))
            f0 = t * tau - float(np.sum(np.log(uu)))
            s = 1.0
            while True:
                tn = tau + s * dtau
                un = tn**2 - np.abs(Q + s * dQ) ** 2
                if tn > 0 and np.all(un > 0):
                    f1 = t * tn - float(np.sum(np.log(un)))
                    if f1 <= f0 - 0.25 * s * dec or s < 1e-14:
                        break
                s *= 0.5
            v = v + s * dv
            tau = tn
            q = coeffs(v)
            if 0.5 * dec < cfg.newton_tol or steps >= cfg.max_newton:
                break
        # two units of barrier parameter per second-order cone
        lower = tau - 2.0 * n / t
        if lower > target:
            gmax = float(np.abs(ops.values(q)).max())
            return InterpolantSearch(q, gmax, lower, steps, "refuted")
        if 2.0 * n / t < cfg.gap_tol:
            break
        t *= cfg.barrier_factor
    gmax, q = best
    return InterpolantSearch(q, gmax, lower, steps, "refuted" if lower > target else "undecided")


def _check_certificate(q: np.ndarray, points: np.ndarray, amps: np.ndarray, n: int):
    Q = TrigPoly(q)
    grid_max = float(np.abs(uniform_samples(Q, n)).max())
    if points.size == 0:
        return Q, grid_max, 0.0
    interp = float(np.max(np.abs(evaluate(Q, points) - amps / np.abs(amps))))
    return Q, grid_max, interp


def solve_tv(
    y: MomentVector,
    grid_n: int | None = None,
    refine: bool = True,
    truth: SparseMeasure | None = None,
    config: SolverConfig | None = None,
) -> RecoveryResult:
    """Grid TV recovery, optional off-grid refinement and a validated dual polynomial.

    Status is ``inconclusive`` when the estimate misses the moments by more
    than ``inconclusive_tol`` (relative) or the certificate search cannot
    decide.  Otherwise, with ``truth`` the result is a
    ``success`` iff the spike counts agree, the wrap-around Hausdorff error
    is at most ``match_tol / m``, every matched amplitude is within
    ``amp_tol`` relative error and the dual polynomial certifies the
    estimate; without ``truth`` the certificate alone decides.
    """
    cfg = config or SolverConfig()
    m = y.m
    yv = np.asarray(y.values, complex)
    gs = solve_grid(y, grid_n, cfg)
    notes: list[str] = []
    if not gs.converged:
        notes.append("newton budget exhausted")

    if refine:
        x, c, res = _refine(yv, gs, m, cfg)
        res /= max(1.0, float(np.linalg.norm(yv)))
    else:
        x, c, res = gs.points, gs.amplitudes, gs.residual
    undecided = False

    est = None
    q = gs.dual
    if x.size:
        order = np.argsort(x)
        x, c = x[order], c[order]
        try:
            est = SparseMeasure.from_arrays(x, c)
        except ValueError as exc:
            notes.append(f"estimate rejected: {exc}")
    if refine and est is not None:
        search = min_sup_interpolant(est.points, est.amplitudes, m, gs.grid_n, start=gs.dual, config=cfg)
        q = search.coeffs
        if search.verdict == "undecided":
            undecided = True
            notes.append("certificate search undecided")

    pts = est.points if est is not None else np.empty(0)
    amps = est.amplitudes if est is not None else np.empty(0, complex)
    Q, cmax, interp = _check_certificate(q, pts, amps, gs.grid_n)
    cert_ok = bool(cmax <= 1.0 + cfg.cert_tol and interp <= cfg.interp_tol and est is not None)
    objective = est.total_variation if est is not None else 0.0

    sup_err = amp_err = None
    if truth is not None:
        sup_err = hausdorff(truth.points, pts)
        amp_err = amplitude_error(truth, est) if est is not None else float("inf")

    if res > cfg.inconclusive_tol or undecided:
        status = "inconclusive"
    elif truth is not None:
        ok = (
            est is not None
            and est.s == truth.s
            and sup_err <= cfg.match_tol / m
            and amp_err <= cfg.amp_tol
            and cert_ok
        )
        status = "success" if ok else "failure"
    else:
        status = "success" if cert_ok else "failure"

    return RecoveryResult(
        estimated=est,
        dual_poly=Q,
        objective=objective,
        support_error=sup_err,
        status=status,
        amplitude_error=amp_err,
        grid=gs,
        certificate_ok=cert_ok,
        certificate_max=cmax,
        interp_residual=interp,
        residual=res,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------- phase map


def _float_words(x: float) -> list[int]:
    b = int(np.float64(x).view(np.uint64))
    return [b >> 32, b & 0xFFFFFFFF]


def cell_rng(seed: int, m: int, delta: float, trial: int) -> np.random.Generator:
    """Generator depending only on ``(seed, m, delta, trial)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(m), *_float_words(delta), int(trial)]))


def spike_chain(m: int, delta: float, rng: np.random.Generator, spikes: int = 4) -> SparseMeasure:
    """Equispaced spikes at separation ``delta``, random offset, unit-modulus random phases."""
    s = int(max(2, min(spikes, np.floor(1.0 / delta + 1e-12), m)))
    x0 = rng.random()
    phases = rng.random(s)
    pts = wrap(x0 + delta * np.arange(s))
    return SparseMeasure.from_arrays(pts, np.exp(1j * TWO_PI * phases))


@dataclass(frozen=True)
class PhaseConfig:
    spikes: int = 4
    grid_factor: int = 8
    refine: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)


def run_cell(m: int, delta: float, trial: int, seed: int, cfg: PhaseConfig | None = None) -> dict:
    cfg = cfg or PhaseConfig()
    rng = cell_rng(seed, m, delta, trial)
    mu = spike_chain(m, delta, rng, cfg.spikes)
    res = solve_tv(moments(mu, m), cfg.grid_factor * (2 * m + 1), cfg.refine, truth=mu, config=cfg.solver)
    return {
        "m": m,
        "delta": delta,
        "trial": trial,
        "s": mu.s,
        "status": res.status,
        "support_error": res.support_error,
        "amplitude_error": res.amplitude_error,
        "objective": res.objective,
        "truth_tv": mu.total_variation,
    }


def _run_cell_args(args):
    return run_cell(*args)


def aggregate(m: int, delta: float, cells: list[dict]) -> dict:
    n_ok = sum(c["status"] == "success" for c in cells)
    n_inc = sum(c["status"] == "inconclusive" for c in cells)
    return {
        "m": m,
        "delta": delta,
        "delta_m": delta * m,
        "trials": len(cells),
        "successes": n_ok,
        "inconclusive": n_inc,
        "success_rate": n_ok / len(cells),
    }


def phase_transition_map(
    m: int,
    separations,
    trials: int,
    seed: int,
    config: PhaseConfig | None = None,
    workers: int = 1,
) -> list[dict]:
    """Success fraction of ``solve_tv`` over random spike chains, one row per separation."""
    seps = [float(d) for d in separations]
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not seps or any(not 0.0 < d < 0.5 for d in seps):
        raise ValueError("separations must lie in (0, 1/2)")
    cfg = config or PhaseConfig()
    jobs = [(m, d, t, seed, cfg) for d in seps for t in range(trials)]
    if workers > 1:
        with cf.ProcessPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(_run_cell_args, jobs))
    else:
        cells = [run_cell(*j) for j in jobs]
    rows = []
    for i, d in enumerate(seps):
        rows.append(aggregate(m, d, cells[i * trials : (i + 1) * trials]))
    return rows


__all__ = [
    "SparseMeasure",
    "MomentVector",
    "atom",
    "moment_matrix",
    "moments",
    "pairing",
    "hausdorff",
    "amplitude_error",
    "SolverConfig",
    "GridSolution",
    "RecoveryResult",
    "solve_grid",
    "solve_tv",
    "cell_rng",
    "spike_chain",
    "PhaseConfig",
    "run_cell",
    "aggregate",
    "phase_transition_map",
]
