import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resolimit.converse import SupportSet
from resolimit.trigpoly import TrigPoly, evaluate, torus_distance
from resolimit.tvdual import (
    MomentVector,
    PhaseConfig,
    SparseMeasure,
    aggregate,
    atom,
    hausdorff,
    min_sup_interpolant,
    moment_matrix,
    moments,
    pairing,
    phase_transition_map,
    run_cell,
    solve_grid,
    solve_tv,
    spike_chain,
    cell_rng,
)

TWO_PI = 2 * np.pi


@st.composite
def measures(draw, max_s=4, min_sep=0.0):
    s = draw(st.integers(1, max_s))
    x = draw(st.lists(st.floats(0, 1, exclude_max=True), min_size=s, max_size=s, unique=True))
    x = np.array(x)
    if s > 1 and np.min(torus_distance(x[:, None], x[None, :]) + np.eye(s)) <= max(min_sep, 1e-9):
        x = np.mod(x[0] + np.arange(s) / s, 1.0)
    r = draw(st.lists(st.floats(0.1, 3.0), min_size=s, max_size=s))
    ph = draw(st.lists(st.floats(0, 1), min_size=s, max_size=s))
    return SparseMeasure.from_arrays(x, np.array(r) * np.exp(1j * TWO_PI * np.array(ph)))


# ---------------------------------------------------------------- moments and conventions


def test_moments_of_dirac_at_zero_are_ones():
    assert np.allclose(moments(SparseMeasure.from_arrays([0.0], [1.0]), 7).values, 1.0)


def test_moments_of_dirac_at_half_alternate():
    y = moments(SparseMeasure.from_arrays([0.5], [1.0]), 6).values
    k = np.arange(-6, 7)
    assert np.allclose(y, (-1.0) ** k, atol=1e-15)


def test_atom_matches_listed_order():
    # listed atom [e^{-i2pi m w}, ..., e^{i2pi m w}]; ours is the same vector in descending k
    m, w = 5, 0.1234
    listed = np.exp(1j * TWO_PI * np.arange(-m, m + 1) * w)
    assert np.allclose(atom(w, m)[::-1], listed)
    assert np.allclose(moments(SparseMeasure.from_arrays([w], [1.0]), m).values, atom(w, m))


def test_moments_against_smoothed_quadrature(rng):
    """Moments of the measure smoothed by a periodized Gaussian, by a 10^5-point trapezoid rule."""
    m, sigma = 16, 0.01
    mu = SparseMeasure.from_arrays(rng.random(3), rng.normal(size=3) + 1j * rng.normal(size=3))
    n = 10**5
    w = np.arange(n) / n
    dens = np.zeros(n, complex)
    for x, c in zip(mu.points, mu.amplitudes):
        d = np.mod(w - x + 0.5, 1.0) - 0.5
        dens += c * sum(np.exp(-((d + j) ** 2) / (2 * sigma**2)) for j in (-1, 0, 1))
    dens /= np.sqrt(2 * np.pi) * sigma
    k = np.arange(-m, m + 1)
    quad = np.array([np.mean(dens * np.exp(-1j * TWO_PI * kk * w)) for kk in k])
    y = quad / np.exp(-2 * np.pi**2 * sigma**2 * k**2)
    assert np.max(np.abs(y - moments(mu, m).values)) < 1e-9


@given(measures(6), st.integers(1, 20), st.data())
def test_adjoint_consistency(mu, m, data):
    q = np.array(data.draw(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False), min_size=2 * m + 1, max_size=2 * m + 1)))
    lhs = pairing(moments(mu, m), q)
    rhs = np.sum(mu.amplitudes * np.conj(evaluate(TrigPoly(q), mu.points)))
    assert abs(lhs - rhs) <= 1e-10 * (1 + np.sum(np.abs(q)) * mu.total_variation)


def test_moment_vector_validation():
    with pytest.raises(ValueError):
        MomentVector(3, np.ones(5))
    y = moments(SparseMeasure.from_arrays([0.2, 0.7], [1.0, -2.0]), 4)
    assert y.conjugate_symmetry_error() < 1e-14


def test_hausdorff_wraps():
    assert hausdorff([0.01], [0.99]) == pytest.approx(0.02)


# ---------------------------------------------------------------- grid solver and recovery


@pytest.mark.parametrize("m", [1, 4, 17])
def test_single_spike_on_grid(m):
    n = 8 * (2 * m + 1)
    c = 1.7 * np.exp(0.4j)
    mu = SparseMeasure.from_arrays([3 / n], [c])
    res = solve_tv(moments(mu, m), n, truth=mu)
    assert res.status == "success"
    assert res.objective == pytest.approx(abs(c), rel=1e-8)
    assert res.support_error < 1e-9
    g = res.grid
    assert g.objective == pytest.approx(abs(c), rel=1e-7)


def test_two_spikes_at_two_over_m():
    m = 32
    mu = SparseMeasure.from_arrays([0.3, 0.3 + 2 / m], [1.0, 1.0])
    res = solve_tv(moments(mu, m), truth=mu)
    assert res.status == "success"
    assert res.support_error < 0.05 / m
    assert res.amplitude_error < 1e-3


def test_grid_size_guard():
    y = moments(SparseMeasure.from_arrays([0.0], [1.0]), 4)
    with pytest.raises(ValueError):
        solve_tv(y, 50)


def test_unrefined_grid_solution_on_grid():
    m, n = 12, 8 * 25
    mu = SparseMeasure.from_arrays(np.array([10, 60, 130]) / n, [1.0, -1j, 0.5])
    res = solve_tv(moments(mu, m), n, refine=False, truth=mu)
    assert res.status == "success"
    assert res.grid.gap < 1e-6


@given(measures(3, min_sep=0.0), st.integers(4, 12))
@settings(max_examples=1000)
def test_complementary_slackness_and_objective_bounds(mu, m):
    if mu.s > 1 and mu.support.min_separation < 2.0 / m:
        return
    y = moments(mu, m)
    res = solve_tv(y, truth=mu)
    assert res.status == "success", res.notes
    Q = res.dual_poly
    n = res.grid.grid_n
    assert np.abs(evaluate(Q, np.arange(n) / n)).max() <= 1 + 1e-6
    est = res.estimated
    signs = est.amplitudes / np.abs(est.amplitudes)
    assert np.max(np.abs(evaluate(Q, est.points) - signs)) <= 1e-5
    lower = np.linalg.norm(y.values) / np.sqrt(2 * m + 1)
    assert lower - 1e-9 <= res.objective <= mu.total_variation * (1 + 1e-6)


def _exhaustive_two_sparse(y, grid, m):
    best = np.inf
    A = moment_matrix(grid, m)
    for size in (1, 2):
        for idx in itertools.combinations(range(grid.size), size):
            B = A[:, idx]
            c, *_ = np.linalg.lstsq(B, y, rcond=None)
            if np.linalg.norm(B @ c - y) <= 1e-9 * max(1.0, np.linalg.norm(y)):
                best = min(best, float(np.sum(np.abs(c))))
    return best


@pytest.mark.parametrize("seed", range(12))
def test_small_instances_match_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 9))
    coarse = np.arange(4 * m) / (4 * m)
    while True:
        idx = rng.choice(coarse.size, size=int(rng.integers(1, 3)), replace=False)
        x = coarse[idx]
        if x.size == 1 or torus_distance(x[0], x[1]) >= 2.0 / m:
            break
    mu = SparseMeasure.from_arrays(x, (0.5 + rng.random(x.size)) * np.exp(1j * TWO_PI * rng.random(x.size)))
    y = moments(mu, m)
    oracle = _exhaustive_two_sparse(y.values, coarse, m)
    res = solve_tv(y, truth=mu)
    assert abs(res.objective - oracle) <= 1e-6 * max(1.0, oracle)


def test_interpolant_search_verdicts():
    m = 16
    ok = min_sup_interpolant([0.1, 0.5], [1.0, -1.0], m, 8 * 33)
    assert ok.verdict == "certified" and ok.grid_max <= 1 + 1e-6
    bad = min_sup_interpolant([0.1, 0.1 + 0.2 / m], [1.0, -1.0], m, 8 * 33)
    assert bad.verdict == "refuted" and bad.lower_bound > 1


def test_no_certificate_means_failure():
    # closely spaced opposite signs: TV prefers another measure
    m = 16
    mu = SparseMeasure.from_arrays([0.2, 0.2 + 0.3 / m], [1.0, -1.0])
    res = solve_tv(moments(mu, m), truth=mu)
    assert res.status != "success"


# ---------------------------------------------------------------- phase map


def test_cell_rng_is_keyed():
    a = cell_rng(3, 32, 0.1, 4).random(3)
    assert np.array_equal(a, cell_rng(3, 32, 0.1, 4).random(3))
    assert not np.array_equal(a, cell_rng(3, 32, 0.1, 5).random(3))


def test_spike_chain_has_exact_separation():
    mu = spike_chain(32, 2.5 / 32, cell_rng(0, 32, 2.5 / 32, 0))
    assert mu.s == 4
    assert mu.support.min_separation == pytest.approx(2.5 / 32, rel=1e-12)
    assert np.allclose(np.abs(mu.amplitudes), 1.0)


def test_phase_comfortable_regime():
    rows = phase_transition_map(32, [4 / 32], trials=5, seed=11)
    assert rows[0]["success_rate"] == 1.0


def test_phase_deep_subresolution():
    rows = phase_transition_map(32, [0.2 / 32], trials=5, seed=11)
    assert rows[0]["success_rate"] <= 0.2


def test_phase_is_deterministic():
    a = run_cell(16, 1.5 / 16, 2, 99)
    b = run_cell(16, 1.5 / 16, 2, 99)
    assert a == b


def test_phase_validation():
    with pytest.raises(ValueError):
        phase_transition_map(16, [0.1], trials=0, seed=0)
    with pytest.raises(ValueError):
        phase_transition_map(16, [0.6], trials=1, seed=0)


def test_aggregate_counts():
    cells = [{"status": s} for s in ("success", "failure", "inconclusive", "success")]
    row = aggregate(8, 0.25, cells)
    assert row["success_rate"] == 0.5 and row["inconclusive"] == 1 and row["delta_m"] == 2.0
