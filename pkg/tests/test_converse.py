import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resolimit.converse import (
    C_delta,
    ConverseParams,
    GammaSearch,
    InvalidParameters,
    L_numeric,
    SupportSet,
    analytic_lower_bound,
    bound_report,
    build_support,
    build_support_exact,
    center_index,
    eta,
    exact_min_separation,
    fact1_margins,
    interpolation_residuals,
    kappa,
    kappa_closed_form,
    kappa_closed_form_gamma,
    lemma_log_bound,
    log_analytic_lower_bound,
    m_delta_envelope,
    m_delta_threshold,
    omega_grid,
    p_converse,
    r_gamma,
    vanishing_poly,
    verify_facts,
    z_converse,
    ztilde_log,
)
from resolimit.trigpoly import derivative, evaluate, multiply, sup_norm

from oracles import envelope_sup, zoom_argmin

odd_m = st.integers(1, 60).map(lambda k: 2 * k + 1)
deltas = st.fractions(Fraction(11, 10), Fraction(4), max_denominator=40)


# ---------------------------------------------------------------- support


def test_support_m3_delta2():
    X = build_support(ConverseParams(3, 2.0))
    assert np.allclose(np.sort(X.points), [0.0, 1 / 9, 8 / 9], atol=1e-15)
    assert X.min_separation == pytest.approx(1 / 9, abs=1e-15)


def test_support_m9_separation_is_13_over_162():
    pts = build_support_exact(9, Fraction(5, 2))
    assert exact_min_separation(pts) == Fraction(13, 162)
    assert build_support(ConverseParams(9, 2.5)).min_separation == pytest.approx(13 / 162, rel=1e-14)


@pytest.mark.parametrize("m, delta", [(4, 2.0), (3, 3.0), (3, 4.5), (9, 1.0)])
def test_support_rejects_bad_params(m, delta):
    with pytest.raises(InvalidParameters):
        ConverseParams(m, delta)


def test_even_m_message_mentions_odd():
    with pytest.raises(InvalidParameters, match="odd"):
        ConverseParams(10, 2.5)


@given(odd_m, deltas)
def test_separation_identity_exact(m, delta):
    if not m > delta:
        return
    pts = build_support_exact(m, delta)
    assert len(pts) == m
    assert exact_min_separation(pts) == Fraction(1, m) - delta / m**2
    assert ConverseParams(m, float(delta)).exact_spacing() == Fraction(1, m) - Fraction(float(delta)) / m**2


@given(odd_m, st.floats(1.05, 4.0))
def test_support_symmetric(m, delta):
    if not m > delta:
        return
    X = build_support(ConverseParams(m, delta))
    refl = np.sort(np.mod(-X.points, 1.0))
    d = np.abs(np.sort(X.points) - refl)
    assert np.all(np.minimum(d, 1 - d) < 1e-14)


# ---------------------------------------------------------------- vanishing polynomial and eta


def test_two_point_vanishing_poly():
    X = SupportSet(np.array([0.0, 0.5]))
    Z = vanishing_poly(X, 0)
    w = np.linspace(0, 1, 101)
    assert np.allclose(evaluate(Z, w), np.cos(np.pi * w) ** 2, atol=1e-15)
    assert abs(evaluate(Z, 0.0) - 1) < 1e-15
    assert abs(evaluate(Z, 0.5)) < 1e-15
    assert abs(evaluate(derivative(Z), 0.5)) < 1e-14


@st.composite
def supports(draw, max_s=8):
    s = draw(st.integers(1, max_s))
    x0 = draw(st.floats(0, 1, exclude_max=True))
    gaps = draw(st.lists(st.floats(0.02, 1.0), min_size=s, max_size=s))
    g = np.array(gaps) / np.sum(gaps)
    return SupportSet(x0 + np.concatenate([[0.0], np.cumsum(g[:-1])]))


@given(supports(), st.data())
def test_vanishing_poly_interpolates(X, data):
    l = data.draw(st.integers(0, X.s - 1))
    Z = vanishing_poly(X, l)
    assert Z.degree == X.s - 1
    assert abs(evaluate(Z, X.points[l]) - 1) < 1e-10
    others = np.delete(X.points, l)
    if others.size:
        scale = Z.l1()
        assert np.max(np.abs(evaluate(Z, others))) < 1e-10 * scale
        assert np.max(np.abs(evaluate(derivative(Z), others))) < 1e-9 * scale * (1 + Z.degree)
    assert np.allclose(Z.coeffs, np.conj(Z.coeffs[::-1]), atol=1e-14 * Z.l1())


def test_converse_vanishing_poly_nonnegative():
    p = ConverseParams(9, 2.5)
    Z = z_converse(p)
    v = evaluate(Z, np.arange(10**4) / 10**4)
    assert np.max(np.abs(v.imag)) < 1e-12
    assert v.real.min() >= -1e-12


def test_eta_examples():
    X = build_support(ConverseParams(21, 3.0))
    assert abs(eta(X, center_index(ConverseParams(21, 3.0)))) < 1e-10
    assert eta(SupportSet(np.array([0.0, 0.25])), 0) == pytest.approx(-2 * math.pi, rel=1e-14)


@given(supports(5), st.data())
@settings(max_examples=200)
def test_eta_matches_finite_difference(X, data):
    if X.s < 2:
        return
    l = data.draw(st.integers(0, X.s - 1))
    Z = vanishing_poly(X, l)
    h = 1e-7
    x = X.points[l]
    fd = (evaluate(Z, x + h) - evaluate(Z, x - h)).real / (2 * h)
    e = eta(X, l)
    assert abs(evaluate(derivative(Z), x).real - e) <= 1e-8 * max(1.0, abs(e))
    assert abs(fd - e) <= 1e-5 * max(1.0, abs(e))


def test_r_gamma_examples():
    w = np.linspace(0, 1, 33)
    assert np.allclose(evaluate(r_gamma(0.0), w), 1.0)
    assert np.allclose(evaluate(r_gamma(0.5), w), np.cos(np.pi * w) ** 2)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_r_gamma_interpolates_at_origin(g):
    R = r_gamma(g)
    assert abs(evaluate(R, 0.0) - 1) < 1e-13 * (1 + abs(g))
    assert abs(evaluate(derivative(R), 0.0)) < 1e-13 * (1 + abs(g))


# ---------------------------------------------------------------- factorization and interpolation


@given(st.sampled_from([(3, 2.0), (9, 2.5), (21, 3.0), (51, 2.2)]), st.floats(-3, 3))
@settings(max_examples=1000)
def test_factorization_identity(md, g):
    p = ConverseParams(*md)
    Z = z_converse(p)
    P = multiply(Z, r_gamma(g))
    w = np.arange(4 * (2 * P.degree + 1)) / (4 * (2 * P.degree + 1))
    ref = evaluate(Z, w) * evaluate(r_gamma(g), w)
    assert np.max(np.abs(evaluate(P, w) - ref)) <= 1e-10 * max(1.0, np.abs(ref).max())


@given(st.sampled_from([(3, 2.0), (9, 2.5), (21, 3.0), (51, 2.2)]), st.floats(-3, 3))
def test_converse_interpolation_conditions(md, g):
    r = interpolation_residuals(ConverseParams(*md), g)
    assert r["value_at_center"] < 1e-8
    assert r["value_elsewhere"] < 1e-8
    assert r["slope"] < 1e-8


# ---------------------------------------------------------------- L(m, delta)


def test_L_numeric_matches_brute_force_m3():
    p = ConverseParams(3, 2.0)
    Z = z_converse(p)
    w = np.arange(10**5) / 10**5
    a = evaluate(Z, w).real
    b = a * (np.cos(2 * np.pi * w) - 1.0)
    val, g = zoom_argmin(envelope_sup(a, b), -5.0, 5.0, 10**4)
    res = L_numeric(p)
    assert abs(res.L - val) < 1e-6
    assert abs(res.gamma - g) < 1e-5


@pytest.mark.parametrize("m, delta", [(9, 2.5), (21, 3.0), (5, 3.0)])
def test_L_numeric_local_minimality(m, delta):
    p = ConverseParams(m, delta)
    res = L_numeric(p)
    for s in (-1e-3, 1e-3):
        assert sup_norm(p_converse(p, res.gamma + s), 8)[0] > res.L


def test_complex_gamma_never_helps():
    p = ConverseParams(9, 2.5)
    res = L_numeric(p)
    for im in (1e-3, 0.05, 0.5):
        assert sup_norm(p_converse(p, res.gamma + 1j * im), 8)[0] >= res.L


def test_L_numeric_budget_cap():
    from resolimit.converse import BudgetExceeded

    with pytest.raises(BudgetExceeded):
        L_numeric(ConverseParams(21, 3.0), GammaSearch(cap=11))


@pytest.mark.parametrize("m, delta", [(9, 2.2), (9, 3.0), (21, 2.5), (51, 3.0)])
def test_bound_chain_small(m, delta):
    rep = bound_report(ConverseParams(m, delta))
    assert rep.chain_holds, rep.links
    assert rep.numeric_L >= analytic_lower_bound(ConverseParams(m, delta))


# ---------------------------------------------------------------- analytic bound and thresholds


def test_analytic_bound_delta2_is_flat():
    for m in (9, 101, 1001):
        p = ConverseParams(m, 2.0)
        assert analytic_lower_bound(p) == pytest.approx(math.exp(-8) * math.pi**2 / 2 * p.alpha**2, rel=1e-12)


def test_analytic_threshold_delta3():
    M = m_delta_threshold(3.0)
    # frozen from the closed-form crossing C(3) pi^2 alpha^2 (m+1)^2 / 2 = 1
    assert M == 9917
    assert log_analytic_lower_bound(M, 3.0) > 0 >= log_analytic_lower_bound(M - 2, 3.0)


def test_analytic_bound_monotone_in_m():
    for delta in (2.2, 2.5, 3.0, 4.0):
        v = [log_analytic_lower_bound(m, delta) for m in range(9, 5001, 2)]
        assert np.all(np.diff(v) > 0)


def test_threshold_rejects_delta_at_most_two():
    with pytest.raises(InvalidParameters):
        m_delta_threshold(2.0)


def test_threshold_blows_up_near_two():
    logs = [math.log(m_delta_threshold(d)) for d in (2.4, 2.2, 2.1, 2.05)]
    assert np.all(np.diff(logs) > 0)
    scaled = [(d - 2) * math.log(m_delta_threshold(d)) for d in (2.05, 2.1, 2.2, 2.4)]
    assert max(scaled) / min(scaled) < 3


def test_envelope_is_monotone_and_below_direct():
    grid = np.round(np.arange(2.1, 4.0001, 0.1), 10)
    env = [m_delta_envelope(float(d)) for d in grid]
    assert np.all(np.diff(env) <= 0)
    assert all(e <= m_delta_threshold(float(d)) for e, d in zip(env, grid))


@pytest.mark.parametrize("delta", [2.5, 3.0, 4.0])
def test_numeric_threshold_below_analytic(delta):
    num = m_delta_threshold(delta, "numeric", cap=61)
    assert num <= m_delta_threshold(delta)
    assert L_numeric(ConverseParams(num, delta)).L > 1


# ---------------------------------------------------------------- kappa and Z-tilde


def test_kappa_quarter():
    assert kappa_closed_form(0.25) == pytest.approx(1 / 3, rel=1e-15)
    assert math.pi**2 * 0.25**2 / 2 == pytest.approx(math.pi**2 / 32)
    assert math.pi**2 / 32 <= 1 / 3


def kappa_brute(wmax: float) -> float:
    w = np.linspace(-wmax, wmax, 1001)
    c = np.cos(np.pi * w) ** 2
    return zoom_argmin(envelope_sup(np.ones_like(c), -2.0 * c), 0.0, 2.0, 1000)[0]


@given(st.floats(1e-3, 0.499))
@settings(max_examples=200)
def test_kappa_closed_form_vs_brute(wmax):
    k = kappa_closed_form(wmax)
    assert abs(k - kappa_brute(wmax)) < 1e-4
    g = kappa_closed_form_gamma(wmax)
    assert abs(1 - 2 * g) == pytest.approx(k, rel=1e-12)


@given(st.floats(1e-6, 1 / 3))
def test_kappa_analytic_bound_on_construction_range(wmax):
    # omega_max = alpha_m / (m+1) never exceeds 1/3 for odd m >= 3
    assert kappa_closed_form(wmax) >= math.pi**2 * wmax**2 / 2


def test_kappa_analytic_bound_breaks_past_crossing():
    from scipy.optimize import brentq

    gap = lambda w: kappa_closed_form(w) - math.pi**2 * w**2 / 2
    w0 = brentq(gap, 0.3, 0.4999)
    assert w0 == pytest.approx(0.428141508, abs=1e-8)
    assert gap(0.45) < 0


@given(odd_m.filter(lambda m: m >= 5), st.floats(1.1, 4.0))
def test_kappa_numeric_exceeds_analytic_on_construction(m, delta):
    if not m > delta:
        return
    kn, ka = kappa(ConverseParams(m, delta))
    assert kn >= ka


def test_ztilde_matches_vanishing_poly():
    p = ConverseParams(21, 3.0)
    w = omega_grid(p, 201)
    Z = z_converse(p)
    assert np.allclose(np.exp(ztilde_log(p, w)), evaluate(Z, 0.5 - w).real, rtol=1e-9)


@pytest.mark.parametrize("delta", [2.2, 2.5, 3.0, 4.0])
def test_ztilde_lemma_bound(delta):
    for m in list(range(9, 200, 2)) + list(range(201, 1000, 26)) + [999]:
        if not m > delta:
            continue
        p = ConverseParams(m, delta)
        w = omega_grid(p, 1001)
        assert ztilde_log(p, w).min() >= lemma_log_bound(p), m
    assert math.log(C_delta(delta)) == pytest.approx(-4 * (1 + (delta - 1) ** 2))


# ---------------------------------------------------------------- elementary facts


def test_fact1_equality_at_zero_step():
    t = np.linspace(0.01, 1.5, 50)
    assert np.allclose(fact1_margins(t, np.zeros_like(t)), 0.0, atol=1e-15)


@pytest.mark.parametrize("m", [3, 9, 21, 51, 101, 201, 501, 999])
@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.74, 0.9])
def test_fact1_and_csc2_bound_hold(m, alpha):
    rep = verify_facts(m, alpha)
    assert rep.fact1_holds
    assert rep.fact2_csc2_holds


def test_fact2_small_case_recorded():
    rep = verify_facts(3, 0.5)
    # sum_{k=1}^{1} cot(pi/8) = 1 + sqrt 2 against 8 ln 4 / pi
    assert rep.cot_sum == pytest.approx(1 + math.sqrt(2), rel=1e-14)
    assert rep.cot_bound == pytest.approx(8 * math.log(4) / math.pi, rel=1e-14)
    assert not rep.fact2_cot_holds


@pytest.mark.parametrize("m", [9, 21, 51, 101, 201, 501, 999])
@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.74, 0.9])
def test_fact2_cot_lower_bound_fails_at_every_scanned_size(m, alpha):
    # the partial cot sum grows like (m+1)/(pi alpha) ln(K alpha) < ... ln(m+1)
    rep = verify_facts(m, alpha)
    assert rep.cot_sum < rep.cot_bound
    assert rep.cot_sum > 0.5 * rep.cot_bound
