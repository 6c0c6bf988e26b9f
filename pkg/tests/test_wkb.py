import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from monowkb import classical as cl
from monowkb.compare import theta_rule
from monowkb.errors import DomainError, FoldRegionError
from monowkb.specfun import airy_ai
from monowkb.wkb import (QuantumNumbers, canonical_operator_nonsingular, eikonal, fold_amplitude_A,
                         fold_amplitude_limit, fold_epsilon, fold_phase_Phi, oscillatory_domain,
                         quantized_params, u0_numeric, u0_paper, wkb_oscillatory, wkb_section,
                         wkb_uniform)


def test_quantized_params_examples():
    assert quantized_params(QuantumNumbers(1, 0, 0)) == (Fraction(3, 4), Fraction(-1, 2), Fraction(3, 4), 2)
    assert quantized_params(QuantumNumbers(2, 1, 0)) == (Fraction(21, 16), Fraction(-1, 2), Fraction(21, 4), 5)
    E, P, E_hat, m_hat = quantized_params(QuantumNumbers(8, 1, 4))
    assert (E, P, E_hat, m_hat) == (Fraction(57, 256), 0, Fraction(57, 4), 11)


@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=40), st.data())
def test_phase_integrality_and_gap(N, j, data):
    k = data.draw(st.integers(min_value=-j, max_value=N + j))
    qn = QuantumNumbers(N, j, k)
    assert (qn.P + Fraction(1, 2)) * N == k
    assert (qn.P - Fraction(1, 2)) * N == k - N
    from monowkb.exact import eigenvalue
    assert qn.E_hat - eigenvalue(N, j) == Fraction(1, 4)
    assert qn.P ** 2 < qn.E + Fraction(1, 4)


@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=40))
def test_bohr_sommerfeld(N, j):
    # N I_total = pi (n + 1/2) on every quantized torus
    qn = QuantumNumbers(N, j, N // 2)
    t = cl.make_torus(float(qn.E), float(qn.P))
    x = N * cl.action_total_exact(t) / math.pi - 0.5
    assert abs(x - round(x)) < 1e-9


def test_eikonal_identities():
    qn = QuantumNumbers(8, 2, 3)
    t = wkb_section(qn).torus
    assert eikonal(t, "+", "u1", qn, t.theta_min, 0.0) == pytest.approx(0.0, abs=1e-15)
    th, phi = 0.5 * (t.theta_min + t.theta_max) + 0.1, 0.7
    tp = eikonal(t, "+", "u1", qn, th, phi)
    tm = eikonal(t, "-", "u1", qn, th, phi)
    assert tp + tm == pytest.approx(2 * (float(qn.P) + 0.5) * phi, abs=1e-13)
    assert tp - tm == pytest.approx(2 * cl.action_I(t, th), abs=1e-13)
    assert eikonal(t, "+", "u2", qn, th, phi) == pytest.approx(tp - phi, abs=1e-13)


@pytest.mark.parametrize("label", [(8, 1, 4), (8, 2, 3), (12, 3, 9), (16, 4, 8)])
def test_canonical_operator_matches_oscillatory(label):
    qn = QuantumNumbers(*label)
    ws = wkb_section(qn)
    lo, hi = oscillatory_domain(qn.N, ws.torus)
    th = np.linspace(lo, hi, 102)[1:-1]
    for chart in ("u1", "u2"):
        phi = 0.37
        co = canonical_operator_nonsingular(ws.torus, ws.u0, qn.N, chart, th, phi)
        osc = wkb_oscillatory(qn, chart, th, phi)
        assert np.max(np.abs(co - osc)) < 1e-12


def test_canonical_operator_simple_u():
    qn = QuantumNumbers(8, 1, 4)
    ws = wkb_section(qn)
    t = ws.torus
    th = np.linspace(*oscillatory_domain(8, t), 9)[1:-1]
    val = canonical_operator_nonsingular(t, 0.3, 8, "u1", th, 0.0)
    I = np.array([cl.action_I(t, x) for x in th])
    expected = 2 * 0.3 * np.abs(np.sin(8 * I + math.pi / 4)) / t.band(th) ** 0.25
    assert np.allclose(np.abs(val), expected, atol=1e-13)
    assert np.all(canonical_operator_nonsingular(t, 0.0, 8, "u1", th, 0.0) == 0)
    with pytest.raises(FoldRegionError):
        canonical_operator_nonsingular(t, 1.0, 8, "u1", t.theta_min + 1e-4, 0.0)


def test_chart_consistency():
    qn = QuantumNumbers(8, 2, 3)
    ws = wkb_section(qn)
    th = np.linspace(0.05, math.pi - 0.05, 50)
    for phi in (0.0, 1.1, -2.4):
        u1 = wkb_uniform(qn, "u1", th, phi)
        u2 = wkb_uniform(qn, "u2", th, phi)
        assert np.max(np.abs(u1 - np.exp(1j * 8 * phi) * u2)) < 1e-12
    assert ws.index("u1") == 3 and ws.index("u2") == -5


def test_zeros_follow_sine_factor():
    qn = QuantumNumbers(16, 4, 8)
    ws = wkb_section(qn)
    t = ws.torus
    th = np.linspace(*oscillatory_domain(16, t), 4001)[1:-1]
    v = (ws.oscillatory_profile(th) * np.exp(-0.25j * math.pi)).real
    sign_changes = th[:-1][np.sign(v[:-1]) != np.sign(v[1:])]
    total = 16 * cl.action_total(t)
    ls = np.arange(1, 40)
    predicted = []
    for l in ls:
        target = l * math.pi - math.pi / 4
        if 16 * cl.action_rel(t, th[0]) < target < 16 * cl.action_rel(t, th[-1]):
            from scipy.optimize import brentq
            predicted.append(brentq(lambda x: 16 * cl.action_rel(t, x) - target, th[0], th[-1]))
    assert len(predicted) == len(sign_changes) and total > 0
    assert np.max(np.abs(np.array(predicted) - sign_changes)) < 2 * (th[1] - th[0])


def test_airy_vs_oscillatory_at_equator():
    qn = QuantumNumbers(8, 1, 4)
    ws = wkb_section(qn)
    osc = wkb_oscillatory(qn, "u1", math.pi / 2)
    co = canonical_operator_nonsingular(ws.torus, ws.u0, 8, "u1", math.pi / 2, 0.0)
    assert abs(osc - co) < 1e-12
    t = ws.torus
    peak = np.max(np.abs(ws.uniform_profile(np.linspace(t.theta_min, t.theta_max, 501))))
    assert abs(wkb_uniform(qn, "u1", math.pi / 2) - osc) / peak <= 0.25


def test_phi_at_fold_and_slopes():
    t = cl.make_torus(1.0, 0.0)
    assert fold_phase_Phi(t, t.theta_min) == 0.0
    h = 1e-6
    right = (fold_phase_Phi(t, t.theta_min + h) - fold_phase_Phi(t, t.theta_min)) / h
    left = (fold_phase_Phi(t, t.theta_min) - fold_phase_Phi(t, t.theta_min - h)) / h
    assert abs(right - left) < 1e-4
    assert right == pytest.approx((math.sqrt(5) / math.sin(t.theta_min)) ** (1 / 3), rel=1e-5)
    th = np.linspace(0.5 * t.theta_min, t.theta_max - 0.05, 400)
    for ext in ("linear", "langer"):
        assert np.all(np.diff(fold_phase_Phi(t, th, extension=ext)) > 0)


def test_phi_matches_action_inside():
    t = cl.make_torus(1.0, 0.0)
    th = np.linspace(t.theta_min + 0.01, t.theta_max - 0.01, 11)
    I = np.array([cl.action_I(t, x) for x in th])
    assert np.allclose(fold_phase_Phi(t, th), (1.5 * I) ** (2 / 3), rtol=1e-11)


def test_amplitude_limit_and_continuity():
    t = cl.make_torus(1.0, 0.0)
    u0 = u0_numeric(t)
    lim = 2 * u0 / (5 ** (1 / 12) * math.sin(t.theta_min) ** (1 / 3))
    assert fold_amplitude_limit(t, u0) == pytest.approx(lim, rel=1e-13)
    assert fold_amplitude_A(t, u0, t.theta_min) == pytest.approx(lim, rel=1e-12)
    d = 1e-5
    a_plus = fold_amplitude_A(t, u0, t.theta_min + d)
    a_minus = fold_amplitude_A(t, u0, t.theta_min - d)
    assert abs(a_plus - a_minus) <= 1e-3 * lim
    mid = t.midpoint
    direct = 2 * u0 * t.band(mid) ** -0.25 * (1.5 * cl.action_I(t, mid)) ** (1 / 6)
    assert fold_amplitude_A(t, u0, mid) == pytest.approx(direct, rel=1e-11)


def test_fold_functions_reject_pole_end():
    t = cl.make_torus(0.75, -0.5)
    with pytest.raises(DomainError):
        fold_phase_Phi(t, 0.5)
    with pytest.raises(DomainError):
        fold_amplitude_A(t, 0.1, 0.5)


def test_uniform_value_at_fold():
    qn = QuantumNumbers(16, 4, 8)
    ws = wkb_section(qn)
    t = ws.torus
    expected = (math.sqrt(math.pi) * np.exp(0.25j * math.pi) * fold_amplitude_A(t, ws.u0, t.theta_min)
                * 16 ** (1 / 6) * airy_ai(0.0))
    got = wkb_uniform(qn, "u1", t.theta_min, 0.0, extension="linear")
    assert got == pytest.approx(expected, rel=1e-12) and abs(got) > 0


def test_uniform_is_smooth_across_folds():
    qn = QuantumNumbers(16, 4, 8)
    ws = wkb_section(qn)
    t = ws.torus
    for f in (t.theta_min, t.theta_max):
        th = f + np.linspace(-1e-3, 1e-3, 21)
        v = ws.uniform_profile(th, "langer")
        second = np.abs(np.diff(v, 2))
        assert np.all(np.isfinite(v)) and np.max(second) < 1e-4


def test_uniform_decays_beyond_fold():
    qn = QuantumNumbers(32, 8, 16)
    ws = wkb_section(qn)
    t = ws.torus
    th = np.linspace(0.05, t.theta_min, 200)
    mag = np.abs(ws.uniform_profile(th, "linear"))
    assert np.all(np.diff(mag[-120:]) > 0)


def test_oscillatory_refuses_fold_collar():
    qn = QuantumNumbers(8, 1, 4)
    t = wkb_section(qn).torus
    with pytest.raises(FoldRegionError):
        wkb_oscillatory(qn, "u1", t.theta_min + 0.5 * fold_epsilon(8, t))


def test_fold_epsilon_rule():
    t = cl.make_torus(1.0, 0.0)
    for N in (4, 64, 4096):
        raw = 2 * N ** (-2 / 3) * t.kappa("min") ** (-2 / 3)
        assert fold_epsilon(N, t) == pytest.approx(min(max(raw, 1e-3), 0.2))


def test_degenerate_fallback():
    qn = QuantumNumbers(1, 0, 0)
    ws = wkb_section(qn)
    assert ws.degenerate
    lo, hi = oscillatory_domain(1, ws.torus)
    assert lo == pytest.approx(1e-3)
    th = np.array([lo / 2, 0.5 * (lo + hi), 0.5 * (hi + math.pi)])
    v = ws.uniform_profile(th)
    assert v[0] == 0 and v[2] == 0 and v[1] == ws.oscillatory_profile(th[1])


def test_u0_exponents():
    t = cl.make_torus(1.0, 0.0)
    assert u0_numeric(t) == pytest.approx((1.25) ** 0.25 / (2 * math.pi), rel=1e-10)
    assert u0_paper(t) == pytest.approx((1.25) ** -0.25 / (2 * math.pi))


def _normalized_overlap(a, b):
    th, w = theta_rule([a.torus.theta_min, a.torus.theta_max, b.torus.theta_min, b.torus.theta_max], 800)
    ua, ub = a.uniform_profile(th, "langer"), b.uniform_profile(th, "langer")
    g = lambda x, y: 2 * math.pi * np.sum(w * np.conj(x) * y)  # noqa: E731
    return abs(g(ua, ub)) / math.sqrt(abs(g(ua, ua)) * abs(g(ub, ub)))


def test_almost_orthogonality_fixed_torus():
    vals = []
    for N in (8, 16, 32):
        a = wkb_section(QuantumNumbers(N, N // 4, N // 2))
        b = wkb_section(QuantumNumbers(N, N // 4 + 2, N // 2))
        vals.append(_normalized_overlap(a, b))
    assert vals[0] > vals[1] > vals[2]
    assert all(v <= 0.05 / N for v, N in zip(vals, (8, 16, 32)))
