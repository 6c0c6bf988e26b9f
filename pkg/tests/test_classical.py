import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from monowkb import classical as cl
from monowkb.errors import (DegenerateTorusError, DomainError, EmptyTorusError, FoldRegionError,
                            PoleProximityError)
from tori import random_tori


torus_params = st.tuples(st.floats(min_value=0.05, max_value=20.0),
                         st.floats(min_value=-0.97, max_value=0.97))


def build(params):
    E, frac = params
    P = frac * math.sqrt(E + 0.25)
    assume(abs(abs(P) - 0.5) > 1e-6)
    return cl.make_torus(E, P)


@given(torus_params)
def test_roots_are_band_zeros(params):
    t = build(params)
    for z in (t.z_lo, t.z_hi):
        assert abs(t.a + t.b * z + t.c * z * z) < 1e-12 * max(1.0, t.E)
    assert -1.0 <= t.z_lo < t.z_hi <= 1.0
    mid = t.band(t.midpoint)
    assert mid > 0


@given(torus_params)
def test_total_action_closed_form(params):
    t = build(params)
    assert cl.action_total(t) == pytest.approx(cl.action_total_exact(t), abs=1e-11)


@given(torus_params)
def test_measure_identity(params):
    t = build(params)
    assert cl.total_measure(t) == pytest.approx(cl.total_measure_exact(t), rel=1e-9)


def test_torus_errors_and_classification():
    with pytest.raises(EmptyTorusError):
        cl.make_torus(1.0, 1.2)
    with pytest.raises(DomainError):
        cl.make_torus(-1.0, 0.0)
    north = cl.make_torus(0.75, -0.5)
    assert north.end_kind_min == cl.POLE and north.theta_min == 0.0 and north.degenerate
    south = cl.make_torus(0.75, 0.5)
    assert south.end_kind_max == cl.POLE and south.theta_max == pytest.approx(math.pi)
    assert not cl.make_torus(1.0, 0.0).degenerate


def test_symmetric_torus_e1_p0():
    t = cl.make_torus(1.0, 0.0)
    assert t.D == pytest.approx(math.sqrt(5.0))
    assert t.z_hi == pytest.approx(2 / math.sqrt(5)) and t.z_lo == pytest.approx(-2 / math.sqrt(5))


def test_momenta_on_torus():
    t = cl.make_torus(1.3, 0.2)
    th = np.linspace(t.theta_min + 1e-3, t.theta_max - 1e-3, 7)
    for s in (1, -1):
        pt, pp = cl.momenta(t, th, s)
        H = pt ** 2 + pp ** 2 / np.sin(th) ** 2
        assert np.allclose(H, 1.3, atol=1e-12)
        assert np.allclose(pp - 0.5 * np.cos(th), 0.2, atol=1e-14)
        assert np.all(s * pt >= 0)
    with pytest.raises(DomainError):
        cl.momenta(t, t.theta_max + 0.1)


def test_action_derivative_is_momentum():
    for t in random_tori(3, 4):
        th = np.linspace(t.theta_min, t.theta_max, 12)[1:-1]
        h = 1e-5
        for x in th:
            d = (cl.action_I(t, x + h) - cl.action_I(t, x - h)) / (2 * h)
            assert d == pytest.approx(float(cl.p_theta_abs(t, x)), abs=1e-6)


def test_fast_action_matches_quadrature():
    for t in random_tori(4, 5) + [cl.make_torus(0.75, -0.5), cl.make_torus(0.75, 0.5)]:
        th = np.linspace(t.theta_min, t.theta_max, 15)
        fast = cl.action_rel(t, th)
        slow = np.array([cl.action_I(t, x) for x in th])
        assert np.max(np.abs(fast - slow)) < 1e-11


def test_closed_form_action():
    for t in random_tori(5, 5):
        rep = cl.closed_form_discrepancy(t, np.linspace(t.theta_min, t.theta_max, 9)[1:-1])
        assert rep["n_inconsistent"] == 0 and rep["agrees"]
    with pytest.raises(DegenerateTorusError):
        cl.action_I_closed_form(cl.make_torus(0.75, -0.5), 1.0)


def test_invariant_density():
    t = cl.make_torus(2.0, 0.3)
    x = t.midpoint
    assert cl.invariant_density(t, x) == pytest.approx(1.0 / float(cl.p_theta_abs(t, x)))
    with pytest.raises(FoldRegionError):
        cl.invariant_density(t, t.theta_min)


def test_fold_local_expansion():
    t = cl.make_torus(1.0, 0.0)
    dI, R, ratio = cl.fold_local(t, "min", np.array([0.0, 1e-4]))
    assert R[0] == pytest.approx(2.0 / 3.0 * t.kappa("min"), rel=1e-12)
    # band ~ D sin(theta_min) d at the fold
    assert ratio[0] == pytest.approx(t.D * math.sin(t.theta_min), rel=1e-12)
    assert dI[1] == pytest.approx(cl.action_I(t, t.theta_min + 1e-4), rel=1e-9)
    with pytest.raises(DegenerateTorusError):
        cl.fold_local(cl.make_torus(0.75, -0.5), "min", 0.1)


def test_tunnelling_action_positive_and_growing():
    t = cl.make_torus(1.0, 0.0)
    th = np.array([t.theta_min - 0.01, t.theta_min - 0.3, 0.05])
    vals = cl.tunnelling_action(t, "min", th)
    assert np.all(vals > 0) and np.all(np.diff(vals) > 0)


def test_flow_conserves_invariants():
    for t in random_tori(6, 3):
        tr = cl.integrate_flow(cl.torus_state(t, t.midpoint), T=50.0, tol=1e-10)
        assert tr.drift_I1 <= 1e-8 and tr.drift_I2 <= 1e-8
        assert tr.I1[0] == pytest.approx(t.E) and tr.I2[0] == pytest.approx(t.P)


def test_flow_pole_event():
    # a torus hugging the north pole: sin(theta) drops below the event threshold
    t = cl.make_torus(1.0, -0.5 + 1e-9)
    start = cl.torus_state(t, t.midpoint)
    with pytest.raises(PoleProximityError) as info:
        cl.integrate_flow(start, T=20.0)
    assert info.value.t is not None


def test_flow_rejects_zero_time():
    t = cl.make_torus(1.0, 0.0)
    with pytest.raises(DomainError):
        cl.integrate_flow(cl.torus_state(t, 1.0), T=0.0)


def test_theta_period():
    t = cl.make_torus(1.7, -0.4)
    assert cl.measure_theta_period(t) == pytest.approx(cl.theta_period_exact(t), abs=1e-6)


def test_maslov_indices():
    t = cl.make_torus(1.5, 0.2)
    est = cl.maslov_estimates(t, "min")
    assert est["index"] == -1 and abs(est["raw_estimates"][-1] + 1) < 0.1
    assert cl.maslov_index_numeric(t, "max") == 1
    assert cl.chart_index(t, "+") == 0
    assert cl.chart_index(t, "-") == -1
    with pytest.raises(DegenerateTorusError):
        cl.maslov_index_numeric(cl.make_torus(0.75, -0.5), "min")


def test_maslov_off_equator_band():
    # pi/2 outside the band: the central point falls back to the band midpoint
    t = cl.make_torus(0.5, 0.8)
    assert not t.theta_min < math.pi / 2 < t.theta_max
    assert cl.maslov_index_numeric(t, "min") == -1


def test_regularized_jacobian_signs():
    t = cl.make_torus(1.0, 0.0)
    j_plus = cl.regularized_jacobian(t, math.pi / 2, 1.0, 1e-3)
    j_minus = cl.regularized_jacobian(t, math.pi / 2, -1.0, 1e-3)
    assert j_plus.real > 0 > j_minus.real
