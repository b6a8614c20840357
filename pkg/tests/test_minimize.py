import math

import numpy as np
import pytest

from bqa_pspin.minimize import SearchSettings, minimize_coefficients, minimize_potential
from bqa_pspin.model import ModelParams, Schedule, schedule_eval
from bqa_pspin.potential import potential_value

SCHED = Schedule()


def brute_force_2d(A, B, C, p, n_theta=2049, n_phi=1025):
    th = np.linspace(0, math.pi, n_theta)[:, None]
    ph = np.linspace(0, math.pi / 2, n_phi)[None, :]
    return potential_value(A, B, C, p, 0.0, th, ph).min()


def test_final_state_is_all_up():
    # A(1) = 3 exp(-5) is small but nonzero, so theta sits just below pi and phi just above 0
    a, v = minimize_potential(SCHED, ModelParams(p=5), 1.0)
    assert a.theta == pytest.approx(math.pi, abs=1e-2)
    assert a.phi == pytest.approx(0.0, abs=1e-5)
    assert a.m == pytest.approx(1.0, abs=1e-4)
    assert v == pytest.approx(-41.0, abs=1e-3)
    assert v <= -41.0


def test_paramagnetic_before_transition():
    a, _ = minimize_potential(SCHED, ModelParams(p=5), 0.3)
    assert abs(a.m) < 1e-6


def test_no_driver_no_detuning_reward():
    x, _ = minimize_coefficients(0.0, -10.0, ModelParams(p=5, C=2.0))
    assert x[0, 0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("p, C", [(3, 0.0), (5, 0.0), (5, 1.4), (5, 5.0), (5, -0.9), (6, 2.0)])
def test_against_brute_force_grid(p, C):
    params = ModelParams(p=p, C=C)
    for s in np.linspace(0.05, 0.95, 7):
        A, B = schedule_eval(SCHED, s)
        _, v = minimize_coefficients(A, B, params)
        assert v[0] <= brute_force_2d(A, B, C, p) + 1e-12


def test_offset_shifts_value_only():
    params = ModelParams(p=5, C=1.4)
    A, B = SCHED.coefficients(np.linspace(0.4, 0.7, 13))
    x0, v0 = minimize_coefficients(A, B, params)
    x1, v1 = minimize_coefficients(A, B, params, offset=7.25)
    assert np.array_equal(x0, x1)
    assert np.allclose(v1 - v0, 7.25, atol=1e-12)


@pytest.mark.parametrize("s", [0.45, 0.55, 0.7])
def test_rotated_minimum_equals_catalyst_free(s):
    _, v_rot = minimize_potential(SCHED, ModelParams(p=5, C=5.0, chi=math.pi / 2), s)
    _, v_ref = minimize_potential(SCHED, ModelParams(p=5, C=0.0), s)
    assert v_rot == pytest.approx(v_ref, abs=1e-9)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.6])
def test_full_search_agrees_at_chi_zero(s):
    params = ModelParams(p=5, C=1.4)
    a2, v2 = minimize_potential(SCHED, params, s)
    a4, v4 = minimize_potential(SCHED, params, s, settings=SearchSettings(full_search=True))
    assert v4 == pytest.approx(v2, abs=1e-9)
    assert a4.m == pytest.approx(a2.m, abs=1e-6)


def test_hint_cannot_worsen_result():
    params = ModelParams(p=5)
    a_ref, v_ref = minimize_potential(SCHED, params, 0.6)
    a_bad, _ = minimize_potential(SCHED, params, 0.4)
    a, v = minimize_potential(SCHED, params, 0.6, hint=a_bad)
    assert v <= v_ref + 1e-12
