import math

import numpy as np
import pytest

from delaycert import InitialHistory, SimConfig, certify, simulate, verify_envelope
from delaycert.errors import ConfigurationError, DimensionError, DivergenceError, DomainError
from delaycert.history import InputHistory
from delaycert.simulator import control_output, evaluate_functional, plant_rhs

from conftest import random_suite, s1_pair


def nominal_x(t):
    return np.where(t <= 1.0, 1.0, np.exp(1.0 - t))


def euler_oracle(delta_hat, t_end, dt=1e-4):
    """Independent first-order scheme for x' = u(t-1), u = -(x + int_{-dhat}^0 u)."""
    lag, win = round(1.0 / dt), round(delta_hat / dt)
    steps = round(t_end / dt)
    u = np.zeros(steps + 1)
    x, acc = 1.0, 0.0
    for k in range(steps):
        u[k] = -(x + dt * acc)
        acc += u[k] - (u[k - win] if k >= win else 0.0)
        x += dt * (u[k - lag] if k >= lag else 0.0)
    return x


def test_nominal_closed_form():
    plant, ctrl, w = s1_pair()
    traj = simulate(plant, ctrl, SimConfig(1e-3, 3.0, [1.0]))
    assert np.max(np.abs(traj.x_samples[:, 0] - nominal_x(traj.times))) < 1e-5
    # reduced state follows y' = -y from y(0) = 1
    assert np.allclose(traj.y_samples[:, 0], np.exp(-traj.times), atol=1e-5)


def test_mismatch_matches_independent_scheme():
    plant, ctrl, w = s1_pair(0.98)
    traj = simulate(plant, ctrl, SimConfig(1e-3, 5.0 + 1e-3, [1.0]), n_points=981)
    assert traj.times[-1] == pytest.approx(5.0)
    assert traj.x_samples[-1, 0] == pytest.approx(euler_oracle(0.98, 5.0), abs=2e-3)


def test_single_step_gives_one_record():
    plant, ctrl, _ = s1_pair()
    traj = simulate(plant, ctrl, SimConfig(1e-3, 1e-3, [1.0]))
    assert len(traj) == 1 and traj.times[0] == 0.0


def test_record_stride():
    plant, ctrl, _ = s1_pair()
    traj = simulate(plant, ctrl, SimConfig(0.01, 1.0, [1.0], record_stride=10), n_points=101)
    assert np.allclose(np.diff(traj.times), 0.1)


def test_divergence_reported():
    plant, ctrl, _ = s1_pair(f=1.0)
    with pytest.raises(DivergenceError) as info:
        simulate(plant, ctrl, SimConfig(0.01, 40.0, [1.0]), n_points=101)
    assert 20 < info.value.time < 40


def test_config_validation():
    plant, ctrl, _ = s1_pair()
    with pytest.raises(ConfigurationError):
        simulate(plant, ctrl, SimConfig(0.5, 2.0, [1.0]))
    with pytest.raises(DimensionError):
        simulate(plant, ctrl, SimConfig(0.01, 1.0, [1.0, 2.0]))
    short = InitialHistory.table([-0.5], [[1.0]])
    with pytest.raises(DomainError):
        simulate(plant, ctrl, SimConfig(0.01, 1.0, [1.0], short))
    with pytest.raises(ConfigurationError):
        SimConfig(-1.0, 1.0, [1.0])


def test_functional_matches_recorded_values():
    plant, ctrl, w = s1_pair(0.98)
    cert = certify(plant, ctrl, w)
    u0 = InitialHistory.table([-1.0, -0.4], [[0.3], [-0.6]])
    traj = simulate(plant, ctrl, SimConfig(2e-3, 0.2, [0.5], u0), cert=cert)
    v0 = evaluate_functional([0.5], u0, cert.kernel, cert.v_matrix, cert.w_dprime, cert.sigma)
    assert traj.v_samples[0] == pytest.approx(v0, rel=1e-12)


def test_control_output_and_rhs_at_start():
    plant, ctrl, w = s1_pair()
    cert = certify(plant, ctrl, w)
    u0 = InitialHistory.constant([0.5])
    # u(0) = -(x + int_{-1}^0 0.5) = -(1 + 0.5)
    assert control_output([1.0], u0, cert.model_kernel, ctrl.gain)[0] == pytest.approx(-1.5)
    assert plant_rhs([1.0], u0, plant)[0] == pytest.approx(0.5)


def test_history_interpolates_and_holds():
    hist = InputHistory(InitialHistory.constant([2.0]), 0.1)
    hist.append([0.0])
    hist.append([1.0])
    assert hist.value_at(0.05)[0] == pytest.approx(0.5)
    assert hist.value_at(0.3)[0] == 1.0
    assert hist.value_at(0.0, "left")[0] == 2.0
    assert hist.value_at(0.0, "right")[0] == 0.0


def test_initial_history_table_norm():
    u0 = InitialHistory.table([-1.0, -0.5], [[1.0], [2.0]])
    assert u0.sq_l2_norm(1.0) == pytest.approx(0.5 + 2.0, rel=1e-12)
    assert u0.evaluate(-0.5, "left")[0, 0] == 1.0
    assert u0.evaluate(-0.5, "right")[0, 0] == 2.0


def test_envelopes_hold_on_random_certified_runs():
    checked = 0
    for plant, ctrl, rng in random_suite(31, 15, n=2, r=1, max_taps=1):
        cert = certify(plant, ctrl, n_points=201)
        if not cert.certified:
            continue
        u0 = InitialHistory.table([-plant.horizon], [rng.normal(size=1)])
        x0 = rng.normal(size=2)
        dt = plant.horizon / 50
        traj = simulate(plant, ctrl, SimConfig(dt, 8.0, x0, u0), cert=cert)
        rep = verify_envelope(traj, cert, x0 @ x0, u0.sq_l2_norm(plant.horizon))
        assert rep.passed, rep
        checked += 1
    assert checked >= 3


def test_zero_initial_data_is_vacuous():
    plant, ctrl, w = s1_pair()
    cert = certify(plant, ctrl, w)
    traj = simulate(plant, ctrl, SimConfig(0.01, 1.0, [0.0]), cert=cert, n_points=101)
    rep = verify_envelope(traj, cert, 0.0, 0.0)
    assert rep.passed and rep.ratio_x == 0.0
    assert math.isnan(rep.ratio_v) is False
