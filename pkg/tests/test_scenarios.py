import math

import numpy as np
import pytest

from fpfdecomp.filters import make_rng, simulate_truth
from fpfdecomp.hermite import expansion_eval
from fpfdecomp.scenarios import (
    ScenarioSpec,
    build_cubic_sensor,
    build_lorenz,
    build_scenario,
    build_ship_polar,
    build_static_gain_mixture,
    scenario_defaults,
)


def test_scenario_spec_names():
    with pytest.raises(ValueError):
        ScenarioSpec(name="lorenz")
    ScenarioSpec(name="lorenz63")


def test_static_gain_mixture_values():
    prob = build_static_gain_mixture()
    # analytic gain at (2, 7): slope sigma2 mu1/(sigma1 mu2) = 2
    np.testing.assert_allclose(prob.analytic_gain(np.array([[2.0, 7.0]]))[0], [2.0, -4.0])
    np.testing.assert_allclose(prob.analytic_gain(np.array([[0.0, 3.0]]))[0], [0.0, 0.0])
    # h at (1, 1) with defaults: 1 - 1 = 0
    assert prob.h_at(np.array([[1.0, 1.0]]))[0, 0] == pytest.approx(0.0)
    # Hermite form evaluates identically
    for x in np.random.default_rng(0).normal(size=(20, 2)):
        assert expansion_eval(prob.h, x) == pytest.approx(
            prob.h_at(x[None, :])[0, 0], rel=1e-12, abs=1e-12
        )


def test_static_gain_mixture_validation():
    with pytest.raises(ValueError):
        build_static_gain_mixture({"sigma1": -1.0})
    with pytest.raises(ValueError):
        build_static_gain_mixture({"mu2": 0.0})


def test_cubic_sensor_drift():
    m = build_cubic_sensor(3)
    np.testing.assert_allclose(m.drift(np.zeros(3)), 0.0)
    np.testing.assert_allclose(m.drift(np.ones(3)), 0.0)
    assert m.drift(np.array([2.0, 0.0, 0.0]))[0] == pytest.approx(-6.0)
    J = m.drift_jac(np.array([1.0, 0.0, 2.0]))
    np.testing.assert_allclose(np.diag(J), [1 - 3, 1, 1 - 12])


def test_cubic_sensor_hermite_h():
    m = build_cubic_sensor(2)
    rng = np.random.default_rng(1)
    for x in rng.normal(size=(20, 2)):
        vals = m.h_at(x[None, :])[0]
        for j in range(2):
            assert vals[j] == pytest.approx(x[j] ** 3, rel=1e-13, abs=1e-13)
            assert expansion_eval(m.h[j], x) == pytest.approx(x[j] ** 3, rel=1e-12, abs=1e-12)


def test_ship_polar_drifts():
    m = build_ship_polar()
    # theta drift is exactly 1 everywhere
    for rho in (0.5, 2.0, 8.0, 12.0):
        assert m.drift(np.array([0.3, rho]))[0] == 1.0
    # rho drift at rho=2 < 9 with Q=1: (gamma + Q^2/2)/rho = 2.5/2
    assert m.drift(np.array([0.0, 2.0]))[1] == pytest.approx(1.25)
    # restoring force beyond the switch radius subtracts 50
    assert m.drift(np.array([0.0, 10.0]))[1] == pytest.approx(2.5 / 10.0 - 50.0)


def test_ship_initial_state_polar():
    m = build_ship_polar()
    np.testing.assert_allclose(m.x0, [math.atan2(-0.5, 0.5), math.hypot(0.5, -0.5)])
    assert m.x0[0] == pytest.approx(-np.pi / 4)
    assert m.x0[1] == pytest.approx(np.sqrt(0.5))


def test_ship_noise_free_theta_advances_linearly():
    m = build_ship_polar({"q": 0.0})
    x = m.x0.copy()
    dt, n = 0.05, 165
    for _ in range(n):
        x = x + m.drift(x) * dt
    assert x[0] - m.x0[0] == pytest.approx(dt * n, rel=1e-12)


def test_ship_diffusion_orthogonality():
    m = build_ship_polar()
    S = m.diffusion(np.array([0.7, 2.0]))
    np.testing.assert_allclose(S @ S.T, np.diag([1 / 4.0, 1.0]), atol=1e-12)


def test_ship_rho_floor_flag():
    m = build_ship_polar()
    states = np.array([[0.0, -1.0], [0.0, 2.0]])
    flags = m.apply_floor(states)
    assert "floor_clamped_1" in flags
    assert states[0, 1] == pytest.approx(1e-3)


def test_lorenz_parameters_and_h():
    m = build_lorenz()
    np.testing.assert_allclose(m.drift(np.zeros(3)), 0.0)
    np.testing.assert_allclose(m.drift(np.array([20.0, 15.0, 15.0])), [-50.0, 185.0, 260.0])
    assert m.h[0].coeffs == {(1, 0, 0): 0.5}
    assert m.R == 0.2
    np.testing.assert_allclose(m.x0, [20.0, 15.0, 15.0])


def test_lorenz_noise_free_matches_fine_rk4():
    # the Euler path converges at first order to the 10x-finer RK4 reference;
    # on this trajectory (a close origin passage around t ~ 0.6) the dt=0.001
    # deviation over [0, 1] is ~4e-2, halving with dt
    m = build_lorenz({"q": 0.0})

    def euler_end(dt, t_end):
        x = m.x0.copy()
        for _ in range(int(round(t_end / dt))):
            x = x + m.drift(x) * dt
        return x

    def rk4_end(h, t_end):
        y = m.x0.copy()
        for _ in range(int(round(t_end / h))):
            k1 = m.drift(y)
            k2 = m.drift(y + 0.5 * h * k1)
            k3 = m.drift(y + 0.5 * h * k2)
            k4 = m.drift(y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return y

    ref = rk4_end(0.0001, 1.0)
    err1 = np.linalg.norm(euler_end(0.001, 1.0) - ref) / np.linalg.norm(ref)
    err2 = np.linalg.norm(euler_end(0.0005, 1.0) - ref) / np.linalg.norm(ref)
    assert err1 < 5e-2
    assert err2 == pytest.approx(err1 / 2, rel=0.25)
    # over the early window the spec-scale 1e-2 band holds
    ref_short = rk4_end(0.0001, 0.25)
    err_short = np.linalg.norm(euler_end(0.001, 0.25) - ref_short) / np.linalg.norm(ref_short)
    assert err_short < 2e-2


def test_defaults_tables():
    d = scenario_defaults("ship_polar")
    assert d["T"] == 8.25 and d["dt"] == 0.05
    assert d["n_particles"]["fpf_decomp"] == 9 and d["n_particles"]["pf"] == 50
    assert list(d["eps"]) == [0.1, 0.1]
    d = scenario_defaults("lorenz63")
    assert d["T"] == 50.0 and d["dt"] == 0.001
    assert d["n_particles"]["pf"] == 500
    d = scenario_defaults("cubic_sensor_d")
    assert d["T"] == 40.0 and d["dt"] == 0.01 and d["eps"] == 0.01


def test_build_scenario_dispatch():
    model, defaults = build_scenario(ScenarioSpec("cubic_sensor_d", {"dim": 4}))
    assert model.d == 4
    prob, _ = build_scenario(ScenarioSpec("static_gain_mixture"))
    assert prob.n_particles == 100


def test_truth_simulation_shapes():
    m = build_ship_polar()
    truth, obs = simulate_truth(m, 165, 0.05, m.x0, make_rng(1, 0, 0))
    assert truth.shape == (166, 2)
    assert obs.shape == (165, 1)
    # discrete observations are the angle plus noise at matched magnitude
    assert np.abs(obs[:, 0] - truth[1:, 0]).max() < 5 * 0.32 + 0.5
