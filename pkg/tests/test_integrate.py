import numpy as np
import pytest

from oxydyn.equilibria import coexistence_equilibria
from oxydyn.errors import ConfigError, IntegrationError
from oxydyn.integrate import integrate
from oxydyn.model import ModelParams, eval_rhs


def test_rejects_bad_arguments():
    p = ModelParams()
    with pytest.raises(ConfigError):
        integrate(p, (1, 1, 1), dt=0.0)
    with pytest.raises(ConfigError):
        integrate(p, (1, 1, 1), t_end=-1.0)
    with pytest.raises(ConfigError):
        integrate(p, (1, 1, 1), method="rk45")
    with pytest.raises(ConfigError):
        integrate(p, (1, 1, -0.5))
    with pytest.raises(ConfigError):
        integrate(p, (1, 1, 1), record_stride=0)


def test_time_axis_and_recording_stride():
    p = ModelParams()
    traj = integrate(p, (1.0, 1.0, 0.0), dt=0.01, t_end=1.0,
                     record_stride=10)
    np.testing.assert_allclose(traj.times, np.arange(11) * 0.1, atol=1e-12)
    assert traj.states.shape == (11, 3)
    np.testing.assert_array_equal(traj.states[0], [1.0, 1.0, 0.0])


def test_equilibrium_is_a_fixed_point():
    p = ModelParams(mu1=0.0, mu2=0.45)
    eq = coexistence_equilibria(p)[-1].location.as_array()
    traj = integrate(p, eq, dt=1e-3, t_end=50.0, record_stride=100)
    drift = np.max(np.abs(traj.final_state() - eq))
    assert drift < 1e-8, f"drift {drift} off a stable equilibrium"


def test_rk4_fourth_order_convergence():
    p = ModelParams(mu1=0.05, mu2=0.5)
    ic = (1.0, 1.0, 0.5)
    ref = integrate(p, ic, dt=1e-4, t_end=2.0,
                    record_stride=20000).final_state()
    errs = []
    for dt in (0.02, 0.01):
        out = integrate(p, ic, dt=dt, t_end=2.0,
                        record_stride=int(2.0 / dt)).final_state()
        errs.append(np.max(np.abs(out - ref)))
    order = np.log2(errs[0] / errs[1])
    assert order > 3.5, f"observed order {order:.2f}"


def test_euler_first_order_convergence():
    p = ModelParams(mu1=0.05, mu2=0.5)
    ic = (1.0, 1.0, 0.5)
    ref = integrate(p, ic, dt=1e-4, t_end=2.0,
                    record_stride=20000).final_state()
    errs = []
    for dt in (0.002, 0.001):
        out = integrate(p, ic, dt=dt, t_end=2.0, method="euler",
                        record_stride=int(2.0 / dt)).final_state()
        errs.append(np.max(np.abs(out - ref)))
    order = np.log2(errs[0] / errs[1])
    assert 0.7 < order < 1.3, f"observed order {order:.2f}"


def test_extinction_event_detected():
    # strong quadratic mortality just below the cycle-collapse boundary
    # drives the whole system extinct
    p = ModelParams(mu1=0.3, mu2=0.09917, eps=0.5)
    ic = (1.0, 1.0, 0.5)
    traj = integrate(p, ic, dt=1e-3, t_end=1500.0, record_stride=1000)
    kinds = [k for _, k in traj.events]
    assert "Extinction" in kinds
    t_ext = traj.events[0][0]
    assert 0.0 < t_ext < 1500.0
    # integration continues past the event
    assert traj.times[-1] == pytest.approx(1500.0)
    assert np.all(traj.final_state() < 1e-6)


def test_no_event_on_bounded_oscillation():
    p = ModelParams(mu1=0.0, mu2=0.35)
    traj = integrate(p, (1.5, 2.0, 1.0), dt=1e-3, t_end=500.0,
                     record_stride=100)
    assert traj.events == []
    assert np.all(traj.states >= 0.0)


def test_oversized_euler_step_raises():
    p = ModelParams(mu1=0.3, mu2=0.1, eps=0.5)
    with pytest.raises(IntegrationError, match="negativity"):
        integrate(p, (0.001, 2.0, 2.0), dt=0.2, t_end=50.0, method="euler")


def test_states_remain_nonnegative():
    rng = np.random.default_rng(21)
    p = ModelParams(mu1=0.1, mu2=0.2)
    for _ in range(5):
        ic = rng.uniform(0.0, 3.0, 3)
        traj = integrate(p, ic, dt=1e-3, t_end=100.0, record_stride=100)
        assert np.all(traj.states >= 0.0)


def test_window_selection():
    p = ModelParams()
    traj = integrate(p, (1.0, 1.0, 0.0), dt=0.01, t_end=10.0,
                     record_stride=10)
    w = traj.window(5.0, 7.0)
    assert len(w) == 21


def test_single_euler_step_matches_rhs():
    p = ModelParams(mu1=0.1, mu2=0.2)
    ic = np.array([1.0, 1.5, 0.8])
    dt = 1e-3
    traj = integrate(p, ic, dt=dt, t_end=dt, method="euler")
    expected = ic + dt * np.array(eval_rhs(p, ic))
    np.testing.assert_allclose(traj.final_state(), expected, rtol=1e-14)
