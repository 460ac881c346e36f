import numpy as np
import pytest

from ptflow.flows import PrescribedTimeGF, PTRegulator, QRescaledGF, QSignedGF, VanillaGF
from ptflow.integrator import IntegrationError, IntegratorConfig, integrate, settling_time, solve_ode
from ptflow.objectives import Objective, make_quadratic, make_rosenbrock, make_trid
from ptflow.timescale import TimeScaleParams

HALF_SQ = make_quadratic([[1.0]])


def pft(k, Tp, r=1, t0=0.0):
    return PrescribedTimeGF(k, TimeScaleParams(Tp=Tp, r=r, t0=t0))


def closed_form(k, Tp, x0, t):
    return x0 * (1 - t / Tp) ** (k * Tp)


@pytest.mark.parametrize("mode", ["stretched", "raw"])
def test_pft_half_square_midpoint(mode):
    cfg = IntegratorConfig(mode=mode, horizon=0.5, sample_count=11)
    traj = integrate(pft(1, 1), HALF_SQ, [1.0], cfg)
    # frozen from an independent high-order reference solve: x(0.5) = 0.5
    assert traj.times[-1] == 0.5
    assert traj.final_state[0] == pytest.approx(0.5, rel=1e-6)


@pytest.mark.parametrize("mode", ["stretched", "raw"])
@pytest.mark.parametrize("k, Tp, x0", [(1.0, 1.0, 1.0), (0.7, 2.0, -3.0), (2.0, 1.5, 0.25)])
def test_pft_closed_form_along_trajectory(mode, k, Tp, x0):
    cfg = IntegratorConfig(mode=mode, rel_tol=1e-10, abs_tol=1e-14, sample_count=400)
    traj = integrate(pft(k, Tp), HALF_SQ, [x0], cfg)
    assert traj.stop_reason in ("reached_t_stop", "equilibrium")
    exact = closed_form(k, Tp, x0, traj.times)
    big = np.abs(exact) > 1e-9
    rel = np.abs(traj.states[big, 0] - exact[big]) / np.abs(exact[big])
    assert rel.max() <= 1e-6
    assert np.all(np.abs(traj.states[~big, 0]) <= 1e-8)


def test_vanilla_exponential():
    traj = integrate(VanillaGF(1.0), HALF_SQ, [1.0], IntegratorConfig(horizon=1.0))
    assert traj.mode == "raw"
    assert traj.final_state[0] == pytest.approx(np.exp(-1.0), rel=1e-6)
    assert traj.final_state[0] == pytest.approx(0.36787944117144233, rel=1e-6)


def test_regulator_closed_form():
    spec = PTRegulator(1.0, TimeScaleParams(Tp=10))
    cfg = IntegratorConfig(abs_tol=1e-300, horizon=5.0, sample_count=101)
    traj = integrate(spec, None, [5.0], cfg)
    # frozen oracle: 5 * 0.5**11
    assert traj.final_state[0] == pytest.approx(0.00244140625, rel=1e-6)
    full = integrate(spec, None, [5.0], IntegratorConfig(abs_tol=1e-300))
    exact = 5.0 * (1 - full.times / 10) ** 11
    assert np.max(np.abs(full.states[:, 0] - exact) / exact) <= 1e-6
    assert full.stop_reason == "reached_t_stop"


def test_sample_grid_invariants():
    cfg = IntegratorConfig(sample_count=250, delta_rel=1e-4)
    traj = integrate(pft(0.1, 5), make_trid(2), [-2.0, 3.0], cfg)
    assert traj.times.size == 250 and traj.states.shape == (250, 2)
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[0] == 0.0
    assert traj.times[-1] == traj.t_stop == pytest.approx(5 * (1 - 1e-4), rel=1e-15)
    assert np.all(np.isfinite(traj.states))
    assert np.all(np.isnan(traj.lyap_vals)) and np.all(np.isnan(traj.envelope_vals))
    np.testing.assert_allclose(traj.f_vals, make_trid(2).eval(traj.states))


def test_t0_offset():
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-14)
    spec = pft(1.0, 2.0, t0=3.0)
    traj = integrate(spec, HALF_SQ, [1.0], cfg)
    assert traj.times[0] == 3.0
    assert traj.t_stop == pytest.approx(3.0 + 2.0 * (1 - 1e-6))
    exact = closed_form(1.0, 2.0, 1.0, traj.times - 3.0)
    np.testing.assert_allclose(traj.states[:, 0], exact, rtol=1e-6, atol=1e-9)


def test_settling_examples():
    traj = integrate(VanillaGF(), HALF_SQ, [0.0], IntegratorConfig(horizon=1.0))
    assert settling_time(traj, [0.0], 1e-6) == 0.0

    traj = integrate(pft(1, 1), HALF_SQ, [1.0], IntegratorConfig(rel_tol=1e-10, abs_tol=1e-14))
    spacing = traj.times[1] - traj.times[0]
    assert settling_time(traj, [0.0], 1e-3) == pytest.approx(0.999, abs=spacing)

    flat = Objective("flat", 1, lambda x: np.zeros(np.shape(x)[:-1]), lambda x: np.zeros_like(np.asarray(x, float)))
    traj = integrate(VanillaGF(), flat, [1.0], IntegratorConfig(horizon=1.0))
    assert settling_time(traj, [0.0], 1e-3) is None
    with pytest.raises(ValueError):
        settling_time(traj, [0.0], 0.0)


def test_settling_requires_staying_inside():
    from ptflow.integrator import Trajectory

    x = np.array([[1.0], [0.0], [1.0], [0.0], [0.0]])
    t = np.arange(5.0)
    nan = np.full(5, np.nan)
    traj = Trajectory(t, x, nan, nan, nan, nan, "reached_t_stop", 4.0, 4.0, "raw", "rk45")
    assert settling_time(traj, [0.0], 0.5) == 3.0


@pytest.mark.parametrize("obj, x0", [(make_trid(2), [-2.0, 3.0]), (make_quadratic(np.diag([1.0, 4.0]), [1, -2]), [5.0, 5.0])])
@pytest.mark.parametrize("r", [1, 2])
def test_mode_agreement(obj, x0, r):
    Tp = 10.0
    common = dict(delta_rel=1e-3, sample_count=100, rel_tol=1e-10, abs_tol=1e-14)
    spec = pft(0.1, Tp, r)
    a = integrate(spec, obj, x0, IntegratorConfig(mode="raw", **common))
    b = integrate(spec, obj, x0, IntegratorConfig(mode="stretched", **common))
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_allclose(a.states, b.states, rtol=1e-6, atol=1e-12)


def test_rk4_order():
    k, Tp, x0, T = 0.7, 1.0, 1.0, 0.5
    errs = []
    for h in (0.05, 0.025, 0.0125):
        cfg = IntegratorConfig(method="rk4", mode="raw", initial_step=h, horizon=T, sample_count=2)
        traj = integrate(pft(k, Tp), HALF_SQ, [x0], cfg)
        errs.append(abs(traj.final_state[0] - closed_form(k, Tp, x0, T)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 3.5), orders


@pytest.mark.filterwarnings("ignore:overflow encountered")
@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("method", ["rk45", "rk4"])
def test_raw_time_never_touches_singularity(r, method):
    # a TimeDomainError would propagate out of integrate
    cfg = IntegratorConfig(mode="raw", method=method, initial_step=1e-3, max_steps=10**6)
    traj = integrate(pft(0.1, 5.0, r), make_trid(2), [-2.0, 3.0], cfg)
    assert traj.times[-1] <= 5.0 * (1 - 1e-6)
    reg = PTRegulator(1.0, TimeScaleParams(Tp=2, r=r))
    try:
        out = integrate(reg, None, [1.0], IntegratorConfig(method=method, initial_step=1e-3))
    except IntegrationError:
        # a fixed explicit step is unstable once T(t) grows; that is reported,
        # never a time-domain error
        assert method == "rk4"
    else:
        assert np.all(np.isfinite(out.states))


@pytest.mark.parametrize(
    "spec, obj, x0, cfg",
    [
        (pft(0.1, 10, 2), make_trid(2), [100.0, 100.0], IntegratorConfig()),
        (pft(0.05, 10, 2), make_rosenbrock(2), [-1.0, 0.5], IntegratorConfig(delta_rel=1e-3)),
        (VanillaGF(0.5), make_rosenbrock(2), [-1.2, 1.0], IntegratorConfig(horizon=5.0)),
        (QRescaledGF(1.0, 3.0), make_trid(3), [3.0, -1.0, 0.0], IntegratorConfig(horizon=3.0)),
        (QSignedGF(1.0, 3.0), make_quadratic(np.diag([1.0, 4.0])), [1.0, 1.0], IntegratorConfig(horizon=3.0)),
    ],
)
def test_monotone_descent(spec, obj, x0, cfg):
    traj = integrate(spec, obj, x0, cfg)
    f = traj.f_vals
    assert np.all(f[1:] <= f[:-1] + 1e-10 * np.maximum(1.0, np.abs(f[:-1])))


@pytest.mark.parametrize("spec", [QSignedGF(1.0, 3.0), QRescaledGF(1.0, 3.0), QSignedGF(1.0, 4.0)])
def test_fractional_flows_stop_at_equilibrium(spec):
    obj = make_quadratic(np.diag([1.0, 4.0]))
    traj = integrate(spec, obj, [1.0, -1.0], IntegratorConfig(horizon=10.0))
    assert traj.stop_reason == "equilibrium"
    assert traj.stop_time < 10.0
    assert traj.times.size == 1000 and traj.times[-1] == 10.0
    assert np.linalg.norm(traj.final_state) < 1e-8
    np.testing.assert_array_equal(traj.states[-1], traj.states[-2])


def test_signed_flow_arrival_time():
    # for q = 1.5 the speed is c / ||grad f||, so f - f* drops at rate c
    obj = make_quadratic(np.diag([1.0, 4.0]))
    traj = integrate(QSignedGF(2.0, 1.5), obj, [1.0, -1.0], IntegratorConfig(horizon=10.0))
    assert traj.stop_reason == "equilibrium"
    assert traj.stop_time == pytest.approx(2.5 / 2.0, rel=1e-6)
    assert np.linalg.norm(traj.final_state) < 1e-5
    before = traj.times < traj.stop_time
    np.testing.assert_allclose(traj.f_vals[before], 2.5 - 2.0 * traj.times[before], atol=1e-6)


def test_smooth_flows_ignore_chattering_rule():
    obj = make_quadratic(np.diag([1.0, 4.0]))
    traj = integrate(VanillaGF(1.0), obj, [1.0, -1.0], IntegratorConfig(horizon=5.0))
    assert traj.stop_reason == "reached_t_stop"
    np.testing.assert_allclose(traj.final_state, [np.exp(-5.0), -np.exp(-20.0)], rtol=1e-6, atol=1e-10)


def test_stretched_rejections():
    sched = PrescribedTimeGF(0.1, TimeScaleParams(Tp=5), gain_schedule=lambda t: 0.1 + 0.01 * t)
    with pytest.raises(ValueError, match="constant gain"):
        integrate(sched, make_trid(2), [0.0, 0.0], IntegratorConfig(mode="stretched"))
    with pytest.raises(ValueError):
        integrate(VanillaGF(), make_trid(2), [0.0, 0.0], IntegratorConfig(mode="stretched", horizon=1.0))
    traj = integrate(sched, make_trid(2), [0.0, 0.0], IntegratorConfig(delta_rel=1e-3))
    assert traj.mode == "raw"


def test_schedule_matches_constant_gain():
    ts = TimeScaleParams(Tp=5)
    cfg = IntegratorConfig(mode="raw", delta_rel=1e-3, rel_tol=1e-10, abs_tol=1e-14)
    a = integrate(PrescribedTimeGF(0.1, ts, gain_schedule=lambda t: 0.1), make_trid(2), [-2.0, 3.0], cfg)
    b = integrate(PrescribedTimeGF(0.1, ts), make_trid(2), [-2.0, 3.0], cfg)
    np.testing.assert_allclose(a.states, b.states, rtol=1e-12)


def test_max_steps():
    traj = integrate(VanillaGF(), make_rosenbrock(2), [-1.2, 1.0], IntegratorConfig(horizon=50.0, max_steps=20))
    assert traj.stop_reason == "max_steps"
    assert traj.n_steps + traj.n_rejected == 20
    assert traj.times.size < 1000 and traj.times[-1] <= traj.stop_time
    assert traj.states.shape[0] == traj.times.size


def test_blow_up_is_reported():
    # x' = x^2 escapes to infinity at t = 1
    obj = Objective("cubic", 1, lambda x: -np.asarray(x)[..., 0] ** 3 / 3, lambda x: -np.asarray(x) ** 2)
    traj = integrate(VanillaGF(), obj, [1.0], IntegratorConfig(horizon=2.0))
    assert traj.stop_reason == "step_floor"
    assert traj.stop_time == pytest.approx(1.0, abs=1e-6)
    assert traj.times[-1] < 1.0 and np.all(np.isfinite(traj.states))


def test_errors():
    with pytest.raises(ValueError):
        integrate(VanillaGF(), HALF_SQ, [1.0], IntegratorConfig())
    with pytest.raises(ValueError):
        integrate(VanillaGF(), make_trid(2), [1.0], IntegratorConfig(horizon=1.0))
    with pytest.raises(IntegrationError):
        integrate(VanillaGF(), HALF_SQ, [np.nan], IntegratorConfig(horizon=1.0))


@pytest.mark.parametrize(
    "kwargs",
    [dict(method="euler"), dict(mode="fast"), dict(rel_tol=0), dict(abs_tol=-1), dict(delta_rel=0),
     dict(delta_rel=1), dict(max_steps=0), dict(sample_count=1), dict(initial_step=0), dict(horizon=-1)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegratorConfig(**kwargs)


def test_solve_ode_dense_output():
    # y' = cos t, compared at off-step samples
    ts = np.linspace(0, 10, 57)
    sol = solve_ode(lambda t, y: np.array([np.cos(t)]), 0.0, 10.0, [0.0], ts, rel_tol=1e-10, abs_tol=1e-12)
    np.testing.assert_allclose(sol.states[:, 0], np.sin(ts), atol=1e-8)
    assert sol.stop_reason == "reached_t_stop"


def test_deterministic():
    cfg = IntegratorConfig(delta_rel=1e-3)
    a = integrate(pft(0.05, 10, 2), make_rosenbrock(2), [-1.0, -1.0], cfg)
    b = integrate(pft(0.05, 10, 2), make_rosenbrock(2), [-1.0, -1.0], cfg)
    np.testing.assert_array_equal(a.states, b.states)
