"""Exit criteria of the build, one test per criterion.

Each test records a ``criterion N: PASS|FAIL ...`` line; the lines are
printed in the terminal summary (see conftest.py) and, with ``-s``, inline.
"""
import math
import shutil
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ptflow import (
    EnvelopeSpec,
    IntegratorConfig,
    PrescribedTimeGF,
    PTRegulator,
    TimeScaleParams,
    VanillaGF,
    check_envelope,
    check_gradient,
    integrate,
    lemma2_oracle,
    make_quadratic,
    make_rosenbrock,
    make_trid,
    regulator_bound_check,
    verify_pl,
)
from ptflow.config import build_experiment, load_config
from ptflow.experiment import run_cases
from ptflow.objectives import BoxDomain

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-14)


def verdict(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def info(n, detail):
    line = f"criterion {n}: info  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def recipe_results(name, overrides=()):
    exp = build_experiment(load_config(str(CONFIGS / name), list(overrides)))
    return exp, run_cases(exp)


def test_c01_closed_form_quadratic():
    obj = make_quadratic(np.eye(1))
    flow = PrescribedTimeGF(1.0, TimeScaleParams(Tp=1.0, r=1))
    start = time.perf_counter()
    traj = integrate(flow, obj, [1.0], IntegratorConfig(abs_tol=1e-14, sample_count=1000))
    elapsed = time.perf_counter() - start
    exact = (1.0 - traj.times / 1.0) ** (1.0 * 1.0)
    err = float(np.max(np.abs(traj.states[:, 0] - exact) / exact))
    ok = traj.times.size == 1000 and traj.times[-1] == 1 - 1e-6 and err <= 1e-6 and elapsed < 1.0
    verdict(1, ok, f"max rel error {err:.2e} (<= 1e-6), runtime {elapsed:.3f} s (< 1 s)")


def test_c02_fig1_horizons():
    exp, results = recipe_results("fig1_trid_tp.cfg")
    x_star = np.array([2.0, 2.0])
    errors, settles, stops = [], [], []
    for res in results:
        Tp = res.case.Tp
        stops.append(res.trajectory.t_stop == Tp * (1 - 1e-6))
        errors.append(float(np.linalg.norm(res.trajectory.final_state - x_star)))
        settles.append(res.summary.settling_time)
    ok = (all(stops) and all(e <= 1e-3 for e in errors)
          and all(s is not None and s <= Tp * (1 - 1e-6) for s, Tp in zip(settles, (5, 10, 15)))
          and settles[0] < settles[1] < settles[2])
    # with r = 1 the residual at t_stop would be delta**(k sigma Tp) ||e0||
    e0 = np.linalg.norm(np.array([-2.0, 3.0]) - x_star)
    r1 = [1e-6 ** (0.1 * 1.0 * Tp) * e0 for Tp in (5, 10, 15)]
    info(2, "r=1 closed-form residuals at t_stop: " + ", ".join(f"{v:.2e}" for v in r1))
    verdict(2, ok, "final errors " + ", ".join(f"{e:.1e}" for e in errors)
            + "; settling " + ", ".join(f"{s:.3f}" for s in settles) + " for Tp = 5, 10, 15")


def test_c03_fig2_initial_conditions():
    exp, results = recipe_results("fig2_trid_inits.cfg")
    x_star = np.array([2.0, 2.0])
    errors = [float(np.linalg.norm(r.trajectory.final_state - x_star)) for r in results]
    settled = all(e <= 1e-3 for e in errors) and all(r.summary.settling_time <= 10 for r in results)

    obj = make_trid(2)
    x0 = np.array([100.0, 100.0])
    vanilla = integrate(VanillaGF(0.1), obj, x0, IntegratorConfig(horizon=10.0))
    vanilla_err = float(np.linalg.norm(vanilla.final_state - x_star))
    # quadratic surrogate: ||e(t)|| >= ||e0|| exp(-c lambda_max t) with lambda_max = 3
    e0 = float(np.linalg.norm(x0 - x_star))
    surrogate = e0 * math.exp(-0.1 * 3.0 * 10.0)
    ok = settled and vanilla_err > 1e-3 and surrogate > 1e-3 and vanilla_err >= surrogate * (1 - 1e-6)
    verdict(3, ok, "final errors " + ", ".join(f"{e:.1e}" for e in errors)
            + f"; vanilla c=0.1 at t=10: {vanilla_err:.3g} (surrogate lower bound {surrogate:.3g})")


def test_c04_fig3_rosenbrock():
    exp, results = recipe_results("fig3_rosenbrock.cfg")
    errors = [float(np.linalg.norm(r.trajectory.final_state - 1.0)) for r in results]
    inits = {tuple(r.case.x0) for r in results}
    grid = {(a, b) for a in (-1, -0.5, 0, 0.5) for b in (-1, -0.5, 0, 0.5)}
    ok = inits == grid and max(errors) <= 1e-2
    verdict(4, ok, f"{len(errors)} grid starts, worst final error {max(errors):.2e} (<= 1e-2)")


def test_c05_pl_envelope():
    ts = TimeScaleParams(Tp=10.0)
    flow = PrescribedTimeGF(0.1, ts)
    spec = EnvelopeSpec("pl_envelope", 1.0, ts, gain=0.1)
    obj = make_quadratic(np.diag([1.0, 4.0]))
    worst_dom = 0.0
    dominated = True
    for x0 in ([1.0, -1.0], [-0.3, 2.0], [5.0, 0.0]):
        rep = check_envelope(integrate(flow, obj, x0, TIGHT), obj, spec)
        dominated &= rep.holds
        worst_dom = max(worst_dom, rep.max_violation)
    eye = make_quadratic(np.eye(2))
    rep = check_envelope(integrate(flow, eye, [1.0, -1.0], TIGHT), eye, spec)
    eq_err = float(np.max(np.abs(rep.V - rep.bound) / rep.bound))
    ok = dominated and eq_err <= 1e-5
    verdict(5, ok, f"diag(1,4) dominated, worst exceedance {worst_dom:.1e}; A=I equality rel error {eq_err:.1e}")


def test_c06_sc_envelope():
    ts = TimeScaleParams(Tp=10.0)
    flow = PrescribedTimeGF(0.1, ts)
    spec = EnvelopeSpec("sc_envelope", 1.0, ts, gain=0.1)
    obj = make_quadratic(np.diag([1.0, 4.0]))
    reps = [check_envelope(integrate(flow, obj, x0, TIGHT), obj, spec)
            for x0 in ([1.0, -1.0], [-0.3, 2.0], [5.0, 0.0])]
    ok = all(r.holds for r in reps)
    verdict(6, ok, f"||x - x*||^2 dominated, worst exceedance {max(r.max_violation for r in reps):.1e}")


def test_c07_lemma2_oracle():
    cases = [
        (1.0, 1.0, lambda t: np.zeros_like(t), "0"),
        (1.0, 1.0, lambda t: np.ones_like(t), "1"),
        (0.5, 2.0, lambda t: np.sin(10.0 * t), "sin 10t"),
    ]
    V0 = 1.0
    ok, worst, parts = True, 0.0, []
    for Tp in (1.0, 5.0):
        ts = TimeScaleParams(Tp=Tp, r=1)
        t_stop = Tp * (1 - 1e-6)
        for rho, lam, L, label in cases:
            res = lemma2_oracle(rho, lam, L, ts, V0, t_stop)
            ok &= res.holds
            worst = max(worst, res.max_violation)
            if label == "0":
                target = V0 * (1e-6) ** (2 * rho * Tp * (1 / Tp))
                # closed form for r = 1: V0 delta**(2 rho Tp), at most the target
                exact = V0 * (1e-6) ** (2 * rho * Tp)
                ok &= res.V_traj[-1] <= target * (1 + 1e-8)
                ok &= res.V_traj[-1] == pytest.approx(exact, rel=1e-8)
                parts.append(f"Tp={Tp:g} V(t_stop)={res.V_traj[-1]:.3e} <= {target:.0e}")
    verdict(7, ok, f"6 cases dominated, worst exceedance {worst:.1e}; " + "; ".join(parts))


def test_c08_regulator():
    ts = TimeScaleParams(Tp=10.0, r=1)
    cfg = IntegratorConfig(mode="stretched", rel_tol=1e-10, abs_tol=1e-300)
    start = time.perf_counter()
    traj = integrate(PTRegulator(1.0, ts), None, [5.0], cfg)
    elapsed = time.perf_counter() - start
    exact = 5.0 * (1 - traj.times / 10.0) ** 11
    err = float(np.max(np.abs(traj.states[:, 0] - exact) / exact))
    rep = regulator_bound_check(traj, 1.0, ts)
    ok = err <= 1e-6 and rep.holds and elapsed < 1.0
    verdict(8, ok, f"rel error {err:.1e}, bound holds (worst exceedance {rep.max_violation:.1e}), "
            f"runtime {elapsed:.3f} s")


def test_c09_mode_agreement():
    obj = make_trid(2)
    worst = 0.0
    for r in (1, 2):
        flow = PrescribedTimeGF(0.1, TimeScaleParams(Tp=10.0, r=r))
        cfg = dict(delta_rel=1e-3, sample_count=100, rel_tol=1e-10, abs_tol=1e-14)
        raw = integrate(flow, obj, [-2.0, 3.0], IntegratorConfig(mode="raw", **cfg))
        st = integrate(flow, obj, [-2.0, 3.0], IntegratorConfig(mode="stretched", **cfg))
        assert np.array_equal(raw.times, st.times) and raw.times[-1] == 10.0 * (1 - 1e-3)
        worst = max(worst, float(np.max(np.abs(raw.states - st.states) / np.abs(st.states))))
    verdict(9, worst <= 1e-6, f"max rel difference raw vs stretched {worst:.1e} over 100 samples, r = 1 and 2")


def test_c10_gradients():
    rng = np.random.default_rng(20240610)
    objs = [make_trid(n) for n in range(2, 11)] + [make_rosenbrock(2), make_rosenbrock(5)]
    objs += [make_quadratic(np.diag([1.0, 4.0])), make_quadratic([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 3.0]])]
    worst = 0.0
    for obj in objs:
        for x in rng.uniform(-5, 5, size=(100, obj.dim)):
            worst = max(worst, check_gradient(obj, x))
    verdict(10, worst < 1e-6, f"{len(objs)} objectives x 100 points, worst mismatch {worst:.1e}")


def test_c11_pl_verifier():
    quad = verify_pl(make_quadratic(np.diag([1.0, 4.0])), BoxDomain.cube(2), 51)
    ros = verify_pl(make_rosenbrock(2), BoxDomain.cube(2), 101, sigma=0.1)
    info(11, f"Rosenbrock sigma_hat on [-1,1]^2 (101x101) = {ros.sigma_hat:.6g} vs recorded modulus 0.1, "
         f"{len(ros.violations)} grid points below 0.1")
    ok = quad.sigma_hat >= 1 - 1e-9 and math.isfinite(ros.sigma_hat) and ros.n_points == 101 * 101
    verdict(11, ok, f"quadratic sigma_hat {quad.sigma_hat:.12g} (>= 1 - 1e-9); Rosenbrock report completed")


def test_c12_cli_determinism(tmp_path):
    exe = shutil.which("ptflow")
    cmd = [exe] if exe else [sys.executable, "-m", "ptflow.cli"]
    outputs = []
    for name in ("a", "b"):
        work = tmp_path / name
        work.mkdir()
        proc = subprocess.run([*cmd, "run", str(CONFIGS / "fig1_trid_tp.cfg")], cwd=work,
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        files = sorted(p for p in (work / "out").rglob("*") if p.suffix in (".csv", ".json"))
        outputs.append({p.relative_to(work): p.read_bytes() for p in files})
    same = outputs[0] == outputs[1] and len(outputs[0]) == 6
    verdict(12, same, f"{len(outputs[0])} CSV/JSON files byte-identical across two runs")
