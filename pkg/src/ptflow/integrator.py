"""ODE integration of the flows on ``[t0, t0 + Tp)``.

Two explicit schemes are provided: classical fixed-step RK4 with cubic
Hermite dense output, and the Dormand-Prince 5(4) pair with PI step control
and its native quartic continuous extension.

Time-varying flows are integrated up to ``t_stop = t0 + Tp (1 - delta_rel)``,
never beyond. Two routes exist:

* raw time: step in ``t`` with every step capped at half the remaining
  distance to the singular time ``t0 + Tp``;
* stretched time: with ``ds = T(t) dt`` and constant gain the flow becomes
  autonomous, ``dx/ds = -k grad f`` (or ``-rho x`` for the regulator), so it
  is integrated in ``s`` and samples are mapped back with
  :func:`~ptflow.timescale.physical_time`.

Output is always sampled on a uniform grid in physical time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .flows import (
    FlowSpec,
    PrescribedTimeGF,
    QRescaledGF,
    QSignedGF,
    field as flow_field,
    is_time_varying,
)
from .objectives import Objective
from .timescale import integral_T, physical_time

__all__ = [
    "IntegrationError",
    "IntegratorConfig",
    "Trajectory",
    "OdeSolution",
    "solve_ode",
    "integrate",
    "settling_time",
]

STOP_REASONS = ("reached_t_stop", "equilibrium", "step_floor", "max_steps")


class IntegrationError(RuntimeError):
    """The integration produced a non-finite state or was misconfigured."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings shared by every integration.

    ``mode`` is ``"raw"`` or ``"stretched"``; ``None`` picks stretched time for
    the constant-gain prescribed-time gradient flow and raw time otherwise.
    ``horizon`` is required for flows without a time scale and optionally
    shortens the interval of time-varying ones.
    """

    method: str = "rk45"
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    initial_step: Optional[float] = None
    max_steps: int = 10**7
    delta_rel: float = 1e-6
    mode: Optional[str] = None
    sample_count: int = 1000
    horizon: Optional[float] = None
    t0: float = 0.0
    equilibrium_tol: float = 1e-12
    equilibrium_steps: int = 5

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"method must be 'rk45' or 'rk4', got {self.method!r}")
        if self.mode not in (None, "raw", "stretched"):
            raise ValueError(f"mode must be 'raw' or 'stretched', got {self.mode!r}")
        for name in ("rel_tol", "abs_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.delta_rel < 1.0:
            raise ValueError("delta_rel must lie in (0, 1)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.sample_count < 2:
            raise ValueError("sample_count must be >= 2")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be positive")


@dataclass
class Trajectory:
    """A sampled solution together with per-sample diagnostics.

    ``lyap_vals`` and ``envelope_vals`` hold NaN until a Lyapunov envelope is
    attached (see :func:`ptflow.diagnostics.attach_envelope`).
    """

    times: np.ndarray
    states: np.ndarray
    f_vals: np.ndarray
    grad_norms: np.ndarray
    lyap_vals: np.ndarray
    envelope_vals: np.ndarray
    stop_reason: str
    t_stop: float
    stop_time: float
    mode: str
    method: str
    n_steps: int = 0
    n_rejected: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


# Dormand-Prince 5(4) tableau with its quartic dense-output matrix.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# the real stability interval of the pair ends near -3.3; stay inside it
_STABLE_H_LAMBDA = 3.0


@dataclass
class OdeSolution:
    """Samples of a generic solve at the requested times."""

    times: np.ndarray
    states: np.ndarray
    stop_reason: str
    stop_time: float
    n_steps: int
    n_rejected: int


def _rms(v):
    # scaled so that huge tolerance ratios (tiny abs_tol) do not overflow
    m = float(np.max(np.abs(v))) if np.size(v) else 0.0
    if m == 0.0 or not math.isfinite(m):
        return m
    return m * math.sqrt(float(np.mean((v / m) ** 2)))


def _initial_step(rhs, t, y, f0, direction_span, rtol, atol):
    # Hairer, Norsett & Wanner, "Solving ODEs I", II.4
    scale = atol + rtol * np.abs(y)
    d0, d1 = _rms(y / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = y + h0 * f0
    f1 = rhs(t + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def solve_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t_start: float,
    t_end: float,
    y0,
    sample_times,
    *,
    method: str = "rk45",
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    initial_step: Optional[float] = None,
    max_steps: int = 10**7,
    step_cap: Optional[Callable[[float], float]] = None,
    at_rest: Optional[Callable[[float, np.ndarray], bool]] = None,
    rest_steps: int = 5,
    floor_is_rest: bool = False,
) -> OdeSolution:
    """Integrate ``y' = rhs(t, y)`` from ``t_start`` to ``t_end``.

    ``sample_times`` must be sorted and lie in ``[t_start, t_end]``; the
    returned states are interpolated from accepted steps. ``step_cap(t)``
    bounds the next step. When ``at_rest`` holds after ``rest_steps``
    consecutive accepted steps the solve stops with reason ``"equilibrium"``
    and the remaining samples repeat the last state. On ``"step_floor"`` or
    ``"max_steps"`` the samples past the stopping time are dropped, unless
    ``floor_is_rest`` is set, in which case a step floor also counts as
    ``"equilibrium"``.
    """
    y = np.array(y0, dtype=float).reshape(-1)
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.size and (sample_times[0] < t_start or sample_times[-1] > t_end):
        raise ValueError("sample times must lie inside the integration interval")
    if not t_end > t_start:
        raise ValueError("t_end must exceed t_start")
    if not np.all(np.isfinite(y)):
        raise IntegrationError("initial state is not finite")

    out = np.empty((sample_times.size, y.size))
    n_out = 0
    while n_out < sample_times.size and sample_times[n_out] <= t_start:
        out[n_out] = y
        n_out += 1

    t = float(t_start)
    f = rhs(t, y)
    if not np.all(np.isfinite(f)):
        raise IntegrationError(f"non-finite vector field at t={t!r}")

    def cap(t_now, h):
        h = min(h, t_end - t_now)
        if step_cap is not None:
            h = min(h, step_cap(t_now))
        return h

    if method == "rk4":
        h_nominal = initial_step if initial_step is not None else (t_end - t_start) / 10_000
    elif initial_step is not None:
        h = initial_step
    else:
        h = _initial_step(rhs, t, y, f, cap(t, t_end - t), rel_tol, abs_tol)

    n_steps = n_rejected = 0
    rest_count = 0
    stiff_cap = math.inf
    err_prev = 1e-4
    reason = "reached_t_stop"
    K = np.empty((7, y.size))

    while t < t_end:
        if n_steps + n_rejected >= max_steps:
            reason = "max_steps"
            break
        if method == "rk4":
            h = cap(t, h_nominal)
        else:
            h = cap(t, h)
        # smallest step that still moves t
        floor = max(16 * np.finfo(float).eps * abs(t), 1e-300)
        if h <= floor:
            reason = "equilibrium" if floor_is_rest else "step_floor"
            break
        # land exactly on t_end when within a hair of it
        t_new = t + h if t_end - (t + h) > floor else t_end
        h = t_new - t

        if method == "rk4":
            k1 = f
            k2 = rhs(t + h / 2, y + h / 2 * k1)
            k3 = rhs(t + h / 2, y + h / 2 * k2)
            k4 = rhs(t_new, y + h * k3)
            y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(y_new)):
                raise IntegrationError(f"non-finite state at t={t_new!r} (step {h:.3e})")
            f_new = rhs(t_new, y_new)

            def dense(tau, y=y, f=f, y_new=y_new, f_new=f_new, t=t, h=h):
                th = (tau - t) / h
                h00 = (1 + 2 * th) * (1 - th) ** 2
                h10 = th * (1 - th) ** 2
                h01 = th**2 * (3 - 2 * th)
                h11 = th**2 * (th - 1)
                return h00 * y + h10 * h * f + h01 * y_new + h11 * h * f_new
        else:
            K[0] = f
            for i in range(1, 6):
                K[i] = rhs(t + _C[i] * h, y + h * (_A[i] @ K[:i]))
            y_new = y + h * (_B @ K[:6])
            f_new = rhs(t_new, y_new)
            K[6] = f_new
            if not (np.all(np.isfinite(K)) and np.all(np.isfinite(y_new))):
                n_rejected += 1
                h *= _MIN_FACTOR
                if h <= floor:
                    raise IntegrationError(f"non-finite state near t={t!r}; step shrank to the floor")
                continue
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms(h * (_E @ K) / scale)
            if err > 1.0:
                n_rejected += 1
                h *= max(_MIN_FACTOR, _SAFETY * err ** (-_ALPHA))
                continue
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** (-_ALPHA) * err_prev**_BETA
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            err_prev = max(err, 1e-4)
            Q = K.T @ _P
            # stages 6 and 7 share the abscissa t + h: their slope ratio
            # estimates the dominant eigenvalue (DOPRI5 stiffness test)
            dy = y_new - (y + h * (_A[5] @ K[:5]))
            dy_norm = float(np.linalg.norm(dy))
            # kept from the last reliable estimate once dy sinks into rounding
            if dy_norm > 1e3 * np.finfo(float).eps * float(np.linalg.norm(y_new)) and dy_norm > 0:
                lam = float(np.linalg.norm(K[6] - K[5])) / dy_norm
                if lam > 0:
                    stiff_cap = _STABLE_H_LAMBDA / lam

            def dense(tau, y=y, Q=Q, t=t, h=h):
                th = (tau - t) / h
                return y + h * (Q @ np.array([th, th**2, th**3, th**4]))

        n_steps += 1
        while n_out < sample_times.size and sample_times[n_out] <= t_new:
            tau = sample_times[n_out]
            out[n_out] = y_new if tau == t_new else dense(tau)
            n_out += 1
        t, y, f = t_new, y_new, f_new
        if method != "rk4":
            h = min(h * factor, stiff_cap)

        if at_rest is not None and at_rest(t, y):
            rest_count += 1
            if rest_count >= rest_steps and t < t_end:
                reason = "equilibrium"
                break
        else:
            rest_count = 0

    if reason == "equilibrium":
        out[n_out:] = y
        n_out = sample_times.size
    return OdeSolution(sample_times[:n_out], out[:n_out], reason, t, n_steps, n_rejected)


def _default_mode(spec: FlowSpec) -> str:
    if isinstance(spec, PrescribedTimeGF) and spec.gain_schedule is None:
        return "stretched"
    return "raw"


def _interval(spec: FlowSpec, cfg: IntegratorConfig):
    if is_time_varying(spec):
        ts = spec.ts
        t_start = ts.t0
        t_stop = ts.t_stop(cfg.delta_rel)
        if cfg.horizon is not None:
            t_stop = min(t_stop, ts.t0 + cfg.horizon)
        return t_start, t_stop
    if cfg.horizon is None:
        raise ValueError("flows without a time scale need an integration horizon")
    return cfg.t0, cfg.t0 + cfg.horizon


def _gradient_eval(obj, states):
    if obj is None:
        nan = np.full(states.shape[0], np.nan)
        return nan, nan.copy()
    return np.asarray(obj.eval(states), dtype=float), np.linalg.norm(obj.grad(states), axis=-1)


def integrate(spec: FlowSpec, obj: Optional[Objective], x0, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate ``spec`` from ``x0`` and sample it uniformly in time.

    In stretched mode only constant-gain time-varying flows are accepted:
    with a gain schedule the substitution no longer removes the time scale.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    # validates shapes and the objective pairing up front
    flow_field(spec, obj, _interval(spec, cfg)[0], x0)
    t_start, t_stop = _interval(spec, cfg)
    times = np.linspace(t_start, t_stop, cfg.sample_count)
    mode = cfg.mode or _default_mode(spec)

    # The fractional flows are non-Lipschitz at the minimizer. Once there, an
    # explicit step either jumps across it (the gradient flips) or its stages
    # cancel and the state stalls although the field is nonzero.
    chatter = isinstance(spec, (QRescaledGF, QSignedGF))
    prev = {}

    def gradient_at_rest(t, x):
        g = obj.grad(x)
        if float(np.linalg.norm(g)) <= cfg.equilibrium_tol:
            return True
        if not chatter:
            return False
        v = flow_field(spec, obj, t, x)
        stuck = False
        if prev:
            flipped = float(np.dot(g, prev["g"])) < 0.0
            moved = float(np.linalg.norm(x - prev["x"]))
            stalled = moved < 0.5 * (t - prev["t"]) * float(np.linalg.norm(prev["v"]))
            stuck = flipped or stalled
        prev.update(t=t, x=np.array(x), g=g, v=v)
        return stuck

    def state_at_rest(_t, x):
        # the regulator's equilibrium is 0, unresolvable below abs_tol
        return float(np.max(np.abs(x))) <= cfg.abs_tol

    at_rest = gradient_at_rest if obj is not None else state_at_rest

    common = dict(
        method=cfg.method,
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        initial_step=cfg.initial_step,
        max_steps=cfg.max_steps,
        at_rest=at_rest,
        rest_steps=cfg.equilibrium_steps,
        # for q < 2 the speed diverges on arrival, so the step collapses there
        floor_is_rest=chatter,
    )

    if mode == "stretched":
        if not is_time_varying(spec):
            raise ValueError("stretched time only applies to flows with a time scale")
        if isinstance(spec, PrescribedTimeGF):
            if spec.gain_schedule is not None:
                raise ValueError("stretched time needs a constant gain k; use raw time with a schedule")
            k = spec.k

            def rhs(_s, x):
                return -k * obj.grad(x)
        else:
            rho = spec.rho

            def rhs(_s, x):
                return -rho * x

        ts = spec.ts
        s_samples = integral_T(ts, times)
        s_samples[0] = 0.0
        sol = solve_ode(rhs, 0.0, float(s_samples[-1]), x0, s_samples, **common)
        sample_t = times[: sol.times.size]
        stop_time = physical_time(ts, sol.stop_time) if sol.stop_reason != "reached_t_stop" else t_stop
    else:
        def rhs(t, x):
            return flow_field(spec, obj, t, x)

        step_cap = None
        if is_time_varying(spec):
            t_sing = spec.ts.t_end
            step_cap = lambda t: 0.5 * (t_sing - t)  # noqa: E731

        sol = solve_ode(rhs, t_start, t_stop, x0, times, step_cap=step_cap, **common)
        sample_t = sol.times
        stop_time = sol.stop_time

    states = sol.states
    if not np.all(np.isfinite(states)):
        raise IntegrationError("non-finite samples in the trajectory")
    f_vals, grad_norms = _gradient_eval(obj, states)
    nan = np.full(sample_t.size, np.nan)
    return Trajectory(
        times=sample_t,
        states=states,
        f_vals=f_vals,
        grad_norms=grad_norms,
        lyap_vals=nan,
        envelope_vals=nan.copy(),
        stop_reason=sol.stop_reason,
        t_stop=t_stop,
        stop_time=float(stop_time),
        mode=mode,
        method=cfg.method,
        n_steps=sol.n_steps,
        n_rejected=sol.n_rejected,
        meta={"ts": spec.ts} if is_time_varying(spec) else {},
    )


def settling_time(traj: Trajectory, x_star, eps: float) -> Optional[float]:
    """First sample time after which ``||x - x_star|| <= eps`` holds for good."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    dist = np.linalg.norm(traj.states - np.asarray(x_star, dtype=float), axis=-1)
    outside = np.nonzero(dist > eps)[0]
    if outside.size == 0:
        return float(traj.times[0])
    last = outside[-1]
    if last == dist.size - 1:
        return None
    return float(traj.times[last + 1])
