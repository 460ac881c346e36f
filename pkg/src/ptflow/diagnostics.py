"""Lyapunov envelopes and the checks built on them.

For a time scale ``T`` with running integral ``I(t) = int_t0^t T``:

* PL envelope on ``V = f - f*``:           ``V0 exp(-2 sigma k I(t))``
* strong-convexity envelope on ``V = ||x - x*||^2``: ``V0 exp(-2 mu k I(t))``
* regulator envelope on ``V = h^2 / 2``:    ``V0 exp(-2 rho0 I(t))``
* scalar comparison lemma:                 ``V0 exp(-2 rho I(t)) + sup L^2 / (8 rho lambda)``

Envelopes assume a constant gain ``k``; a time-varying gain would have to
move inside the integral.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .integrator import IntegrationError, Trajectory, solve_ode
from .objectives import Objective
from .timescale import TimeScaleParams, eval_T, integral_T, physical_time

__all__ = [
    "ENVELOPE_KINDS",
    "EnvelopeSpec",
    "EnvelopeReport",
    "envelope",
    "lyapunov_values",
    "attach_envelope",
    "check_envelope",
    "Lemma2Result",
    "lemma2_oracle",
    "RegulatorReport",
    "regulator_bound",
    "regulator_bound_check",
]

ENVELOPE_KINDS = ("pl_envelope", "sc_envelope", "regulator_bound", "lemma2_bound")

REL_SLACK = 1e-8
ABS_SLACK = 1e-12


@dataclass(frozen=True)
class EnvelopeSpec:
    """Which envelope to build and its constants.

    ``modulus`` is sigma, mu, rho0 or rho depending on ``kind``; ``gain`` is
    the flow gain ``k`` and is ignored by the regulator and lemma kinds.
    """

    kind: str
    modulus: float
    ts: TimeScaleParams
    gain: float = 1.0
    lambda_: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ENVELOPE_KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if not self.modulus > 0:
            raise ValueError("modulus must be positive")
        if not self.gain > 0:
            raise ValueError("gain must be positive")
        if self.kind == "lemma2_bound" and not (self.lambda_ is not None and self.lambda_ > 0):
            raise ValueError("lemma2_bound needs lambda_ > 0")

    @property
    def rate(self) -> float:
        """Coefficient ``c`` in ``exp(-c I(t))``."""
        if self.kind in ("pl_envelope", "sc_envelope"):
            return 2.0 * self.modulus * self.gain
        return 2.0 * self.modulus


def envelope(spec: EnvelopeSpec, t, V0: float, offset: float = 0.0):
    """Envelope value at ``t``; ``offset`` is the lemma's ``sup L^2/(8 rho lambda)``."""
    if V0 < 0:
        raise ValueError("V0 must be nonnegative")
    return V0 * np.exp(-spec.rate * integral_T(spec.ts, t)) + offset


def lyapunov_values(traj: Trajectory, obj: Optional[Objective], kind: str) -> np.ndarray:
    """``V`` along a trajectory for the given envelope kind."""
    if kind == "pl_envelope":
        if obj is None or obj.min_value is None:
            raise ValueError("the PL envelope needs a known minimum value f*")
        return traj.f_vals - obj.min_value
    if kind == "sc_envelope":
        if obj is None or obj.minimizer is None:
            raise ValueError("the strong-convexity envelope needs a known minimizer x*")
        return np.sum((traj.states - obj.minimizer) ** 2, axis=-1)
    if kind == "regulator_bound":
        if traj.states.shape[1] != 1:
            raise ValueError("regulator envelopes apply to scalar trajectories")
        h = eval_T(_ts_of(traj), traj.times) * traj.states[:, 0]
        return 0.5 * h * h
    raise ValueError(f"no trajectory Lyapunov function for kind {kind!r}")


def _ts_of(traj: Trajectory) -> TimeScaleParams:
    ts = traj.meta.get("ts")
    if ts is None:
        raise ValueError("trajectory carries no time scale")
    return ts


def _dominates(value, bound):
    """``value <= bound (1 + REL_SLACK) + ABS_SLACK`` everywhere, and the
    largest relative exceedance among values beyond the absolute slack."""
    holds = bool(np.all(value <= bound * (1.0 + REL_SLACK) + ABS_SLACK))
    above = value > bound + ABS_SLACK
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(bound > 0, (value - bound) / bound, np.inf)
    worst = float(np.max(rel[above], initial=0.0))
    return holds, max(0.0, worst)


@dataclass
class EnvelopeReport:
    holds: bool
    max_violation: float
    V: np.ndarray
    bound: np.ndarray


def check_envelope(traj: Trajectory, obj: Optional[Objective], spec: EnvelopeSpec) -> EnvelopeReport:
    """Check ``V(t_i) <= envelope(t_i) (1 + 1e-8) + 1e-12`` at every sample.

    ``max_violation`` is the largest relative exceedance ``(V - env)/env``,
    floored at zero.
    """
    V = lyapunov_values(traj, obj, spec.kind)
    bound = envelope(spec, traj.times, float(V[0]))
    holds, worst = _dominates(V, bound)
    return EnvelopeReport(holds, worst, V, bound)


def attach_envelope(traj: Trajectory, obj: Optional[Objective], spec: EnvelopeSpec) -> EnvelopeReport:
    """Fill ``traj.lyap_vals`` and ``traj.envelope_vals`` in place and report."""
    report = check_envelope(traj, obj, spec)
    traj.lyap_vals = report.V
    traj.envelope_vals = report.bound
    return report


@dataclass
class Lemma2Result:
    times: np.ndarray
    V_traj: np.ndarray
    bound_traj: np.ndarray
    holds: bool
    max_violation: float


def lemma2_oracle(rho: float, lambda_: float, L: Callable[[np.ndarray], np.ndarray],
                  ts: TimeScaleParams, V0: float, t_stop: float,
                  sample_count: int = 1000, rel_tol: float = 1e-12) -> Lemma2Result:
    """Integrate ``V' = -2 rho T V + T L^2 / (4 lambda)`` with equality.

    The solve runs in stretched time, where the equation reads
    ``dV/ds = -2 rho V + L(t(s))^2 / (4 lambda)``. The bound uses the running
    sup of ``|L|`` over the sample grid, which can only underestimate the true
    sup.
    """
    if not (rho > 0 and lambda_ > 0):
        raise ValueError("rho and lambda_ must be positive")
    if not ts.t0 < t_stop < ts.t_end:
        raise ValueError(f"t_stop must lie in ({ts.t0}, {ts.t_end})")
    times = np.linspace(ts.t0, t_stop, sample_count)
    s = integral_T(ts, times)
    s[0] = 0.0

    def rhs(si, V):
        Lt = np.asarray(L(physical_time(ts, si)), dtype=float)
        return -2.0 * rho * V + Lt * Lt / (4.0 * lambda_)

    sol = solve_ode(rhs, 0.0, float(s[-1]), [V0], s, rel_tol=rel_tol, abs_tol=1e-300)
    if sol.times.size != times.size:
        raise IntegrationError(f"lemma oracle stopped early ({sol.stop_reason})")
    V = sol.states[:, 0]
    sup_L = np.maximum.accumulate(np.abs(np.broadcast_to(L(times), times.shape)))
    spec = EnvelopeSpec("lemma2_bound", rho, ts, lambda_=lambda_)
    bound = envelope(spec, times, V0) + sup_L**2 / (8.0 * rho * lambda_)
    holds = bool(np.all(V <= bound * (1.0 + REL_SLACK)))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(bound > 0, (V - bound) / bound, 0.0)
    return Lemma2Result(times, V, bound, holds, float(max(0.0, np.max(rel))))


def regulator_bound(ts: TimeScaleParams, rho0: float, t, x0: float, exponent: float = 1.0):
    """``|x0| T(t)^-1 exp(-exponent rho0 I(t))`` for the scalar regulator.

    ``exponent = 1`` is the rate implied by ``V = h^2/2`` with
    ``V' <= -2 rho0 T V``. ``exponent = 2`` gives a stricter bound that
    exact solutions violate for ``t > t0``.
    """
    return abs(x0) / eval_T(ts, t) * np.exp(-exponent * rho0 * integral_T(ts, t))


@dataclass
class RegulatorReport:
    holds: bool
    max_violation: float
    strict_holds: bool
    strict_max_violation: float


def regulator_bound_check(traj: Trajectory, rho0: float, ts: TimeScaleParams) -> RegulatorReport:
    """Compare ``|x(t)|`` with the regulator state bound at every sample.

    The slack is the same as for :func:`check_envelope`. ``holds`` uses the
    rate ``rho0``; the ``strict_*`` fields use the rate ``2 rho0``.
    """
    if traj.states.ndim != 2 or traj.states.shape[1] != 1:
        raise ValueError("regulator checks need a scalar trajectory")
    x = np.abs(traj.states[:, 0])
    x0 = float(traj.states[0, 0])
    out = []
    for exponent in (1.0, 2.0):
        out += _dominates(x, regulator_bound(ts, rho0, traj.times, x0, exponent))
    return RegulatorReport(*out)
