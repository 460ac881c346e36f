"""Prescribed finite-time gradient flows.

The core is the time-scaled flow ``x' = -k T(t) grad f(x)`` whose gain
``T(t) = (Tp / (Tp + t0 - t))**r`` diverges at ``t0 + Tp``, together with
classical and fractional-power baselines, an integrator built around the
terminal singularity, and Lyapunov-envelope diagnostics.
"""
from .diagnostics import (
    EnvelopeSpec,
    attach_envelope,
    check_envelope,
    envelope,
    lemma2_oracle,
    regulator_bound,
    regulator_bound_check,
)
from .flows import PrescribedTimeGF, PTRegulator, QRescaledGF, QSignedGF, VanillaGF, field
from .integrator import IntegrationError, IntegratorConfig, Trajectory, integrate, settling_time
from .objectives import (
    BoxDomain,
    Objective,
    check_gradient,
    make_quadratic,
    make_rosenbrock,
    make_trid,
    verify_pl,
    verify_strong_convexity,
)
from .timescale import (
    TimeDomainError,
    TimeScaleParams,
    eval_dT,
    eval_T,
    integral_T,
    physical_time,
    stretched_time,
)

__version__ = "0.1.0"

__all__ = [
    "EnvelopeSpec",
    "attach_envelope",
    "check_envelope",
    "envelope",
    "lemma2_oracle",
    "regulator_bound",
    "regulator_bound_check",
    "PrescribedTimeGF",
    "PTRegulator",
    "QRescaledGF",
    "QSignedGF",
    "VanillaGF",
    "field",
    "IntegrationError",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "settling_time",
    "BoxDomain",
    "Objective",
    "check_gradient",
    "make_quadratic",
    "make_rosenbrock",
    "make_trid",
    "verify_pl",
    "verify_strong_convexity",
    "TimeDomainError",
    "TimeScaleParams",
    "eval_dT",
    "eval_T",
    "integral_T",
    "physical_time",
    "stretched_time",
]
