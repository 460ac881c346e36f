"""Vector fields of the gradient flows and the scalar prescribed-time regulator.

Five flows are available:

* ``VanillaGF``        x' = -c grad f
* ``QRescaledGF``      x' = -c grad f / ||grad f||^((q-2)/(q-1))
* ``QSignedGF``        x' = -c grad f / ||grad f||^(1/(q-1))
* ``PrescribedTimeGF`` x' = -k(t) T(t) grad f
* ``PTRegulator``      x' = -(rho0 + r/Tp) T(t) x   (scalar state, no objective)

The two fractional flows are set to zero where ``||grad f|| <= GRAD_FLOOR``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .objectives import Objective
from .timescale import TimeScaleParams, eval_T

__all__ = [
    "GRAD_FLOOR",
    "VanillaGF",
    "QRescaledGF",
    "QSignedGF",
    "PrescribedTimeGF",
    "PTRegulator",
    "FlowSpec",
    "field",
    "is_time_varying",
    "flow_from_config",
]

GRAD_FLOOR = 1e-14


def _positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class VanillaGF:
    c: float = 1.0

    def __post_init__(self):
        _positive("c", self.c)


@dataclass(frozen=True)
class QRescaledGF:
    """Rescaled flow. Finite-time convergence on strongly convex ``f`` is known
    for ``q > 2``; any ``q > 1`` is accepted."""

    c: float = 1.0
    q: float = 3.0

    def __post_init__(self):
        _positive("c", self.c)
        if not self.q > 1:
            raise ValueError(f"q must exceed 1, got {self.q!r}")


@dataclass(frozen=True)
class QSignedGF:
    """Signed flow, read as ``-c grad f / ||grad f||^(1/(q-1))``.

    An extra elementwise ``sign(grad f)`` factor would point uphill, so the
    sign is left to ``grad f`` itself.
    """

    c: float = 1.0
    q: float = 3.0

    def __post_init__(self):
        _positive("c", self.c)
        if not self.q > 1:
            raise ValueError(f"q must exceed 1, got {self.q!r}")


@dataclass(frozen=True)
class PrescribedTimeGF:
    """``x' = -k T(t) grad f`` converging by ``t0 + Tp``.

    ``gain_schedule`` optionally replaces the constant ``k`` by ``k(t)``.
    Smaller ``k`` slows the interior decay but keeps the terminal time.
    """

    k: float
    ts: TimeScaleParams
    gain_schedule: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        _positive("k", self.k)

    def gain(self, t: float) -> float:
        return self.k if self.gain_schedule is None else float(self.gain_schedule(t))


@dataclass(frozen=True)
class PTRegulator:
    """Single integrator with feedback ``u = -(rho0 + r/Tp) T(t) x``."""

    rho0: float
    ts: TimeScaleParams

    def __post_init__(self):
        _positive("rho0", self.rho0)

    @property
    def rho(self) -> float:
        return self.rho0 + self.ts.r / self.ts.Tp


FlowSpec = Union[VanillaGF, QRescaledGF, QSignedGF, PrescribedTimeGF, PTRegulator]


def is_time_varying(spec: FlowSpec) -> bool:
    return isinstance(spec, (PrescribedTimeGF, PTRegulator))


def _gradient(obj: Optional[Objective], x: np.ndarray) -> np.ndarray:
    if obj is None:
        raise ValueError("gradient flows need an objective")
    if x.shape != (obj.dim,):
        raise ValueError(f"state has shape {x.shape}, objective {obj.name!r} expects ({obj.dim},)")
    return obj.grad(x)


def _power_scaled(g: np.ndarray, c: float, power: float) -> np.ndarray:
    norm = float(np.linalg.norm(g))
    if norm <= GRAD_FLOOR:
        return np.zeros_like(g)
    return -c * g / norm**power


def field(spec: FlowSpec, obj: Optional[Objective], t: float, x) -> np.ndarray:
    """Velocity of ``spec`` at ``(t, x)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(spec, VanillaGF):
        return -spec.c * _gradient(obj, x)
    if isinstance(spec, QRescaledGF):
        return _power_scaled(_gradient(obj, x), spec.c, (spec.q - 2.0) / (spec.q - 1.0))
    if isinstance(spec, QSignedGF):
        return _power_scaled(_gradient(obj, x), spec.c, 1.0 / (spec.q - 1.0))
    if isinstance(spec, PrescribedTimeGF):
        g = _gradient(obj, x)
        return -spec.gain(t) * eval_T(spec.ts, t) * g
    if isinstance(spec, PTRegulator):
        if obj is not None:
            raise ValueError("the regulator acts on a scalar state and takes no objective")
        if x.shape != (1,):
            raise ValueError(f"regulator state must be scalar, got shape {x.shape}")
        return -spec.rho * eval_T(spec.ts, t) * x
    raise TypeError(f"unknown flow spec {spec!r}")


_FLOW_KEYS = {
    "gf": {"c"},
    "qrgf": {"c", "q"},
    "qsgf": {"c", "q"},
    "ptgf": {"k", "Tp", "r", "t0"},
    "ptreg": {"rho0", "Tp", "r", "t0"},
}


def flow_from_config(name: str, **gains) -> FlowSpec:
    """Build a flow from its config name and gain keys."""
    name = name.lower()
    if name not in _FLOW_KEYS:
        raise ValueError(f"unknown flow {name!r} (expected one of {sorted(_FLOW_KEYS)})")
    extra = set(gains) - _FLOW_KEYS[name]
    if extra:
        raise ValueError(f"flow {name!r} does not take {sorted(extra)}")
    if name == "gf":
        return VanillaGF(**gains)
    if name == "qrgf":
        return QRescaledGF(**gains)
    if name == "qsgf":
        return QSignedGF(**gains)
    if "Tp" not in gains:
        raise ValueError(f"flow {name!r} needs Tp")
    ts = TimeScaleParams(Tp=gains.pop("Tp"), r=gains.pop("r", 1), t0=gains.pop("t0", 0.0))
    if name == "ptgf":
        if "k" not in gains:
            raise ValueError("flow 'ptgf' needs k")
        return PrescribedTimeGF(k=gains["k"], ts=ts)
    if "rho0" not in gains:
        raise ValueError("flow 'ptreg' needs rho0")
    return PTRegulator(rho0=gains["rho0"], ts=ts)
