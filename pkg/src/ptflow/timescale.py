"""Monotone time-scaling gain ``T(t) = Tp**r / (Tp + t0 - t)**r``.

The gain equals one at ``t0`` and blows up at ``t0 + Tp``. Everything here is
closed form: the value, its derivative, its running integral and the
stretched time ``s = int_t0^t T`` together with the exact inverse map.

All functions accept a float or an array of times and raise
:class:`TimeDomainError` when any time falls outside ``[t0, t0 + Tp)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TimeDomainError",
    "TimeScaleParams",
    "eval_T",
    "eval_dT",
    "integral_T",
    "stretched_time",
    "physical_time",
]


class TimeDomainError(ValueError):
    """Raised for times outside ``[t0, t0 + Tp)``."""


@dataclass(frozen=True)
class TimeScaleParams:
    """Parameters ``(t0, Tp, r)`` of the time-scaling gain."""

    Tp: float
    r: int = 1
    t0: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.Tp) or self.Tp <= 0:
            raise ValueError(f"Tp must be a positive finite number, got {self.Tp!r}")
        if int(self.r) != self.r or self.r < 1:
            raise ValueError(f"r must be an integer >= 1, got {self.r!r}")
        if not np.isfinite(self.t0):
            raise ValueError(f"t0 must be finite, got {self.t0!r}")
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "Tp", float(self.Tp))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def t_end(self) -> float:
        """The singular time ``t0 + Tp``."""
        return self.t0 + self.Tp

    def t_stop(self, delta_rel: float) -> float:
        """Last admissible time ``t0 + Tp*(1 - delta_rel)``."""
        if not 0.0 < delta_rel < 1.0:
            raise ValueError(f"delta_rel must lie in (0, 1), got {delta_rel!r}")
        return self.t0 + self.Tp * (1.0 - delta_rel)


def _unwrap(value, scalar: bool):
    return float(value) if scalar else value


def _remaining_fraction(p: TimeScaleParams, t):
    """``w = 1 - (t - t0)/Tp`` in (0, 1], after checking the domain."""
    scalar = np.ndim(t) == 0
    elapsed = np.asarray(t, dtype=float) - p.t0
    bad = ~np.isfinite(elapsed) | (elapsed < 0.0) | (elapsed >= p.Tp)
    if np.any(bad):
        first = (np.asarray(t, dtype=float)[bad]).ravel()[0]
        raise TimeDomainError(f"t={float(first)!r} outside [{p.t0}, {p.t_end}) for the time scale")
    return (p.Tp - elapsed) / p.Tp, scalar


def eval_T(p: TimeScaleParams, t):
    """Gain value ``(Tp / (Tp + t0 - t))**r``; exactly 1 at ``t0``."""
    w, scalar = _remaining_fraction(p, t)
    return _unwrap(w ** (-p.r), scalar)


def eval_dT(p: TimeScaleParams, t):
    """Time derivative ``r * Tp**r / (Tp + t0 - t)**(r + 1)``."""
    w, scalar = _remaining_fraction(p, t)
    return _unwrap(p.r / p.Tp * w ** (-(p.r + 1)), scalar)


def integral_T(p: TimeScaleParams, t):
    """Closed-form ``int_{t0}^{t} T(tau) dtau``.

    For ``r = 1`` this is ``-Tp * log(1 - (t - t0)/Tp)``; for ``r >= 2`` it is
    ``Tp**r/(r-1) * ((Tp + t0 - t)**(1-r) - Tp**(1-r))``.
    """
    w, scalar = _remaining_fraction(p, t)
    u = (np.asarray(t, dtype=float) - p.t0) / p.Tp
    if p.r == 1:
        out = -p.Tp * np.log1p(-u)
    else:
        out = p.Tp / (p.r - 1) * np.expm1((1 - p.r) * np.log1p(-u))
    return _unwrap(out, scalar)


def stretched_time(p: TimeScaleParams, t):
    """Map physical time to stretched time ``s = integral_T(t)``."""
    return integral_T(p, t)


def physical_time(p: TimeScaleParams, s):
    """Inverse of :func:`stretched_time`, defined for every ``s >= 0``.

    Very large ``s`` maps to times that round to ``t0 + Tp`` in floating
    point; callers integrating up to a clearance never ask for those.
    """
    scalar = np.ndim(s) == 0
    s = np.asarray(s, dtype=float)
    if np.any(~(s >= 0.0)):
        raise TimeDomainError("stretched time must be >= 0")
    if p.r == 1:
        u = -np.expm1(-s / p.Tp)
    else:
        u = -np.expm1(-np.log1p(s * (p.r - 1) / p.Tp) / (p.r - 1))
    return _unwrap(p.t0 + p.Tp * u, scalar)
