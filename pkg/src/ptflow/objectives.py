"""Benchmark objectives with analytic gradients, plus numerical verifiers.

Every objective evaluates on arrays of shape ``(..., n)`` so that grids of
points can be checked in one call. ``eval`` returns shape ``(...)`` and
``grad`` returns shape ``(..., n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Objective",
    "BoxDomain",
    "PLReport",
    "make_trid",
    "make_rosenbrock",
    "make_quadratic",
    "make_objective",
    "check_gradient",
    "verify_pl",
    "verify_strong_convexity",
]


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``lower <= x <= upper`` with nonempty interior."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("box bounds must be 1-d vectors of equal length")
        if not np.all(lower < upper):
            raise ValueError("box needs lower < upper in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, n: int, lo: float = -1.0, hi: float = 1.0) -> "BoxDomain":
        return cls(np.full(n, lo), np.full(n, hi))

    @property
    def dim(self) -> int:
        return self.lower.size


@dataclass(frozen=True)
class Objective:
    """A differentiable cost with its gradient and optional known facts.

    ``pl_modulus`` and ``sc_modulus`` are metadata: they are used to build
    Lyapunov envelopes, never asserted as theorems by this class.
    """

    name: str
    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    minimizer: Optional[np.ndarray] = None
    min_value: Optional[float] = None
    pl_modulus: Optional[float] = None
    pl_domain: Optional[BoxDomain] = None
    sc_modulus: Optional[float] = None
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.eval(x)


def make_trid(n: int) -> Objective:
    """Trid function ``sum (x_i - 1)^2 - sum x_i x_{i-1}``.

    It is a convex quadratic with Hessian ``tridiag(-1, 2, -1)``, whose
    smallest eigenvalue ``2 - 2 cos(pi/(n+1))`` is recorded as both the PL
    and the strong-convexity modulus.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"trid needs n >= 2, got {n!r}")
    n = int(n)

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.sum((x - 1.0) ** 2, axis=-1) - np.sum(x[..., 1:] * x[..., :-1], axis=-1)

    def g(x):
        x = np.asarray(x, dtype=float)
        out = 2.0 * (x - 1.0)
        out[..., 1:] -= x[..., :-1]
        out[..., :-1] -= x[..., 1:]
        return out

    i = np.arange(1, n + 1, dtype=float)
    lam_min = 2.0 - 2.0 * np.cos(np.pi / (n + 1))
    return Objective(
        name="trid",
        dim=n,
        eval=f,
        grad=g,
        minimizer=i * (n + 1 - i),
        min_value=-n * (n + 4) * (n - 1) / 6.0,
        pl_modulus=lam_min,
        sc_modulus=lam_min,
        params={"n": n},
    )


def make_rosenbrock(n: int) -> Objective:
    """Chained Rosenbrock ``sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2``.

    For ``n = 2`` the PL modulus 0.1 on ``[-1, 1]^2`` is carried as recorded
    metadata; :func:`verify_pl` reports what a grid actually shows.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"rosenbrock needs n >= 2, got {n!r}")
    n = int(n)

    def f(x):
        x = np.asarray(x, dtype=float)
        head, tail = x[..., :-1], x[..., 1:]
        return np.sum(100.0 * (tail - head**2) ** 2 + (1.0 - head) ** 2, axis=-1)

    def g(x):
        x = np.asarray(x, dtype=float)
        head, tail = x[..., :-1], x[..., 1:]
        valley = tail - head**2
        out = np.zeros_like(x)
        out[..., :-1] = -400.0 * head * valley - 2.0 * (1.0 - head)
        out[..., 1:] += 200.0 * valley
        return out

    pl = {"pl_modulus": 0.1, "pl_domain": BoxDomain.cube(2)} if n == 2 else {}
    return Objective(
        name="rosenbrock",
        dim=n,
        eval=f,
        grad=g,
        minimizer=np.ones(n),
        min_value=0.0,
        params={"n": n},
        **pl,
    )


def make_quadratic(A, b=None) -> Objective:
    """``f(x) = 0.5 x'Ax - b'x`` for symmetric positive definite ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-14):
        raise ValueError("A must be symmetric")
    b = np.zeros(n) if b is None else np.atleast_1d(np.asarray(b, dtype=float))
    if b.shape != (n,):
        raise ValueError(f"b must have length {n}, got shape {b.shape}")
    try:
        chol = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise ValueError("A is not positive definite") from None
    x_star = np.linalg.solve(chol.T, np.linalg.solve(chol, b))
    lam_min = float(np.linalg.eigvalsh(A)[0])

    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, A, x) - x @ b

    def g(x):
        x = np.asarray(x, dtype=float)
        return x @ A - b

    return Objective(
        name="quadratic",
        dim=n,
        eval=f,
        grad=g,
        minimizer=x_star,
        min_value=float(-0.5 * b @ x_star),
        pl_modulus=lam_min,
        sc_modulus=lam_min,
        params={"A": A.tolist(), "b": b.tolist()},
    )


def make_objective(name: str, dim: Optional[int] = None, A=None, b=None) -> Objective:
    """Look an objective up by its config name."""
    name = name.lower()
    if name == "quadratic":
        if A is None:
            if dim is None:
                raise ValueError("quadratic needs A (or dim for the identity)")
            A = np.eye(dim)
        obj = make_quadratic(A, b)
        if dim is not None and obj.dim != dim:
            raise ValueError(f"quadratic A is {obj.dim}x{obj.dim} but dim={dim}")
        return obj
    if dim is None:
        dim = 2
    if name == "trid":
        return make_trid(dim)
    if name == "rosenbrock":
        return make_rosenbrock(dim)
    raise ValueError(f"unknown objective {name!r} (expected trid, rosenbrock or quadratic)")


def check_gradient(obj: Objective, x, h: Optional[float] = None) -> float:
    """Max relative mismatch between ``obj.grad`` and central differences.

    The per-coordinate step is ``h * max(1, |x_i|)`` (``h`` defaults to 1e-6)
    and the error of coordinate ``i`` is scaled by ``max(1, |analytic_i|)``.
    """
    x = np.asarray(x, dtype=float)
    h = 1e-6 if h is None else float(h)
    if h <= 0:
        raise ValueError("h must be positive")
    steps = h * np.maximum(1.0, np.abs(x))
    shifts = np.diag(steps)
    fd = (obj.eval(x + shifts) - obj.eval(x - shifts)) / (2.0 * steps)
    analytic = obj.grad(x)
    return float(np.max(np.abs(fd - analytic) / np.maximum(1.0, np.abs(analytic))))


@dataclass
class PLReport:
    sigma_hat: float
    violations: list
    n_points: int
    n_excluded: int


def _grid(domain: BoxDomain, per_axis: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(domain.lower, domain.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, domain.dim)


def verify_pl(obj: Objective, domain: BoxDomain, grid_per_axis: int,
              sigma: Optional[float] = None, tie_tol: float = 1e-12) -> PLReport:
    """Empirical PL modulus ``min ||grad f||^2 / (2 (f - f*))`` over a grid.

    Points with ``f - f* <= tie_tol`` are excluded. If no point survives,
    ``sigma_hat`` is ``inf``. When ``sigma`` is given, points whose ratio
    falls below it are returned as violations.
    """
    if obj.min_value is None:
        raise ValueError(f"objective {obj.name!r} has no known minimum value")
    if grid_per_axis < 2:
        raise ValueError("grid_per_axis must be >= 2")
    if domain.dim != obj.dim:
        raise ValueError(f"domain has dim {domain.dim}, objective has dim {obj.dim}")
    pts = _grid(domain, grid_per_axis)
    gap = obj.eval(pts) - obj.min_value
    keep = gap > tie_tol
    pts, gap = pts[keep], gap[keep]
    ratio = np.sum(obj.grad(pts) ** 2, axis=-1) / (2.0 * gap)
    sigma_hat = float(ratio.min()) if ratio.size else float("inf")
    violations = [] if sigma is None else [p for p in pts[ratio < sigma]]
    return PLReport(sigma_hat, violations, int(keep.size), int((~keep).sum()))


def verify_strong_convexity(obj: Objective, domain: BoxDomain, samples: int, mu: float,
                            seed: int = 0, rtol: float = 1e-12) -> list:
    """Random-pair test of ``<g1 - g2, x1 - x2> >= mu ||x1 - x2||^2``.

    Pairs are drawn uniformly from the box with a seeded generator. Returns
    the list of violating ``(x1, x2)`` pairs; ``rtol`` absorbs rounding in
    exact-equality cases such as quadratics at ``mu = lambda_min``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if domain.dim != obj.dim:
        raise ValueError(f"domain has dim {domain.dim}, objective has dim {obj.dim}")
    rng = np.random.default_rng(seed)
    span = domain.upper - domain.lower
    x1 = domain.lower + span * rng.random((samples, obj.dim))
    x2 = domain.lower + span * rng.random((samples, obj.dim))
    d = x1 - x2
    lhs = np.sum((obj.grad(x1) - obj.grad(x2)) * d, axis=-1)
    rhs = mu * np.sum(d * d, axis=-1)
    bad = lhs < rhs * (1.0 - rtol) - rtol
    return [(a, c) for a, c in zip(x1[bad], x2[bad])]
