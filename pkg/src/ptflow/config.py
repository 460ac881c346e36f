"""Flat experiment configs.

One ``section.key = value`` pair per line, ``#`` starts a comment. Values
are Python literals (numbers, ``true``/``false``, bracketed lists such as
``[[1, 0], [0, 4]]``); anything else is kept as a bare string::

    objective.name = trid
    objective.dim = 2
    flow.name = ptgf
    flow.k = 0.1
    flow.Tp = [5, 10, 15]
    init.x0 = [-2, 3]
    output.csv_path = out/fig1_Tp{Tp}.csv
"""
from __future__ import annotations

import ast
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .diagnostics import EnvelopeSpec
from .flows import FlowSpec, flow_from_config, is_time_varying
from .integrator import IntegratorConfig
from .objectives import BoxDomain, Objective, make_objective

__all__ = [
    "ConfigError",
    "parse_config_text",
    "load_config",
    "RunCase",
    "ExperimentConfig",
    "VerifyConfig",
    "build_experiment",
    "build_verify",
]

_KNOWN = {
    "objective": {"name", "dim", "A", "b"},
    "flow": {"name", "c", "q", "k", "rho0", "Tp", "r", "t0"},
    "init": {"x0", "sweep", "grid_lower", "grid_upper", "grid_points", "exclude_minimizer"},
    "integrator": {
        "method", "rel_tol", "abs_tol", "initial_step", "max_steps", "delta_rel",
        "mode", "sample_count", "horizon", "t0", "equilibrium_tol", "equilibrium_steps",
    },
    "diagnostics": {"envelope", "sigma", "mu", "settling_eps"},
    "output": {"csv_path", "json_path", "svg_path", "sweep_csv_path", "sample_count", "record_wall_time"},
    "verify": {"kind", "sigma", "mu", "lower", "upper", "grid", "samples", "seed"},
}


class ConfigError(ValueError):
    """A config problem, tagged with the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _parse_value(raw: str) -> Any:
    text = raw.strip()
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("none", "null", ""):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_config_text(text: str) -> dict:
    """Parse config text into ``{"section.key": value}``."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        _check_key(key)
        if key in out:
            raise ConfigError(key, f"duplicate key on line {lineno}")
        out[key] = _parse_value(raw)
    return out


def _check_key(key: str):
    section, _, name = key.partition(".")
    if section not in _KNOWN or name not in _KNOWN[section]:
        raise ConfigError(key, "unknown config key")


def load_config(path, overrides=()) -> dict:
    """Read a config file and apply ``key=value`` overrides on top."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    values = parse_config_text(text)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = (part.strip() for part in item.split("=", 1))
        _check_key(key)
        values[key] = _parse_value(raw)
    return values


def _section(values: dict, name: str) -> dict:
    prefix = name + "."
    return {k[len(prefix):]: v for k, v in values.items() if k.startswith(prefix)}


def _number(key, value, kind=float, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(key, f"expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if positive and not value > 0:
        raise ConfigError(key, f"must be positive, got {value!r}")
    return value


def _vector(key, value, dim=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a numeric vector, got {value!r}") from None
    arr = np.atleast_1d(arr)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ConfigError(key, f"expected a finite numeric vector, got {value!r}")
    if dim is not None and arr.size != dim:
        raise ConfigError(key, f"expected length {dim}, got {arr.size}")
    return arr


@dataclass
class RunCase:
    """One integration: a flow, an initial state and its output paths."""

    index: int
    flow: FlowSpec
    x0: np.ndarray
    Tp: Optional[float]
    paths: dict


@dataclass
class ExperimentConfig:
    objective: Optional[Objective]
    flow_name: str
    cases: list
    integrator: IntegratorConfig
    envelope_kind: Optional[str]
    sigma: Optional[float]
    mu: Optional[float]
    settling_eps: float
    outputs: dict
    record_wall_time: bool = False
    raw: dict = field(default_factory=dict)

    @property
    def x_star(self) -> Optional[np.ndarray]:
        if self.objective is None:
            return np.zeros(1)
        return self.objective.minimizer

    def envelope_for(self, flow: FlowSpec) -> Optional[EnvelopeSpec]:
        """Envelope matching this config for one flow, or ``None``."""
        if self.envelope_kind is None:
            return None
        if self.envelope_kind == "regulator":
            return EnvelopeSpec("regulator_bound", flow.rho0, flow.ts)
        modulus = self.sigma if self.envelope_kind == "pl" else self.mu
        if modulus is None:
            return None
        kind = "pl_envelope" if self.envelope_kind == "pl" else "sc_envelope"
        return EnvelopeSpec(kind, modulus, flow.ts, gain=flow.k)


def _build_objective(values: dict) -> Optional[Objective]:
    sec = _section(values, "objective")
    if "name" not in sec:
        return None
    dim = sec.get("dim")
    if dim is not None:
        dim = _number("objective.dim", dim, int, positive=True)
    try:
        return make_objective(str(sec["name"]), dim, sec.get("A"), sec.get("b"))
    except ValueError as exc:
        key = "objective.A" if sec.get("name") == "quadratic" and "A" in sec else "objective.name"
        if "n >= 2" in str(exc):
            key = "objective.dim"
        raise ConfigError(key, str(exc)) from None


def _initial_states(values: dict, dim: int, objective: Optional[Objective]) -> list:
    sec = _section(values, "init")
    given = [k for k in ("x0", "sweep", "grid_lower") if k in sec]
    if len(given) != 1:
        raise ConfigError("init", "give exactly one of init.x0, init.sweep or init.grid_lower/grid_upper")
    if "x0" in sec:
        return [_vector("init.x0", sec["x0"], dim)]
    if "sweep" in sec:
        sweep = sec["sweep"]
        if not isinstance(sweep, (list, tuple)) or len(sweep) == 0:
            raise ConfigError("init.sweep", "needs a nonempty list of initial states")
        return [_vector("init.sweep", v, dim) for v in sweep]
    lower = _vector("init.grid_lower", sec["grid_lower"], dim)
    if "grid_upper" not in sec:
        raise ConfigError("init.grid_upper", "missing (required with init.grid_lower)")
    upper = _vector("init.grid_upper", sec["grid_upper"], dim)
    points = _number("init.grid_points", sec.get("grid_points", 4), int, positive=True)
    axes = [np.linspace(lo, hi, points) for lo, hi in zip(lower, upper)]
    states = [np.array(p) for p in itertools.product(*axes)]
    if sec.get("exclude_minimizer", True) and objective is not None and objective.minimizer is not None:
        states = [p for p in states if not np.allclose(p, objective.minimizer, rtol=0, atol=1e-12)]
    if not states:
        raise ConfigError("init.grid_points", "grid is empty")
    return states


def _integrator(values: dict) -> IntegratorConfig:
    sec = _section(values, "integrator")
    kwargs = {}
    numeric = {
        "rel_tol": float, "abs_tol": float, "initial_step": float, "max_steps": int,
        "delta_rel": float, "sample_count": int, "horizon": float, "t0": float,
        "equilibrium_tol": float, "equilibrium_steps": int,
    }
    for key, value in sec.items():
        if key in numeric:
            kwargs[key] = _number(f"integrator.{key}", value, numeric[key])
        else:
            kwargs[key] = str(value)
    out_count = values.get("output.sample_count")
    if out_count is not None:
        out_count = _number("output.sample_count", out_count, int, positive=True)
        if "sample_count" in kwargs and kwargs["sample_count"] != out_count:
            raise ConfigError("output.sample_count", "conflicts with integrator.sample_count")
        kwargs["sample_count"] = out_count
    try:
        return IntegratorConfig(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        key = next((f"integrator.{k}" for k in kwargs if k in msg), "integrator")
        raise ConfigError(key, msg) from None


def _case_paths(outputs: dict, index: int, Tp, multi_tp: bool, multi_init: bool) -> dict:
    paths = {}
    for key in ("csv_path", "json_path", "svg_path"):
        template = outputs.get(key)
        if not template:
            continue
        tokens = {"Tp": "" if Tp is None else f"{Tp:g}", "i": str(index)}
        if key != "svg_path" and (multi_tp or multi_init):
            p = Path(template)
            suffix = ""
            if multi_tp and "{Tp}" not in template:
                suffix += "_Tp{Tp}"
            if multi_init and "{i}" not in template:
                suffix += "_{i}"
            template = str(p.with_name(p.stem + suffix + p.suffix))
        try:
            paths[key] = template.format(**tokens)
        except (KeyError, IndexError, ValueError):
            raise ConfigError(f"output.{key}", "only {Tp} and {i} placeholders are allowed") from None
    return paths


def build_experiment(values: dict) -> ExperimentConfig:
    """Validate parsed values and expand them into run cases."""
    objective = _build_objective(values)
    flow_sec = _section(values, "flow")
    if "name" not in flow_sec:
        raise ConfigError("flow.name", "missing")
    flow_name = str(flow_sec.pop("name")).lower()
    if flow_name != "ptreg" and objective is None:
        raise ConfigError("objective.name", f"flow {flow_name!r} needs an objective")
    if flow_name == "ptreg" and objective is not None:
        raise ConfigError("objective.name", "the regulator takes no objective")
    gains = {}
    for key, value in flow_sec.items():
        if key == "Tp" and isinstance(value, (list, tuple)):
            if not value:
                raise ConfigError("flow.Tp", "empty list")
            gains[key] = [_number("flow.Tp", v, positive=True) for v in value]
        elif key == "r":
            gains[key] = _number("flow.r", value, int, positive=True)
        else:
            gains[key] = _number(f"flow.{key}", value)
    tps = gains.pop("Tp", None)
    tp_list = tps if isinstance(tps, list) else [tps]

    dim = 1 if objective is None else objective.dim
    inits = _initial_states(values, dim, objective)
    integrator = _integrator(values)

    out_sec = _section(values, "output")
    outputs = {k: out_sec[k] for k in ("csv_path", "json_path", "svg_path", "sweep_csv_path") if out_sec.get(k)}

    cases = []
    index = 0
    for Tp in tp_list:
        flow_gains = dict(gains)
        if Tp is not None:
            flow_gains["Tp"] = Tp
        try:
            flow = flow_from_config(flow_name, **flow_gains)
        except (TypeError, ValueError) as exc:
            msg = str(exc)
            key = next((f"flow.{k}" for k in ("rho0", "Tp", "k", "c", "q", "r", "t0") if k in msg), "flow.name")
            raise ConfigError(key, msg) from None
        if not is_time_varying(flow) and integrator.horizon is None:
            raise ConfigError("integrator.horizon", f"flow {flow_name!r} needs an integration horizon")
        for j, x0 in enumerate(inits):
            paths = _case_paths(outputs, j, Tp, len(tp_list) > 1, len(inits) > 1)
            cases.append(RunCase(index, flow, x0, Tp, paths))
            index += 1

    diag = _section(values, "diagnostics")
    # a bare ``none`` parses to None; explicit opt-out must not fall back to the default
    kind = diag.get("envelope", "default")
    sigma = diag.get("sigma")
    mu = diag.get("mu")
    sigma = None if sigma is None else _number("diagnostics.sigma", sigma, positive=True)
    mu = None if mu is None else _number("diagnostics.mu", mu, positive=True)
    if objective is not None:
        sigma = objective.pl_modulus if sigma is None else sigma
        mu = objective.sc_modulus if mu is None else mu
    if kind == "default":
        kind = None
        if flow_name == "ptreg":
            kind = "regulator"
        elif flow_name == "ptgf" and sigma is not None and objective.min_value is not None:
            kind = "pl"
    elif kind is None or str(kind).lower() == "none":
        kind = None
    else:
        kind = str(kind).lower()
        allowed = {"ptgf": ("pl", "sc"), "ptreg": ("regulator",)}.get(flow_name, ())
        if kind not in allowed:
            raise ConfigError("diagnostics.envelope", f"{kind!r} does not apply to flow {flow_name!r}")
        if kind == "pl" and (sigma is None or objective.min_value is None):
            raise ConfigError("diagnostics.sigma", "PL envelope needs sigma and a known f*")
        if kind == "sc" and (mu is None or objective.minimizer is None):
            raise ConfigError("diagnostics.mu", "strong-convexity envelope needs mu and a known x*")
    eps = _number("diagnostics.settling_eps", diag.get("settling_eps", 1e-3), positive=True)

    return ExperimentConfig(
        objective=objective,
        flow_name=flow_name,
        cases=cases,
        integrator=integrator,
        envelope_kind=kind,
        sigma=sigma,
        mu=mu,
        settling_eps=eps,
        outputs=outputs,
        record_wall_time=bool(out_sec.get("record_wall_time", False)),
        raw=values,
    )


@dataclass
class VerifyConfig:
    objective: Objective
    kind: str
    domain: BoxDomain
    sigma: Optional[float]
    mu: Optional[float]
    grid: int
    samples: int
    seed: int


def build_verify(values: dict) -> VerifyConfig:
    objective = _build_objective(values)
    if objective is None:
        raise ConfigError("objective.name", "missing")
    sec = _section(values, "verify")
    kind = str(sec.get("kind", "")).lower()
    if kind not in ("pl", "sc"):
        raise ConfigError("verify.kind", f"expected 'pl' or 'sc', got {sec.get('kind')!r}")
    n = objective.dim
    if "lower" in sec or "upper" in sec:
        lower = _vector("verify.lower", sec.get("lower", -np.ones(n)), n)
        upper = _vector("verify.upper", sec.get("upper", np.ones(n)), n)
        try:
            domain = BoxDomain(lower, upper)
        except ValueError as exc:
            raise ConfigError("verify.lower", str(exc)) from None
    else:
        domain = objective.pl_domain or BoxDomain.cube(n)
    sigma = sec.get("sigma")
    mu = sec.get("mu")
    sigma = None if sigma is None else _number("verify.sigma", sigma, positive=True)
    mu = None if mu is None else _number("verify.mu", mu, positive=True)
    if kind == "sc" and mu is None:
        raise ConfigError("verify.mu", "required for verify.kind = sc")
    if kind == "pl" and objective.min_value is None:
        raise ConfigError("objective.name", "PL verification needs a known minimum value")
    grid = _number("verify.grid", sec.get("grid", 51), int, positive=True)
    if grid < 2:
        raise ConfigError("verify.grid", "must be >= 2")
    samples = _number("verify.samples", sec.get("samples", 1000), int, positive=True)
    seed = _number("verify.seed", sec.get("seed", 0), int)
    return VerifyConfig(objective, kind, domain, sigma, mu, grid, samples, seed)
