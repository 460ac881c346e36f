"""Execute configured runs and sweeps and write their artifacts."""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import svgplot
from .config import ExperimentConfig, RunCase
from .diagnostics import attach_envelope
from .flows import is_time_varying
from .integrator import IntegrationError, Trajectory, integrate, settling_time
from .output import write_json, write_rows_csv, write_trajectory_csv

__all__ = ["RunSummary", "CaseResult", "run_case", "run_cases", "write_case_outputs", "sweep_rows", "thread_count"]

FAILED_STOPS = ("max_steps", "step_floor")


@dataclass
class RunSummary:
    final_state: list
    final_f: Optional[float]
    settling_time: Optional[float]
    envelope_holds: Optional[bool]
    max_violation: Optional[float]
    stop_reason: str
    wall_time: float

    def as_dict(self, with_wall_time: bool) -> dict:
        out = dict(self.__dict__)
        if not with_wall_time:
            out.pop("wall_time")
        return out


@dataclass
class CaseResult:
    case: RunCase
    trajectory: Optional[Trajectory]
    summary: Optional[RunSummary]
    error: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None and self.summary.stop_reason not in FAILED_STOPS


def _flow_meta(flow) -> dict:
    meta = {"flow": type(flow).__name__}
    for key in ("c", "q", "k", "rho0"):
        if hasattr(flow, key):
            meta[key] = repr(float(getattr(flow, key)))
    if is_time_varying(flow):
        meta.update(Tp=repr(flow.ts.Tp), r=str(flow.ts.r), t0=repr(flow.ts.t0))
    return meta


def case_metadata(exp: ExperimentConfig, case: RunCase) -> dict:
    cfg = exp.integrator
    meta = {"generator": "ptflow"}
    if exp.objective is not None:
        meta.update(objective=exp.objective.name, dim=str(exp.objective.dim))
    meta.update(_flow_meta(case.flow))
    meta["x_init"] = "[" + ", ".join(repr(float(v)) for v in case.x0) + "]"
    for key in ("method", "rel_tol", "abs_tol", "delta_rel", "sample_count", "equilibrium_tol", "max_steps"):
        value = getattr(cfg, key)
        meta[f"integrator.{key}"] = value if isinstance(value, str) else repr(value)
    meta["integrator.mode"] = cfg.mode or "default"
    if cfg.horizon is not None:
        meta["integrator.horizon"] = repr(cfg.horizon)
    return meta


def run_case(exp: ExperimentConfig, case: RunCase) -> CaseResult:
    """Integrate one case and evaluate its diagnostics; never raises on solver failure."""
    meta = case_metadata(exp, case)
    start = time.perf_counter()
    try:
        traj = integrate(case.flow, exp.objective, case.x0, exp.integrator)
    except IntegrationError as exc:
        return CaseResult(case, None, None, error=str(exc), meta=meta)

    holds = violation = None
    env = exp.envelope_for(case.flow) if is_time_varying(case.flow) else None
    if env is not None:
        report = attach_envelope(traj, exp.objective, env)
        holds, violation = report.holds, report.max_violation
    elif exp.objective is not None and exp.objective.min_value is not None:
        traj.lyap_vals = traj.f_vals - exp.objective.min_value

    x_star = exp.x_star
    settle = None if x_star is None else settling_time(traj, x_star, exp.settling_eps)
    wall = time.perf_counter() - start
    final_f = None if exp.objective is None else float(traj.f_vals[-1])
    summary = RunSummary(
        final_state=[float(v) for v in traj.final_state],
        final_f=final_f,
        settling_time=settle,
        envelope_holds=holds,
        max_violation=violation,
        stop_reason=traj.stop_reason,
        wall_time=wall,
    )
    meta.update(stop_reason=traj.stop_reason, mode=traj.mode, t_stop=repr(traj.t_stop),
                stop_time=repr(traj.stop_time))
    return CaseResult(case, traj, summary, meta=meta)


def thread_count() -> int:
    raw = os.environ.get("PTFLOW_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def run_cases(exp: ExperimentConfig, cases=None, threads: Optional[int] = None) -> list:
    """Run cases concurrently; results come back in config order."""
    cases = exp.cases if cases is None else cases
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(cases) <= 1:
        return [run_case(exp, c) for c in cases]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: run_case(exp, c), cases))


def _summary_payload(exp: ExperimentConfig, result: CaseResult) -> dict:
    payload = {"metadata": result.meta}
    if result.summary is not None:
        payload.update(result.summary.as_dict(exp.record_wall_time))
        if result.trajectory is not None:
            payload["t_stop"] = result.trajectory.t_stop
    if result.error is not None:
        payload["error"] = result.error
    payload["x_init"] = result.case.x0
    if result.case.Tp is not None:
        payload["Tp"] = result.case.Tp
    if exp.x_star is not None and result.summary is not None:
        payload["final_error"] = float(np.linalg.norm(np.asarray(result.summary.final_state) - exp.x_star))
    return payload


def write_case_outputs(exp: ExperimentConfig, results: list) -> list:
    """Write CSV/JSON per case and one SVG per distinct SVG path."""
    written = []
    charts = {}
    for res in results:
        paths = res.case.paths
        if res.trajectory is not None and "csv_path" in paths:
            write_trajectory_csv(paths["csv_path"], res.trajectory, res.meta)
            written.append(paths["csv_path"])
        if "json_path" in paths:
            write_json(paths["json_path"], _summary_payload(exp, res))
            written.append(paths["json_path"])
        if res.trajectory is not None and "svg_path" in paths:
            charts.setdefault(paths["svg_path"], []).append(res)
    for path, group in charts.items():
        series, markers = [], []
        for j, res in enumerate(group):
            color = svgplot.PALETTE[j % len(svgplot.PALETTE)]
            prefix = ""
            if len(group) > 1:
                prefix = f"Tp={res.case.Tp:g} " if res.case.Tp is not None else f"#{res.case.index} "
            series += svgplot.trajectory_series(res.trajectory.times, res.trajectory.states, color, prefix)
            ts = getattr(res.case.flow, "ts", None)
            if ts is not None and all(m.x != ts.t_end for m in markers):
                markers.append(svgplot.Marker(ts.t_end, f"Tp={ts.Tp:g}"))
        title = f"{exp.flow_name} on {exp.objective.name}" if exp.objective is not None else exp.flow_name
        svgplot.write_svg(path, svgplot.line_chart(series, markers, title=title))
        written.append(path)
    return written


def sweep_rows(exp: ExperimentConfig, results: list):
    """Header and rows of the aggregate sweep table, in config order."""
    dim = len(results[0].case.x0) if results else 0
    time_varying = any(r.case.Tp is not None for r in results)
    header = (["Tp"] if time_varying else []) + [f"x0_{i}" for i in range(dim)]
    header += ["settling_time", "final_error", "envelope_holds", "stop_reason", "status"]
    rows = []
    for res in results:
        row = ([res.case.Tp] if time_varying else []) + [float(v) for v in res.case.x0]
        if res.summary is None:
            row += [None, None, None, "", f"error: {res.error}"]
        else:
            err = None
            if exp.x_star is not None:
                err = float(np.linalg.norm(np.asarray(res.summary.final_state) - exp.x_star))
            status = "ok" if res.ok else f"failed: {res.summary.stop_reason}"
            row += [res.summary.settling_time, err, res.summary.envelope_holds, res.summary.stop_reason, status]
        rows.append(row)
    return header, rows


def write_sweep(path, exp: ExperimentConfig, results: list) -> None:
    header, rows = sweep_rows(exp, results)
    write_rows_csv(path, header, rows)
