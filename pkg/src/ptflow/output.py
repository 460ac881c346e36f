"""CSV traces and JSON summaries.

Trace files start with ``# key=value`` metadata lines followed by the header
``t,x0,...,x{n-1},f,grad_norm,V,envelope`` and one row per sample. Numbers
are written as ``%.17e`` so that every value round-trips exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .integrator import Trajectory

__all__ = [
    "format_float",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "TraceFile",
    "write_json",
    "write_rows_csv",
]


def format_float(value) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17e}"


def _ensure_parent(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def write_trajectory_csv(path, traj: Trajectory, meta: Optional[dict] = None) -> None:
    n = traj.states.shape[1]
    header = ["t", *(f"x{i}" for i in range(n)), "f", "grad_norm", "V", "envelope"]
    cols = np.column_stack([
        traj.times, traj.states, traj.f_vals, traj.grad_norms, traj.lyap_vals, traj.envelope_vals,
    ])
    lines = [f"# {key}={value}" for key, value in (meta or {}).items()]
    lines.append(",".join(header))
    lines.extend(",".join(format_float(v) for v in row) for row in cols)
    _ensure_parent(path)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class TraceFile:
    meta: dict
    columns: list
    data: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def state_columns(self) -> list:
        return [c for c in self.columns if c[:1] == "x" and c[1:].isdigit()]


def read_trajectory_csv(path) -> TraceFile:
    meta, header, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif header is None:
                header = line.split(",")
            else:
                rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return TraceFile(meta, header, data)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path, payload: dict) -> None:
    _ensure_parent(path)
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_rows_csv(path, header: list, rows: list) -> None:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return format_float(v)
        return str(v).replace(",", ";")

    _ensure_parent(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell(v) for v in row) + "\n")
