"""Static SVG line charts of state trajectories.

No external assets and no timestamps. The first state coordinate is drawn
solid and the second dashed, with further coordinates dotted; separate
trajectories on the same chart get separate colours.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "Marker", "nice_ticks", "line_chart", "trajectory_series", "write_svg"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
DASHES = (None, "8,5", "2,4", "10,4,2,4")
MAX_POINTS = 2000


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    color: str = PALETTE[0]
    dash: Optional[str] = None


@dataclass
class Marker:
    x: float
    label: str = ""
    color: str = "#555555"


def nice_ticks(lo: float, hi: float, target: int = 6) -> list:
    """Round tick positions covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return [0.0]
    if hi <= lo:
        hi = lo + (abs(lo) if lo else 1.0)
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        if v >= lo - 1e-9 * step:
            ticks.append(round(v / step) * step)
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:g}"


def line_chart(series: list, markers: list = (), title: str = "", xlabel: str = "t",
               ylabel: str = "x", width: int = 720, height: int = 440) -> str:
    """Render series and vertical markers as an SVG document string."""
    left, right, top, bottom = 70, 150, 40, 55
    pw, ph = width - left - right, height - top - bottom

    xs = [s.x for s in series] + [np.array([m.x for m in markers])]
    ys = [s.y for s in series]
    xall = np.concatenate([np.asarray(a, float).ravel() for a in xs if len(a)]) if series or markers else np.zeros(1)
    yall = np.concatenate([np.asarray(a, float).ravel() for a in ys]) if series else np.zeros(1)
    xall, yall = xall[np.isfinite(xall)], yall[np.isfinite(yall)]
    xlo, xhi = (float(xall.min()), float(xall.max())) if xall.size else (0.0, 1.0)
    ylo, yhi = (float(yall.min()), float(yall.max())) if yall.size else (0.0, 1.0)
    if yhi - ylo < 1e-12 * max(1.0, abs(yhi)):
        ylo, yhi = ylo - 1.0, yhi + 1.0
    xt, yt = nice_ticks(xlo, xhi), nice_ticks(ylo, yhi)
    xlo, xhi = min(xlo, xt[0]), max(xhi, xt[-1])
    ylo, yhi = min(ylo, yt[0]), max(yhi, yt[-1])

    def px(v):
        return left + (v - xlo) / (xhi - xlo) * pw

    def py(v):
        return top + (yhi - v) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for v in xt:
        x = px(v)
        out.append(f'<line x1="{_fmt(x)}" y1="{top}" x2="{_fmt(x)}" y2="{top + ph}" stroke="#e6e6e6"/>')
        out.append(f'<text x="{_fmt(x)}" y="{top + ph + 18}" text-anchor="middle">{escape(_label(v))}</text>')
    for v in yt:
        y = py(v)
        out.append(f'<line x1="{left}" y1="{_fmt(y)}" x2="{left + pw}" y2="{_fmt(y)}" stroke="#e6e6e6"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(y + 4)}" text-anchor="end">{escape(_label(v))}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.2f})">{escape(ylabel)}</text>')

    for m in markers:
        x = px(m.x)
        out.append(f'<line x1="{_fmt(x)}" y1="{top}" x2="{_fmt(x)}" y2="{top + ph}" '
                   f'stroke="{m.color}" stroke-dasharray="3,3"/>')
        if m.label:
            out.append(f'<text x="{_fmt(x - 4)}" y="{top + 12}" text-anchor="end" fill="{m.color}">{escape(m.label)}</text>')

    for s in series:
        x, y = np.asarray(s.x, float), np.asarray(s.y, float)
        keep = np.isfinite(x) & np.isfinite(y)
        x, y = x[keep], y[keep]
        if x.size > MAX_POINTS:
            idx = np.unique(np.linspace(0, x.size - 1, MAX_POINTS).round().astype(int))
            x, y = x[idx], y[idx]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        out.append(f'<polyline fill="none" stroke="{s.color}" stroke-width="1.6"{dash} points="{pts}"/>')

    for i, s in enumerate(series[:24]):
        y = top + 8 + 18 * i
        x0 = left + pw + 12
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        out.append(f'<line x1="{x0}" y1="{y}" x2="{x0 + 26}" y2="{y}" stroke="{s.color}" stroke-width="1.6"{dash}/>')
        out.append(f'<text x="{x0 + 32}" y="{y + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_series(times, states, color: str, prefix: str = "") -> list:
    """One series per coordinate, solid then dashed then dotted."""
    states = np.atleast_2d(np.asarray(states, float))
    return [
        Series(f"{prefix}x{i + 1}", np.asarray(times, float), states[:, i], color, DASHES[i % len(DASHES)])
        for i in range(states.shape[1])
    ]


def write_svg(path, svg: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(svg)
