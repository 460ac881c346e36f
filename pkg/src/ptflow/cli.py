"""Command line entry point ``ptflow``.

Exit codes: 0 success, 1 verification found violations, 2 config error,
3 integration failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import svgplot
from .config import ConfigError, build_experiment, build_verify, load_config
from .experiment import run_cases, write_case_outputs, write_sweep
from .objectives import verify_pl, verify_strong_convexity
from .output import read_trajectory_csv

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _fmt(x) -> str:
    return "[" + ", ".join(f"{v:.6g}" for v in np.atleast_1d(x)) + "]"


def cmd_run(args) -> int:
    exp = build_experiment(load_config(args.config, args.set))
    results = run_cases(exp)
    write_case_outputs(exp, results)
    status = EXIT_OK
    for res in results:
        label = f"run {res.case.index}" + (f" (Tp={res.case.Tp:g})" if res.case.Tp is not None else "")
        if res.summary is None:
            print(f"{label}: integration failed: {res.error}", file=sys.stderr)
            status = EXIT_RUNTIME
            continue
        s = res.summary
        settle = "never" if s.settling_time is None else f"{s.settling_time:.6g}"
        env = "" if s.envelope_holds is None else f" envelope_holds={s.envelope_holds}"
        print(f"{label}: x_final={_fmt(s.final_state)} settling_time={settle} stop={s.stop_reason}{env}")
        if not res.ok:
            print(f"{label}: integration stopped early ({s.stop_reason})", file=sys.stderr)
            status = EXIT_RUNTIME
    return status


def cmd_sweep(args) -> int:
    exp = build_experiment(load_config(args.config, args.set))
    path = exp.outputs.get("sweep_csv_path") or exp.outputs.get("csv_path")
    if not path:
        raise ConfigError("output.sweep_csv_path", "sweep needs an output path")
    if len(exp.cases) == 0:
        raise ConfigError("init.sweep", "no initial conditions")
    results = run_cases(exp)
    write_sweep(path, exp, results)
    failed = [r for r in results if not (r.summary is not None and r.ok)]
    print(f"sweep: {len(results)} runs, {len(failed)} failed -> {path}")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_verify(args) -> int:
    cfg = build_verify(load_config(args.config, args.set))
    obj = cfg.objective
    box = f"[{_fmt(cfg.domain.lower)}, {_fmt(cfg.domain.upper)}]"
    if cfg.kind == "pl":
        report = verify_pl(obj, cfg.domain, cfg.grid, cfg.sigma)
        print(f"PL check of {obj.name} on {box}, {cfg.grid} points per axis")
        print(f"sigma_hat = {report.sigma_hat:.10g}  ({report.n_points - report.n_excluded} points used,"
              f" {report.n_excluded} excluded near the minimum)")
        if obj.pl_modulus is not None:
            print(f"recorded modulus = {obj.pl_modulus:.10g}")
        if cfg.sigma is None:
            return EXIT_OK
        print(f"requested sigma = {cfg.sigma:.10g}: {len(report.violations)} violating grid points")
        for p in report.violations[:10]:
            print(f"  violation at x = {_fmt(p)}")
        return EXIT_VIOLATION if report.violations else EXIT_OK
    pairs = verify_strong_convexity(obj, cfg.domain, cfg.samples, cfg.mu, seed=cfg.seed)
    print(f"strong convexity check of {obj.name} on {box}, mu = {cfg.mu:.10g}, {cfg.samples} random pairs")
    print(f"{len(pairs)} violating pairs")
    for a, b in pairs[:10]:
        print(f"  violation: x1 = {_fmt(a)}, x2 = {_fmt(b)}")
    return EXIT_VIOLATION if pairs else EXIT_OK


def cmd_plot(args) -> int:
    trace = read_trajectory_csv(args.csv)
    t = trace.column("t")
    states = np.column_stack([trace.column(c) for c in trace.state_columns])
    series = svgplot.trajectory_series(t, states, svgplot.PALETTE[0])
    markers = []
    if "Tp" in trace.meta:
        t0 = float(trace.meta.get("t0", 0.0))
        Tp = float(trace.meta["Tp"])
        markers.append(svgplot.Marker(t0 + Tp, f"Tp={Tp:g}"))
    title = " ".join(trace.meta[k] for k in ("flow", "objective") if k in trace.meta)
    svgplot.write_svg(args.output, svgplot.line_chart(series, markers, title=title))
    print(f"wrote {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptflow", description="Prescribed finite-time gradient flow experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in (
        ("run", cmd_run, "integrate the configured flow and write CSV/JSON/SVG"),
        ("sweep", cmd_sweep, "run every initial condition and write one summary row each"),
        ("verify", cmd_verify, "check a PL or strong-convexity modulus on a box"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.set_defaults(func=func)
    p = sub.add_parser("plot", help="draw an SVG chart from a trajectory CSV")
    p.add_argument("csv")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        if args.command == "plot":
            print(f"plot error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
