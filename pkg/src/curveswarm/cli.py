"""Command-line front end: formation search, missions, curve catalog.

Exit codes: 0 success (feasible solution / clean mission), 2 unreadable
or invalid configuration (the offending key is named), 3 no feasible
formation, 4 mission aborted on the collision threshold.
"""

import argparse
import os
import sys

from .config import ConfigError, dump_config, load_config, parse_target
from .curves import CurveError, catalog_names, make_curve
from .finder import multistart
from .output import (
    format_samples_csv,
    write_cost_trace_csv,
    write_metrics_csv,
    write_samples_csv,
    write_snapshot_svg,
    write_solution_file,
    write_trajectory_csv,
)
from .sim import MissionError, run_mission

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_COLLISION = 4


def _add_common(p, with_sim_flags):
    p.add_argument("config", nargs="?", help="INI configuration file")
    p.add_argument("--curve", help="catalog curve name")
    p.add_argument("--n", type=int, help="agent / vertex count")
    p.add_argument("--target", help="preferred formation center 'x,y'")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--square-mode", action="store_true", help="add the diagonal residuals that single out true squares (n = 4)")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")
    if with_sim_flags:
        p.add_argument("--dt", type=float, help="integration step in seconds")
        p.add_argument("--horizon", type=float, help="mission length in seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curveswarm",
        description="Regular polygons inscribed on closed curves, and missions that sweep into them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    find = sub.add_parser("find", help="multistart Gauss-Newton formation search")
    _add_common(find, with_sim_flags=False)
    simulate = sub.add_parser("simulate", help="closed-loop sweep-and-form mission")
    _add_common(simulate, with_sim_flags=True)
    curves = sub.add_parser("curves", help="curve catalog utilities")
    csub = curves.add_subparsers(dest="action", required=True)
    csub.add_parser("list", help="print all catalog curve names")
    sample = csub.add_parser("sample", help="emit CSV samples of one curve")
    sample.add_argument("name", help="catalog curve name")
    sample.add_argument("--n", type=int, default=100, help="sample count")
    sample.add_argument("--out", help="write CSV here instead of stdout")
    return parser


def _load(args):
    text = ""
    if args.config:
        try:
            with open(args.config) as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
    overrides = {
        "curve": args.curve,
        "n": args.n,
        "seed": args.seed,
        "square_mode": args.square_mode,
        "target": parse_target(args.target) if args.target else None,
        "dt": getattr(args, "dt", None),
        "horizon": getattr(args, "horizon", None),
    }
    return load_config(text, overrides)


def cmd_find(args) -> int:
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    best, runs = multistart(cfg.curve, cfg.finder, return_all=True)
    os.makedirs(args.out, exist_ok=True)
    solution_path = os.path.join(args.out, "solution.txt")
    trace_path = os.path.join(args.out, "cost_trace.csv")
    write_solution_file(solution_path, best, runs)
    write_cost_trace_csv(trace_path, runs)
    print(
        f"curve={cfg.curve_name} n={cfg.finder.n} feasible={best.feasible}"
        f" converged={best.converged} cost={best.cost:.6g}"
        f" residual={best.residual_norm:.6g}"
    )
    print(f"wrote {solution_path} and {trace_path}")
    return EXIT_OK if best.feasible else EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    try:
        cfg = _load(args)
        mission = cfg.mission_config()
        mission.validate()
    except (ConfigError, MissionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    try:
        metrics, log = run_mission(mission)
    except MissionError as exc:
        print(f"mission error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    os.makedirs(args.out, exist_ok=True)
    write_metrics_csv(os.path.join(args.out, "metrics.csv"), metrics)
    write_trajectory_csv(os.path.join(args.out, "trajectory.csv"), log)
    snap_times = mission.snapshot_times or (float(log.times[-1]),)
    for t_snap in snap_times:
        k = int(round(t_snap / mission.dt))
        path = os.path.join(args.out, f"snapshot_t{t_snap:08.2f}s.svg")
        write_snapshot_svg(path, cfg.curve, log, k, metrics.assignment)
    sigma_last = float(metrics.sigma[-1].min()) if metrics.sigma.size else 0.0
    err_last = (
        float(metrics.final_vertex_errors.max())
        if metrics.final_vertex_errors is not None
        else float("nan")
    )
    print(
        f"curve={cfg.curve_name} n={mission.n} seed={mission.seed}"
        f" t_end={float(log.times[-1]):.2f}s collision={metrics.collision}"
        f" min_distance={float(metrics.min_distance.min()):.4g}"
        f" sigma_min={sigma_last:.4f} vertex_error_max={err_last:.4g}"
    )
    print(f"wrote metrics, trajectory, and {len(snap_times)} snapshot(s) to {args.out}")
    if metrics.collision:
        return EXIT_COLLISION
    if metrics.nonfinite:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_curves(args) -> int:
    if args.action == "list":
        for name in catalog_names():
            print(name)
        return EXIT_OK
    try:
        curve = make_curve(args.name)
    except CurveError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        write_samples_csv(args.out, curve, args.n)
        print(f"wrote {args.n} samples to {args.out}")
    else:
        sys.stdout.write(format_samples_csv(curve, args.n))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "find":
        return cmd_find(args)
    if args.command == "simulate":
        return cmd_simulate(args)
    return cmd_curves(args)


if __name__ == "__main__":
    sys.exit(main())
