"""Benchmark the jitted kernels against the pure-numpy fallback.

Runs itself twice as a subprocess, once with CURVESWARM_NUMBA=0 and once
with CURVESWARM_NUMBA=1 (the flag is read at import time, so the two
paths need separate interpreters), then prints a side-by-side table.

    python3 benchmarks/bench_accel.py [--repeat N]
"""

import argparse
import os
import subprocess
import sys
import time

PHASES = ("curve-distance", "formation-find", "mission-loop")


def run_phases(repeat: int):
    import numpy as np

    from curveswarm.curves import make_curve
    from curveswarm.finder import FinderConfig, multistart
    from curveswarm.sim import MissionConfig, distance_to_curve, run_mission

    results = {}

    curve = make_curve("lissajous-32")
    rng = np.random.default_rng(0)
    probes = rng.uniform(-1.5, 1.5, size=(2000, 2)) * curve.scale
    distance_to_curve(probes[0], curve)  # warm
    t0 = time.perf_counter()
    for _ in range(repeat):
        for p in probes:
            distance_to_curve(p, curve)
    results["curve-distance"] = (time.perf_counter() - t0) / repeat

    deltoid = make_curve("deltoid")
    config = FinderConfig(n=4, seed=0, c_target=(0.0, 0.0))
    multistart(deltoid, config)  # warm
    t0 = time.perf_counter()
    for k in range(repeat * 5):
        multistart(deltoid, FinderConfig(n=4, seed=k, c_target=(0.0, 0.0)))
    results["formation-find"] = (time.perf_counter() - t0) / (repeat * 5)

    mission = MissionConfig(
        curve=deltoid, n=4, seed=0, c_target=(0.0, 0.0), horizon=30.0
    )
    run_mission(MissionConfig(curve=deltoid, n=4, seed=0, horizon=1.0))  # warm
    t0 = time.perf_counter()
    for _ in range(repeat):
        run_mission(mission)
    results["mission-loop"] = (time.perf_counter() - t0) / repeat

    for phase in PHASES:
        print(f"RESULT {phase} {results[phase]:.6f}")


def run_child(numba_flag: str, repeat: int):
    env = dict(os.environ)
    env["CURVESWARM_NUMBA"] = numba_flag
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--phase-child", "--repeat", str(repeat)],
        capture_output=True,
        text=True,
        env=env,
    )
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(f"child run failed (CURVESWARM_NUMBA={numba_flag})")
    out = {}
    for line in proc.stdout.splitlines():
        if line.startswith("RESULT "):
            _tag, phase, seconds = line.split()
            out[phase] = float(seconds)
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--phase-child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.phase_child:
        run_phases(args.repeat)
        return 0

    print(f"benchmarking numpy fallback vs numba kernels (repeat={args.repeat})")
    plain = run_child("0", args.repeat)
    jitted = run_child("1", args.repeat)
    header = f"{'phase':<16}{'numpy s':>12}{'numba s':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for phase in PHASES:
        a = plain[phase]
        b = jitted[phase]
        print(f"{phase:<16}{a:>12.4f}{b:>12.4f}{a / b:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
