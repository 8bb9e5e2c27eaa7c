"""File emission: trajectory and metrics CSVs, solution files, SVG snapshots.

All writers format floats with repr (shortest round-trip form), so a
rerun with the same seed produces byte-identical files; that is the
reproducibility contract the CLI and tests rely on.
"""

import numpy as np

from .curves import Curve

TRAJECTORY_HEADER = (
    "t,agent,x,y,psi,v,z,vz,sigma,alpha,accel,turn_rate,lift_accel"
)
# trajectory log column indices for the CSV payload after (t, agent):
# the six states, blend sigma, avoidance alpha, then the control triple
_LOG_COLS = (0, 1, 2, 3, 4, 5, 6, 7, 9, 10, 11)

SVG_COLORS = ("#c0392b", "#2471a3", "#1e8449", "#b7950b", "#7d3c98", "#148f77")


def _fmt(x) -> str:
    return repr(float(x))


def write_trajectory_csv(path, log) -> None:
    """One row per (time, agent): states, weights, control triple."""
    data = log.data
    times = log.times
    with open(path, "w") as f:
        f.write(TRAJECTORY_HEADER + "\n")
        for k in range(data.shape[0]):
            t_str = _fmt(times[k])
            for i in range(data.shape[1]):
                row = data[k, i]
                f.write(t_str + "," + str(i))
                for c in _LOG_COLS:
                    f.write("," + _fmt(row[c]))
                f.write("\n")


def write_metrics_csv(path, metrics) -> None:
    """Shared time grid: safety distance, adherence, per-agent sigma."""
    sigma = metrics.sigma
    n = sigma.shape[1] if sigma.ndim == 2 else 0
    header = "t,min_distance,mean_adherence" + "".join(
        f",sigma_{i}" for i in range(n)
    )
    with open(path, "w") as f:
        f.write(header + "\n")
        for k in range(metrics.times.shape[0]):
            f.write(
                _fmt(metrics.times[k])
                + ","
                + _fmt(metrics.min_distance[k])
                + ","
                + _fmt(metrics.mean_adherence[k])
            )
            for i in range(n):
                f.write("," + _fmt(sigma[k, i]))
            f.write("\n")


def write_solution_file(path, best, runs=None) -> None:
    """Chosen formation plus a one-line summary of every solver start."""
    with open(path, "w") as f:
        f.write("[solution]\n")
        f.write(f"n = {best.theta.shape[0]}\n")
        f.write(f"feasible = {best.feasible}\n")
        f.write(f"converged = {best.converged}\n")
        f.write(f"convex = {best.convex}\n")
        f.write(f"status = {best.status}\n")
        f.write(f"init = {best.init_kind}:{best.init_index}\n")
        f.write(f"iterations = {best.iterations}\n")
        f.write(f"cost = {_fmt(best.cost)}\n")
        f.write(f"residual_norm = {_fmt(best.residual_norm)}\n")
        f.write(f"mean_side = {_fmt(best.mean_side)}\n")
        f.write(
            "center = " + _fmt(best.center[0]) + ", " + _fmt(best.center[1]) + "\n"
        )
        f.write("theta = " + ", ".join(_fmt(t) for t in best.theta) + "\n")
        for k, (vx, vy) in enumerate(best.vertices):
            f.write(f"vertex_{k} = " + _fmt(vx) + ", " + _fmt(vy) + "\n")
        if runs is not None:
            f.write("\n[starts]\n")
            f.write(
                "# index kind iterations status cost residual_norm"
                " feasible converged\n"
            )
            for run in runs:
                f.write(
                    f"{run.init_index} {run.init_kind} {run.iterations}"
                    f" {run.status} " + _fmt(run.cost) + " "
                    + _fmt(run.residual_norm)
                    + f" {run.feasible} {run.converged}\n"
                )


def write_cost_trace_csv(path, runs) -> None:
    """Long-format per-iteration cost of every start, for convergence plots."""
    with open(path, "w") as f:
        f.write("start,init_kind,iteration,cost\n")
        for run in runs:
            for k, cost in enumerate(run.cost_trace):
                f.write(f"{run.init_index},{run.init_kind},{k}," + _fmt(cost) + "\n")


def format_samples_csv(curve: Curve, n: int) -> str:
    """n curve samples with tangent and curvature columns, endpoint closed."""
    rows = ["s,x,y,tangent_x,tangent_y,curvature"]
    for s in np.linspace(0.0, 2.0 * np.pi, n):
        p = curve.point(float(s))
        fr = curve.frenet(float(s))
        rows.append(
            _fmt(s) + "," + _fmt(p[0]) + "," + _fmt(p[1]) + ","
            + _fmt(fr.tangent[0]) + "," + _fmt(fr.tangent[1]) + ","
            + _fmt(fr.curvature)
        )
    return "\n".join(rows) + "\n"


def write_samples_csv(path, curve: Curve, n: int) -> None:
    with open(path, "w") as f:
        f.write(format_samples_csv(curve, n))


def _svg_mapper(curve: Curve):
    """World-to-SVG transform: square viewBox around the curve, y up."""
    pts = curve.point(np.linspace(0.0, 2.0 * np.pi, 1024))
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    c = 0.5 * (lo + hi)
    half = float(np.max(hi - lo)) * 0.5 + 0.35 * curve.scale
    size = 720.0
    k = size / (2.0 * half)

    def to_svg(p):
        return (
            (float(p[0]) - c[0] + half) * k,
            (c[1] + half - float(p[1])) * k,
        )

    return to_svg, size, k


def _polyline(f, pts, stroke, width, opacity=1.0, dash=None):
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    f.write(
        f'<polyline points="{coords}" fill="none" stroke="{stroke}"'
        f' stroke-width="{width:.2f}" stroke-opacity="{opacity:.2f}"{extra}/>\n'
    )


def write_snapshot_svg(path, curve: Curve, log, k: int, assignment=None) -> None:
    """Scene at record k: curve, trails up to k, agents, mission targets."""
    to_svg, size, sc = _svg_mapper(curve)
    data = log.data
    k = min(max(k, 0), data.shape[0] - 1)
    t = float(log.times[k])
    n = data.shape[1]
    tick = 0.045 * curve.scale
    with open(path, "w") as f:
        f.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}"'
            f' height="{size:.0f}" viewBox="0 0 {size:.0f} {size:.0f}">\n'
        )
        f.write(f'<rect width="{size:.0f}" height="{size:.0f}" fill="#ffffff"/>\n')
        curve_pts = [
            to_svg(p)
            for p in curve.point(np.linspace(0.0, 2.0 * np.pi, 1024))
        ]
        _polyline(f, curve_pts + curve_pts[:1], "#9aa0a6", 1.6)
        if assignment is not None:
            arm = 0.05 * curve.scale * sc
            for vx, vy in assignment.position:
                x, y = to_svg((vx, vy))
                f.write(
                    f'<path d="M {x - arm:.2f} {y - arm:.2f} L {x + arm:.2f}'
                    f' {y + arm:.2f} M {x - arm:.2f} {y + arm:.2f} L'
                    f' {x + arm:.2f} {y - arm:.2f}" stroke="#202124"'
                    f' stroke-width="2.0" fill="none"/>\n'
                )
        for i in range(n):
            color = SVG_COLORS[i % len(SVG_COLORS)]
            trail = [to_svg(data[j, i, 0:2]) for j in range(0, k + 1, 4)]
            if len(trail) >= 2:
                _polyline(f, trail, color, 1.2, opacity=0.55)
            x, y, psi = data[k, i, 0], data[k, i, 1], data[k, i, 2]
            cx, cy = to_svg((x, y))
            hx, hy = to_svg((x + tick * np.cos(psi), y + tick * np.sin(psi)))
            f.write(
                f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="5.0" fill="{color}"/>\n'
            )
            f.write(
                f'<line x1="{cx:.2f}" y1="{cy:.2f}" x2="{hx:.2f}" y2="{hy:.2f}"'
                f' stroke="{color}" stroke-width="2.2"/>\n'
            )
        f.write(
            f'<text x="12" y="24" font-family="monospace" font-size="16"'
            f' fill="#202124">t = {t:.2f} s</text>\n'
        )
        f.write("</svg>\n")
