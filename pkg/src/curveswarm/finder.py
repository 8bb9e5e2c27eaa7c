"""Multi-start search for regular polygons inscribed in a closed curve.

A formation is an ordered list of n curve parameters whose points form
a regular n-gon: all sides equal and all consecutive edge dot products
equal.  The finder minimizes a weighted least-squares cost over those
defects with a damped Gauss-Newton iteration, run from one
curvature-weighted start (equal arclength spacing) plus a batch of
sorted random starts, then picks a winner by the selection rules
documented on multistart().
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from . import _finder_kernels as fk
from .curves import Curve

TWO_PI = 2.0 * np.pi

STATUS_LABELS = {
    fk.STATUS_STEP: "step-converged",
    fk.STATUS_COST: "cost-converged",
    fk.STATUS_MAXITER: "max-iterations",
    fk.STATUS_STALLED: "damping-exhausted",
}


class FinderError(ValueError):
    """Bad finder configuration or inputs."""


@dataclass(frozen=True)
class FinderConfig:
    """Knobs for the Gauss-Newton formation search.

    accept_cost is the absolute cost below which a run counts as a
    true formation; tol_step / tol_cost_rel only stop the iteration.
    c_target, when set, steers selection toward formations centered
    near that point.  square_mode (n = 4 only) appends the two
    diagonal residuals that single out true squares.
    """

    n: int = 4
    square_mode: bool = False
    weight_length: float = 1.0
    weight_angle: float = 1.0
    weight_diagonal: float = 1.0
    n_init: int = 32
    k_max: int = 100
    tol_step: float = 1e-10
    tol_cost_rel: float = 1e-12
    accept_cost: float = 1e-9
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    lm_lambda0: float = 1e-8
    seed: int = 0
    c_target: Optional[Tuple[float, float]] = None
    # feasibility thresholds, fractions of curve scale where noted
    min_side_frac: float = 0.05
    min_vertex_sep_frac: float = 0.01
    min_theta_sep: float = 1e-3
    # selection near-tie window, fraction of curve scale
    tie_tol_frac: float = 1e-6

    def validate(self) -> None:
        if self.n < 3:
            raise FinderError("formation needs n >= 3 vertices")
        if self.square_mode and self.n != 4:
            raise FinderError("square mode requires n = 4")
        if self.weight_length <= 0 or self.weight_angle <= 0:
            raise FinderError("residual weights must be positive")
        if self.square_mode and self.weight_diagonal <= 0:
            raise FinderError("diagonal weight must be positive")
        if self.n_init < 1:
            raise FinderError("need at least one start")
        if self.k_max < 1:
            raise FinderError("need at least one iteration")
        for name in ("tol_step", "tol_cost_rel", "accept_cost"):
            if getattr(self, name) <= 0:
                raise FinderError(name + " must be positive")
        if not 0.0 < self.armijo_c1 < 1.0:
            raise FinderError("armijo_c1 must lie in (0, 1)")
        if not 0.0 < self.backtrack < 1.0:
            raise FinderError("backtrack factor must lie in (0, 1)")
        if self.lm_lambda0 <= 0:
            raise FinderError("lm_lambda0 must be positive")


@dataclass
class FormationSolution:
    """One Gauss-Newton run's outcome, plus selection metadata.

    theta is wrapped to [0, 2pi) in solver (agent) order; feasible is
    the geometric predicate (solid side lengths, separated vertices,
    distinct parameters) and says nothing about residual size, which
    is what converged reports.  convex records whether all edge cross
    products share one sign.
    """

    theta: np.ndarray
    vertices: np.ndarray
    center: np.ndarray
    mean_side: float
    residual_norm: float
    cost: float
    iterations: int
    status: str
    init_kind: str
    init_index: int
    feasible: bool
    converged: bool
    convex: bool
    cost_trace: np.ndarray


def _as_theta(theta, n: int) -> np.ndarray:
    arr = np.ascontiguousarray(theta, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise FinderError(f"expected {n} vertex parameters, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FinderError("vertex parameters must be finite")
    return arr


def residuals(theta, curve: Curve, square_mode: bool = False) -> np.ndarray:
    """Stacked side-length and angle defects (plus diagonals in square mode)."""
    arr = np.ascontiguousarray(theta, dtype=float)
    if arr.ndim != 1 or arr.shape[0] < 3:
        raise FinderError("need at least 3 vertex parameters")
    if square_mode and arr.shape[0] != 4:
        raise FinderError("square mode requires n = 4")
    return fk.residual_vector(curve.kind, curve.par, arr, square_mode)


def cost(theta, curve: Curve, config: FinderConfig) -> float:
    """Weighted half sum of squared residuals."""
    config.validate()
    arr = _as_theta(theta, config.n)
    r = fk.residual_vector(curve.kind, curve.par, arr, config.square_mode)
    w = fk.weight_vector(
        config.n,
        config.square_mode,
        config.weight_length,
        config.weight_angle,
        config.weight_diagonal,
    )
    return float(fk.cost_value(r, w))


def jacobian(theta, curve: Curve, square_mode: bool = False) -> np.ndarray:
    """Derivative of residuals() w.r.t. each vertex parameter."""
    arr = np.ascontiguousarray(theta, dtype=float)
    if arr.ndim != 1 or arr.shape[0] < 3:
        raise FinderError("need at least 3 vertex parameters")
    if square_mode and arr.shape[0] != 4:
        raise FinderError("square mode requires n = 4")
    return fk.jacobian_matrix(curve.kind, curve.par, arr, square_mode)


def _polygon_stats(curve: Curve, theta: np.ndarray):
    pts = curve.point(theta)
    center = pts.mean(axis=0)
    edges = pts - np.roll(pts, 1, axis=0)
    sides = np.hypot(edges[:, 0], edges[:, 1])
    return pts, center, float(sides.mean()), edges


def _is_convex(edges: np.ndarray) -> bool:
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    return bool(np.all(cross > 0.0) or np.all(cross < 0.0))


def _is_geometric_feasible(
    theta: np.ndarray, pts: np.ndarray, mean_side: float, scale: float, config: FinderConfig
) -> bool:
    if mean_side < config.min_side_frac * scale:
        return False
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    iu = np.triu_indices(len(theta), k=1)
    if dist[iu].min() < config.min_vertex_sep_frac * scale:
        return False
    wrapped = np.sort(np.mod(theta, TWO_PI))
    gaps = np.diff(wrapped, append=wrapped[0] + TWO_PI)
    return bool(gaps.min() >= config.min_theta_sep)


def gauss_newton_solve(
    theta0,
    curve: Curve,
    config: FinderConfig,
    init_kind: str = "random",
    init_index: int = 0,
) -> FormationSolution:
    """Run the damped Gauss-Newton iteration from one start.

    Stops on small step, small relative cost drop, the iteration cap,
    or exhausted damping; the accepted cost sequence is monotone
    nonincreasing and recorded in cost_trace.
    """
    config.validate()
    arr = _as_theta(theta0, config.n)
    trace = np.empty(config.k_max + 1)
    theta, _, iters, status_code, trace_len = fk.gn_solve(
        curve.kind,
        curve.par,
        arr,
        config.square_mode,
        config.weight_length,
        config.weight_angle,
        config.weight_diagonal,
        config.k_max,
        config.tol_step,
        config.tol_cost_rel,
        config.armijo_c1,
        config.backtrack,
        config.lm_lambda0,
        trace,
    )
    theta_w = np.mod(theta, TWO_PI)
    r = fk.residual_vector(curve.kind, curve.par, theta_w, config.square_mode)
    w = fk.weight_vector(
        config.n,
        config.square_mode,
        config.weight_length,
        config.weight_angle,
        config.weight_diagonal,
    )
    final_cost = float(fk.cost_value(r, w))
    pts, center, mean_side, edges = _polygon_stats(curve, theta_w)
    return FormationSolution(
        theta=theta_w,
        vertices=pts,
        center=center,
        mean_side=mean_side,
        residual_norm=float(np.linalg.norm(r)),
        cost=final_cost,
        iterations=int(iters),
        status=STATUS_LABELS[int(status_code)],
        init_kind=init_kind,
        init_index=init_index,
        feasible=_is_geometric_feasible(theta_w, pts, mean_side, curve.scale, config),
        converged=final_cost <= config.accept_cost,
        convex=_is_convex(edges),
        cost_trace=trace[:trace_len].copy(),
    )


def init_curvature_weighted(curve: Curve, n: int) -> np.ndarray:
    """Start with vertices spaced equally in arclength.

    Inverting the normalized arclength at fractions i/n concentrates
    parameters where the curve moves slowly, i.e. where curvature
    features like cusps sit.
    """
    if n < 3:
        raise FinderError("formation needs n >= 3 vertices")
    return np.array([curve.arclength_inverse(i / n) for i in range(n)])


def init_random(curve: Curve, n: int, rng: np.random.Generator) -> np.ndarray:
    """n parameters drawn uniformly on [0, 2pi), sorted to keep agent order."""
    if n < 3:
        raise FinderError("formation needs n >= 3 vertices")
    return np.sort(rng.uniform(0.0, TWO_PI, n))


def _rank_key(sol: FormationSolution):
    return (sol.cost, sol.init_index)


def _select(solutions, curve: Curve, config: FinderConfig) -> FormationSolution:
    tie = config.tie_tol_frac * curve.scale
    candidates = [s for s in solutions if s.converged and s.feasible]
    if candidates:
        convex_ones = [s for s in candidates if s.convex]
        if convex_ones:
            # demote star/crossed polygons when a convex formation exists
            for s in candidates:
                if not s.convex:
                    s.feasible = False
            candidates = convex_ones
        if config.c_target is not None:
            target = np.asarray(config.c_target, dtype=float)
            dists = [float(np.linalg.norm(s.center - target)) for s in candidates]
            dmin = min(dists)
            near = [s for s, d in zip(candidates, dists) if d <= dmin + tie]
        else:
            near = candidates
        lmax = max(s.mean_side for s in near)
        best = [s for s in near if s.mean_side >= lmax - tie]
        return min(best, key=_rank_key)
    # Nothing both converged and feasible.  Hand back the cheapest
    # geometrically sound run (the best-fit polygon) so callers are not
    # given a collapsed all-coincident solution, which always reaches
    # zero residual but is useless.
    pool = [s for s in solutions if s.feasible]
    if not pool:
        pool = solutions
    return min(pool, key=_rank_key)


def multistart(curve: Curve, config: FinderConfig, return_all: bool = False):
    """Search from one curvature-weighted start plus random restarts.

    Runs gauss_newton_solve from n_init starts, keeps runs that are
    converged (cost <= accept_cost) and geometrically feasible, prefers
    convex polygons over stars, then picks the center nearest c_target
    when given (near-ties go to the largest mean side, favoring
    non-degenerate formations) or simply the largest mean side.
    Remaining ties fall to lower cost, then lower start index.  If no
    run qualifies, the lowest-cost geometrically feasible run (the
    best-fit polygon) is returned, or the overall lowest-cost run when
    every start collapsed.
    """
    config.validate()
    solutions = []
    theta0 = init_curvature_weighted(curve, config.n)
    solutions.append(
        gauss_newton_solve(theta0, curve, config, "curvature-weighted", 0)
    )
    rng = np.random.default_rng(config.seed)
    for idx in range(1, config.n_init):
        theta0 = init_random(curve, config.n, rng)
        solutions.append(gauss_newton_solve(theta0, curve, config, "random", idx))
    best = _select(solutions, curve, config)
    if return_all:
        return best, solutions
    return best


def find_formation(
    curve: Curve,
    n: int,
    square_mode: bool = False,
    c_target: Optional[Tuple[float, float]] = None,
    seed: int = 0,
    **overrides,
) -> FormationSolution:
    """Convenience wrapper building a FinderConfig and running multistart."""
    config = FinderConfig(
        n=n, square_mode=square_mode, c_target=c_target, seed=seed
    )
    if overrides:
        config = replace(config, **overrides)
    return multistart(curve, config)
