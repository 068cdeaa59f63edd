"""End-to-end inverse kinematics through low-rank distance matrix completion."""
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from dgik import bounds as bs
from dgik import rtr
from dgik.rtr import RtrParams
from dgik.edm import procrustes_align
from dgik.errors import NegativeCycleError
from dgik.graph import build_graph, goal_points, problem_from_graph, realization
from dgik.robot import check_coplanarity, place_points, recover_angles

INFEASIBLE_BOUNDS = "InfeasibleBounds"

LIMIT_TOL = 0.01  # fraction of the bound magnitude
OBSTACLE_TOL = 0.01  # meters of penetration
POSITION_TOL = 0.01  # meters, summed over end-effectors
ROTATION_TOL = 0.01  # radians, summed over end-effectors


@dataclass
class SolveRequest:
    model: object
    goals: list
    obstacles: list = field(default_factory=list)
    init: object = "flat"  # "flat", "bounds" or an (N, K) array in graph order
    seed: Optional[int] = 0
    rtr: RtrParams = field(default_factory=RtrParams)
    limits: bool = True

    def __post_init__(self):
        if not self.goals:
            raise ValueError("at least one goal is required")
        ees = [g.end_effector for g in self.goals]
        if len(set(ees)) != len(ees):
            raise ValueError("at most one goal per end-effector")
        if isinstance(self.init, str) and self.init not in ("flat", "bounds"):
            raise ValueError(f"unknown init mode {self.init!r}")


@dataclass
class Evaluation:
    position_error: float
    rotation_error: float
    limit_violation: float
    obstacle_violation: float

    def success(self, position_tol=POSITION_TOL, rotation_tol=ROTATION_TOL):
        return (
            self.limit_violation <= LIMIT_TOL
            and self.obstacle_violation <= OBSTACLE_TOL
            and self.position_error < position_tol
            and self.rotation_error < rotation_tol
        )


@dataclass
class SolveReport:
    theta: np.ndarray
    position_error: float
    rotation_error: float
    limit_violation: float
    obstacle_violation: float
    iterations: int
    runtime_ms: float
    success: bool
    termination: str
    warnings: list = field(default_factory=list)
    cost: float = float("nan")

    def to_dict(self):
        return {
            "theta": np.asarray(self.theta).tolist(),
            "position_error": self.position_error,
            "rotation_error": self.rotation_error,
            "limit_violation": self.limit_violation,
            "obstacle_violation": self.obstacle_violation,
            "iterations": self.iterations,
            "runtime_ms": self.runtime_ms,
            "success": self.success,
            "termination": self.termination,
            "warnings": list(self.warnings),
        }


def _angle_between(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return np.pi
    return float(np.arctan2(np.linalg.norm(np.cross(_pad(a), _pad(b))), np.dot(a, b)))


def _pad(v):
    v = np.asarray(v, dtype=float)
    return np.concatenate([v, np.zeros(3 - v.size)])


def evaluate_solution(model, theta, goals, obstacles=(), limits=True):
    """Error metrics of ``theta`` computed from forward kinematics.

    Position error sums, over goals, the distance of the end-effector point
    from its target. Rotation error sums the angle between achieved and
    target directions of direction goals (0 for position goals). Limit
    violation is the largest ``max(0, |t| - lim) / lim``. Obstacle violation
    is the deepest penetration of a joint or axis point into a sphere.
    """
    pts = place_points(model, theta)
    pos_err = rot_err = 0.0
    resolver = _GoalNames(model)
    for goal in goals:
        names = resolver.goal_points(goal)
        targets = np.asarray(goal.targets, dtype=float)[:, : model.dim]
        pos_err += float(np.linalg.norm(pts[names[0]] - targets[0]))
        if goal.kind == "direction":
            achieved = pts[names[1]] - pts[names[0]]
            wanted = targets[1] - targets[0]
            rot_err += _angle_between(achieved, wanted)
    lim_viol = 0.0
    if limits:
        lims = model.limits()
        finite = np.isfinite(lims)
        if np.any(finite):
            excess = np.maximum(np.abs(np.asarray(theta)[finite]) - lims[finite], 0.0) / lims[finite]
            lim_viol = float(np.max(excess))
    obs_viol = 0.0
    bodies = [n for n in pts if n.startswith(("p:", "q:"))]
    for ob in obstacles:
        c = np.asarray(ob.center, dtype=float)[: model.dim]
        for n in bodies:
            obs_viol = max(obs_viol, ob.radius - float(np.linalg.norm(pts[n] - c)))
    return Evaluation(pos_err, rot_err, lim_viol, obs_viol)


class _GoalNames:
    """Resolves goal vertices without building a whole graph."""

    def __init__(self, model):
        self.kind = model.kind
        self.parents = {j.id: j.parent for j in model.joints}

    def goal_points(self, goal):
        return goal_points(self, goal)


def initial_realization(graph, order, model, init, seed=None):
    """Starting point matrix in graph order."""
    if isinstance(init, str) and init == "flat":
        return realization(graph, order, place_points(model, model.zero_configuration()))
    if isinstance(init, str) and init == "bounds":
        b = bs.smooth_bounds(graph)
        assert list(b.order) == list(order)
        return bs.initial_points(bs.sample_pre_edm(b, seed), graph.dim)
    P0 = np.asarray(init, dtype=float)
    if P0.shape != (len(order), graph.dim):
        raise ValueError(f"provided start has shape {P0.shape}, expected {(len(order), graph.dim)}")
    return P0


def solve_ik(req: SolveRequest):
    t0 = time.perf_counter()
    model = req.model
    warnings = []
    ok, bad = check_coplanarity(model)
    if not ok:
        warnings.append(f"non-coplanar consecutive axes: {bad}")
    graph = build_graph(model, req.goals, req.obstacles, limits=req.limits)
    prob, order, anchors = problem_from_graph(graph)
    try:
        P0 = initial_realization(graph, order, model, req.init, req.seed)
    except NegativeCycleError as exc:
        theta = model.zero_configuration()
        ev = evaluate_solution(model, theta, req.goals, req.obstacles, req.limits)
        warnings.append(str(exc))
        return SolveReport(
            theta, ev.position_error, ev.rotation_error, ev.limit_violation, ev.obstacle_violation,
            0, 1e3 * (time.perf_counter() - t0), False, INFEASIBLE_BOUNDS, warnings,
        )
    res = rtr.solve(prob, P0, req.rtr)
    P = procrustes_align(res.point, anchors)
    points = dict(zip(order, P))
    theta = recover_angles(model, points)
    ev = evaluate_solution(model, theta, req.goals, req.obstacles, req.limits)
    runtime = 1e3 * (time.perf_counter() - t0)
    return SolveReport(
        theta,
        ev.position_error,
        ev.rotation_error,
        ev.limit_violation,
        ev.obstacle_violation,
        res.iterations,
        runtime,
        ev.success(),
        res.termination.value,
        warnings,
        res.cost,
    )

