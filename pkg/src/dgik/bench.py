"""Randomized benchmark campaigns and their statistics."""
import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from dgik import models
from dgik.errors import InvalidCounts
from dgik.graph import Goal, Obstacle
from dgik.pipeline import ROTATION_TOL, SolveRequest, solve_ik
from dgik.robot import Joint, RobotModel, aux_name, place_points, point_name
from dgik.rtr import RtrParams

SUITES = ("planar-chain", "planar-tree", "revolute-chain", "revolute-obstacles")
LAYOUTS = ("none", "octahedron", "cube", "icosahedron")
CSV_FIELDS = (
    "trial_id",
    "success",
    "pos_err_m",
    "rot_err_rad",
    "limit_violation_frac",
    "obstacle_violation_m",
    "iterations",
    "runtime_ms",
    "termination",
)
WATERFALL_TOLERANCES = tuple(10.0**e for e in range(-6, 2))
# Random limits are drawn once per campaign, uniformly in this range.
DEFAULT_LIMIT_RANGE = (np.pi / 4, 3 * np.pi / 4)
MAX_REJECTIONS = 10_000


@dataclass(frozen=True)
class ExperimentSpec:
    suite: str
    dof: int
    limits: bool = False
    limit_range: tuple = DEFAULT_LIMIT_RANGE
    obstacles: str = "none"
    obstacle_radius: float = 0.25
    circumradius: float = 1.5
    trials: int = 100
    seed: int = 0
    init: str = "flat"
    rtr: RtrParams = field(default_factory=RtrParams)

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; choose from {SUITES}")
        if self.obstacles not in LAYOUTS:
            raise ValueError(f"unknown obstacle layout {self.obstacles!r}; choose from {LAYOUTS}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.dof < 1:
            raise ValueError("dof must be positive")
        if self.suite == "planar-tree" and _tree_depth(self.dof) is None:
            raise ValueError("planar-tree dof must be 2^(h+1) - 2 for a tree of height h (2, 6, 14, 30, ...)")
        if self.init not in ("flat", "bounds"):
            raise ValueError(f"unknown init mode {self.init!r}")
        lo, hi = self.limit_range
        if not 0 < lo <= hi <= np.pi:
            raise ValueError("limit range must satisfy 0 < low <= high <= pi")

    @property
    def layout(self):
        if self.suite == "revolute-obstacles" and self.obstacles == "none":
            return "octahedron"
        return self.obstacles


def _tree_depth(dof):
    h = int(round(math.log2(dof + 2))) - 1
    return h if h >= 1 and 2 ** (h + 1) - 2 == dof else None


def _model_rng(spec):
    return np.random.default_rng([spec.seed, 0, 0])


def _trial_rng(spec, trial_index):
    # keyed on (seed, trial) so the draw for a trial never depends on scheduling
    return np.random.default_rng([spec.seed, 1, trial_index])


def build_model(spec):
    if spec.suite == "planar-chain":
        base = models.planar_chain(spec.dof)
    elif spec.suite == "planar-tree":
        base = models.planar_tree(_tree_depth(spec.dof))
    else:
        base = models.coplanar_chain(spec.dof)
    if not spec.limits:
        return base
    rng = _model_rng(spec)
    lo, hi = spec.limit_range
    joints = []
    for j in base.joints:
        lim = None if j.parent is None else float(rng.uniform(lo, hi))
        joints.append(Joint(j.id, j.parent, j.translation, j.rotation, lim))
    return RobotModel(base.kind, joints, base.end_effectors)


def layout_centers(layout, dim, circumradius=1.5):
    """Obstacle centers on the vertices of a named polyhedron.

    In the plane the octahedron becomes its equatorial square, the cube the
    square rotated by 45 degrees and the icosahedron a regular pentagon.
    """
    if layout == "none":
        return np.zeros((0, dim))
    phi = (1 + 5**0.5) / 2
    if dim == 3:
        if layout == "octahedron":
            pts = np.vstack([np.eye(3), -np.eye(3)])
        elif layout == "cube":
            pts = np.array([[a, b, c] for a in (-1, 1) for b in (-1, 1) for c in (-1, 1)], dtype=float)
        else:
            pts = np.array(
                [[0, a, b * phi] for a in (-1, 1) for b in (-1, 1)]
                + [[a, b * phi, 0] for a in (-1, 1) for b in (-1, 1)]
                + [[a * phi, 0, b] for a in (-1, 1) for b in (-1, 1)],
                dtype=float,
            )
    else:
        n, offset = {"octahedron": (4, 0.0), "cube": (4, np.pi / 4), "icosahedron": (5, np.pi / 2)}[layout]
        ang = offset + 2 * np.pi * np.arange(n) / n
        pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return circumradius * pts / np.linalg.norm(pts, axis=1, keepdims=True)


def build_obstacles(spec, dim):
    centers = layout_centers(spec.layout, dim, spec.circumradius)
    return [Obstacle(c, spec.obstacle_radius) for c in centers]


def pose_goals(model, theta):
    """Direction goals on every end-effector, generated by forward kinematics."""
    pts = place_points(model, theta)
    goals = []
    for ee in model.end_effectors:
        second = aux_name(ee) if model.kind == "revolute3d" else point_name(model.joint(ee).parent)
        goals.append(Goal(ee, "direction", [pts[point_name(ee)], pts[second]]))
    return goals


def _collision_free(model, theta, obstacles):
    pts = place_points(model, theta)
    for ob in obstacles:
        c = ob.center[: model.dim]
        for name, p in pts.items():
            if name.startswith(("p:", "q:")) and np.linalg.norm(p - c) < ob.radius:
                return False
    return True


def goal_configuration(spec, trial_index, model=None, obstacles=None):
    """The configuration a trial's goals are generated from."""
    model = model or build_model(spec)
    obstacles = build_obstacles(spec, model.dim) if obstacles is None else obstacles
    rng = _trial_rng(spec, trial_index)
    lims = np.where(np.isfinite(model.limits()), model.limits(), np.pi)
    for _ in range(MAX_REJECTIONS):
        theta = rng.uniform(-lims, lims)
        if _collision_free(model, theta, obstacles):
            return theta, rng
    raise RuntimeError("could not sample a collision-free configuration")


def generate_problem(spec, trial_index, model=None, obstacles=None):
    model = model or build_model(spec)
    obstacles = build_obstacles(spec, model.dim) if obstacles is None else obstacles
    theta, rng = goal_configuration(spec, trial_index, model, obstacles)
    return SolveRequest(
        model,
        pose_goals(model, theta),
        obstacles,
        init=spec.init,
        seed=int(rng.integers(2**63)),
        rtr=spec.rtr,
        limits=spec.limits,
    )


class TrialRecord(NamedTuple):
    trial_id: int
    success: bool
    pos_err_m: float
    rot_err_rad: float
    limit_violation_frac: float
    obstacle_violation_m: float
    iterations: int
    runtime_ms: float
    termination: str

    def passes(self, position_tol, rotation_tol=ROTATION_TOL):
        return (
            self.limit_violation_frac <= 0.01
            and self.obstacle_violation_m <= 0.01
            and self.pos_err_m < position_tol
            and self.rot_err_rad < rotation_tol
        )


def run_trial(spec, trial_index, model=None, obstacles=None):
    req = generate_problem(spec, trial_index, model, obstacles)
    rep = solve_ik(req)
    return TrialRecord(
        trial_index,
        bool(rep.success),
        float(rep.position_error),
        float(rep.rotation_error),
        float(rep.limit_violation),
        float(rep.obstacle_violation),
        int(rep.iterations),
        float(rep.runtime_ms),
        str(rep.termination),
    )


def _run_chunk(args):
    spec, indices = args
    model = build_model(spec)
    obstacles = build_obstacles(spec, model.dim)
    return [run_trial(spec, i, model, obstacles) for i in indices]


def jeffreys_interval(successes, trials, level=0.95):
    """Equal-tailed Jeffreys interval for a binomial proportion."""
    if not (isinstance(trials, (int, np.integer)) and isinstance(successes, (int, np.integer))):
        raise InvalidCounts("counts must be integers")
    if trials < 1 or not 0 <= successes <= trials:
        raise InvalidCounts(f"invalid counts: {successes} of {trials}")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    alpha = 1.0 - level
    a, b = successes + 0.5, trials - successes + 0.5
    low = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, a, b))
    high = 1.0 if successes == trials else float(stats.beta.ppf(1 - alpha / 2, a, b))
    return low, high


class WaterfallRow(NamedTuple):
    position_tol: float
    success_rate: float
    low: float
    high: float


@dataclass
class CampaignSummary:
    trials: int
    successes: int
    success_rate: float
    interval: tuple
    iterations_mean: float
    iterations_std: float
    runtime_mean_ms: float
    runtime_std_ms: float
    waterfall: list

    def format(self):
        lo, hi = self.interval
        lines = [
            f"trials        {self.trials}",
            f"success rate  {self.success_rate:.4f}  (95% Jeffreys [{lo:.4f}, {hi:.4f}])",
            f"iterations    {self.iterations_mean:.2f} (sd {self.iterations_std:.2f})",
            f"runtime [ms]  {self.runtime_mean_ms:.2f} (sd {self.runtime_std_ms:.2f})",
        ]
        return "\n".join(lines)


def summarize(records, tolerances=WATERFALL_TOLERANCES):
    """Statistics over every trial, successful or not."""
    n = len(records)
    if n == 0:
        raise InvalidCounts("no trials to summarize")
    wins = sum(r.success for r in records)
    its = np.array([r.iterations for r in records], dtype=float)
    rts = np.array([r.runtime_ms for r in records], dtype=float)
    waterfall = []
    for tol in tolerances:
        k = sum(r.passes(tol) for r in records)
        waterfall.append(WaterfallRow(tol, k / n, *jeffreys_interval(k, n)))
    return CampaignSummary(
        n, wins, wins / n, jeffreys_interval(wins, n), float(its.mean()), float(its.std()),
        float(rts.mean()), float(rts.std()), waterfall,
    )


def run_campaign(spec, workers=1, csv_path=None, waterfall_path=None):
    """Run every trial of ``spec``; returns ``(summary, records)`` ordered by trial id."""
    indices = list(range(spec.trials))
    if workers <= 1:
        records = _run_chunk((spec, indices))
    else:
        chunks = [(spec, indices[k::workers]) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [r for part in pool.map(_run_chunk, chunks) for r in part]
    records.sort(key=lambda r: r.trial_id)
    summary = summarize(records)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            fh.write(records_csv(records))
    if waterfall_path is not None:
        with open(waterfall_path, "w", newline="") as fh:
            fh.write(waterfall_csv(summary.waterfall))
    return summary, records


def records_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow([r.trial_id, int(r.success), *(repr(float(v)) for v in r[2:6]), r.iterations, repr(r.runtime_ms), r.termination])
    return buf.getvalue()


def read_records(path_or_text):
    text = path_or_text
    if "\n" not in path_or_text:
        with open(path_or_text) as fh:
            text = fh.read()
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        TrialRecord(
            int(r["trial_id"]),
            r["success"] == "1",
            float(r["pos_err_m"]),
            float(r["rot_err_rad"]),
            float(r["limit_violation_frac"]),
            float(r["obstacle_violation_m"]),
            int(r["iterations"]),
            float(r["runtime_ms"]),
            r["termination"],
        )
        for r in rows
    ]


def waterfall_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("position_tol_m", "success_rate", "jeffreys_low", "jeffreys_high"))
    for row in rows:
        w.writerow([repr(v) for v in row])
    return buf.getvalue()
