"""Distance graphs for inverse kinematics and their reduction to completion problems.

Vertex names:

* ``o, x, y[, z]`` base frame (origin and unit basis vectors)
* ``p:<id>`` joint point, ``q:<id>`` joint axis point (3D revolute only)
* ``g:<ee>:0``, ``g:<ee>:1`` goal targets of an end-effector
* ``c:<k>`` obstacle centers

All edge weights are squared distances. Every builder returns a new graph.
"""
import copy
import enum
import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from dgik.cost import CompletionProblem
from dgik.edm import AnchorSet
from dgik.errors import DegenerateDirectionGoal, LimitNotRepresentable, MalformedGraph
from dgik.robot import (
    Z_AXIS,
    aux_name,
    base_names,
    base_positions,
    place_points,
    point_name,
)

DIRECTION_SEPARATION = 1e-9


class Role(str, enum.Enum):
    BASE = "base"
    STRUCTURE = "structure"
    AUXILIARY = "auxiliary"
    END_EFFECTOR = "end_effector"
    OBSTACLE = "obstacle_center"


@dataclass(frozen=True)
class Goal:
    end_effector: str
    kind: str
    targets: np.ndarray

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.targets, dtype=float))
        object.__setattr__(self, "targets", t)
        object.__setattr__(self, "end_effector", str(self.end_effector))
        if self.kind not in ("position", "direction"):
            raise ValueError(f"unknown goal kind {self.kind!r}")
        if t.shape[0] != (1 if self.kind == "position" else 2):
            raise ValueError(f"{self.kind} goal needs {1 if self.kind == 'position' else 2} targets")
        if not np.all(np.isfinite(t)):
            raise ValueError("goal targets must be finite")
        if self.kind == "direction" and np.linalg.norm(t[0] - t[1]) < DIRECTION_SEPARATION:
            raise DegenerateDirectionGoal("direction targets coincide")

    @classmethod
    def from_dict(cls, data):
        return cls(data["end_effector"], data.get("kind", "position"), data["targets"])

    def to_dict(self):
        return {"end_effector": self.end_effector, "kind": self.kind, "targets": self.targets.tolist()}


@dataclass(frozen=True)
class Obstacle:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("obstacle radius must be positive")


def load_goals(path):
    with open(path) as fh:
        data = json.load(fh)
    items = data if isinstance(data, list) else [data]
    return [Goal.from_dict(d) for d in items]


def load_obstacles(path):
    with open(path) as fh:
        return [Obstacle(d["center"], d["radius"]) for d in json.load(fh)]


def _key(a, b):
    return (a, b) if a <= b else (b, a)


@dataclass
class DistanceGraph:
    dim: int
    kind: str
    vertices: dict = field(default_factory=dict)  # name -> Role, insertion ordered
    equality: dict = field(default_factory=dict)  # (a, b) sorted -> squared distance
    interval: dict = field(default_factory=dict)  # (a, b) sorted -> (lower or None, upper or None)
    fixed: dict = field(default_factory=dict)  # name -> known coordinates
    parents: dict = field(default_factory=dict)  # joint id -> parent id
    root: Optional[str] = None

    def copy(self):
        return copy.deepcopy(self)

    def add_vertex(self, name, role):
        self.vertices.setdefault(name, role)

    def set_equality(self, a, b, d2):
        if d2 < 0:
            raise ValueError("squared distance must be non-negative")
        self.equality[_key(a, b)] = float(d2)

    def tighten_interval(self, a, b, lower=None, upper=None):
        """Intersect the interval on ``(a, b)`` with ``[lower, upper]``."""
        k = _key(a, b)
        lo, hi = self.interval.get(k, (None, None))
        if lower is not None:
            lo = lower if lo is None else max(lo, lower)
        if upper is not None:
            hi = upper if hi is None else min(hi, upper)
        if lo is not None and hi is not None and lo > hi:
            raise MalformedGraph(f"empty interval on {k}")
        self.interval[k] = (lo, hi)

    def names(self, *roles):
        return [v for v, r in self.vertices.items() if r in roles]

    @property
    def has_base(self):
        return bool(self.names(Role.BASE))

    def weight(self, a, b):
        return self.equality.get(_key(a, b))


def structure_graph(model):
    """Distances between joint points that no joint motion can change."""
    g = DistanceGraph(dim=model.dim, kind=model.kind, root=model.root)
    three_d = model.kind == "revolute3d"
    for jid in model.order:
        j = model.joint(jid)
        g.parents[jid] = j.parent
        u, ua = point_name(jid), aux_name(jid)
        g.add_vertex(u, Role.STRUCTURE)
        if three_d:
            g.add_vertex(ua, Role.AUXILIARY)
            g.set_equality(u, ua, 1.0)
        if j.parent is None:
            continue
        p = point_name(j.parent)
        t = j.translation
        g.set_equality(p, u, t @ t)
        if three_d:
            pa = aux_name(j.parent)
            a = j.rotation @ Z_AXIS
            for s, e, vec in ((p, ua, t + a), (pa, u, t - Z_AXIS), (pa, ua, t - Z_AXIS + a)):
                g.set_equality(s, e, vec @ vec)
    return g


def _connect_fixed(g, name, pos):
    """Equality edges from a vertex with known position to every other known vertex."""
    for other, q in g.fixed.items():
        if other != name and other in g.vertices and g.vertices[other] != Role.STRUCTURE:
            g.set_equality(name, other, float(np.sum((pos - q) ** 2)))
    g.fixed[name] = pos


def add_base(graph):
    """Add the base frame and pin the root joint to it."""
    g = graph.copy()
    base = base_positions(g.dim)
    for name in base_names(g.dim):
        g.add_vertex(name, Role.BASE)
        _connect_fixed(g, name, base[name])
    if g.root is not None:
        pins = {point_name(g.root): np.zeros(g.dim)}
        if g.kind == "revolute3d":
            pins[aux_name(g.root)] = Z_AXIS.copy()
        for name, pos in pins.items():
            for b, q in base.items():
                g.set_equality(name, b, float(np.sum((pos - q) ** 2)))
    return g


def _lift(targets, dim):
    t = np.asarray(targets, dtype=float)
    if t.shape[1] == dim:
        return t
    if t.shape[1] == 3 and dim == 2:
        if np.any(np.abs(t[:, 2]) > 1e-12):
            raise ValueError("planar goal targets must lie in the xy-plane")
        return t[:, :2]
    raise ValueError(f"goal targets have dimension {t.shape[1]}, expected {dim}")


def goal_points(graph, goal):
    """Names of the graph vertices a goal prescribes, matched to its targets."""
    ee = goal.end_effector
    names = [point_name(ee)]
    if goal.kind == "direction":
        if graph.kind == "revolute3d":
            names.append(aux_name(ee))
        else:
            parent = graph.parents.get(ee)
            if parent is None:
                raise MalformedGraph(f"direction goal on {ee!r} needs a parent joint")
            names.append(point_name(parent))
    return names


def add_goal(graph, goal):
    """Fix the target point(s) of one end-effector in the base frame.

    A direction goal on a revolute joint prescribes the joint point and its
    axis point. On planar and spherical models it prescribes the end-effector
    and its parent joint, which fixes the direction of the last link.
    """
    if not graph.has_base:
        raise MalformedGraph("goals need the base frame; call add_base first")
    if point_name(goal.end_effector) not in graph.vertices:
        raise MalformedGraph(f"unknown end-effector {goal.end_effector!r}")
    g = graph.copy()
    targets = _lift(goal.targets, g.dim)
    for k, (pin, pos) in enumerate(zip(goal_points(g, goal), targets)):
        name = f"g:{goal.end_effector}:{k}"
        g.add_vertex(name, Role.END_EFFECTOR)
        _connect_fixed(g, name, pos)
        g.set_equality(name, pin, 0.0)
        # A zero-length edge alone gives a quartic cost term with a singular
        # Hessian at the solution; pinning the joint point to the base frame
        # directly keeps the solution a nondegenerate minimum.
        for b in g.names(Role.BASE):
            g.set_equality(pin, b, float(np.sum((pos - g.fixed[b]) ** 2)))
    return g


def _limit_candidates(model, jid):
    parent = model.joint(jid).parent
    grand = model.joint(parent).parent
    if model.kind == "spherical":
        return ["z"] if grand is None else [point_name(grand)]
    if grand is None:
        return ["x", "y"]
    if model.kind == "revolute3d":
        return [aux_name(grand), point_name(grand)]
    return [point_name(grand)]


def limit_interval(model, jid):
    """Squared-distance interval equivalent to the symmetric limit on joint ``jid``.

    The distance from the moving point to a point fixed before the rotation
    is ``d^2(t) = A + B cos t + C sin t``. A candidate partner point with
    ``C = 0`` turns ``|t| <= lim`` into an interval on ``d^2``. Returns
    ``(partner, lower, upper)``.
    """
    lim = model.joint(jid).limit
    idx = model.actuated.index(jid)
    if model.kind == "spherical":
        idx = 2 * idx + 1
    mover = point_name(jid)
    samples = []
    for t in (0.0, 0.5 * np.pi, np.pi):
        theta = model.zero_configuration()
        theta[idx] = t
        samples.append(place_points(model, theta))
    for partner in _limit_candidates(model, jid):
        d = [float(np.sum((s[mover] - s[partner]) ** 2)) for s in samples]
        A, B = 0.5 * (d[0] + d[2]), 0.5 * (d[0] - d[2])
        C = d[1] - A
        scale = 1.0 + abs(A)
        if abs(C) <= 1e-9 * scale and abs(B) > 1e-9 * scale:
            ends = sorted((A + B, A + B * np.cos(lim)))
            return partner, max(ends[0], 0.0), ends[1]
    raise LimitNotRepresentable(f"limit of joint {jid!r} is not a symmetric distance interval")


def add_joint_limits(graph, model):
    g = graph.copy()
    for jid in model.actuated:
        if model.joint(jid).limit is None:
            continue
        partner, lo, hi = limit_interval(model, jid)
        if partner not in g.vertices:
            raise MalformedGraph(f"limit partner {partner!r} missing; call add_base first")
        g.tighten_interval(point_name(jid), partner, lo, hi)
    return g


def add_obstacles(graph, obstacles):
    if not obstacles:
        return graph.copy()
    if not graph.has_base:
        raise MalformedGraph("obstacles need the base frame; call add_base first")
    g = graph.copy()
    bodies = g.names(Role.STRUCTURE, Role.AUXILIARY)
    start = len(g.names(Role.OBSTACLE))
    for k, ob in enumerate(obstacles, start=start):
        name = f"c:{k}"
        g.add_vertex(name, Role.OBSTACLE)
        _connect_fixed(g, name, _lift(ob.center[None, :], g.dim)[0])
        for b in bodies:
            g.tighten_interval(b, name, lower=ob.radius**2)
    return g


def build_graph(model, goals=(), obstacles=(), limits=True):
    g = add_base(structure_graph(model))
    for goal in goals:
        g = add_goal(g, goal)
    if limits:
        g = add_joint_limits(g, model)
    return add_obstacles(g, list(obstacles))


class GraphProblem(NamedTuple):
    problem: CompletionProblem
    order: list
    anchors: AnchorSet


def vertex_order(graph):
    """Base, joint points in breadth-first order, goal targets, obstacles."""
    roles = (Role.BASE, None, Role.END_EFFECTOR, Role.OBSTACLE)
    out = []
    for role in roles:
        if role is None:
            out += graph.names(Role.STRUCTURE, Role.AUXILIARY)
        else:
            out += graph.names(role)
    return out


def problem_from_graph(graph):
    if not graph.has_base:
        raise MalformedGraph("graph has no base frame to anchor the solution")
    for a, b in list(graph.equality) + list(graph.interval):
        if a not in graph.vertices or b not in graph.vertices:
            raise MalformedGraph(f"edge ({a}, {b}) references an unknown vertex")
    order = vertex_order(graph)
    index = {v: i for i, v in enumerate(order)}
    eq = [(index[a], index[b], w) for (a, b), w in graph.equality.items()]
    lower, upper = [], []
    for (a, b), (lo, hi) in graph.interval.items():
        if (a, b) in graph.equality:
            continue
        if lo is not None and lo > 0:
            lower.append((index[a], index[b], lo))
        if hi is not None:
            upper.append((index[a], index[b], hi))
    prob = CompletionProblem.from_edges(len(order), graph.dim, eq, lower, upper)
    base = graph.names(Role.BASE)
    anchors = AnchorSet([index[b] for b in base], np.array([graph.fixed[b] for b in base]))
    return GraphProblem(prob, order, anchors)


def realization(graph, order, points):
    """Stack named points (e.g. from :func:`place_points`) in graph order.

    Vertices missing from ``points`` fall back to their fixed position.
    """
    rows = []
    for v in order:
        rows.append(points[v] if v in points else graph.fixed[v])
    return np.array(rows, dtype=float)
