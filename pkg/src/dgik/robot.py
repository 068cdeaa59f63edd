"""Kinematic tree models, forward kinematics and joint-angle recovery.

Each joint record stores the fixed offset ``translation`` and ``rotation`` of
its frame relative to the parent frame, and carries the angle of the parent
rotation that positions it::

    R_v = R_u Rz(theta_v) R_uv
    p_v = p_u + R_u Rz(theta_v) p_uv

For a serial chain this is the usual one-angle-per-joint recursion, with the
angle stored on the child record. In a tree every branch owns its angle. The
root frame is the identity at the origin and carries no angle.

``planar`` models live in the xy-plane (K = 2) with one point per joint.
``spherical`` models have one point per joint and two angles per link,
azimuth and elevation, with ``R_w = R_v Rz(az) Ry(el)`` and the link running
along the local z axis; elevation 0 continues the parent link straight.
"""
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from dgik.errors import DegenerateGeometry, InvalidModel, LengthMismatch

KINDS = ("revolute3d", "planar", "spherical")
Z_AXIS = np.array([0.0, 0.0, 1.0])


def rot_z(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_x(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def wrap_angle(t):
    """Map angles to (-pi, pi]."""
    t = np.remainder(np.asarray(t, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(t == -np.pi, np.pi, t)


@dataclass(frozen=True)
class Joint:
    id: str
    parent: Optional[str] = None
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    limit: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        if self.limit is not None:
            object.__setattr__(self, "limit", float(self.limit))


@dataclass(frozen=True)
class RobotModel:
    kind: str
    joints: tuple
    end_effectors: tuple

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "end_effectors", tuple(self.end_effectors))
        self._validate()

    def _validate(self):
        if self.kind not in KINDS:
            raise InvalidModel(f"unknown model kind {self.kind!r}")
        ids = [j.id for j in self.joints]
        if len(set(ids)) != len(ids):
            raise InvalidModel("duplicate joint ids")
        roots = [j for j in self.joints if j.parent is None]
        if len(roots) != 1:
            raise InvalidModel(f"expected exactly one root, found {len(roots)}")
        for j in self.joints:
            if j.parent is not None and j.parent not in ids:
                raise InvalidModel(f"joint {j.id!r} has unknown parent {j.parent!r}")
            R = j.rotation
            if not np.allclose(R.T @ R, np.eye(3), atol=1e-9) or abs(np.linalg.det(R) - 1.0) > 1e-9:
                raise InvalidModel(f"rotation of joint {j.id!r} is not a proper rotation")
            if j.limit is not None and not 0.0 < j.limit <= np.pi:
                raise InvalidModel(f"limit of joint {j.id!r} must lie in (0, pi]")
            if self.kind == "planar" and j.parent is not None:
                if abs(j.translation[2]) > 1e-12 or not np.allclose(R[2], Z_AXIS, atol=1e-9):
                    raise InvalidModel(f"planar joint {j.id!r} leaves the xy-plane")
            if self.kind == "spherical" and j.parent is not None:
                t = j.translation
                if np.linalg.norm(t[:2]) > 1e-12 or t[2] <= 0 or not np.allclose(R, np.eye(3)):
                    raise InvalidModel(f"spherical link {j.id!r} must be a positive offset along z")
        if len(self.order) != len(self.joints):
            raise InvalidModel("joint graph is not a tree rooted at the base")
        for e in self.end_effectors:
            if e not in ids:
                raise InvalidModel(f"unknown end-effector {e!r}")

    # -- structure --------------------------------------------------------
    @property
    def dim(self):
        return 2 if self.kind == "planar" else 3

    @property
    def root(self):
        return next(j.id for j in self.joints if j.parent is None)

    def joint(self, jid):
        return self._by_id[jid]

    @property
    def _by_id(self):
        return {j.id: j for j in self.joints}

    def children(self, jid):
        return [j.id for j in self.joints if j.parent == jid]

    @property
    def order(self):
        """Joint ids in breadth-first order from the root."""
        out, queue, seen = [], deque([self.root]), set()
        while queue:
            jid = queue.popleft()
            if jid in seen:
                break
            seen.add(jid)
            out.append(jid)
            queue.extend(self.children(jid))
        return out

    @property
    def actuated(self):
        """Ids of joints that carry an angle (every non-root joint), BFS order."""
        return self.order[1:]

    @property
    def n_angles(self):
        per = 2 if self.kind == "spherical" else 1
        return per * len(self.actuated)

    def zero_configuration(self):
        return np.zeros(self.n_angles)

    def limits(self):
        """Per-angle symmetric limit (``inf`` when unlimited), aligned with theta.

        Spherical azimuths are never limited; the limit applies to elevation.
        """
        out = []
        for jid in self.actuated:
            lim = self.joint(jid).limit
            lim = np.inf if lim is None else lim
            out.extend([np.inf, lim] if self.kind == "spherical" else [lim])
        return np.array(out)

    # -- serialization ----------------------------------------------------
    @classmethod
    def from_dict(cls, data):
        kind = data.get("kind", "revolute3d")
        dim = data.get("dim", 2 if kind == "planar" else 3)
        if dim != (2 if kind == "planar" else 3):
            raise InvalidModel(f"dim {dim} inconsistent with kind {kind!r}")
        joints = []
        for j in data["joints"]:
            rpy = j.get("rotation_rpy", [0.0, 0.0, 0.0])
            t = list(j.get("translation", [0.0, 0.0, 0.0]))
            t = t + [0.0] * (3 - len(t))
            parent = j.get("parent")
            joints.append(
                Joint(
                    id=str(j["id"]),
                    parent=None if parent is None else str(parent),
                    translation=t,
                    rotation=Rotation.from_euler("xyz", rpy).as_matrix(),
                    limit=j.get("limit"),
                )
            )
        return cls(kind, joints, [str(e) for e in data["end_effectors"]])

    def to_dict(self):
        return {
            "dim": self.dim,
            "kind": self.kind,
            "joints": [
                {
                    "id": j.id,
                    "parent": j.parent,
                    "translation": j.translation.tolist(),
                    "rotation_rpy": Rotation.from_matrix(j.rotation).as_euler("xyz").tolist(),
                    "limit": j.limit,
                }
                for j in self.joints
            ],
            "end_effectors": list(self.end_effectors),
        }

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# -- point names shared with the graph builder -----------------------------
BASE_NAMES = ("o", "x", "y", "z")


def base_names(dim):
    return BASE_NAMES[: dim + 1]


def base_positions(dim):
    pts = {"o": np.zeros(dim)}
    for k, name in enumerate(BASE_NAMES[1 : dim + 1]):
        pts[name] = np.eye(dim)[k]
    return pts


def point_name(jid):
    return f"p:{jid}"


def aux_name(jid):
    return f"q:{jid}"


# -- forward kinematics -----------------------------------------------------
def _angles_by_joint(model, theta):
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != model.n_angles:
        raise LengthMismatch(f"expected {model.n_angles} angles, got {theta.size}")
    if model.kind == "spherical":
        return {jid: (theta[2 * k], theta[2 * k + 1]) for k, jid in enumerate(model.actuated)}
    return {jid: theta[k] for k, jid in enumerate(model.actuated)}


def forward_kinematics(model, theta):
    """World frame ``(position, rotation)`` of every joint, keyed by id."""
    angles = _angles_by_joint(model, theta)
    frames = {model.root: (np.zeros(3), np.eye(3))}
    for jid in model.actuated:
        j = model.joint(jid)
        p_u, R_u = frames[j.parent]
        if model.kind == "spherical":
            az, el = angles[jid]
            R_v = R_u @ rot_z(az) @ rot_y(el)
            frames[jid] = (p_u + R_v @ j.translation, R_v)
        else:
            R_rot = R_u @ rot_z(angles[jid])
            frames[jid] = (p_u + R_rot @ j.translation, R_rot @ j.rotation)
    return frames


def place_points(model, theta):
    """Named points of the distance model: base frame first, then joints.

    Revolute joints get a second point one unit along their axis; planar and
    spherical joints are represented by a single point.
    """
    frames = forward_kinematics(model, theta)
    k = model.dim
    pts = base_positions(k)
    for jid in model.order:
        p, R = frames[jid]
        pts[point_name(jid)] = p[:k].copy()
        if model.kind == "revolute3d":
            pts[aux_name(jid)] = p + R @ Z_AXIS
    return pts


def structure_points(model, points):
    """Names of joint and auxiliary points present in ``points``."""
    names = []
    for jid in model.order:
        names.append(point_name(jid))
        if model.kind == "revolute3d":
            names.append(aux_name(jid))
    return [n for n in names if n in points]


# -- angle recovery ---------------------------------------------------------
def _as3(v):
    v = np.asarray(v, dtype=float)
    return np.concatenate([v, np.zeros(3 - v.size)]) if v.size < 3 else v


def recover_angles(model, points):
    """Joint angles of a realization expressed in the base frame.

    For a revolute joint the angle minimizes the summed squared misfit of the
    child point and (in 3D) the child axis point. Both terms are of the form
    ``|R_u Rz(t) a - b|^2``, so the minimizer is an ``atan2`` of the summed
    planar cross and dot products of the ``a`` and ``R_u^T b`` pairs.
    """
    frames = {model.root: (_as3(points[point_name(model.root)]), np.eye(3))}
    out = {}
    for jid in model.actuated:
        j = model.joint(jid)
        p_u, R_u = frames[j.parent]
        p_v = _as3(points[point_name(jid)])
        if model.kind == "spherical":
            d = R_u.T @ (p_v - p_u)
            if np.linalg.norm(d) < 1e-12:
                raise DegenerateGeometry(f"link to {jid!r} has zero length")
            az = np.arctan2(d[1], d[0])
            el = np.arctan2(np.hypot(d[0], d[1]), d[2])
            out[jid] = (az, el)
            frames[jid] = (p_v, R_u @ rot_z(az) @ rot_y(el))
            continue
        pairs = [(j.translation, R_u.T @ (p_v - p_u))]
        if model.kind == "revolute3d":
            a2 = j.translation + j.rotation @ Z_AXIS
            pairs.append((a2, R_u.T @ (_as3(points[aux_name(jid)]) - p_u)))
        sin_c = sum(a[0] * b[1] - a[1] * b[0] for a, b in pairs)
        cos_c = sum(a[0] * b[0] + a[1] * b[1] for a, b in pairs)
        scale = sum(np.linalg.norm(a) * np.linalg.norm(b) for a, b in pairs)
        if np.hypot(sin_c, cos_c) <= 1e-12 * max(scale, 1.0):
            raise DegenerateGeometry(f"angle of joint {jid!r} is unobservable (offset along the axis)")
        t = np.arctan2(sin_c, cos_c)
        out[jid] = t
        frames[jid] = (p_v, R_u @ rot_z(t) @ j.rotation)
    if model.kind == "spherical":
        flat = [a for jid in model.actuated for a in out[jid]]
    else:
        flat = [out[jid] for jid in model.actuated]
    return wrap_angle(np.array(flat))


def check_coplanarity(model, rtol=1e-9):
    """Check that consecutive joint axes are coplanar.

    Returns ``(ok, offending)`` where ``offending`` lists ``(parent, child)``
    pairs whose four axis points ``u, u~, v, v~`` span a volume.
    """
    if model.kind != "revolute3d":
        return True, []
    bad = []
    for jid in model.actuated:
        j = model.joint(jid)
        # in the parent frame: u = 0, u~ = z, v = t, v~ = t + R z
        t, a = j.translation, j.rotation @ Z_AXIS
        triple = Z_AXIS @ np.cross(t, a)
        if abs(triple) > rtol * max(1.0, np.linalg.norm(t)):
            bad.append((j.parent, jid))
    return not bad, bad
