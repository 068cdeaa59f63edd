"""Parametric robot models used by the benchmarks and tests."""
import numpy as np

from dgik.robot import Joint, RobotModel, rot_y


def planar_chain(dof, link=1.0, limit=None):
    """Straight serial chain in the plane; joint ``k`` sits at ``(k * link, 0)`` when flat."""
    joints = [Joint("0")]
    for k in range(1, dof + 1):
        joints.append(Joint(str(k), str(k - 1), [link, 0.0, 0.0], limit=limit))
    return RobotModel("planar", joints, [str(dof)])


def planar_tree(depth=3, link=1.0, spread=0.0, limit=None):
    """Perfect binary tree of the given depth (``2^(depth+1) - 2`` joint angles).

    With the default ``spread = 0`` both branches continue the parent link
    straight when all angles are zero, so zero is the middle of every
    symmetric limit. A nonzero spread fans the branches to ``+-spread``; such
    trees cannot carry distance-encoded limits.
    """
    joints = [Joint("r")]
    level = ["r"]
    for _ in range(depth):
        nxt = []
        for parent in level:
            for side, sign in (("a", 1.0), ("b", -1.0)):
                jid = parent + side
                a = sign * spread
                joints.append(Joint(jid, parent, [link * np.cos(a), link * np.sin(a), 0.0], limit=limit))
                nxt.append(jid)
        level = nxt
    return RobotModel("planar", joints, level)


def coplanar_chain(dof=6, link=1.0, limit=None):
    """Revolute chain whose consecutive axes alternate perpendicular and parallel.

    Odd links are a quarter turn about y with the offset running along the
    new axis, so the two axes intersect at the parent joint. Even links are
    plain offsets along x with parallel axes. Every consecutive pair of axes
    is coplanar and no joint point coincides with an axis point.
    """
    joints = [Joint("0")]
    for k in range(1, dof + 1):
        R = rot_y(np.pi / 2) if k % 2 else np.eye(3)
        joints.append(Joint(str(k), str(k - 1), [link, 0.0, 0.0], R, limit=limit))
    return RobotModel("revolute3d", joints, [str(dof)])


def spherical_chain(n_links, link=1.0, limit=None):
    joints = [Joint("0")]
    for k in range(1, n_links + 1):
        joints.append(Joint(str(k), str(k - 1), [0.0, 0.0, link], limit=limit))
    return RobotModel("spherical", joints, [str(n_links)])
