"""Point sets, Gram matrices and Euclidean distance matrices.

Every distance matrix in this package holds *squared* distances. Points are
stored row-wise in an ``(N, K)`` array.
"""
from dataclasses import dataclass

import numpy as np

from dgik.errors import DegenerateAnchors, ShapeMismatch


@dataclass(frozen=True)
class AnchorSet:
    """Vertices with prescribed coordinates, used to fix the rigid-motion gauge."""

    indices: tuple
    targets: np.ndarray

    def __post_init__(self):
        targets = np.asarray(self.targets, dtype=float)
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "targets", targets)
        if targets.ndim != 2 or targets.shape[0] != len(self.indices):
            raise ShapeMismatch("anchor targets must be |indices| x K")
        k = targets.shape[1]
        if len(self.indices) < k + 1:
            raise DegenerateAnchors(f"need at least {k + 1} anchors in {k}D, got {len(self.indices)}")
        if _centered_rank(targets) < k:
            raise DegenerateAnchors("anchor targets do not affinely span the space")


def _centered_rank(A, rtol=1e-9):
    A = A - A.mean(axis=0)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def gram_from_points(P):
    P = np.asarray(P, dtype=float)
    return P @ P.T


def edm_from_gram(X):
    """Squared-distance matrix ``diag(X) 1^T + 1 diag(X)^T - 2 X``.

    The result is symmetrized and its diagonal zeroed so that both properties
    hold bit-exactly.
    """
    X = np.asarray(X, dtype=float)
    dg = np.diag(X)
    D = dg[:, None] + dg[None, :] - 2.0 * X
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def edm_from_points(P):
    return edm_from_gram(gram_from_points(P))


def gram_from_edm(D):
    """Centered Gram matrix ``-J D J / 2`` with ``J = I - 11^T / N``.

    Non-EDM input gives an indefinite matrix; it is returned as is and any
    negative spectrum is clamped later by :func:`points_from_gram`.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    # J D J computed as double centering; avoids forming J.
    row = D.mean(axis=1)
    col = D.mean(axis=0)
    X = -0.5 * (D - row[:, None] - col[None, :] + D.mean())
    return 0.5 * (X + X.T)


def points_from_gram(X, dim):
    """Rank-``dim`` factor of ``X`` from its leading eigenpairs.

    Eigenvalues are sorted in descending order and clamped at zero, so the
    output always has ``dim`` columns even when ``X`` has fewer positive
    eigenvalues. The factor is unique only up to an orthogonal ``dim x dim``
    transform on the right.
    """
    X = np.asarray(X, dtype=float)
    X = 0.5 * (X + X.T)
    n = X.shape[0]
    w, U = np.linalg.eigh(X)
    order = np.argsort(w)[::-1][:dim]
    w = np.clip(w[order], 0.0, None)
    P = U[:, order] * np.sqrt(w)[None, :]
    if P.shape[1] < dim:
        P = np.hstack([P, np.zeros((n, dim - P.shape[1]))])
    return P


def procrustes_transform(source, target, allow_reflection=True):
    """Least-squares rigid map ``target ~ R @ source + t`` over matched rows.

    Returns ``(R, t, residual)`` where ``residual`` is the root of the summed
    squared misfit. With ``allow_reflection`` the rotation is sought in O(K),
    otherwise in SO(K).
    """
    A = np.asarray(source, dtype=float)
    B = np.asarray(target, dtype=float)
    if A.shape != B.shape:
        raise ShapeMismatch(f"source {A.shape} and target {B.shape} differ")
    k = A.shape[1]
    if _centered_rank(A) < k or _centered_rank(B) < k:
        raise DegenerateAnchors("centered anchors are rank deficient")
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    H = (A - ca).T @ (B - cb)
    U, _, Vt = np.linalg.svd(H)
    S = np.eye(k)
    if not allow_reflection and np.linalg.det(Vt.T @ U.T) < 0:
        S[-1, -1] = -1.0
    R = Vt.T @ S @ U.T
    t = cb - R @ ca
    residual = float(np.linalg.norm(A @ R.T + t - B))
    return R, t, residual


def procrustes_align(P, anchors, allow_reflection=True):
    """Move all rows of ``P`` by the rigid map that best puts anchors on target."""
    P = np.asarray(P, dtype=float)
    if P.shape[1] != anchors.targets.shape[1]:
        raise ShapeMismatch("point and anchor dimensions differ")
    R, t, _ = procrustes_transform(P[list(anchors.indices)], anchors.targets, allow_reflection)
    return P @ R.T + t
