"""Geometry of the quotient of full-rank ``N x K`` matrices by O(K).

Tangent vectors are plain ``(N, K)`` arrays attached to a base point ``P``.
The metric is the Euclidean one, vertical directions are ``P @ Q`` for
skew-symmetric ``Q`` and horizontal vectors satisfy ``Z^T P = P^T Z``.
"""
import numpy as np

from dgik.errors import RankDeficientBase, ShapeMismatch

RANK_TOL = 1e-10


def _check_shapes(*arrays):
    shape = np.shape(arrays[0])
    for a in arrays[1:]:
        if np.shape(a) != shape:
            raise ShapeMismatch(f"shapes {shape} and {np.shape(a)} differ")


def metric(P, Z1, Z2):
    _check_shapes(P, Z1, Z2)
    return float(np.sum(Z1 * Z2))


def norm(P, Z):
    return np.sqrt(metric(P, Z, Z))


def _gram_eig(P):
    lam, V = np.linalg.eigh(P.T @ P)
    if lam[0] <= RANK_TOL**2:
        smin = np.sqrt(max(lam[0], 0.0))
        raise RankDeficientBase(f"sigma_min(P) = {smin:.3e}")
    return lam, V


def _sylvester_skew(P, Z, eig=None):
    """Skew ``C`` solving ``C P^T P + P^T P C = P^T Z - Z^T P``.

    Diagonalizing ``P^T P = V diag(lam) V^T`` decouples the system entrywise.
    """
    lam, V = eig if eig is not None else _gram_eig(P)
    M = P.T @ Z
    rhs = V.T @ (M - M.T) @ V
    C = V @ (rhs / (lam[:, None] + lam[None, :])) @ V.T
    return 0.5 * (C - C.T)


def projector(P):
    """Horizontal projection at a fixed ``P``, reusing one eigendecomposition."""
    P = np.asarray(P, dtype=float)
    eig = _gram_eig(P)
    return lambda Z: Z - P @ _sylvester_skew(P, Z, eig)


def horizontal_project(P, Z):
    """Horizontal component ``Z - P C`` of a tangent vector."""
    P = np.asarray(P, dtype=float)
    Z = np.asarray(Z, dtype=float)
    _check_shapes(P, Z)
    return Z - P @ _sylvester_skew(P, Z)


def retract(P, W):
    _check_shapes(P, W)
    return np.asarray(P, dtype=float) + np.asarray(W, dtype=float)


def riemannian_gradient(P, egrad):
    return horizontal_project(P, egrad)


def riemannian_hess_vec(P, Z, egrad, ehess_z):
    """Riemannian Hessian applied to a horizontal ``Z``.

    Differentiating ``grad = G - P C(G)`` along ``Z`` gives
    ``ehess_z - Z C(G) - P dC``; the last term is vertical and drops out
    under projection. ``ehess_z`` is the Euclidean Hessian-vector product at
    ``(P, Z)`` or a callable producing it.
    """
    P = np.asarray(P, dtype=float)
    if callable(ehess_z):
        ehess_z = ehess_z(Z)
    C = _sylvester_skew(P, egrad)
    return horizontal_project(P, ehess_z - Z @ C)


def is_horizontal(P, Z, rtol=1e-9):
    M = Z.T @ P
    return np.linalg.norm(M - M.T) <= rtol * (1.0 + np.linalg.norm(M))
