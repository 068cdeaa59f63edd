"""EDM completion cost with equality and interval terms.

The cost is

    1/2 |Omega . (D~ - K(PP^T))|^2
  + 1/2 |max(Psi- . (D~- - K(PP^T)), 0)|^2
  + 1/2 |max(Psi+ . (K(PP^T) - D~+), 0)|^2

with both symmetric entries of every constrained pair counted. Internally it
is evaluated over the list of constrained pairs ``i < j`` (gathering point
differences and scattering per-edge terms back to vertices), so one
evaluation costs O(E K).
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from dgik.errors import ShapeMismatch


class Residuals(NamedTuple):
    equality: float
    lower: float
    upper: float

    def max(self):
        return max(self)


@dataclass(frozen=True, eq=False)
class CompletionProblem:
    """Masks and squared-distance targets defining a completion instance."""

    omega: np.ndarray
    d_tilde: np.ndarray
    psi_lower: np.ndarray
    d_lower: np.ndarray
    psi_upper: np.ndarray
    d_upper: np.ndarray
    dim: int
    _edges: dict = field(init=False, repr=False)

    def __post_init__(self):
        arrays = {}
        for name in ("omega", "d_tilde", "psi_lower", "d_lower", "psi_upper", "d_upper"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            arrays[name] = a
            object.__setattr__(self, name, a)
        n = arrays["omega"].shape[0]
        for name, a in arrays.items():
            if a.shape != (n, n):
                raise ShapeMismatch(f"{name} has shape {a.shape}, expected {(n, n)}")
        for name in ("omega", "psi_lower", "psi_upper"):
            m = arrays[name]
            if np.any((m != 0) & (m != 1)) or np.any(m != m.T) or np.any(np.diag(m)):
                raise ValueError(f"{name} must be a symmetric 0/1 mask with zero diagonal")
        om, pl, pu = (arrays[k] > 0 for k in ("omega", "psi_lower", "psi_upper"))
        if np.any(om & (pl | pu)):
            raise ValueError("a pair cannot carry both an equality and an interval constraint")
        if np.any(om & (arrays["d_tilde"] < 0)):
            raise ValueError("known squared distances must be non-negative")
        both = pl & pu
        if np.any(arrays["d_lower"][both] > arrays["d_upper"][both]):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "_edges", _edge_data(n, om, pl, pu, arrays))

    @property
    def n(self):
        return self.omega.shape[0]

    @classmethod
    def from_edges(cls, n, dim, equality=(), lower=(), upper=()):
        """Build from ``(i, j, squared_value)`` triples."""
        mats = {k: np.zeros((n, n)) for k in ("om", "dt", "pl", "dl", "pu", "du")}
        for key_m, key_d, triples in (("om", "dt", equality), ("pl", "dl", lower), ("pu", "du", upper)):
            for i, j, v in triples:
                mats[key_m][i, j] = mats[key_m][j, i] = 1.0
                mats[key_d][i, j] = mats[key_d][j, i] = v
        return cls(mats["om"], mats["dt"], mats["pl"], mats["dl"], mats["pu"], mats["du"], dim)


def _edge_data(n, om, pl, pu, arrays):
    iu, ju = np.triu_indices(n, k=1)
    sel = om[iu, ju] | pl[iu, ju] | pu[iu, ju]
    i, j = iu[sel], ju[sel]
    return {
        "n": n,
        "i": i,
        "j": j,
        "eq": om[i, j].astype(float),
        "target": arrays["d_tilde"][i, j],
        "has_lo": pl[i, j],
        "lo": arrays["d_lower"][i, j],
        "has_hi": pu[i, j],
        "hi": arrays["d_upper"][i, j],
    }


def _check(prob, P):
    P = np.asarray(P, dtype=float)
    if P.shape != (prob.n, prob.dim):
        raise ShapeMismatch(f"point matrix {P.shape} does not match problem ({prob.n}, {prob.dim})")
    return P


def _diff(e, P):
    return P[e["i"]] - P[e["j"]]


def _scatter(e, W):
    """Transpose of :func:`_diff`: add each edge row to ``i`` and subtract from ``j``."""
    n = e["n"]
    out = np.empty((n, W.shape[1]))
    for k in range(W.shape[1]):
        out[:, k] = np.bincount(e["i"], W[:, k], n) - np.bincount(e["j"], W[:, k], n)
    return out


def _terms(prob, P):
    """Per-edge differences, equality residual and violations of both bounds."""
    e = prob._edges
    diff = _diff(e, P)
    d2 = np.einsum("ij,ij->i", diff, diff)
    r_eq = e["eq"] * (e["target"] - d2)
    v_lo = np.where(e["has_lo"], np.maximum(e["lo"] - d2, 0.0), 0.0)
    v_hi = np.where(e["has_hi"], np.maximum(d2 - e["hi"], 0.0), 0.0)
    return diff, r_eq, v_lo, v_hi


def cost(prob, P):
    P = _check(prob, P)
    _, r_eq, v_lo, v_hi = _terms(prob, P)
    # 1/2 * (two symmetric entries) per pair
    return float(r_eq @ r_eq + v_lo @ v_lo + v_hi @ v_hi)


def euclidean_gradient(prob, P):
    """``4 (S - diag(S 1)) P`` with ``S`` the signed sum of active residuals."""
    P = _check(prob, P)
    diff, r_eq, v_lo, v_hi = _terms(prob, P)
    s = r_eq + v_lo - v_hi
    return -4.0 * _scatter(prob._edges, s[:, None] * diff)


def euclidean_hess_vec(prob, P, Z):
    """Directional derivative of the gradient along ``Z``.

    Interval terms use the active set frozen at ``P``: only pairs whose bound
    is violated there carry curvature. The map is linear in ``Z``.
    """
    P = _check(prob, P)
    Z = _check(prob, Z)
    e = prob._edges
    diff, r_eq, v_lo, v_hi = _terms(prob, P)
    s = r_eq + v_lo - v_hi
    active = e["eq"] + (v_lo > 0) + (v_hi > 0)
    dz = _diff(e, Z)
    ds = -2.0 * active * np.einsum("ij,ij->i", diff, dz)
    return -4.0 * _scatter(e, ds[:, None] * diff + s[:, None] * dz)


def problem_residual(prob, P):
    """Largest equality misfit and bound violations, in squared meters."""
    P = _check(prob, P)
    _, r_eq, v_lo, v_hi = _terms(prob, P)
    peak = lambda v: float(np.max(np.abs(v))) if v.size else 0.0
    return Residuals(peak(r_eq), peak(v_lo), peak(v_hi))
