"""Triangle-inequality bound smoothing and pre-EDM initialization.

Bounds are propagated on plain distances over a doubled directed graph. Two
copies of the vertex set are linked within each copy by the upper bounds and
from the first copy to the second by negated lower bounds. A shortest path
inside one copy bounds a distance from above; a path that crosses once
(``u(i..k) - l(k, m) + u(m..j)``) bounds it from below.
"""
from dataclasses import dataclass

import numpy as np

from dgik.edm import gram_from_edm, points_from_gram
from dgik.errors import DisconnectedGraph, NegativeCycleError
from dgik.graph import vertex_order

CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class BoundsMatrix:
    """Plain-distance bounds on every vertex pair, rows in ``order``."""

    lower: np.ndarray
    upper: np.ndarray
    order: tuple = ()


def _plain(d2):
    return None if d2 is None else float(np.sqrt(max(d2, 0.0)))


def edge_bounds(graph, order=None):
    """Direct (unsmoothed) plain-distance bounds from the graph edges.

    Unconstrained pairs get ``[0, inf]``.
    """
    order = list(order) if order is not None else vertex_order(graph)
    index = {v: i for i, v in enumerate(order)}
    n = len(order)
    lower = np.zeros((n, n))
    upper = np.full((n, n), np.inf)
    np.fill_diagonal(upper, 0.0)
    for (a, b), (lo, hi) in graph.interval.items():
        i, j = index[a], index[b]
        if lo is not None:
            lower[i, j] = lower[j, i] = max(lower[i, j], _plain(lo))
        if hi is not None:
            upper[i, j] = upper[j, i] = min(upper[i, j], _plain(hi))
    for (a, b), w in graph.equality.items():
        i, j = index[a], index[b]
        lower[i, j] = lower[j, i] = upper[i, j] = upper[j, i] = _plain(w)
    return lower, upper, order


def floyd_warshall(W):
    """All-pairs shortest path lengths for a dense weight matrix (``inf`` = no edge)."""
    D = np.array(W, dtype=float)
    for k in range(D.shape[0]):
        np.minimum(D, D[:, k, None] + D[None, k, :], out=D)
    return D


def smooth_matrices(lower, upper, iterations=1, tol=CONSISTENCY_TOL):
    """Smooth a pair of plain-distance bound matrices.

    Raises :class:`DisconnectedGraph` if some distance stays unbounded and
    :class:`NegativeCycleError` if the constraints contradict each other
    (a propagated lower bound above the matching upper bound).
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.shape[0]
    for _ in range(max(1, iterations)):
        W = np.full((2 * n, 2 * n), np.inf)
        W[:n, :n] = upper
        W[n:, n:] = upper
        W[:n, n:] = -lower
        np.fill_diagonal(W, 0.0)
        D = floyd_warshall(W)
        if np.any(np.diag(D) < -tol):
            raise NegativeCycleError("distance constraints admit a negative cycle")
        new_upper = np.minimum(D[:n, :n], upper)
        cross = D[:n, n:]
        new_lower = np.maximum(np.maximum(-np.minimum(cross, cross.T), 0.0), lower)
        np.fill_diagonal(new_lower, 0.0)
        if np.any(~np.isfinite(new_upper)):
            raise DisconnectedGraph("some vertices are not linked by any chain of upper bounds")
        if np.any(new_lower > new_upper + tol):
            i, j = np.unravel_index(np.argmax(new_lower - new_upper), new_lower.shape)
            raise NegativeCycleError(
                f"inconsistent bounds on pair ({i}, {j}): lower {new_lower[i, j]:.6g} > upper {new_upper[i, j]:.6g}"
            )
        converged = np.array_equal(new_lower, lower) and np.array_equal(new_upper, upper)
        lower, upper = new_lower, new_upper
        if converged:
            break
    # consistent within tol; clip rounding so the invariant lower <= upper holds exactly
    lower = np.minimum(lower, upper)
    return lower, upper


def smooth_bounds(graph, iterations=1):
    lower, upper, order = edge_bounds(graph)
    lower, upper = smooth_matrices(lower, upper, iterations)
    return BoundsMatrix(lower, upper, tuple(order))


def sample_pre_edm(bounds, seed=None):
    """Squared distances drawn uniformly and independently within the bounds."""
    rng = np.random.default_rng(seed)
    lo, hi = bounds.lower, bounds.upper
    n = lo.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    d = rng.uniform(lo[iu, ju], hi[iu, ju])
    D = np.zeros((n, n))
    D[iu, ju] = d * d
    return D + D.T


def initial_points(pre_edm, dim):
    return points_from_gram(gram_from_edm(pre_edm), dim)
