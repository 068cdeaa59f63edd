import numpy as np
import pytest

from dgik import manifold
from dgik.errors import RankDeficientBase, ShapeMismatch


def _skew(rng, k):
    A = rng.standard_normal((k, k))
    return A - A.T


def test_metric_examples(rng):
    ones = np.ones((2, 2))
    assert manifold.metric(ones, ones, ones) == 4.0
    assert manifold.metric(ones, ones, np.zeros((2, 2))) == 0.0
    P, Z1, Z2 = rng.standard_normal((3, 6, 3))
    oracle = sum(Z1[i, j] * Z2[i, j] for i in range(6) for j in range(3))
    assert manifold.metric(P, Z1, Z2) == pytest.approx(oracle, rel=1e-14)
    with pytest.raises(ShapeMismatch):
        manifold.metric(P, Z1, Z2[:2])


def test_vertical_vectors_project_to_zero(rng):
    P = rng.standard_normal((7, 3))
    Z = P @ _skew(rng, 3)
    assert np.linalg.norm(manifold.horizontal_project(P, Z)) <= 1e-10


def test_projection_fixes_horizontal_vectors(rng):
    P = rng.standard_normal((7, 3))
    S = rng.standard_normal((3, 3))
    # Z = P (P^T P)^-1 S_sym gives Z^T P symmetric
    Z = P @ np.linalg.solve(P.T @ P, S + S.T)
    assert manifold.is_horizontal(P, Z)
    assert np.allclose(manifold.horizontal_project(P, Z), Z, atol=1e-12)


def test_projection_is_idempotent_and_horizontal(rng):
    for _ in range(10):
        P = rng.standard_normal((9, 2))
        Z = rng.standard_normal((9, 2))
        H = manifold.horizontal_project(P, Z)
        M = H.T @ P
        assert np.linalg.norm(M - M.T) <= 1e-9 * (1 + np.linalg.norm(M))
        assert np.allclose(manifold.horizontal_project(P, H), H, atol=1e-10)
        # orthogonal to every vertical direction
        for _ in range(3):
            V = P @ _skew(rng, 2)
            assert abs(manifold.metric(P, H, V)) <= 1e-9 * np.linalg.norm(H) * np.linalg.norm(V)


def test_projection_rejects_rank_deficient_base():
    P = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(RankDeficientBase):
        manifold.horizontal_project(P, np.ones((3, 2)))


def test_retract_examples(rng):
    P = np.eye(2)
    assert np.array_equal(manifold.retract(P, np.zeros((2, 2))), P)
    assert np.allclose(manifold.retract(P, 0.1 * np.eye(2)), [[1.1, 0.0], [0.0, 1.1]])
    P = rng.standard_normal((6, 3))
    W = rng.standard_normal((6, 3))
    W *= 0.1 * np.linalg.svd(P, compute_uv=False)[-1] / np.linalg.norm(W)
    assert np.linalg.matrix_rank(manifold.retract(P, W)) == 3


def test_riemannian_hessian_of_quadratic(rng):
    # f(P) = <A, P> + |P|^2 / 2 has Euclidean Hessian identity
    P = rng.standard_normal((5, 2))
    A = rng.standard_normal((5, 2))
    egrad = A + P
    Z = manifold.horizontal_project(P, rng.standard_normal((5, 2)))
    H = manifold.riemannian_hess_vec(P, Z, egrad, Z)
    C = manifold._sylvester_skew(P, egrad)
    assert np.allclose(H, manifold.horizontal_project(P, Z - Z @ C), atol=1e-12)
    assert np.allclose(manifold.riemannian_hess_vec(P, Z, egrad, lambda v: v), H)
