"""Riemannian trust-region minimization with a truncated CG inner solver.

The solver is written against a small objective protocol:

* ``cost(P) -> float``
* ``gradient(P) -> ndarray`` (Riemannian gradient, horizontal at ``P``)
* ``hessian(P) -> callable`` mapping a horizontal ``Z`` to ``Hess[Z]``

:class:`CompletionObjective` implements it for a :class:`CompletionProblem`;
anything else with the same three methods (e.g. a synthetic quadratic) can be
passed to :func:`solve` as well.
"""
import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from dgik import manifold
from dgik.cost import CompletionProblem, cost, euclidean_gradient, euclidean_hess_vec
from dgik.errors import DegenerateModelDecrease, RankDeficientBase

log = logging.getLogger(__name__)

RADIUS_FLOOR = 1e-14
# Regularization of the acceptance ratio, relative to |cost|. Keeps the ratio
# meaningful once cost differences reach rounding level. The completion cost
# is a sum of squares with minimum 0, so no absolute floor is used.
RHO_REGULARIZATION = 1e3 * np.finfo(float).eps


class Termination(str, enum.Enum):
    GRADIENT_TOLERANCE = "GradientTolerance"
    MAX_ITERATIONS = "MaxIterations"
    RADIUS_COLLAPSE = "RadiusCollapse"
    ILL_CONDITIONED = "IllConditioned"


class TcgStop(enum.Enum):
    NEGATIVE_CURVATURE = "negative curvature"
    EXCEEDED_RADIUS = "exceeded trust region"
    RESIDUAL = "reached residual target"
    MODEL_INCREASED = "model increased"
    MAX_INNER = "maximum inner iterations"
    ZERO_GRADIENT = "zero gradient"


@dataclass(frozen=True)
class RtrParams:
    """Trust-region parameters. ``None`` fields are sized from the problem."""

    delta_bar: Optional[float] = None
    delta0: Optional[float] = None
    rho_prime: float = 0.1
    max_iters: int = 2000
    grad_tol: float = 1e-9
    tcg_max_iters: Optional[int] = None
    tcg_kappa: float = 0.1
    tcg_theta: float = 1.0

    def resolved(self, n, k):
        delta_bar = self.delta_bar if self.delta_bar is not None else math.sqrt(n * k)
        delta0 = self.delta0 if self.delta0 is not None else delta_bar / 8.0
        inner = self.tcg_max_iters if self.tcg_max_iters is not None else 2 * n * k
        out = replace(self, delta_bar=delta_bar, delta0=delta0, tcg_max_iters=inner)
        out.validate()
        return out

    def validate(self):
        if not (self.delta_bar > 0 and 0 < self.delta0 <= self.delta_bar):
            raise ValueError("need 0 < delta0 <= delta_bar")
        if not 0 <= self.rho_prime < 0.25:
            raise ValueError("rho_prime must lie in [0, 1/4)")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 0 or self.tcg_max_iters < 1:
            raise ValueError("iteration caps must be positive")


@dataclass
class RtrResult:
    point: np.ndarray
    cost: float
    grad_norm: float
    iterations: int
    termination: Termination
    cost_history: list


class CompletionObjective:
    """Quotient-manifold derivatives of the completion cost."""

    def __init__(self, prob: CompletionProblem):
        self.prob = prob

    def cost(self, P):
        return cost(self.prob, P)

    def gradient(self, P):
        return manifold.riemannian_gradient(P, euclidean_gradient(self.prob, P))

    def hessian(self, P):
        egrad = euclidean_gradient(self.prob, P)
        project = manifold.projector(P)
        C = manifold._sylvester_skew(P, egrad)

        def hess(Z):
            return project(euclidean_hess_vec(self.prob, P, Z) - Z @ C)

        return hess


def _objective(obj):
    return CompletionObjective(obj) if isinstance(obj, CompletionProblem) else obj


def _inner(a, b):
    return float(np.dot(a.ravel(), b.ravel()))


def model_value(obj, P, Z):
    """Second-order model ``phi + <grad, Z> + <Z, Hess[Z]> / 2``."""
    obj = _objective(obj)
    g = obj.gradient(P)
    hz = obj.hessian(P)(Z)
    return obj.cost(P) + _inner(g, Z) + 0.5 * _inner(Z, hz)


def _truncated_cg(grad, hess, radius, max_iters, kappa, theta):
    """Steihaug-Toint CG on ``min <g,Z> + <Z,H Z>/2`` s.t. ``|Z| <= radius``.

    Returns ``(Z, HZ, stop)``.
    """
    eta = np.zeros_like(grad)
    h_eta = np.zeros_like(grad)
    r = grad.copy()
    r_r = _inner(r, r)
    r0 = math.sqrt(r_r)
    if r0 == 0.0:
        return eta, h_eta, TcgStop.ZERO_GRADIENT
    delta = -r
    model = 0.0
    stop = TcgStop.MAX_INNER
    radius2 = radius * radius
    for _ in range(max_iters):
        h_delta = hess(delta)
        d_hd = _inner(delta, h_delta)
        e_pe = _inner(eta, eta)
        e_pd = _inner(eta, delta)
        d_pd = _inner(delta, delta)
        alpha = r_r / d_hd if d_hd > 0 else math.inf
        if d_hd <= 0 or e_pe + 2 * alpha * e_pd + alpha * alpha * d_pd >= radius2:
            tau = (-e_pd + math.sqrt(max(e_pd * e_pd + d_pd * (radius2 - e_pe), 0.0))) / d_pd
            eta = eta + tau * delta
            h_eta = h_eta + tau * h_delta
            stop = TcgStop.NEGATIVE_CURVATURE if d_hd <= 0 else TcgStop.EXCEEDED_RADIUS
            break
        new_eta = eta + alpha * delta
        new_h_eta = h_eta + alpha * h_delta
        new_model = _inner(new_eta, grad) + 0.5 * _inner(new_eta, new_h_eta)
        if new_model >= model:
            stop = TcgStop.MODEL_INCREASED
            break
        eta, h_eta, model = new_eta, new_h_eta, new_model
        r = r + alpha * h_delta
        r_r_new = _inner(r, r)
        if math.sqrt(r_r_new) <= r0 * min(r0**theta, kappa):
            stop = TcgStop.RESIDUAL
            break
        beta = r_r_new / r_r
        r_r = r_r_new
        delta = -r + beta * delta
    return eta, h_eta, stop


def tcg_solve(obj, P, radius, params=RtrParams()):
    """Approximate trust-region step at ``P`` for the given radius."""
    obj = _objective(obj)
    P = np.asarray(P, dtype=float)
    if radius <= 0:
        raise ValueError("radius must be positive")
    params = params.resolved(*P.shape) if params.tcg_max_iters is None else params
    Z, _, _ = _truncated_cg(
        obj.gradient(P), obj.hessian(P), radius, params.tcg_max_iters, params.tcg_kappa, params.tcg_theta
    )
    return Z


def _ratio(f_old, f_new, predicted):
    if predicted <= 0.0:
        raise DegenerateModelDecrease(f"predicted decrease {predicted:.3e}")
    reg = RHO_REGULARIZATION * abs(f_old)
    return (f_old - f_new + reg) / (predicted + reg)


def rho_ratio(obj, P, Z):
    """Actual over predicted decrease for the step ``Z`` at ``P``.

    Raises :class:`DegenerateModelDecrease` when the model predicts no
    decrease; :func:`solve` treats that as a rejected step.
    """
    obj = _objective(obj)
    f = obj.cost(P)
    g = obj.gradient(P)
    hz = obj.hessian(P)(Z)
    predicted = -(_inner(g, Z) + 0.5 * _inner(Z, hz))
    return _ratio(f, obj.cost(manifold.retract(P, Z)), predicted)


def _perturb(P):
    rng = np.random.default_rng(0)
    scale = 1e-8 * max(1.0, float(np.max(np.abs(P))))
    return P + scale * rng.standard_normal(P.shape)


def _full_rank(P):
    return np.linalg.svd(P, compute_uv=False)[-1] > manifold.RANK_TOL


def solve(obj, P0, params=RtrParams()):
    """Minimize ``obj`` from ``P0`` with the Riemannian trust-region method.

    The radius is quartered when the ratio drops below 1/4 and doubled (up to
    ``delta_bar``) when it exceeds 3/4 on a boundary step. A step is accepted
    when the ratio exceeds ``rho_prime`` and the cost does not increase; a
    rejected step always shrinks the radius.
    """
    obj = _objective(obj)
    P = np.array(P0, dtype=float)
    params = params.resolved(*P.shape)
    perturbed = False
    if not _full_rank(P):
        P, perturbed = _perturb(P), True

    f = obj.cost(P)
    try:
        g = obj.gradient(P)
    except RankDeficientBase:
        if perturbed:
            return RtrResult(P, f, math.nan, 0, Termination.ILL_CONDITIONED, [f])
        P, perturbed = _perturb(P), True
        f, g = obj.cost(P), obj.gradient(P)
    gn = math.sqrt(_inner(g, g))
    radius = params.delta0
    history = [f]
    termination = Termination.MAX_ITERATIONS
    k = 0
    while True:
        if gn <= params.grad_tol:
            termination = Termination.GRADIENT_TOLERANCE
            break
        if radius < RADIUS_FLOOR:
            termination = Termination.RADIUS_COLLAPSE
            break
        if k >= params.max_iters:
            break
        k += 1
        try:
            hess = obj.hessian(P)
        except RankDeficientBase:
            if perturbed:
                termination = Termination.ILL_CONDITIONED
                break
            P, perturbed = _perturb(P), True
            f, g = obj.cost(P), obj.gradient(P)
            gn = math.sqrt(_inner(g, g))
            continue
        Z, hz, stop = _truncated_cg(g, hess, radius, params.tcg_max_iters, params.tcg_kappa, params.tcg_theta)
        predicted = -(_inner(g, Z) + 0.5 * _inner(Z, hz))
        P_new = P + Z
        f_new = obj.cost(P_new)
        try:
            rho = _ratio(f, f_new, predicted)
        except DegenerateModelDecrease:
            rho = -math.inf
        on_boundary = stop in (TcgStop.NEGATIVE_CURVATURE, TcgStop.EXCEEDED_RADIUS)
        accept = rho > params.rho_prime and f_new <= f
        if rho < 0.25 or not accept:
            radius /= 4.0
        elif rho > 0.75 and on_boundary:
            radius = min(2.0 * radius, params.delta_bar)
        if accept:
            try:
                g_new = obj.gradient(P_new)
            except RankDeficientBase:
                # reject a step that lands on a rank-deficient point
                radius /= 4.0
                continue
            P, f, g = P_new, f_new, g_new
            gn = math.sqrt(_inner(g, g))
            history.append(f)
        log.debug("iter %d cost %.3e |grad| %.3e rho %.3f radius %.3e (%s)", k, f, gn, rho, radius, stop.value)
    return RtrResult(P, f, gn, k, termination, history)
