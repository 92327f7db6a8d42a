"""Riemannian conjugate gradient over the product of complex unit circles.

The phase objectives are smooth functions of the effective gains; each one
returns its value and ``dJ/dG`` so the layered chain rule lives in one place
(:class:`PhaseProblem`).  All smooth-objective arithmetic is in nats; the
fixed common-rate split arrives in bits and is converted once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import Propagator
from .rates import StreamTerms, as_layers, noma_stream_terms, rsma_stream_terms

LN2 = np.log(2.0)

ARMIJO_ALPHA0 = 1.0
ARMIJO_RHO = 0.5
ARMIJO_C = 1e-4
ARMIJO_MAX_HALVINGS = 30


def softplus(x):
    """ln(1 + e^x) without overflow."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _softplus1(x: float) -> float:
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


def _sigmoid1(x: float) -> float:
    e = math.exp(-abs(x))
    return 1.0 / (1.0 + e) if x >= 0 else e / (1.0 + e)


def soft_min(x, beta: float):
    """-(1/beta) ln sum exp(-beta x) and its gradient (softmax weights)."""
    x = np.asarray(x, dtype=float)
    lo = x.min()
    e = np.exp(-beta * (x - lo))
    total = e.sum()
    return lo - np.log(total) / beta, e / total


@dataclass(frozen=True)
class ObjectiveBreakdown:
    F_fair: float
    Gamma: float
    F_pen: float
    Delta: float
    F_rew: float
    J: float


class MaxMinObjective:
    """Fairness surrogate with decodability penalty and common-margin reward.

    ``powers`` is the full antenna power vector, ``r_c`` the fixed common-rate
    split in bits.
    """

    def __init__(self, powers, r_c, noise, beta=10.0, mu=10.0, eta=0.1):
        self.powers = np.asarray(powers, dtype=float)
        self.r = np.asarray(r_c, dtype=float) * LN2
        self.noise = float(noise)
        self.beta, self.mu, self.eta = float(beta), float(mu), float(eta)
        self.K = len(self.r)
        self.streams = rsma_stream_terms(self.K)

    def breakdown_from_rates(self, R):
        K, b = self.K, self.beta
        R_c, R_p = R[:K], R[K:]
        F_fair, w_fair = soft_min(self.r + R_p, b)
        smin_c, w_c = soft_min(R_c, b)
        Gamma = float(self.r.sum() - smin_c)
        Delta = -Gamma
        F_pen = -self.mu / b * _softplus1(b * Gamma)
        F_rew = self.eta / b * _softplus1(b * Delta)
        J = F_fair + F_pen + F_rew
        dJ_dGamma = -self.mu * _sigmoid1(b * Gamma) - self.eta * _sigmoid1(b * Delta)
        dJ_dR = np.concatenate([-dJ_dGamma * w_c, w_fair])
        return ObjectiveBreakdown(float(F_fair), Gamma, F_pen, Delta, F_rew, float(J)), dJ_dR

    def evaluate(self, G, with_grad=True):
        R = self.streams.rates_nats(G, self.powers, self.noise)
        bd, dJ_dR = self.breakdown_from_rates(R)
        W = self.streams.gain_weights(G, self.powers, self.noise, dJ_dR) if with_grad else None
        return bd.J, W, bd

    def exact_min_rate(self, G):
        """min_k (r_c,k + R_p,k) in bits at these gains (no smoothing)."""
        R = self.streams.rates_nats(G, self.powers, self.noise)
        return float(np.min(self.r + R[self.K:]) / LN2)


class SumRateObjective:
    """Soft-min common rate plus the sum of private rates."""

    def __init__(self, powers, noise, beta=10.0):
        self.powers = np.asarray(powers, dtype=float)
        self.noise = float(noise)
        self.beta = float(beta)
        self.K = len(self.powers) - 1
        self.streams = rsma_stream_terms(self.K)

    def evaluate(self, G, with_grad=True):
        K = self.K
        R = self.streams.rates_nats(G, self.powers, self.noise)
        smin_c, w_c = soft_min(R[:K], self.beta)
        J = float(smin_c + R[K:].sum())
        W = None
        if with_grad:
            dJ_dR = np.concatenate([w_c, np.ones(K)])
            W = self.streams.gain_weights(G, self.powers, self.noise, dJ_dR)
        return J, W, None


class SoftMinObjective:
    """Soft-min over an arbitrary set of rate rows (used for SIM-NOMA)."""

    def __init__(self, streams: StreamTerms, powers, noise, beta=10.0):
        self.streams = streams
        self.powers = np.asarray(powers, dtype=float)
        self.noise = float(noise)
        self.beta = float(beta)

    @classmethod
    def noma(cls, order, powers, noise, beta=10.0):
        return cls(noma_stream_terms(order), powers, noise, beta)

    def evaluate(self, G, with_grad=True):
        R = self.streams.rates_nats(G, self.powers, self.noise)
        J, w = soft_min(R, self.beta)
        W = self.streams.gain_weights(G, self.powers, self.noise, w) if with_grad else None
        return float(J), W, None


class PhaseProblem:
    """Phase-dependent objective ``J(theta)`` for one channel and objective."""

    def __init__(self, channel, objective):
        self.channel = channel
        self.objective = objective
        self.layers = channel.num_layers
        self.prop = Propagator(channel.Q1, channel.Qs, channel.H)
        self.evaluations = 0

    def gains(self, theta):
        A = self.prop.forward(as_layers(theta, self.layers))
        return np.abs(A) ** 2, A

    def value(self, theta) -> float:
        self.evaluations += 1
        G, _ = self.gains(theta)
        return self.objective.evaluate(G, with_grad=False)[0]

    def value_and_grad(self, theta):
        """Value and Euclidean gradient with dJ = Re(sum(conj(grad) * dtheta))."""
        self.evaluations += 1
        th = as_layers(theta, self.layers)
        A = self.prop.forward(th)
        G = np.abs(A) ** 2
        J, W, _ = self.objective.evaluate(G)
        grad = self.prop.gradient(th, W * A)
        return J, grad.ravel()

    def breakdown(self, theta):
        G, _ = self.gains(theta)
        return self.objective.evaluate(G, with_grad=False)[2]


def smooth_objective(theta, channel, powers, r_c, noise, beta=10.0, mu=10.0, eta=0.1) -> ObjectiveBreakdown:
    return PhaseProblem(channel, MaxMinObjective(powers, r_c, noise, beta, mu, eta)).breakdown(theta)


def euclidean_gradient(theta, problem: PhaseProblem) -> np.ndarray:
    return problem.value_and_grad(theta)[1]


def riemannian_project(egrad, theta) -> np.ndarray:
    egrad = np.asarray(egrad)
    return egrad - np.real(egrad * np.conj(theta)) * theta


def inner(a, b) -> float:
    """Real inner product Re<a, b>."""
    return float(np.real(np.vdot(a, b)))


def pr_direction(g_new, g_old, u_old, theta_new):
    """PR+ conjugate direction; ``None`` history means steepest ascent."""
    if g_old is None or u_old is None:
        return np.array(g_new, copy=True), 0.0
    denom = inner(g_old, g_old)
    if denom == 0.0:
        return np.array(g_new, copy=True), 0.0
    g_old_t = riemannian_project(g_old, theta_new)
    u_old_t = riemannian_project(u_old, theta_new)
    gamma = max(0.0, inner(g_new, g_new - g_old_t) / denom)
    u = g_new + gamma * u_old_t
    return riemannian_project(u, theta_new), gamma


class RetractionError(ArithmeticError):
    pass


def retract(theta, u, alpha: float) -> np.ndarray:
    step = theta + alpha * u
    mag = np.abs(step)
    if np.any(mag < 1e-12):
        raise RetractionError("step lands on the origin")
    return step / mag


def armijo_search(theta, u, g, J_current: float, value, alpha0: float = ARMIJO_ALPHA0):
    """Backtracking step; returns ``(alpha, theta_new, J_new)``, alpha = 0 if none."""
    slope = inner(g, u)
    if slope <= 0.0 or not np.any(u):
        return 0.0, theta, J_current
    alpha = alpha0
    for _ in range(ARMIJO_MAX_HALVINGS + 1):
        try:
            cand = retract(theta, u, alpha)
        except RetractionError:
            alpha *= ARMIJO_RHO
            continue
        J_new = value(cand)
        if J_new >= J_current + ARMIJO_C * alpha * slope:
            return alpha, cand, J_new
        alpha *= ARMIJO_RHO
    return 0.0, theta, J_current


@dataclass
class RcgTrace:
    objective: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    step: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    tangency: list = field(default_factory=list)
    modulus_error: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.step)


def rcg_loop(problem: PhaseProblem, theta_init, tol: float = 1e-6, max_iter: int = 200,
             adaptive_step: bool = True, patience: int = 1):
    """Maximise ``problem`` over unit-modulus phases; returns ``(theta, trace)``."""
    theta = np.asarray(theta_init, dtype=complex).copy()
    n = theta.size
    J, egrad = problem.value_and_grad(theta)
    g = riemannian_project(egrad, theta)
    u = g.copy()
    trace = RcgTrace()

    def record(theta, g, J):
        trace.objective.append(J)
        trace.grad_norm.append(float(np.linalg.norm(g)))
        trace.tangency.append(float(np.max(np.abs(np.real(g * np.conj(theta))))))
        trace.modulus_error.append(float(np.max(np.abs(np.abs(theta) - 1.0))))

    record(theta, g, J)
    best_theta, best_J = theta, J
    alpha0 = ARMIJO_ALPHA0
    stalled = 0
    for _ in range(max_iter):
        if np.linalg.norm(g) / np.sqrt(n) < tol:
            break
        if inner(g, u) <= 0.0:
            u = g.copy()
        alpha, theta_new, J_new = armijo_search(theta, u, g, J, problem.value, alpha0)
        if alpha == 0.0:
            break
        if adaptive_step:
            alpha0 = 2.0 * alpha
        J_new, egrad = problem.value_and_grad(theta_new)
        g_new = riemannian_project(egrad, theta_new)
        u, gamma = pr_direction(g_new, g, u, theta_new)
        trace.step.append(alpha)
        trace.gamma.append(gamma)
        record(theta_new, g_new, J_new)
        improvement = (J_new - J) / max(abs(J), 1e-12)
        theta, g, J = theta_new, g_new, J_new
        if J > best_J:
            best_theta, best_J = theta, J
        # a single short Armijo step is not a stall; require `patience` in a row
        stalled = stalled + 1 if improvement < tol else 0
        if stalled >= patience:
            break
    return best_theta, trace
