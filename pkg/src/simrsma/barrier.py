"""Log-barrier Newton method for small concave programs.

Every function handled here has the form::

    f_i(z) = lin_i . z + const_i + sum_{t in terms(i)} w_t * ln(a_t . z + b_t),  w_t >= 0

so it is concave with closed-form gradient and Hessian.  Function 0 is the
objective (maximised), functions 1..m are constraints ``f_i(z) >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BarrierError(RuntimeError):
    pass


@dataclass
class LogAffineSystem:
    lin: np.ndarray  # (m + 1, n)
    const: np.ndarray  # (m + 1,)
    term_fn: np.ndarray  # (T,) owning function of each log term
    term_a: np.ndarray  # (T, n)
    term_b: np.ndarray  # (T,)
    term_w: np.ndarray  # (T,)

    @property
    def num_constraints(self) -> int:
        return self.lin.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.lin.shape[1]

    def log_args(self, z):
        return self.term_a @ z + self.term_b

    def values(self, z, args=None):
        if args is None:
            args = self.log_args(z)
        vals = self.lin @ z + self.const
        if len(args):
            vals = vals + np.bincount(self.term_fn, self.term_w * np.log(args),
                                      minlength=len(vals))
        return vals

    def gradients(self, z, args):
        grads = self.lin.copy()
        if len(args):
            np.add.at(grads, self.term_fn, (self.term_w / args)[:, None] * self.term_a)
        return grads

    def with_slack(self) -> "LogAffineSystem":
        """Phase-I system in (z, s): maximise s s.t. f_i(z) - s >= 0, s <= 1."""
        m, n = self.num_constraints, self.dim
        lin = np.zeros((m + 2, n + 1))
        lin[1:m + 1, :n] = self.lin[1:]
        lin[1:m + 1, n] = -1.0
        lin[0, n] = 1.0
        lin[m + 1, n] = -1.0
        const = np.concatenate([[0.0], self.const[1:], [1.0]])
        # objective log terms are kept as domain guards (weight 0)
        term_a = np.hstack([self.term_a, np.zeros((len(self.term_a), 1))])
        term_w = np.where(self.term_fn == 0, 0.0, self.term_w)
        return LogAffineSystem(lin, const, self.term_fn.copy(), term_a, self.term_b.copy(), term_w)


@dataclass
class BarrierResult:
    z: np.ndarray
    objective: float
    newton_steps: int
    gap: float
    phase1: bool


def _strictly_feasible(system: LogAffineSystem, z) -> bool:
    args = system.log_args(z)
    if np.any(args <= 0):
        return False
    return bool(np.all(system.values(z, args)[1:] > 0))


def _center(system, z, tau, max_steps, stop=None):
    """Newton centering of phi(z) = -tau f_0(z) - sum_i ln f_i(z)."""
    steps = 0
    coef_scale = np.empty(system.num_constraints + 1)
    while steps < max_steps:
        args = system.log_args(z)
        vals = system.values(z, args)
        grads = system.gradients(z, args)
        f = vals[1:]
        grad_phi = -tau * grads[0] - (grads[1:] / f[:, None]).sum(axis=0)
        scaled = grads[1:] / f[:, None]
        hess = scaled.T @ scaled
        if len(args):
            coef_scale[0] = tau
            coef_scale[1:] = 1.0 / f
            c = system.term_w / args ** 2 * coef_scale[system.term_fn]
            hess += (system.term_a * c[:, None]).T @ system.term_a
        try:
            step = -np.linalg.solve(hess, grad_phi)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(hess, grad_phi, rcond=None)[0]
        decrement = float(-grad_phi @ step)
        if not np.isfinite(decrement):
            raise BarrierError("non-finite Newton decrement")
        phi0 = -tau * vals[0] - np.sum(np.log(f))
        # relative floor: at large tau, phi carries ~1e-16 * |phi| of noise
        if decrement / 2.0 <= max(1e-10, 1e-13 * abs(phi0)):
            break
        alpha = 1.0
        while True:
            trial = z + alpha * step
            targs = system.log_args(trial)
            if np.all(targs > 0):
                tvals = system.values(trial, targs)
                if np.all(tvals[1:] > 0):
                    phi = -tau * tvals[0] - np.sum(np.log(tvals[1:]))
                    if phi <= phi0 - 0.25 * alpha * decrement:
                        break
            alpha *= 0.5
            if alpha < 1e-14:
                return z, steps, True
        z = trial
        steps += 1
        if stop is not None and stop(z):
            return z, steps, True
    return z, steps, False


def barrier_solve(system: LogAffineSystem, z0, gap_tol: float = 1e-9, mu: float = 10.0,
                  tau0: float | None = None, max_newton: int = 50, stop=None,
                  repair=None) -> BarrierResult:
    """Maximise f_0 subject to f_i >= 0 from a strictly feasible or arbitrary start.

    Starts that are not strictly feasible go through a phase-I problem first
    (their log-term arguments must still be positive).  ``repair`` may re-seat
    epigraph variables that phase I leaves at meaningless values.
    """
    z = np.asarray(z0, dtype=float).copy()
    phase1 = False
    total = 0
    if not _strictly_feasible(system, z):
        if np.any(system.log_args(z) <= 0):
            raise BarrierError("start point outside the domain of the log terms")
        aug = system.with_slack()
        s0 = min(float(np.min(system.values(z)[1:])), 1.0) - 1.0
        za = np.append(z, s0)
        res = barrier_solve(aug, za, gap_tol=1e-6, mu=mu, tau0=tau0, max_newton=max_newton,
                            stop=lambda v: v[-1] > 0 and _strictly_feasible(system, v[:-1]))
        total += res.newton_steps
        z = res.z[:-1]
        if repair is not None:
            z = repair(z)
        if not _strictly_feasible(system, z):
            raise BarrierError("problem appears infeasible")
        phase1 = True

    m = system.num_constraints
    tau = float(m) if tau0 is None else tau0
    while True:
        z, steps, early = _center(system, z, tau, max_newton, stop)
        total += steps
        if early and stop is not None and stop(z):
            break
        if m / tau < gap_tol:
            break
        tau *= mu
    return BarrierResult(z=z, objective=float(system.values(z)[0]), newton_steps=total,
                         gap=m / tau, phase1=phase1)
