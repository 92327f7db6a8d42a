"""Successive convex approximation for the power / common-rate step.

Every rate in the power step is a difference of logs of affine functions of
the power vector ``p = [p_c, p_1, .., p_K]``::

    R_t(p) = log2(S_t . p + noise) - log2(I_t . p + noise)

The subtracted term (``eta``) is replaced by its tangent at the previous
iterate, which makes every rate concave in ``p``.  The convex surrogate
problems are solved by :func:`simrsma.barrier.barrier_solve` in normalised
units (powers divided by ``P_max``, gains scaled by ``P_max / noise``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .barrier import BarrierError, LogAffineSystem, _strictly_feasible, barrier_solve
from .rates import PowerAllocation, StreamTerms, rsma_stream_terms, waterfill_common

LN2 = np.log(2.0)


@dataclass(frozen=True)
class RateTerms:
    """Rates as log2(S p + noise) - log2(I p + noise), one row per rate."""

    S: np.ndarray  # (T, N)
    I: np.ndarray  # (T, N)
    noise: float

    def rates(self, powers) -> np.ndarray:
        powers = np.asarray(powers, dtype=float)
        return np.log2(self.S @ powers + self.noise) - np.log2(self.I @ powers + self.noise)

    def eta(self, powers) -> np.ndarray:
        return np.log2(self.I @ np.asarray(powers, dtype=float) + self.noise)


def stream_rate_terms(streams: StreamTerms, G, noise: float) -> RateTerms:
    S, I = streams.powers_matrices(G)
    return RateTerms(S, I, float(noise))


def rsma_terms(G, noise: float) -> RateTerms:
    """Rows 0..K-1 are the common rates R_c,k, rows K..2K-1 the private R_p,k."""
    return stream_rate_terms(rsma_stream_terms(np.asarray(G).shape[0]), G, noise)


def private_terms(G, noise: float) -> RateTerms:
    full = rsma_terms(G, noise)
    K = np.asarray(G).shape[0]
    return RateTerms(full.S[K:], full.I[K:], full.noise)


def exact_eta(G, pa: PowerAllocation, noise: float, k: int, stream: str) -> float:
    """log2 of interference-plus-noise seen when decoding ``stream`` at user k."""
    terms = rsma_terms(G, noise)
    K = np.asarray(G).shape[0]
    row = {"common": k, "private": K + k}[stream]
    return float(terms.eta(pa.powers)[row])


@dataclass(frozen=True)
class SurrogateModel:
    """First-order expansion of every ``eta`` at ``expansion_point``.

    ``eta_tilde(p) = eta0 + slope . (p - expansion_point)``.
    """

    terms: RateTerms
    expansion_point: np.ndarray
    eta0: np.ndarray
    slope: np.ndarray  # (T, N)

    def eta_tilde(self, powers) -> np.ndarray:
        return self.eta0 + self.slope @ (np.asarray(powers, dtype=float) - self.expansion_point)

    def rates(self, powers) -> np.ndarray:
        powers = np.asarray(powers, dtype=float)
        return np.log2(self.terms.S @ powers + self.terms.noise) - self.eta_tilde(powers)


def linearize_terms(terms: RateTerms, p_prev) -> SurrogateModel:
    p_prev = np.asarray(p_prev, dtype=float)
    denom = terms.I @ p_prev + terms.noise
    slope = terms.I / (LN2 * denom[:, None])
    return SurrogateModel(terms, p_prev.copy(), np.log2(denom), slope)


def linearize(G, p_prev, noise: float) -> SurrogateModel:
    """Tangent surrogate of the RSMA rates (common rows first, then private)."""
    return linearize_terms(rsma_terms(G, noise), p_prev)


@dataclass
class SubproblemSolution:
    powers: np.ndarray
    r_c: np.ndarray
    t: float
    newton_steps: int
    gap: float
    phase1: bool

    @property
    def allocation(self) -> PowerAllocation:
        return PowerAllocation.from_powers(self.powers, self.r_c)


# --- problem assembly ----------------------------------------------------------
#
# Variables are z = [x_active, extra...] with x = p / P_max.  A surrogate rate
# row t becomes  (1/ln2) ln(s'_t . x + 1) - c_t - g'_t . x  with s' = S P/noise.


class _Builder:
    def __init__(self, n: int):
        self.n = n
        self.lin, self.const = [], []
        self.t_fn, self.t_a, self.t_b, self.t_w = [], [], [], []

    def add(self, lin, const=0.0, logs=()):
        idx = len(self.lin)
        self.lin.append(np.asarray(lin, dtype=float))
        self.const.append(float(const))
        for a, b, w in logs:
            self.t_fn.append(idx)
            self.t_a.append(np.asarray(a, dtype=float))
            self.t_b.append(float(b))
            self.t_w.append(float(w))

    def build(self) -> LogAffineSystem:
        n = self.n
        return LogAffineSystem(
            np.array(self.lin).reshape(-1, n), np.array(self.const),
            np.array(self.t_fn, dtype=int), np.array(self.t_a).reshape(-1, n),
            np.array(self.t_b), np.array(self.t_w))


class _Normalized:
    """Surrogate rows expressed in the active normalised power variables."""

    def __init__(self, model: SurrogateModel, max_power: float, active: np.ndarray):
        terms = model.terms
        scale = max_power / terms.noise
        self.active = active
        self.s = terms.S[:, active] * scale
        # log2(S p + noise) = log2(noise) + log2(s' x + 1)
        slope = model.slope[:, active] * max_power
        self.g = slope
        self.c = (model.eta0 - model.slope @ model.expansion_point) - np.log2(terms.noise)

    def rate_logs(self, row, n_total, offset=0):
        a = np.zeros(n_total)
        a[offset:offset + self.s.shape[1]] = self.s[row]
        return (a, 1.0, 1.0 / LN2)

    def rate_lin(self, row, n_total):
        lin = np.zeros(n_total)
        lin[:self.g.shape[1]] = -self.g[row]
        return lin, -self.c[row]


def _power_constraints(b: _Builder, n_x: int):
    for j in range(n_x):
        lin = np.zeros(b.n)
        lin[j] = 1.0
        b.add(lin)
    lin = np.zeros(b.n)
    lin[:n_x] = -1.0
    b.add(lin, 1.0)


class Formulation:
    """A power-step problem: variables, surrogate program and exact objective."""

    active: np.ndarray

    def __init__(self, G, noise: float, max_power: float):
        self.G = np.asarray(G, dtype=float)
        self.noise = float(noise)
        self.max_power = float(max_power)
        self.K = self.G.shape[0]
        self.N = self.G.shape[1]

    def full(self, x_active) -> np.ndarray:
        p = np.zeros(self.N)
        p[self.active] = np.asarray(x_active) * self.max_power
        return p

    def feasible_start(self, p):
        """Clip an arbitrary allocation onto the pinned/budget set."""
        p = np.where(self.active, np.maximum(np.asarray(p, dtype=float), 0.0), 0.0)
        total = p.sum()
        if total > self.max_power:
            p *= self.max_power / total
        return p


class RsmaMaxMin(Formulation):
    """max t  s.t.  r_k + R~_p,k >= t,  sum r <= R~_c,k,  r >= 0,  power budget."""

    def __init__(self, G, noise, max_power):
        super().__init__(G, noise, max_power)
        self.terms = rsma_terms(self.G, self.noise)
        self.active = np.ones(self.N, dtype=bool)

    def exact(self, p):
        rates = self.terms.rates(p)
        R_c, R_p = np.maximum(rates[:self.K], 0), np.maximum(rates[self.K:], 0)
        r_c = waterfill_common(R_p, R_c.min())
        return float(np.min(r_c + R_p)), r_c

    def system(self, model: SurrogateModel):
        K, nx = self.K, self.N
        n = nx + K + 1
        norm = _Normalized(model, self.max_power, self.active)
        b = _Builder(n)
        obj = np.zeros(n)
        obj[-1] = 1.0
        b.add(obj)
        _power_constraints(b, nx)
        for k in range(K):
            lin = np.zeros(n)
            lin[nx + k] = 1.0
            b.add(lin)
        for k in range(K):
            lin, const = norm.rate_lin(k, n)
            lin[nx:nx + K] -= 1.0
            b.add(lin, const, [norm.rate_logs(k, n)])
        for k in range(K):
            lin, const = norm.rate_lin(K + k, n)
            lin[nx + k] += 1.0
            lin[-1] = -1.0
            b.add(lin, const, [norm.rate_logs(K + k, n)])
        return b.build()

    def start(self, x, model: SurrogateModel):
        K = self.K
        rates = model.rates(self.full(x))
        r = np.full(K, max(rates[:K].min(), 0.0) / (2 * K))
        t = float(np.min(r + rates[K:])) - 1.0
        return np.concatenate([x, r, [t]])

    def repair(self, z):
        K, nx = self.K, self.N
        rates = self._model.rates(self.full(z[:nx]))
        z = z.copy()
        z[-1] = float(np.min(z[nx:nx + K] + rates[K:])) - 1.0
        return z

    def unpack(self, z):
        K, nx = self.K, self.N
        return self.full(z[:nx]), np.maximum(z[nx:nx + K], 0.0), float(z[-1])


class TermsMaxMin(Formulation):
    """max t  s.t.  R~_t >= t for every rate row, power budget; no common split.

    Used for SIM-SDMA (private rows, common antenna silent) and SIM-NOMA
    (one row per stream/decoder pair).
    """

    def __init__(self, G, noise, max_power, terms: RateTerms, active):
        super().__init__(G, noise, max_power)
        self.terms = terms
        self.active = np.asarray(active, dtype=bool)

    def exact(self, p):
        return float(np.min(self.terms.rates(p))), np.zeros(self.K)

    def system(self, model: SurrogateModel):
        nx = int(self.active.sum())
        n = nx + 1
        norm = _Normalized(model, self.max_power, self.active)
        b = _Builder(n)
        obj = np.zeros(n)
        obj[-1] = 1.0
        b.add(obj)
        _power_constraints(b, nx)
        for row in range(len(self.terms.S)):
            lin, const = norm.rate_lin(row, n)
            lin[-1] = -1.0
            b.add(lin, const, [norm.rate_logs(row, n)])
        return b.build()

    def start(self, x, model: SurrogateModel):
        t = float(np.min(model.rates(self.full(x)))) - 1.0
        return np.concatenate([x, [t]])

    def repair(self, z):
        z = z.copy()
        z[-1] = float(np.min(self._model.rates(self.full(z[:-1])))) - 1.0
        return z

    def unpack(self, z):
        nx = int(self.active.sum())
        return self.full(z[:nx]), np.zeros(self.K), float(z[-1])


class RsmaSumRate(Formulation):
    """max sum r + sum R~_p,k  s.t.  sum r <= R~_c,k,  r >= 0,  power budget."""

    def __init__(self, G, noise, max_power):
        super().__init__(G, noise, max_power)
        self.terms = rsma_terms(self.G, self.noise)
        self.active = np.ones(self.N, dtype=bool)

    def exact(self, p, r_hint=None):
        rates = self.terms.rates(p)
        R_c, R_p = np.maximum(rates[:self.K], 0), np.maximum(rates[self.K:], 0)
        budget = R_c.min()
        if r_hint is not None and np.sum(r_hint) > 0:
            # keep the solver's split, scaled to the exact common budget
            r_c = np.asarray(r_hint) * (budget / np.sum(r_hint))
        else:
            r_c = np.full(self.K, budget / self.K)
        return float(budget + R_p.sum()), r_c

    def system(self, model: SurrogateModel):
        K, nx = self.K, self.N
        n = nx + K
        norm = _Normalized(model, self.max_power, self.active)
        b = _Builder(n)
        obj = np.zeros(n)
        obj[nx:] = 1.0
        const = 0.0
        logs = []
        for k in range(K):
            lin, c = norm.rate_lin(K + k, n)
            obj += lin
            const += c
            logs.append(norm.rate_logs(K + k, n))
        b.add(obj, const, logs)
        _power_constraints(b, nx)
        for k in range(K):
            lin = np.zeros(n)
            lin[nx + k] = 1.0
            b.add(lin)
        for k in range(K):
            lin, c = norm.rate_lin(k, n)
            lin[nx:] -= 1.0
            b.add(lin, c, [norm.rate_logs(k, n)])
        return b.build()

    def start(self, x, model: SurrogateModel):
        K = self.K
        budget = model.rates(self.full(x))[:K].min()
        r = np.full(K, max(budget, 0.0) / (2 * K))
        return np.concatenate([x, r])

    def repair(self, z):
        return z

    def unpack(self, z):
        K, nx = self.K, self.N
        r = np.maximum(z[nx:], 0.0)
        return self.full(z[:nx]), r, float(np.sum(r))


def _start_points(form: Formulation, model: SurrogateModel):
    """Uniform 0.9 P_max/N first, then blends toward the expansion point."""
    nx = int(form.active.sum())
    uniform = np.full(nx, 0.9 / nx)
    anchor = model.expansion_point[form.active] / form.max_power
    anchor = anchor * (0.999 / max(anchor.sum(), 1.0))
    yield uniform
    for eps in (0.5, 0.1, 1e-2, 1e-3):
        yield (1 - eps) * anchor + eps * uniform
    if form.active[0]:
        # expansion at p_c = 0 (warm start from SDMA): every common surrogate is
        # <= 0 except through p_c, so only a small shift onto p_c is feasible
        raw = model.expansion_point[form.active] / form.max_power
        raw = raw / max(raw.sum(), 1.0)
        for eps in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
            x = (1 - eps) * raw
            x[0] += eps
            yield x


def solve_inner(form: Formulation, model: SurrogateModel) -> SubproblemSolution:
    system = form.system(model)
    form._model = model
    starts = [form.start(x, model) for x in _start_points(form, model)]
    z0 = next((z for z in starts if _strictly_feasible(system, z)), starts[0])
    try:
        res = barrier_solve(system, z0, repair=form.repair)
    except BarrierError:
        # retry with a gentler barrier schedule
        res = barrier_solve(system, z0, mu=4.0, repair=form.repair)
    powers, r_c, t = form.unpack(res.z)
    return SubproblemSolution(powers, r_c, t, res.newton_steps, res.gap, res.phase1)


@dataclass
class ScaTrace:
    objective: list = field(default_factory=list)
    newton_steps: list = field(default_factory=list)
    failed: bool = False

    @property
    def iterations(self) -> int:
        return len(self.objective) - 1


def _extrapolate(form: Formulation, p, p_new, value, r_c, max_doublings: int = 30):
    """Push further along p_new - p while the exact objective keeps improving.

    Near a boundary optimum the tangent surrogate acts like a proximal term and
    plain SCA creeps; the projected step search recovers the remaining way.
    """
    d = p_new - p
    if not np.any(d):
        return p_new, value, r_c
    factor = 2.0
    for _ in range(max_doublings):
        cand = form.feasible_start(p + factor * d)
        cand_value, cand_r = form.exact(cand)
        if not cand_value > value:
            break
        p_new, value, r_c = cand, cand_value, cand_r
        factor *= 2.0
    return p_new, value, r_c


def sca_loop(form: Formulation, p_init, tol: float = 1e-4, max_iter: int = 50,
             extrapolate: bool = True):
    """Alternate linearise / solve until the exact objective stalls.

    Returns ``(PowerAllocation, trace)`` for the best exact-objective iterate;
    ``trace.objective[0]`` is the exact objective at ``p_init``.
    """
    p = form.feasible_start(p_init)
    value, r_c = form.exact(p)
    trace = ScaTrace([value], [])
    best = (value, p, r_c)
    for _ in range(max_iter):
        model = linearize_terms(form.terms, p)
        try:
            sol = solve_inner(form, model)
        except BarrierError:
            # the current iterate is feasible; stop here rather than abort the AO
            trace.failed = True
            break
        p_new = form.feasible_start(sol.powers)
        if isinstance(form, RsmaSumRate):
            new_value, r_new = form.exact(p_new, sol.r_c)
        else:
            new_value, r_new = form.exact(p_new)
        if extrapolate:
            p_new, new_value, r_new = _extrapolate(form, p, p_new, new_value, r_new)
        trace.objective.append(new_value)
        trace.newton_steps.append(sol.newton_steps)
        if new_value > best[0]:
            best = (new_value, p_new, r_new)
        improvement = (new_value - value) / max(abs(value), 1e-12)
        p, value = p_new, new_value
        if improvement < tol:
            break
    _, p_best, r_best = best
    return PowerAllocation.from_powers(p_best, r_best), trace


def rsma_power_step(G, noise, max_power, p_init, tol=1e-4, max_iter=50):
    return sca_loop(RsmaMaxMin(G, noise, max_power), p_init, tol, max_iter)
