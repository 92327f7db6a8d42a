"""End-to-end solvers: SIM-RSMA max-min AO and the baseline schemes.

Every solver alternates a power step at fixed phases with a phase step at
fixed powers and keeps the best exact-objective iterate, so the recorded
trace is non-decreasing even when a surrogate step regresses.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig
from .phase import MaxMinObjective, PhaseProblem, SoftMinObjective, SumRateObjective, rcg_loop
from .power import (RsmaMaxMin, RsmaSumRate, TermsMaxMin, private_terms, sca_loop,
                    stream_rate_terms)
from .rates import (PowerAllocation, RateReport, common_and_private_rates, gains, jain_index,
                    noma_order, noma_stream_terms, noma_user_rates, random_phases, rate_report,
                    waterfill_common)

SCHEMES = ("rsma", "sdma", "noma", "random-phase", "uniform-power", "sum-rate")


@dataclass
class Solution:
    scheme: str
    theta: np.ndarray
    allocation: PowerAllocation
    report: RateReport
    trace: list  # best exact objective after each outer iteration
    raw_trace: list = field(default_factory=list)  # objective of each iterate
    iterations: int = 0
    wall_time: float = 0.0
    sca_iterations: int = 0
    rcg_iterations: int = 0
    order: np.ndarray | None = None  # NOMA decoding order (weakest first)

    @property
    def min_rate(self) -> float:
        return self.report.min_rate


def evaluate(scheme: str, G, pa: PowerAllocation, noise: float, order=None) -> RateReport:
    """Rate report of a scheme's point at gains ``G``."""
    if scheme == "noma":
        rates = noma_user_rates(G, pa.powers, noise, order)
        K = len(rates)
        return RateReport(np.zeros(K), rates, 0.0, rates, float(rates.min()),
                          float(rates.sum()), jain_index(rates))
    return rate_report(G, pa, noise)


def reevaluate(solution: Solution, channel, noise: float) -> RateReport:
    return evaluate(solution.scheme, gains(solution.theta, channel), solution.allocation, noise,
                    solution.order)


def initial_phases(config: SystemConfig, seed) -> np.ndarray:
    return random_phases(np.random.default_rng(seed), config.layers, config.atoms_per_layer)


class _Scheme:
    """Hooks for one scheme: power step, phase objective and exact value."""

    name = ""
    optimize_phases = True

    def __init__(self, config: SystemConfig):
        self.cfg = config
        self.order = None

    def power_step(self, G, pa: PowerAllocation):
        """Returns (allocation, exact value, SCA iterations)."""
        raise NotImplementedError

    def phase_objective(self, G, pa: PowerAllocation):
        raise NotImplementedError

    def sca(self, form, pa):
        cfg = self.cfg
        new, trace = sca_loop(form, pa.powers, cfg.sca_tol, cfg.sca_max_iter)
        return new, max(trace.objective), trace.iterations


class _RsmaMaxMin(_Scheme):
    name = "rsma"

    def power_step(self, G, pa):
        return self.sca(RsmaMaxMin(G, self.cfg.noise_power, self.cfg.max_power), pa)

    def phase_objective(self, G, pa):
        c = self.cfg
        return MaxMinObjective(pa.powers, pa.r_c, c.noise_power, c.lse_sharpness,
                               c.penalty_weight, c.reward_weight)


class _RandomPhase(_RsmaMaxMin):
    name = "random-phase"
    optimize_phases = False


class _Sdma(_RsmaMaxMin):
    name = "sdma"

    def power_step(self, G, pa):
        c = self.cfg
        active = np.ones(c.num_antennas, dtype=bool)
        active[0] = False
        form = TermsMaxMin(G, c.noise_power, c.max_power, private_terms(G, c.noise_power), active)
        return self.sca(form, pa)


class _Noma(_Scheme):
    name = "noma"

    def power_step(self, G, pa):
        c = self.cfg
        self.order = noma_order(G)
        terms = stream_rate_terms(noma_stream_terms(self.order), G, c.noise_power)
        active = np.ones(c.num_antennas, dtype=bool)
        active[0] = False
        return self.sca(TermsMaxMin(G, c.noise_power, c.max_power, terms, active), pa)

    def phase_objective(self, G, pa):
        return SoftMinObjective.noma(self.order, pa.powers, self.cfg.noise_power,
                                     self.cfg.lse_sharpness)


class _UniformPower(_RsmaMaxMin):
    name = "uniform-power"

    def power_step(self, G, pa):
        R_c, R_p = common_and_private_rates(G, pa.powers, self.cfg.noise_power)
        r_c = waterfill_common(R_p, R_c.min())
        new = PowerAllocation(pa.p_c, pa.p, r_c)
        return new, float(np.min(r_c + R_p)), 0


class _SumRate(_Scheme):
    name = "sum-rate"

    def power_step(self, G, pa):
        return self.sca(RsmaSumRate(G, self.cfg.noise_power, self.cfg.max_power), pa)

    def phase_objective(self, G, pa):
        return SumRateObjective(pa.powers, self.cfg.noise_power, self.cfg.lse_sharpness)


_REGISTRY = {cls.name: cls for cls in (_RsmaMaxMin, _Sdma, _Noma, _RandomPhase, _UniformPower,
                                       _SumRate)}


def _initial_allocation(scheme: _Scheme) -> PowerAllocation:
    cfg = scheme.cfg
    pa = PowerAllocation.uniform(cfg.max_power, cfg.num_users)
    if scheme.name in ("sdma", "noma"):
        share = cfg.max_power / cfg.num_users
        pa = PowerAllocation(0.0, np.full(cfg.num_users, share), np.zeros(cfg.num_users))
    return pa


def alternate(scheme_name: str, channel, config: SystemConfig, seed, theta_init=None,
              pa_init: PowerAllocation | None = None) -> Solution:
    """Generic AO loop with the keep-best safeguard."""
    start = time.perf_counter()
    scheme = _REGISTRY[scheme_name](config)
    theta = initial_phases(config, seed) if theta_init is None else np.asarray(theta_init, complex)
    pa = _initial_allocation(scheme) if pa_init is None else pa_init
    best = None
    trace, raw = [], []
    sca_iters = rcg_iters = 0
    max_outer = config.ao_max_iter if scheme.optimize_phases else 1
    for it in range(max_outer):
        G = gains(theta, channel)
        pa, value, n = scheme.power_step(G, pa)
        sca_iters += n
        raw.append(value)
        if best is None or value > best[0]:
            best = (value, theta.copy(), pa, scheme.order)
        prev = trace[-1] if trace else None
        trace.append(best[0])
        if prev is not None and (trace[-1] - prev) / max(abs(prev), 1e-12) < config.ao_tol:
            break
        if it == max_outer - 1:
            break
        problem = PhaseProblem(channel, scheme.phase_objective(G, pa))
        theta, rcg = rcg_loop(problem, theta, config.rcg_tol, config.rcg_max_iter,
                              patience=config.rcg_patience)
        rcg_iters += rcg.iterations
    _, theta_b, pa_b, order_b = best
    report = evaluate(scheme_name, gains(theta_b, channel), pa_b, config.noise_power, order_b)
    return Solution(scheme=scheme_name, theta=theta_b, allocation=pa_b, report=report,
                    trace=trace, raw_trace=raw, iterations=len(trace),
                    wall_time=time.perf_counter() - start, sca_iterations=sca_iters,
                    rcg_iterations=rcg_iters, order=None if order_b is None else order_b.copy())


def solve_rsma_maxmin(channel, config: SystemConfig, seed) -> Solution:
    """Max-min AO from random phases, plus a second start at the SDMA solution.

    From random phases the first power step often parks a user on the common
    stream with zero private power, and the fixed-split phase step can then
    never raise that user's rate.  The SDMA point (silent common stream) is
    feasible for RSMA, so starting there too makes RSMA never worse than SDMA.
    """
    start = time.perf_counter()
    cold = alternate("rsma", channel, config, seed)
    sdma = alternate("sdma", channel, config, seed)
    warm = alternate("rsma", channel, config, seed, theta_init=sdma.theta,
                     pa_init=sdma.allocation)
    # the two tracks advance in lockstep; SDMA iterates are feasible RSMA points
    track_b = sdma.trace + warm.trace
    n = max(len(cold.trace), len(track_b))
    pad = lambda t: t + [t[-1]] * (n - len(t))
    trace = list(np.maximum.accumulate(np.maximum(pad(cold.trace), pad(track_b))))
    best = warm if warm.min_rate > cold.min_rate else cold
    best.trace = [float(v) for v in trace]
    best.raw_trace = cold.raw_trace + sdma.raw_trace + warm.raw_trace
    best.iterations = n
    best.sca_iterations = cold.sca_iterations + sdma.sca_iterations + warm.sca_iterations
    best.rcg_iterations = cold.rcg_iterations + sdma.rcg_iterations + warm.rcg_iterations
    best.wall_time = time.perf_counter() - start
    return best


def solve_sdma(channel, config: SystemConfig, seed) -> Solution:
    return alternate("sdma", channel, config, seed)


def solve_noma(channel, config: SystemConfig, seed) -> Solution:
    return alternate("noma", channel, config, seed)


def solve_rsma_random_phases(channel, config: SystemConfig, seed) -> Solution:
    return alternate("random-phase", channel, config, seed)


def solve_rsma_uniform_power(channel, config: SystemConfig, seed) -> Solution:
    return alternate("uniform-power", channel, config, seed)


def solve_rsma_sumrate(channel, config: SystemConfig, seed) -> Solution:
    return alternate("sum-rate", channel, config, seed)


SOLVERS = {
    "rsma": solve_rsma_maxmin,
    "sdma": solve_sdma,
    "noma": solve_noma,
    "random-phase": solve_rsma_random_phases,
    "uniform-power": solve_rsma_uniform_power,
    "sum-rate": solve_rsma_sumrate,
}


def solve(scheme: str, channel, config: SystemConfig, seed) -> Solution:
    try:
        solver = SOLVERS[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}") from None
    return solver(channel, config, seed)
