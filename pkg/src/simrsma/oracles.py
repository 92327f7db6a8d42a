"""Independent reference computations used by ``oracle-check`` and the tests.

None of these share code paths with the optimisers beyond the rate formulas:
finite differences over phase angles, brute random search, and grid search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .geometry import realize
from .phase import MaxMinObjective, PhaseProblem, SoftMinObjective, SumRateObjective
from .power import RsmaMaxMin, sca_loop
from .rates import PowerAllocation, common_and_private_rates, gains, random_phases


@dataclass
class OracleOutcome:
    name: str
    passed: bool
    detail: str


def fd_gradient_error(problem: PhaseProblem, theta, h: float = 1e-6) -> float:
    """Relative error of the analytic gradient against central differences in phi."""
    theta = np.asarray(theta, dtype=complex)
    _, grad = problem.value_and_grad(theta)
    analytic = np.real(np.conj(grad) * 1j * theta)
    phi = np.angle(theta)
    fd = np.empty(phi.size)
    for i in range(phi.size):
        step = np.zeros(phi.size)
        step[i] = h
        fd[i] = (problem.value(np.exp(1j * (phi + step)))
                 - problem.value(np.exp(1j * (phi - step)))) / (2 * h)
    return float(np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-300))


def random_gradient_instance(rng: np.random.Generator, kind: str = "maxmin"):
    """A small random phase problem (M <= 16, L <= 3, K <= 3) and a test point."""
    side = int(rng.integers(2, 5))
    cfg = SystemConfig(num_users=int(rng.integers(1, 4)), layers=int(rng.integers(1, 4)),
                       atoms_per_layer=side * side)
    channel = realize(cfg, int(rng.integers(2 ** 32)))
    K = cfg.num_users
    powers = rng.dirichlet(np.ones(K + 1)) * cfg.max_power
    theta = random_phases(rng, cfg.layers, cfg.atoms_per_layer)
    if kind == "maxmin":
        # pick r_c around the decodable budget so the penalty is in play
        R_c, _ = common_and_private_rates(gains(theta, channel), powers, cfg.noise_power)
        r_c = rng.dirichlet(np.ones(K)) * R_c.min() * rng.uniform(0.5, 1.5)
        obj = MaxMinObjective(powers, r_c, cfg.noise_power)
    elif kind == "sumrate":
        obj = SumRateObjective(powers, cfg.noise_power)
    else:
        powers[0] = 0.0
        obj = SoftMinObjective.noma(rng.permutation(K), powers, cfg.noise_power)
    return PhaseProblem(channel, obj), theta


def sample_min_rates(channel, config: SystemConfig, rng: np.random.Generator, n: int,
                     theta=None) -> np.ndarray:
    """Exact min-rates of ``n`` random feasible (theta, p, r_c) points.

    Powers are uniform on the budget simplex (with slack), the common split a
    random fraction of the decodable budget.  ``theta`` fixes the phases.
    """
    K, N = config.num_users, config.num_antennas
    out = np.empty(n)
    for i in range(n):
        th = random_phases(rng, config.layers, config.atoms_per_layer) if theta is None else theta
        powers = rng.dirichlet(np.ones(N + 1))[:N] * config.max_power
        R_c, R_p = common_and_private_rates(gains(th, channel), powers, config.noise_power)
        r_c = rng.dirichlet(np.ones(K)) * R_c.min() * rng.random()
        out[i] = np.min(r_c + R_p)
    return out


def sample_phase_min_rates(channel, config: SystemConfig, allocation: PowerAllocation,
                           rng: np.random.Generator, n: int) -> np.ndarray:
    """Exact min_k (r_c,k + R_p,k) at fixed (p, r_c) over random phases."""
    out = np.empty(n)
    for i in range(n):
        th = random_phases(rng, config.layers, config.atoms_per_layer)
        _, R_p = common_and_private_rates(gains(th, channel), allocation.powers,
                                          config.noise_power)
        out[i] = np.min(allocation.r_c + R_p)
    return out


def single_user_grid(G, noise: float, max_power: float, resolution: float = 1e-3):
    """Grid over the common-power fraction for K = 1 at full budget.

    Returns ``(best value, grid error bound)``.  For one user the whole common
    rate is hers, so the rate is log2 of total received SNR plus one.
    """
    G = np.asarray(G, dtype=float)
    frac = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)
    p_c = frac * max_power
    p_1 = max_power - p_c
    total = (p_c * G[0, 0] + p_1 * G[0, 1]) / noise
    values = np.log2(1.0 + total)
    return float(values.max()), float(np.max(np.abs(np.diff(values))))


def run_all(seed: int = 0, gradient_instances: int = 20, random_samples: int = 10_000,
            tiny_instances: int = 3) -> list[OracleOutcome]:
    """The DERIVED-oracle suite run by ``simrsma oracle-check``."""
    from .schemes import solve_rsma_maxmin

    rng = np.random.default_rng(seed)
    outcomes = []

    worst = 0.0
    for i in range(gradient_instances):
        kind = ("maxmin", "sumrate", "noma")[i % 3]
        problem, theta = random_gradient_instance(rng, kind)
        worst = max(worst, fd_gradient_error(problem, theta))
    outcomes.append(OracleOutcome("gradient-fd", worst < 1e-5,
                                  f"worst relative error {worst:.2e} over {gradient_instances}"))

    tiny = SystemConfig(num_users=2, layers=2, atoms_per_layer=4)
    margins = []
    for i in range(tiny_instances):
        channel = realize(tiny, seed * 1000 + i)
        sol = solve_rsma_maxmin(channel, tiny, seed * 1000 + i)
        best = sample_min_rates(channel, tiny, rng, random_samples).max()
        margins.append(sol.min_rate - best)
    outcomes.append(OracleOutcome("random-search", min(margins) >= 0.0,
                                  f"AO minus best random sample, worst {min(margins):.4f} bits"))

    single = SystemConfig(num_users=1)
    gaps = []
    for i in range(tiny_instances):
        channel = realize(single, seed * 1000 + i)
        G = gains(random_phases(rng, single.layers, single.atoms_per_layer), channel)
        pa, _ = sca_loop(RsmaMaxMin(G, single.noise_power, single.max_power),
                         PowerAllocation.uniform(single.max_power, 1).powers)
        grid_best, grid_err = single_user_grid(G, single.noise_power, single.max_power)
        value = float(np.min(pa.r_c + common_and_private_rates(G, pa.powers, single.noise_power)[1]))
        gaps.append(grid_best - value - grid_err)
    outcomes.append(OracleOutcome("grid-search-k1", max(gaps) <= 1e-6,
                                  f"grid best minus SCA beyond grid error, worst {max(gaps):.2e}"))
    return outcomes
