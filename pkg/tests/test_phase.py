import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simrsma.config import SystemConfig
from simrsma.geometry import realize
from simrsma.oracles import fd_gradient_error, random_gradient_instance, sample_phase_min_rates
from simrsma.phase import (ARMIJO_C, MaxMinObjective, PhaseProblem, RetractionError, armijo_search,
                           inner, pr_direction, rcg_loop, retract, riemannian_project, smooth_objective,
                           soft_min, softplus)
from simrsma.power import RsmaMaxMin, sca_loop
from simrsma.rates import PowerAllocation, common_and_private_rates, gains, random_phases

LN2 = np.log(2.0)


def _tangent(rng, theta):
    z = rng.standard_normal(theta.shape) + 1j * rng.standard_normal(theta.shape)
    return riemannian_project(z, theta)


def _maxmin_problem(seed, K=2, M=4, L=2):
    cfg = SystemConfig(num_users=K, atoms_per_layer=M, layers=L)
    ch = realize(cfg, seed)
    rng = np.random.default_rng(seed)
    theta = random_phases(rng, L, M)
    G = gains(theta, ch)
    pa, _ = sca_loop(RsmaMaxMin(G, cfg.noise_power, cfg.max_power),
                     PowerAllocation.uniform(cfg.max_power, K).powers)
    obj = MaxMinObjective(pa.powers, pa.r_c, cfg.noise_power)
    return cfg, ch, pa, PhaseProblem(ch, obj), theta


def test_softplus_overflow_safe():
    assert softplus(1000.0) == pytest.approx(1000.0)
    assert softplus(-1000.0) == pytest.approx(0.0, abs=1e-300)
    assert softplus(0.0) == pytest.approx(np.log(2))


def test_soft_min_equal_terms():
    val, w = soft_min(np.full(4, 1.5), 10.0)
    assert val == pytest.approx(1.5 - np.log(4) / 10)
    assert np.allclose(w, 0.25)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=8), st.floats(0.5, 50))
def test_soft_min_sandwich(x, beta):
    val, _ = soft_min(x, beta)
    assert min(x) - np.log(len(x)) / beta - 1e-9 <= val <= min(x) + 1e-9


def test_gamma_zero_terms():
    # K=1, r_c equal to the common rate makes Gamma vanish
    obj = MaxMinObjective(np.array([1.0, 1.0]), [0.0], 1.0)
    R = np.array([0.0, 0.7])
    bd, _ = obj.breakdown_from_rates(R)
    assert bd.Gamma == 0.0
    assert bd.F_pen == pytest.approx(-10 / 10 * np.log(2))
    assert bd.F_rew == pytest.approx(0.1 / 10 * np.log(2))
    assert bd.Delta == -bd.Gamma


def test_breakdown_matches_transcription(small_channel, small_config, rng):
    theta = random_phases(rng, 2, 4)
    powers = np.array([0.03, 0.04, 0.03])
    r_c = np.array([0.4, 0.2])
    b, mu, eta = 10.0, 10.0, 0.1
    bd = smooth_objective(theta, small_channel, powers, r_c, small_config.noise_power)
    R_c, R_p = common_and_private_rates(gains(theta, small_channel), powers,
                                        small_config.noise_power)
    r, Rc, Rp = r_c * LN2, R_c * LN2, R_p * LN2
    F_fair = -np.log(np.sum(np.exp(-b * (r + Rp)))) / b
    Gamma = r.sum() + np.log(np.sum(np.exp(-b * Rc))) / b
    F_pen = -mu / b * np.log1p(np.exp(b * Gamma))
    F_rew = eta / b * np.log1p(np.exp(-b * Gamma))
    assert bd.F_fair == pytest.approx(F_fair, rel=1e-10)
    assert bd.Gamma == pytest.approx(Gamma, rel=1e-10, abs=1e-12)
    assert bd.F_pen == pytest.approx(F_pen, rel=1e-10)
    assert bd.F_rew == pytest.approx(F_rew, rel=1e-10)
    assert bd.J == pytest.approx(F_fair + F_pen + F_rew, rel=1e-10)


@pytest.mark.parametrize("kind", ["maxmin", "sumrate", "noma"])
def test_gradient_finite_differences(kind):
    rng = np.random.default_rng({"maxmin": 1, "sumrate": 2, "noma": 3}[kind])
    for _ in range(4):
        problem, theta = random_gradient_instance(rng, kind)
        assert fd_gradient_error(problem, theta) < 1e-5


def test_common_layer_phase_has_zero_derivative():
    _, _, _, problem, theta = _maxmin_problem(1)
    _, grad = problem.value_and_grad(theta)
    direction = np.zeros_like(theta)
    direction[4:] = 1j * theta[4:]  # rotate layer 2 as a whole
    assert abs(inner(grad, direction)) < 1e-9 * np.linalg.norm(grad)


def test_riemannian_projection(rng):
    theta = np.exp(2j * np.pi * rng.random(10))
    g = riemannian_project(rng.standard_normal(10) + 1j * rng.standard_normal(10), theta)
    assert np.max(np.abs(np.real(g * np.conj(theta)))) < 1e-12
    assert np.allclose(riemannian_project(g, theta), g)
    assert np.allclose(riemannian_project(3.0 * theta, theta), 0)


def test_pr_direction(rng):
    theta = np.exp(2j * np.pi * rng.random(6))
    g_old, u_old, g_new = (_tangent(rng, theta) for _ in range(3))
    u, gamma = pr_direction(g_new, None, None, theta)
    assert np.allclose(u, g_new) and gamma == 0
    u, gamma = pr_direction(g_new, g_new, u_old, theta)
    assert gamma == pytest.approx(0.0, abs=1e-12)
    theta_new = np.exp(2j * np.pi * rng.random(6))
    g_new = _tangent(rng, theta_new)
    u, gamma = pr_direction(g_new, g_old, u_old, theta_new)
    go = g_old - np.real(g_old * np.conj(theta_new)) * theta_new
    hand = np.sum(np.real(np.conj(g_new) * (g_new - go))) / np.sum(np.abs(g_old) ** 2)
    assert gamma == pytest.approx(max(0.0, hand), rel=1e-12)
    assert np.max(np.abs(np.real(u * np.conj(theta_new)))) < 1e-12
    u, gamma = pr_direction(g_new, np.zeros(6), u_old, theta_new)
    assert np.allclose(u, g_new)


def test_retraction(rng):
    theta = np.exp(2j * np.pi * rng.random(8))
    u = _tangent(rng, theta)
    assert np.allclose(retract(theta, u, 0.0), theta)
    errs = []
    for alpha in (1e-2, 1e-3, 1e-4):
        out = retract(theta, u, alpha)
        assert np.max(np.abs(np.abs(out) - 1)) < 1e-12
        errs.append(np.linalg.norm(out - (theta + alpha * u)))
    # quadratic: each decade of alpha drops the error by about 100
    assert errs[0] / errs[1] == pytest.approx(100, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(100, rel=0.05)
    with pytest.raises(RetractionError):
        retract(np.array([1.0 + 0j]), np.array([-1.0 + 0j]), 1.0)


def test_armijo_condition():
    _, _, _, problem, theta = _maxmin_problem(2)
    J, egrad = problem.value_and_grad(theta)
    g = riemannian_project(egrad, theta)
    alpha, new, J_new = armijo_search(theta, g, g, J, problem.value)
    assert alpha > 0
    assert J_new >= J + ARMIJO_C * alpha * inner(g, g)
    assert armijo_search(theta, np.zeros_like(g), g, J, problem.value)[0] == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_rcg_invariants_and_monotone(seed):
    _, _, _, problem, theta = _maxmin_problem(seed, K=3, M=9, L=3)
    best, trace = rcg_loop(problem, theta)
    assert np.all(np.diff(trace.objective) >= 0)
    assert max(trace.modulus_error) < 1e-12
    assert max(trace.tangency) < 1e-10
    assert problem.value(best) == pytest.approx(max(trace.objective))


def test_rcg_degenerate_gradient_returns_start(small_channel):
    # zero power everywhere gives a flat objective
    obj = MaxMinObjective(np.zeros(3), np.zeros(2), 1e-13)
    theta = np.ones(8, dtype=complex)
    out, trace = rcg_loop(PhaseProblem(small_channel, obj), theta)
    assert np.array_equal(out, theta) and trace.iterations == 0


@pytest.mark.parametrize("seed", range(3))
def test_rcg_beats_random_phases(seed):
    cfg, ch, pa, problem, theta = _maxmin_problem(seed)
    out, _ = rcg_loop(problem, theta, max_iter=2000, patience=20)
    final = problem.objective.exact_min_rate(gains(out, ch))
    samples = sample_phase_min_rates(ch, cfg, pa, np.random.default_rng(seed + 100), 10_000)
    # a user with ~zero private power sits at r_c,k for every theta; allow rounding
    assert final >= samples.max() - 1e-8
    start = problem.objective.exact_min_rate(gains(theta, ch))
    assert final >= start - np.log(2) / 10 / LN2
