import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simrsma.config import SystemConfig
from simrsma.geometry import realize
from simrsma.rates import (PowerAllocation, common_and_private_rates, decodability_slack,
                          effective_gains, gains, jain_index, noma_order, noma_stream_terms,
                          noma_user_rates, random_phases, rate_report, rsma_stream_terms, sinr,
                          wave_response, waterfill_common)


def _unit(rng, shape):
    return np.exp(2j * np.pi * rng.random(shape))


def test_wave_response_single_layer_is_diagonal(rng):
    theta = _unit(rng, 5)
    assert np.allclose(wave_response(theta, np.zeros((0, 5, 5))), np.diag(theta))


def test_wave_response_unit_phases_two_layers(rng):
    Q = rng.standard_normal((1, 4, 4)) + 1j * rng.standard_normal((1, 4, 4))
    assert np.allclose(wave_response(np.ones(8), Q), Q[0])


def test_wave_response_naive_product(rng):
    L, M = 4, 3
    Qs = rng.standard_normal((L - 1, M, M)) + 1j * rng.standard_normal((L - 1, M, M))
    theta = _unit(rng, L * M)
    F = np.diag(theta[:M])
    for ell in range(1, L):
        F = np.diag(theta[ell * M:(ell + 1) * M]) @ Qs[ell - 1] @ F
    assert np.allclose(wave_response(theta, Qs), F)
    with pytest.raises(ValueError):
        wave_response(theta[:-1], Qs)


def test_gains_match_explicit_response(small_channel, rng):
    theta = random_phases(rng, 2, 4)
    F = wave_response(theta, small_channel.Qs)
    assert np.allclose(gains(theta, small_channel),
                       effective_gains(F, small_channel.Q1, small_channel.H), rtol=1e-12)


def test_gains_invariant_to_layer_phase(small_channel, rng):
    theta = random_phases(rng, 2, 4)
    shifted = theta.copy()
    shifted[4:] *= np.exp(0.7j)
    assert np.allclose(gains(theta, small_channel), gains(shifted, small_channel), rtol=1e-12)


def test_jain_examples():
    assert jain_index([1, 2, 3]) == pytest.approx(6 / 7)
    assert jain_index([0, 0, 0]) == 1.0
    assert jain_index([2, 2]) == pytest.approx(1.0)
    assert jain_index([5, 0, 0, 0]) == pytest.approx(0.25)


@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=8))
def test_jain_bounds(rates):
    j = jain_index(rates)
    assert 1 / len(rates) - 1e-12 <= j <= 1 + 1e-12


def test_rates_match_sinr(rng):
    G = rng.random((3, 4)) * 1e-10
    pa = PowerAllocation(0.02, np.array([0.03, 0.01, 0.04]), np.zeros(3))
    noise = 1e-12
    R_c, R_p = common_and_private_rates(G, pa.powers, noise)
    for k in range(3):
        assert R_c[k] == pytest.approx(np.log2(1 + sinr(G, pa, noise, k, "common")), rel=1e-12)
        assert R_p[k] == pytest.approx(np.log2(1 + sinr(G, pa, noise, k, "private")), rel=1e-12)
    with pytest.raises(ValueError):
        sinr(G, pa, noise, 0, "other")
    with pytest.raises(ValueError):
        common_and_private_rates(G, np.array([0.1, -0.1, 0, 0]), noise)


def test_stream_terms_agree_with_direct_rates(rng):
    G = rng.random((3, 4))
    powers = rng.random(4)
    terms = rsma_stream_terms(3)
    r = terms.rates_nats(G, powers, 0.1) / np.log(2)
    R_c, R_p = common_and_private_rates(G, powers, 0.1)
    assert np.allclose(r[:3], R_c) and np.allclose(r[3:], R_p)


def test_gain_weights_chain_rule(rng):
    G = rng.random((2, 3))
    powers = rng.random(3)
    terms = noma_stream_terms([1, 0])
    w = rng.standard_normal(len(terms))
    J = lambda g: float(w @ terms.rates_nats(g, powers, 0.3))
    W = terms.gain_weights(G, powers, 0.3, w)
    h = 1e-7
    fd = np.zeros_like(G)
    for idx in np.ndindex(G.shape):
        e = np.zeros_like(G)
        e[idx] = h
        fd[idx] = (J(G + e) - J(G - e)) / (2 * h)
    assert np.allclose(W, fd, rtol=1e-6, atol=1e-8)


def test_rate_report_consistency(rng):
    G = rng.random((3, 4))
    pa = PowerAllocation(0.2, np.array([0.3, 0.1, 0.4]), np.array([0.1, 0.0, 0.05]))
    rep = rate_report(G, pa, 0.5)
    assert np.allclose(rep.R_total, pa.r_c + rep.R_p_per_user)
    assert rep.min_rate == pytest.approx(rep.R_total.min())
    assert rep.sum_rate == pytest.approx(rep.R_total.sum())
    assert rep.R_common == pytest.approx(rep.R_c_per_user.min())
    assert decodability_slack(rep, pa.r_c) == pytest.approx(rep.R_common - 0.15)


def test_noma_rates_two_users(rng):
    G = rng.random((2, 3))
    p = np.array([0.0, 0.7, 0.3])
    n = 0.2
    rates = noma_user_rates(G, p, n, [0, 1])
    # user 0 decoded first, at both users, with user 1's stream as interference
    r0 = min(np.log2(1 + p[1] * G[i, 1] / (p[2] * G[i, 2] + n)) for i in (0, 1))
    r1 = np.log2(1 + p[2] * G[1, 2] / n)
    assert rates == pytest.approx([r0, r1], rel=1e-12)
    single = noma_user_rates(G[:1, :2], p[:2], n, [0])
    assert single[0] == pytest.approx(np.log2(1 + p[1] * G[0, 1] / n))


def test_noma_order_sorts_own_gain():
    G = np.array([[0, 3.0, 0, 0], [0, 0, 1.0, 0], [0, 0, 0, 2.0]])
    assert list(noma_order(G)) == [1, 2, 0]


def test_waterfill_examples():
    assert np.allclose(waterfill_common([1.0, 2.0, 3.0], 0.0), 0.0)
    r = waterfill_common([1.0, 2.0, 3.0], 1.5)
    assert np.allclose(r, [1.25, 0.25, 0.0])
    r = waterfill_common([1.0, 1.0], 1.0)
    assert np.allclose(r, [0.5, 0.5])


@settings(max_examples=200)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=6), st.floats(0, 10),
       st.integers(0, 2 ** 32 - 1))
def test_waterfill_optimal(R_p, budget, seed):
    R_p = np.array(R_p)
    r = waterfill_common(R_p, budget)
    assert np.all(r >= 0)
    assert r.sum() == pytest.approx(budget, abs=1e-9)
    best = np.min(r + R_p)
    rng = np.random.default_rng(seed)
    for split in rng.dirichlet(np.ones(len(R_p)), size=50):
        assert np.min(split * budget + R_p) <= best + 1e-9


def test_rates_on_real_channel(desk_channel, desk_config, rng):
    theta = random_phases(rng, desk_config.layers, desk_config.atoms_per_layer)
    G = gains(theta, desk_channel)
    assert G.shape == (3, 4) and np.all(G > 0)
    pa = PowerAllocation.uniform(desk_config.max_power, 3)
    R_c, R_p = common_and_private_rates(G, pa.powers, desk_config.noise_power)
    assert np.all(np.isfinite(R_c)) and np.all(R_p >= 0)


def test_wave_response_associativity(rng):
    L, M = 3, 4
    Qs = rng.standard_normal((L - 1, M, M)) + 1j * rng.standard_normal((L - 1, M, M))
    theta = _unit(rng, L * M)
    D = [np.diag(theta[i * M:(i + 1) * M]) for i in range(L)]
    left = D[2] @ (Qs[1] @ (D[1] @ (Qs[0] @ D[0])))
    right = (((D[2] @ Qs[1]) @ D[1]) @ Qs[0]) @ D[0]
    F = wave_response(theta, Qs)
    assert np.linalg.norm(F - left) / np.linalg.norm(F) < 1e-12
    assert np.linalg.norm(F - right) / np.linalg.norm(F) < 1e-12


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.01, 3.0))
def test_private_rate_monotone_in_power(seed, factor):
    rng = np.random.default_rng(seed)
    G = rng.random((3, 4)) + 0.01
    powers = rng.random(4) + 0.01
    _, before = common_and_private_rates(G, powers, 0.1)
    for k in range(3):
        up = powers.copy()
        up[k + 1] *= factor
        _, after = common_and_private_rates(G, up, 0.1)
        assert after[k] > before[k]
        others = [j for j in range(3) if j != k]
        assert np.all(after[others] <= before[others] + 1e-15)
