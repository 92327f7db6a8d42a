"""Wave-domain response, effective gains, SINRs and RSMA rates.

Antenna column 0 carries the common stream; column ``k + 1`` carries the
private stream of user ``k``.  Rates are in bits/s/Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import forward_amplitudes


@dataclass(frozen=True)
class PowerAllocation:
    p_c: float
    p: np.ndarray
    r_c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "r_c", np.asarray(self.r_c, dtype=float))
        if self.p_c < 0 or np.any(self.p < 0):
            raise ValueError("powers must be nonnegative")

    @property
    def powers(self) -> np.ndarray:
        """Per-antenna powers ``[p_c, p_1, ..., p_K]``."""
        return np.concatenate([[self.p_c], self.p])

    @property
    def total_power(self) -> float:
        return float(self.p_c + self.p.sum())

    @classmethod
    def from_powers(cls, powers, r_c) -> "PowerAllocation":
        powers = np.asarray(powers, dtype=float)
        return cls(float(powers[0]), powers[1:].copy(), np.asarray(r_c, dtype=float))

    @classmethod
    def uniform(cls, max_power: float, num_users: int) -> "PowerAllocation":
        share = max_power / (num_users + 1)
        return cls(share, np.full(num_users, share), np.zeros(num_users))


@dataclass(frozen=True)
class RateReport:
    R_c_per_user: np.ndarray
    R_p_per_user: np.ndarray
    R_common: float
    R_total: np.ndarray
    min_rate: float
    sum_rate: float
    jain: float


def as_layers(theta, layers: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=complex)
    return theta.reshape(layers, -1)


def random_phases(rng: np.random.Generator, layers: int, atoms: int) -> np.ndarray:
    """Independent uniform phases, stacked layer-major."""
    return np.exp(2j * np.pi * rng.random(layers * atoms))


def wave_response(theta, Qs) -> np.ndarray:
    """F = Theta_L Q_L ... Theta_2 Q_2 Theta_1."""
    Qs = np.asarray(Qs)
    L = Qs.shape[0] + 1
    th = as_layers(theta, L)
    if Qs.shape[1:] != (th.shape[1], th.shape[1]):
        raise ValueError(f"phase length {th.size} does not match couplings {Qs.shape}")
    F = np.diag(th[0])
    for ell in range(1, L):
        F = th[ell][:, None] * (Qs[ell - 1] @ F)
    return F


def effective_gains(F, Q1, H) -> np.ndarray:
    """G[k, j] = |h_k^H F q_j|^2."""
    A = np.asarray(H).conj().T @ np.asarray(F) @ np.asarray(Q1)
    return np.abs(A) ** 2


def gains(theta, channel) -> np.ndarray:
    """Gains straight from the phases, without forming F."""
    th = as_layers(theta, channel.num_layers)
    return np.abs(forward_amplitudes(th, channel.Q1, channel.Qs, channel.H)) ** 2


def _check_powers(powers):
    powers = np.asarray(powers, dtype=float)
    if np.any(powers < 0):
        raise ValueError("powers must be nonnegative")
    return powers


def received_powers(G, powers):
    """Per-user (common-stream total, private-stream total) received powers."""
    rx = np.asarray(G) * powers[None, :]
    private = rx[:, 1:].sum(axis=1)
    return rx[:, 0] + private, private, rx


def sinr(G, pa: PowerAllocation, noise: float, k: int, stream: str) -> float:
    powers = _check_powers(pa.powers)
    G = np.asarray(G)
    if stream == "common":
        interference = float(powers[1:] @ G[k, 1:])
        return float(powers[0] * G[k, 0] / (interference + noise))
    if stream == "private":
        row = powers[1:] * G[k, 1:]
        return float(row[k] / (row.sum() - row[k] + noise))
    raise ValueError(f"unknown stream {stream!r}")


def common_and_private_rates(G, powers, noise: float):
    """Vectors (R_c,k, R_p,k) in bits for all users."""
    powers = _check_powers(powers)
    total, private, rx = received_powers(G, powers)
    own = np.diagonal(rx[:, 1:])
    R_c = np.log2(total + noise) - np.log2(private + noise)
    R_p = np.log2(private + noise) - np.log2(private - own + noise)
    return np.maximum(R_c, 0.0), np.maximum(R_p, 0.0)


def jain_index(rates) -> float:
    rates = np.asarray(rates, dtype=float)
    sq = float(np.sum(rates ** 2))
    if sq == 0.0:
        return 1.0
    return float(rates.sum() ** 2 / (len(rates) * sq))


def rate_report(G, pa: PowerAllocation, noise: float) -> RateReport:
    R_c, R_p = common_and_private_rates(G, pa.powers, noise)
    total = pa.r_c + R_p
    return RateReport(
        R_c_per_user=R_c,
        R_p_per_user=R_p,
        R_common=float(R_c.min()),
        R_total=total,
        min_rate=float(total.min()),
        sum_rate=float(total.sum()),
        jain=jain_index(total),
    )


def decodability_slack(report: RateReport, r_c) -> float:
    return float(report.R_common - np.sum(r_c))


def waterfill_common(R_p, budget: float) -> np.ndarray:
    """Split a common-rate budget to maximise min_k (r_c,k + R_p,k).

    Raises the weakest users to a common water level; the whole budget is
    always handed out.
    """
    R_p = np.asarray(R_p, dtype=float)
    budget = max(float(budget), 0.0)
    order = np.sort(R_p)
    level = order[-1] + budget / len(order)
    for n in range(1, len(order) + 1):
        # level if only the n weakest users are filled
        candidate = (budget + order[:n].sum()) / n
        if n == len(order) or candidate <= order[n]:
            level = candidate
            break
    r_c = np.maximum(level - R_p, 0.0)
    total = r_c.sum()
    if total > 0:
        r_c *= budget / total
    return r_c


@dataclass(frozen=True)
class StreamTerms:
    """Rate rows ``log(S_t + noise) - log(I_t + noise)`` read off the gains.

    Row t is decoded at user ``rows[t]``; ``S_mask``/``I_mask`` (T x N, 0/1)
    select which antenna columns add to the signal-plus-interference and to
    the interference sums.
    """

    rows: np.ndarray
    S_mask: np.ndarray
    I_mask: np.ndarray

    def __len__(self):
        return len(self.rows)

    def powers_matrices(self, G, powers=None):
        """Per-row coefficient matrices over the power vector (T x N)."""
        Gr = np.asarray(G, dtype=float)[self.rows]
        return self.S_mask * Gr, self.I_mask * Gr

    def sums(self, G, powers, noise):
        S_c, I_c = self.powers_matrices(G)
        return S_c @ powers + noise, I_c @ powers + noise

    def rates_nats(self, G, powers, noise):
        S, I = self.sums(G, powers, noise)
        return np.log(S) - np.log(I)

    def gain_weights(self, G, powers, noise, dJ_dR):
        """Chain rule dJ/dG from dJ/dR (rates in nats)."""
        S, I = self.sums(G, powers, noise)
        per_row = (self.S_mask * (dJ_dR / S)[:, None] - self.I_mask * (dJ_dR / I)[:, None]) * powers[None, :]
        W = np.zeros(np.shape(G))
        np.add.at(W, self.rows, per_row)
        return W


def rsma_stream_terms(num_users: int) -> StreamTerms:
    """Common rows (users 0..K-1) followed by private rows."""
    K, N = num_users, num_users + 1
    rows = np.concatenate([np.arange(K), np.arange(K)])
    S = np.ones((2 * K, N))
    I = np.ones((2 * K, N))
    I[:K, 0] = 0.0
    S[K:, 0] = 0.0
    I[K:, 0] = 0.0
    I[K + np.arange(K), np.arange(K) + 1] = 0.0
    return StreamTerms(rows, S, I)


def noma_stream_terms(order) -> StreamTerms:
    """SIC rows for a decoding order (weakest first).

    Stream of user ``order[j]`` is decoded at every user ``order[i]``, i >= j,
    with streams ``order[j' > j]`` as interference.
    """
    order = np.asarray(order, dtype=int)
    K = len(order)
    rows, S, I = [], [], []
    for j in range(K):
        for i in range(j, K):
            s = np.zeros(K + 1)
            s[order[j:] + 1] = 1.0
            it = np.zeros(K + 1)
            it[order[j + 1:] + 1] = 1.0
            rows.append(order[i])
            S.append(s)
            I.append(it)
    return StreamTerms(np.array(rows), np.array(S), np.array(I))


def noma_user_rates(G, powers, noise, order) -> np.ndarray:
    """Per-user NOMA rates in bits: min over the decoders that must decode them."""
    terms = noma_stream_terms(order)
    r = terms.rates_nats(G, np.asarray(powers, dtype=float), noise) / np.log(2.0)
    K = len(order)
    out = np.empty(K)
    idx = 0
    for j in range(K):
        n = K - j
        out[order[j]] = max(r[idx:idx + n].min(), 0.0)
        idx += n
    return out


def noma_order(G) -> np.ndarray:
    """Users sorted by ascending own-antenna gain G[k, k+1]."""
    G = np.asarray(G)
    K = G.shape[0]
    return np.argsort(G[np.arange(K), np.arange(K) + 1], kind="stable")
