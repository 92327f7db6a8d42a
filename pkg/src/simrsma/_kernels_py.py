"""Pure numpy implementation of the layered-propagation kernels.

``theta`` is an (L, M) complex array, ``Q1`` is M x N, ``Qs`` is (L-1, M, M)
and ``H`` is M x K.  The end-to-end amplitudes are
``A[k, j] = h_k^H Theta_L Q_L ... Theta_1 q_j``.
"""

import numpy as np


def forward_amplitudes(theta, Q1, Qs, H):
    V = Q1
    for ell in range(theta.shape[0] - 1):
        V = Qs[ell] @ (theta[ell][:, None] * V)
    return H.conj().T @ (theta[-1][:, None] * V)


def phase_gradient(theta, Q1, Qs, H, C):
    """Gradient of ``sum_kj Re(conj(C_kj) A_kj)``-type objectives.

    ``C = W * A`` where ``W[k, j]`` is the derivative of the objective with
    respect to the gain ``|A[k, j]|**2``; the result ``g`` satisfies
    ``dJ = Re(sum(conj(g) * dtheta))``.
    """
    L = theta.shape[0]
    V = [Q1]
    for ell in range(L - 1):
        V.append(Qs[ell] @ (theta[ell][:, None] * V[-1]))
    grad = np.empty(theta.shape, dtype=complex)
    X = H
    for ell in range(L - 1, -1, -1):
        grad[ell] = 2.0 * np.sum((X @ C) * V[ell].conj(), axis=1)
        if ell > 0:
            X = Qs[ell - 1].conj().T @ (theta[ell].conj()[:, None] * X)
    return grad


class Propagator:
    """Binds one channel's couplings; mirrors the compiled class."""

    def __init__(self, Q1, Qs, H):
        self.Q1 = np.asarray(Q1)
        self.Qs = np.asarray(Qs)
        self.H = np.asarray(H)
        self.M, self.N = self.Q1.shape
        self.K = self.H.shape[1]
        self.L = self.Qs.shape[0] + 1

    def forward(self, theta):
        return forward_amplitudes(theta, self.Q1, self.Qs, self.H)

    def gradient(self, theta, C):
        return phase_gradient(theta, self.Q1, self.Qs, self.H, C)
