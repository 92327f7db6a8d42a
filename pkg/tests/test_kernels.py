import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from simrsma import _kernels_py, kernels
from simrsma.config import SystemConfig
from simrsma.geometry import realize
from simrsma.rates import effective_gains, wave_response

compiled = pytest.importorskip("simrsma._kernels", reason="compiled extension not built")


@pytest.mark.parametrize("M,L,K", [(4, 1, 1), (16, 3, 2), (36, 2, 3), (9, 4, 2)])
def test_backends_agree(M, L, K):
    ch = realize(SystemConfig(atoms_per_layer=M, layers=L, num_users=K), 5)
    rng = np.random.default_rng(M * L)
    theta = np.exp(2j * np.pi * rng.random((L, M)))
    C = rng.standard_normal((K, K + 1)) + 1j * rng.standard_normal((K, K + 1))
    a_py = _kernels_py.forward_amplitudes(theta, ch.Q1, ch.Qs, ch.H)
    a_cy = compiled.forward_amplitudes(theta, ch.Q1, ch.Qs, ch.H)
    assert np.allclose(a_cy, a_py, rtol=1e-12, atol=1e-12 * np.abs(a_py).max())
    g_py = _kernels_py.phase_gradient(theta, ch.Q1, ch.Qs, ch.H, C)
    g_cy = compiled.phase_gradient(theta, ch.Q1, ch.Qs, ch.H, C)
    assert np.allclose(g_cy, g_py, rtol=1e-12, atol=1e-12 * np.abs(g_py).max())


@pytest.mark.parametrize("mod", [_kernels_py, compiled])
def test_forward_matches_explicit_product(mod):
    ch = realize(SystemConfig(atoms_per_layer=4, layers=3, num_users=2), 1)
    theta = np.exp(2j * np.pi * np.random.default_rng(0).random((3, 4)))
    F = wave_response(theta.ravel(), ch.Qs)
    A = mod.forward_amplitudes(theta, ch.Q1, ch.Qs, ch.H)
    assert np.allclose(np.abs(A) ** 2, effective_gains(F, ch.Q1, ch.H), rtol=1e-12)


@pytest.mark.parametrize("mod", [_kernels_py, compiled])
def test_gradient_is_derivative_of_linear_functional(mod):
    # J = Re sum conj(C) * A  has dJ = Re sum conj(grad) dtheta with grad from the kernel
    ch = realize(SystemConfig(atoms_per_layer=4, layers=2, num_users=2), 2)
    rng = np.random.default_rng(1)
    theta = np.exp(2j * np.pi * rng.random((2, 4)))
    C = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    J = lambda th: np.real(np.sum(np.conj(C) * mod.forward_amplitudes(th, ch.Q1, ch.Qs, ch.H)))
    grad = mod.phase_gradient(theta, ch.Q1, ch.Qs, ch.H, C)
    dz = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    h = 1e-6
    fd = (J(theta + h * dz) - J(theta - h * dz)) / (2 * h)
    # the kernel returns 2 * dJ/dconj(theta) for |A|^2-type use; linear J gives half of it
    assert np.real(np.vdot(grad, dz)) / 2 == pytest.approx(fd, rel=1e-6)


def test_pure_python_switch():
    code = "from simrsma import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, SIMRSMA_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    env["SIMRSMA_PURE_PYTHON"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "cython"
    assert kernels.BACKEND in ("cython", "python")
