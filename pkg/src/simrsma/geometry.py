"""SIM geometry, Rayleigh-Sommerfeld layer couplings and correlated user channels.

Coordinate frame: the BS antennas sit on the x-axis at height ``bs_height``,
the metasurface layers are stacked along +z above them (the first layer one
inter-layer gap above the antenna plane, the last one a full SIM thickness
above it), and users stand on the ground (z = 0) along the y-axis, the first
one directly below the SIM axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, SystemConfig

CLIP_TRIP = -1e-8


class ChannelError(ArithmeticError):
    """Raised when the correlation matrix is numerically not PSD."""


@dataclass(frozen=True)
class Geometry:
    antenna_positions: np.ndarray  # (N, 3)
    atom_positions: np.ndarray  # (L, M, 3)
    user_positions: np.ndarray  # (K, 3)

    @property
    def last_layer_center(self) -> np.ndarray:
        return self.atom_positions[-1].mean(axis=0)


@dataclass(frozen=True)
class ChannelRealization:
    """One propagation environment.

    ``Q1`` is M x N with column 0 the common-stream antenna, ``Qs`` stacks the
    inter-layer matrices Q_2..Q_L as an (L-1, M, M) array, ``H`` holds the
    user channels h_k as columns (M x K).
    """

    Q1: np.ndarray
    Qs: np.ndarray
    H: np.ndarray
    T: np.ndarray
    zeta: np.ndarray
    seed: int

    @property
    def num_atoms(self) -> int:
        return self.Q1.shape[0]

    @property
    def num_layers(self) -> int:
        return self.Qs.shape[0] + 1

    @property
    def num_users(self) -> int:
        return self.H.shape[1]


def build_geometry(config: SystemConfig) -> Geometry:
    side = config.grid_side
    if side * side != config.atoms_per_layer:
        raise ConfigError("atoms_per_layer must be a perfect square")
    spacing = config.atom_spacing
    if spacing <= 0 or config.layer_spacing <= 0:
        raise ConfigError("spacings must be positive")

    offsets = (np.arange(side) - (side - 1) / 2.0) * spacing
    gx, gy = np.meshgrid(offsets, offsets, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])

    layers = []
    for ell in range(1, config.layers + 1):
        z = config.bs_height + ell * config.layer_spacing
        layers.append(np.column_stack([grid, np.full(len(grid), z)]))
    atoms = np.stack(layers)

    n = config.num_antennas
    ant_x = (np.arange(n) - (n - 1) / 2.0) * spacing
    antennas = np.column_stack([ant_x, np.zeros(n), np.full(n, config.bs_height)])

    users = np.column_stack([
        np.zeros(config.num_users),
        np.arange(config.num_users) * config.user_spacing,
        np.zeros(config.num_users),
    ])
    return Geometry(antennas, atoms, users)


def rs_coefficient(src, dst, wavelength: float, atom_area: float) -> complex:
    """Rayleigh-Sommerfeld transmission coefficient from ``src`` to ``dst``.

    The incidence cosine is the axial (z) offset over the distance.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    delta = dst - src
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        raise ZeroDivisionError("coincident source and destination")
    cos_psi = delta[2] / d
    return complex(atom_area * cos_psi / d
                   * (1.0 / (2 * np.pi * d) - 1j / wavelength)
                   * np.exp(2j * np.pi * d / wavelength))


def rs_matrix(src: np.ndarray, dst: np.ndarray, wavelength: float, atom_area: float) -> np.ndarray:
    """Vectorised coefficients, entry [m, m'] from src[m'] to dst[m]."""
    delta = dst[:, None, :] - src[None, :, :]
    d = np.linalg.norm(delta, axis=-1)
    if np.any(d == 0.0):
        raise ZeroDivisionError("coincident source and destination")
    cos_psi = delta[..., 2] / d
    return (atom_area * cos_psi / d
            * (1.0 / (2 * np.pi * d) - 1j / wavelength)
            * np.exp(2j * np.pi * d / wavelength))


def build_transmission_matrices(geom: Geometry, config: SystemConfig):
    """Return ``(Q1, Qs)``; ``Qs`` has shape (L-1, M, M) and may be empty."""
    lam, area = config.wavelength, config.atom_area
    Q1 = rs_matrix(geom.antenna_positions, geom.atom_positions[0], lam, area)
    M = config.atoms_per_layer
    Qs = np.empty((config.layers - 1, M, M), dtype=complex)
    for ell in range(1, config.layers):
        Qs[ell - 1] = rs_matrix(geom.atom_positions[ell - 1], geom.atom_positions[ell], lam, area)
    return Q1, Qs


def correlation_matrix(geom: Geometry, wavelength: float) -> np.ndarray:
    pts = geom.atom_positions[-1]
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    # np.sinc is the normalised sinc: sin(pi x) / (pi x)
    return np.sinc(2.0 * d / wavelength)


def path_loss(distance, config: SystemConfig):
    return config.pathloss_ref * (np.asarray(distance, dtype=float) / config.ref_distance) ** (-config.pathloss_exp)


def user_distances(geom: Geometry) -> np.ndarray:
    return np.linalg.norm(geom.user_positions - geom.last_layer_center, axis=1)


def sqrt_psd(T: np.ndarray) -> np.ndarray:
    """Symmetric square root with negative eigenvalues clipped to zero."""
    w, V = np.linalg.eigh(T)
    if w.min() < CLIP_TRIP:
        raise ChannelError(f"correlation matrix has eigenvalue {w.min():.3e}")
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def sample_channels(seed: int, geom: Geometry, config: SystemConfig, T: np.ndarray,
                    Q=None) -> ChannelRealization:
    rng = np.random.default_rng(seed)
    M, K = config.atoms_per_layer, config.num_users
    root = sqrt_psd(T)
    w = (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2.0)
    zeta = path_loss(user_distances(geom), config)
    H = (root @ w) * np.sqrt(zeta)
    if Q is None:
        Q = build_transmission_matrices(geom, config)
    Q1, Qs = Q
    return ChannelRealization(Q1=Q1, Qs=Qs, H=H, T=T, zeta=zeta, seed=seed)


def realize(config: SystemConfig, seed: int) -> ChannelRealization:
    """Build geometry, couplings and one channel draw in a single call."""
    geom = build_geometry(config)
    T = correlation_matrix(geom, config.wavelength)
    return sample_channels(seed, geom, config, T)
