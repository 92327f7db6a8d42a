"""System constants for the SIM-assisted RSMA downlink.

Physical quantities are stored in SI/linear units. The JSON loader also
accepts ``*_dbm`` / ``*_db`` aliases which are converted once, at load time.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Raised for inconsistent or physically meaningless configurations."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts * 1000.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    num_users: int = 3
    layers: int = 2
    atoms_per_layer: int = 36
    carrier_hz: float = 28e9
    bs_height: float = 5.0
    user_spacing: float = 5.0
    max_power: float = field(default_factory=lambda: dbm_to_watts(20.0))
    noise_power: float = field(default_factory=lambda: dbm_to_watts(-100.0))
    pathloss_ref: float = field(default_factory=lambda: db_to_linear(-60.0))
    ref_distance: float = 1.0
    pathloss_exp: float = 3.5
    # smoothing / penalty constants of the phase objective (natural-log units)
    lse_sharpness: float = 10.0
    penalty_weight: float = 10.0
    reward_weight: float = 0.1
    sca_tol: float = 1e-4
    sca_max_iter: int = 50
    rcg_tol: float = 1e-6
    rcg_max_iter: int = 2000
    rcg_patience: int = 20
    ao_tol: float = 1e-3
    ao_max_iter: int = 20

    def __post_init__(self):
        for name in ("num_users", "layers", "atoms_per_layer"):
            value = getattr(self, name)
            if not isinstance(value, (int,)) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        side = math.isqrt(self.atoms_per_layer)
        if side * side != self.atoms_per_layer:
            raise ConfigError(f"atoms_per_layer must be a perfect square, got {self.atoms_per_layer}")
        for name in ("carrier_hz", "bs_height", "user_spacing", "max_power", "noise_power",
                     "pathloss_ref", "ref_distance", "pathloss_exp", "lse_sharpness",
                     "penalty_weight", "reward_weight", "sca_tol", "rcg_tol", "ao_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {value!r}")
        if self.reward_weight >= self.penalty_weight:
            raise ConfigError("reward_weight must be strictly smaller than penalty_weight")
        for name in ("sca_max_iter", "rcg_max_iter", "rcg_patience", "ao_max_iter"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def num_antennas(self) -> int:
        # one antenna per private stream plus the common-stream antenna
        return self.num_users + 1

    @property
    def grid_side(self) -> int:
        return math.isqrt(self.atoms_per_layer)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def atom_area(self) -> float:
        return self.wavelength ** 2 / 4.0

    @property
    def atom_spacing(self) -> float:
        return self.wavelength / 2.0

    @property
    def sim_thickness(self) -> float:
        return 5.0 * self.wavelength

    @property
    def layer_spacing(self) -> float:
        return self.sim_thickness / self.layers

    @property
    def num_phases(self) -> int:
        return self.layers * self.atoms_per_layer

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SystemConfig":
        data = dict(data)
        aliases = {
            "max_power_dbm": ("max_power", dbm_to_watts),
            "noise_power_dbm": ("noise_power", dbm_to_watts),
            "pathloss_ref_db": ("pathloss_ref", db_to_linear),
        }
        for alias, (target, convert) in aliases.items():
            if alias in data:
                if target in data:
                    raise ConfigError(f"both {alias!r} and {target!r} given")
                data[target] = convert(float(data.pop(alias)))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        return cls(**data)


def load_json(path: str | Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return data
