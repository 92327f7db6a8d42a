import json
import math

import pytest

from simrsma.config import (ConfigError, SystemConfig, db_to_linear, dbm_to_watts, load_json,
                            watts_to_dbm)


def test_defaults_are_desk_scale():
    c = SystemConfig()
    assert (c.num_users, c.layers, c.atoms_per_layer) == (3, 2, 36)
    assert c.num_antennas == c.num_users + 1
    assert c.wavelength == pytest.approx(0.010707, abs=1e-6)
    assert c.atom_area == pytest.approx(c.wavelength ** 2 / 4)
    assert c.layer_spacing == pytest.approx(5 * c.wavelength / c.layers)
    assert c.max_power == pytest.approx(0.1)
    assert c.noise_power == pytest.approx(1e-13)
    assert c.pathloss_ref == pytest.approx(1e-6)


def test_unit_conversions_round_trip():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert watts_to_dbm(dbm_to_watts(-17.5)) == pytest.approx(-17.5)
    assert db_to_linear(-60) == pytest.approx(1e-6)


@pytest.mark.parametrize("changes", [
    {"atoms_per_layer": 10},
    {"num_users": 0},
    {"layers": -1},
    {"max_power": 0.0},
    {"noise_power": -1.0},
    {"lse_sharpness": float("nan")},
    {"reward_weight": 10.0},
    {"ao_max_iter": 0},
])
def test_invalid_configs_rejected(changes):
    with pytest.raises(ConfigError):
        SystemConfig(**changes)


def test_from_dict_aliases_and_unknown_keys():
    c = SystemConfig.from_dict({"max_power_dbm": 10, "noise_power_dbm": -90, "pathloss_ref_db": -50})
    assert c.max_power == pytest.approx(0.01)
    assert c.noise_power == pytest.approx(1e-12)
    assert c.pathloss_ref == pytest.approx(1e-5)
    with pytest.raises(ConfigError, match="unknown"):
        SystemConfig.from_dict({"num_user": 3})
    with pytest.raises(ConfigError, match="both"):
        SystemConfig.from_dict({"max_power": 1.0, "max_power_dbm": 30})


def test_dict_round_trip():
    c = SystemConfig(num_users=4, layers=3)
    assert SystemConfig.from_dict(c.to_dict()) == c


def test_load_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"num_users": 2}))
    assert load_json(p) == {"num_users": 2}
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_json(p)


def test_grid_side():
    assert SystemConfig(atoms_per_layer=49).grid_side == 7
    assert math.isqrt(SystemConfig().atoms_per_layer) == SystemConfig().grid_side
