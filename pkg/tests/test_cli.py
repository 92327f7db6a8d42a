import json

import pytest

from simrsma.cli import main
from simrsma.harness import read_csv


def _config(tmp_path, **extra):
    doc = {"num_users": 2, "atoms_per_layer": 9, "trials": 2, "seed": 4}
    doc.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def test_run_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "out"
    cfg = _config(tmp_path, schemes=["sdma", "random-phase"])
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "results.csv")
    assert len(rows) == 2 * 2 + 2 * 2
    doc = json.loads((out / "manifest.json").read_text())
    assert doc["spec"]["seed"] == 4 and doc["spec"]["config"]["num_users"] == 2


def test_cli_overrides(tmp_path):
    out = tmp_path / "o"
    cfg = _config(tmp_path)
    assert main(["run", "--config", str(cfg), "--out", str(out), "--seed", "9", "--trials", "1",
                 "--schemes", "sdma"]) == 0
    rows = read_csv(out / "results.csv")
    assert {r["trial"] for r in rows} == {"0", "mean", "stderr"}
    assert json.loads((out / "manifest.json").read_text())["spec"]["seed"] == 9


def test_sweep(tmp_path):
    out = tmp_path / "s"
    cfg = _config(tmp_path, trials=1)
    assert main(["sweep", "--config", str(cfg), "--axis", "users", "--values", "1,2",
                 "--schemes", "sdma", "--out", str(out)]) == 0
    rows = read_csv(out / "results.csv")
    assert [r["axis_value"] for r in rows if r["trial"] == "0"] == ["1", "2"]
    assert main(["sweep", "--config", str(cfg), "--axis", "users", "--values", "1.5",
                 "--out", str(out)]) == 2


def test_converge(tmp_path):
    out = tmp_path / "c"
    cfg = _config(tmp_path, trials=1)
    assert main(["converge", "--config", str(cfg), "--schemes", "sdma", "--out", str(out)]) == 0
    rows = read_csv(out / "convergence.csv")
    assert rows and rows[0]["iteration"] == "1"


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = _config(tmp_path, bogus=1)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "unknown" in capsys.readouterr().err


def test_bad_arguments():
    with pytest.raises(SystemExit):
        main(["sweep", "--axis", "frequency", "--values", "1"])
    with pytest.raises(SystemExit):
        main(["run"])


def test_oracle_check(capsys):
    assert main(["oracle-check", "--samples", "500"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3
