import csv
import json
from xml.etree import ElementTree

import pytest

from helpers import COMMAND, write_config
from shielded_lmc.cli import main
from shielded_lmc.config import DEFAULTS, load_config, merge, validate
from shielded_lmc.errors import ConfigError
from shielded_lmc.experiments import format_value, mimo_variants


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("experiment", list(DEFAULTS))
def test_defaults_validate(experiment):
    cfg = load_config(None, experiment)
    validate(cfg)
    assert cfg["experiment"] == experiment


def test_gmm_defaults():
    s = DEFAULTS["gmm"]["sampler"]
    assert s["alpha_sweep"] == [0.1, 1.0, 7.0]
    assert s["tau"] == 0.2
    assert s["n_steps"] == 50_000 and s["burn_in"] == 1_000


def test_default_mimo_variants():
    m = DEFAULTS["mimo"]["mimo"]
    assert len(mimo_variants(m)) * len(m["snr_db"]) == 20
    assert m["trials"] == 500 and m["snr_db"] == [0.0, 5.0, 10.0, 15.0]


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="sampler.stepsize"):
        merge(DEFAULTS["gmm"], {"sampler": {"stepsize": 0.1}})


@pytest.mark.parametrize("experiment,key,value", [
    ("mimo", "mimo.trials", 0),
    ("mimo", "mimo.snr_db", []),
    ("mimo", "mimo.obstacle_radius", -0.5),
    ("gmm", "sampler.step_size", 0.0),
    ("gmm", "sampler.burn_in", 5000),
    ("gmm", "sampler.alpha_sweep", []),
])
def test_invalid_values(tmp_path, experiment, key, value):
    path = write_config(tmp_path / "c.json", experiment, **{key: value})
    with pytest.raises(ConfigError, match="c.json"):
        load_config(str(path), experiment)


def test_decreasing_levels_required():
    cfg = merge(DEFAULTS["mimo"], {"mimo": {"schedule": {"sigma_max": 0.01, "sigma_min": 0.5}}})
    with pytest.raises(ConfigError):
        validate(cfg)


def test_format_value():
    assert format_value(0.1) == "0.1"
    assert format_value(True) == "1"
    assert format_value(None) == ""
    assert format_value(3) == "3"


def test_exit_code_config(tmp_path, capsys):
    path = write_config(tmp_path / "c.json", "mimo", **{"mimo.trials": 0})
    assert main(["mimo", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "trials" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["gmm", "--config", str(bad)]) == 2
    wrong = write_config(tmp_path / "w.json", "mimo")
    assert main(["gmm", "--config", str(wrong)]) == 2


def test_exit_code_io(tmp_path):
    assert main(["gmm", "--config", str(tmp_path / "missing.json")]) == 4
    blocker = tmp_path / "file"
    blocker.write_text("")
    path = write_config(tmp_path / "c.json", "naive-ablation")
    assert main(["naive", "--config", str(path), "--out", str(blocker / "sub")]) == 4


def test_gmm_cli_outputs(tmp_path):
    cfg = write_config(tmp_path / "c.json", "gmm")
    out = tmp_path / "o"
    assert main(["gmm", "--config", str(cfg), "--out", str(out), "--plot", "--seed", "3"]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["manifest.json", "samples_0.1.csv", "samples_1.csv", "scatter_0.1.svg",
                     "scatter_1.svg", "stats.csv"]
    rows = read_csv(out / "samples_1.csv")
    assert rows[0] == ["step", "chain", "x1", "x2", "beta", "feasible"]
    assert len(rows) == 1 + 90 * 4
    assert rows[1][:2] == ["220", "0"]
    stats = read_csv(out / "stats.csv")
    assert stats[0][:4] == ["run_id", "alpha", "tau", "feasibility_rate"]
    assert [r[0] for r in stats[1:]] == ["alpha=0.1", "alpha=1"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["experiment"] == "gmm"
    root = ElementTree.parse(out / "scatter_1.svg").getroot()
    assert root.tag == "{http://www.w3.org/2000/svg}svg" and root.get("version") == "1.1"


def test_gmm_single_alpha(tmp_path):
    cfg = write_config(tmp_path / "c.json", "gmm", **{"sampler.alpha_sweep": [1.0]})
    out = tmp_path / "o"
    assert main(["gmm", "--config", str(cfg), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("samples_*.csv")) == ["samples_1.csv"]


def test_mimo_cli_outputs(tmp_path):
    cfg = write_config(tmp_path / "c.json", "mimo")
    out = tmp_path / "o"
    assert main(["mimo", "--config", str(cfg), "--out", str(out), "--plot"]) == 0
    rows = read_csv(out / "ser.csv")
    assert rows[0] == ["detector", "alpha_bar", "snr_db", "trials", "symbol_errors", "ser", "alpha"]
    assert [r[0] for r in rows[1:]] == ["ml", "ula", "shielded"] * 2
    for r in rows[1:]:
        assert int(r[4]) <= 3 * 4
        assert float(r[5]) == pytest.approx(int(r[4]) / 12)
    ElementTree.parse(out / "ser.svg")


def test_naive_cli_outputs(tmp_path):
    cfg = write_config(tmp_path / "c.json", "naive-ablation")
    out = tmp_path / "o"
    assert main(["naive", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "violation.csv")
    assert rows[0][:4] == ["seed", "tau", "n_chains", "n_steps"]
    assert [r[0] for r in rows[1:]] == ["0", "1"]


def test_naive_zero_temperature(tmp_path):
    cfg = write_config(tmp_path / "c.json", "naive-ablation", **{"sampler.tau": 0.0})
    out = tmp_path / "o"
    assert main(["naive", "--config", str(cfg), "--out", str(out)]) == 0
    for r in read_csv(out / "violation.csv")[1:]:
        assert r[4:8] == ["0", "0", "0.0", "0.0"]


@pytest.mark.parametrize("experiment", ["gmm", "naive-ablation", "mimo"])
def test_shared_seed_rerun_identical(tmp_path, experiment):
    cfg = write_config(tmp_path / "c.json", experiment)
    outs, manifests = [], []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main([COMMAND[experiment], "--config", str(cfg), "--out", str(out), "--seed", "11"]) == 0
        outs.append({p.name: p.read_bytes() for p in out.glob("*.csv")})
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["output"].pop("dir") == str(out)
        manifests.append(manifest)
    assert outs[0] and outs[0] == outs[1]
    assert manifests[0] == manifests[1]
