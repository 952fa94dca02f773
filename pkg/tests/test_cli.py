import json

import pytest

from catena.cli import main, parse_config, random_direction
from catena.config import RunConfig, build_config
from catena.errors import InvalidConfig
from catena.geometry import Grid


def load(path):
    return json.loads((path / "summary.json").read_text())


def test_defaults_are_filled():
    cfg, _ = parse_config(["--sigma", "2", "--command", "eigencurve"])
    assert cfg == RunConfig(command="eigencurve", sigma=2.0)


def test_flags_override_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\ncommand = deflect\nsigma = 3\nlambda = 0.02\ngrid_n = 101\n")
    cfg, _ = parse_config(["--config", str(f), "--sigma", "5"])
    assert (cfg.command, cfg.sigma, cfg.lam, cfg.grid_n) == ("deflect", 5.0, 0.02, 101)


@pytest.mark.parametrize("values, key", [
    ({"command": "catenoid", "grid_n": "4"}, "grid_n"),
    ({"command": "catenoid", "tol": "0"}, "tol"),
    ({"command": "catenoid", "sigma": "abc"}, "sigma"),
    ({"command": "catenoid", "colour": "red"}, "colour"),
    ({"command": "nothing"}, "command"),
    ({"sigma": "2"}, "command"),
])
def test_invalid_config_names_the_key(values, key):
    with pytest.raises(InvalidConfig) as info:
        build_config(values, {})
    assert info.value.key == key


def test_even_grid_in_file_exits_2(tmp_path, capsys):
    f = tmp_path / "bad.cfg"
    f.write_text("command = catenoid\ngrid_n = 4\n")
    assert main(["--config", str(f), "--output", str(tmp_path)]) == 2
    assert "grid_n" in capsys.readouterr().err


def test_below_critical_exits_3(tmp_path, capsys):
    assert main(["--sigma", "1.0", "--command", "continue", "--output", str(tmp_path)]) == 3
    assert "sigma_crit" in capsys.readouterr().err


def test_fold_exits_4_and_keeps_partial_curve(tmp_path):
    out = tmp_path / "fold"
    code = main(["continue", "--lambda-max", "10", "--steps", "2", "--grid-n", "101",
                 "--output", str(out)])
    assert code == 4
    summary = load(out)
    assert summary["results"]["fold_lambda"]["value"] < 10
    assert (out / "continuation.tsv").exists()


def test_deflect_reports_two_sign_changes(tmp_path):
    out = tmp_path / "d"
    assert main(["deflect", "--sigma", "10", "--model", "sar", "--branch", "inner",
                 "--output", str(out)]) == 0
    res = load(out)["results"]
    assert res["sign_pattern"]["value"] == "TwoSignChanges"
    assert 0 < res["r0"]["value"] < 1
    assert res["I1"]["value"] < 0
    rows = (out / "sensitivity.tsv").read_text().splitlines()
    assert rows[0].split("\t") == ["z", "sensitivity", "u0"]
    assert len(rows) == 402


def test_thresholds_output(tmp_path):
    out = tmp_path / "t"
    assert main(["thresholds", "--output", str(out)]) == 0
    res = load(out)["results"]
    assert res["sigma_upper_star_est"]["value"] >= res["sigma_star_est"]["value"]
    assert len((out / "thresholds.tsv").read_text().splitlines()) == 201


@pytest.mark.parametrize("command", ["catenoid", "eigencurve", "potential", "simulate"])
def test_commands_write_provenance_and_figures(tmp_path, command):
    out = tmp_path / command
    args = [command, "--output", str(out), "--grid-n", "61", "--samples", "5",
            "--shoot-n", "201", "--figures"]
    assert main(args) == 0
    summary = load(out)
    assert summary["results"]
    for entry in summary["results"].values():
        assert entry["provenance"]
    for name in summary["tables"] + summary["config"]["figures"]:
        assert (out / name).stat().st_size > 0
    assert not list(out.glob(".*tmp"))


def test_identical_configs_give_identical_json(tmp_path):
    args = ["simulate", "--perturbation", "random", "--seed", "3", "--grid-n", "61",
            "--T", "0.5"]
    assert main(args + ["--output", str(tmp_path / "a")]) == 0
    assert main(args + ["--output", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "summary.json").read_bytes()
    b = (tmp_path / "b" / "summary.json").read_bytes()
    assert a == b


def test_random_direction_is_seeded_and_smooth():
    g = Grid(101)
    a, b = random_direction(g, 1), random_direction(g, 1)
    assert (a == b).all() and a[0] == a[-1] == 0 and abs(a).max() == 1
    assert not (random_direction(g, 2) == a).all()


def test_verify_subset(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["verify", "--checks", "1,2", "--output", str(out)]) == 0
    table = capsys.readouterr().out
    assert "PASS   1" in table and "PASS   2" in table
    assert set(load(out)["results"]) == {"check_01", "check_02"}
    assert main(["verify", "--checks", "1,99", "--output", str(out)]) == 2
