import csv
import json
import math

import pytest
import yaml

from contactlab import cli
from contactlab.errors import ConfigError


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else yaml.safe_dump(data))
    return p


def run_cli(tmp_path, data, *flags, name="cfg.yaml", out="out"):
    cfg = write(tmp_path, name, data)
    command = data["command"] if isinstance(data, dict) else yaml.safe_load(data)["command"]
    code = cli.main([command, "--config", str(cfg), "--out-dir", str(tmp_path / out), *flags])
    return code, tmp_path / out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_spectrum_of_zero_time_is_zero(tmp_path):
    code, out = run_cli(tmp_path, {"command": "spectrum", "params": {"T": 0.0, "n_points": 200}})
    assert code == cli.EXIT_OK
    rows = read_csv(out / "spectrum.csv")
    assert [float(r["value"]) for r in rows] == [0.0]
    assert {"config.resolved.yaml", "report.json", "meta.json"} <= {p.name for p in out.iterdir()}


def test_spectrum_of_reeb_map(tmp_path):
    data = {"command": "spectrum", "workspace": {"n": 1, "k": 2},
            "params": {"family": "reeb", "s": 1.0, "T": 1.0, "n_points": 200}}
    code, out = run_cli(tmp_path, data)
    assert code == cli.EXIT_OK
    vals = [float(r["value"]) for r in read_csv(out / "spectrum.csv")]
    assert len(vals) == 1 and math.isclose(vals[0], 1.0, abs_tol=1e-8)


def test_selector_crossing_exits_3(tmp_path):
    code, out = run_cli(tmp_path, {"command": "selector", "params": {"r": 1.6, "eps": 0.05}})
    assert code == cli.EXIT_AMBIGUOUS
    report = json.loads((out / "report.json").read_text())
    assert report["exit_code"] == 3
    assert (out / "trace.csv").exists()


def test_selector_trace_is_linear(tmp_path):
    code, out = run_cli(tmp_path, {"command": "selector", "params": {"T_points": 11}})
    assert code == cli.EXIT_OK
    rows = read_csv(out / "trace.csv")
    assert math.isclose(float(rows[-1]["c"]), math.pi - 0.1, abs_tol=1e-9)


def test_nonsqueeze_decision(tmp_path):
    code, out = run_cli(tmp_path, {"command": "nonsqueeze", "workspace": {"k": 2},
                                   "params": {"a1": 1.4142, "a2": 0.9}})
    assert code == cli.EXIT_OK
    row = read_csv(out / "decision.csv")[0]
    assert row["witness_j"] == "1"


def test_capacity_with_declared_displacer(tmp_path):
    data = {"command": "capacity", "params": {"r": 1.0, "eps_grid": [0.1],
                                              "displacer": {"kind": "declared", "energy": 3.2}}}
    code, out = run_cli(tmp_path, data)
    assert code == cli.EXIT_OK
    row = read_csv(out / "capacity.csv")[0]
    assert math.isclose(float(row["upper_bound"]), 3.2)


def test_capacity_baseline_displacer_overflows_at_r1(tmp_path):
    code, _ = run_cli(tmp_path, {"command": "capacity", "params": {"r": 1.0, "eps_grid": [0.1]}})
    assert code == cli.EXIT_CONFIG


def test_verify_subset(tmp_path):
    data = {"command": "verify", "params": {"suites": ["geometry", "nonsqueeze"], "samples": 50}}
    code, out = run_cli(tmp_path, data)
    assert code == cli.EXIT_OK
    rows = read_csv(out / "matrix.csv")
    assert rows and all(r["passed"] == "True" for r in rows)


def test_verify_fails_with_tiny_tolerance(tmp_path):
    data = {"command": "verify", "params": {"suites": ["geometry"], "samples": 50}}
    code, _ = run_cli(tmp_path, data, "--tolerance-scale", "1e-30")
    assert code == cli.EXIT_INVARIANT


@pytest.mark.parametrize("text,where", [
    ("command: spectrum\nworkspace:\n  n: 1\n  kk: 2\n", "line 4: workspace.kk"),
    ("command: spectrum\nparams:\n  family: radial\n  r: -1\n", "line 4: params.r"),
    ("command: selector\nparams:\n  tie_break: min\n", "line 3: params.tie_break"),
    ("command: spectrum\nseed: [1\n", "line"),
    ("command: bogus\n", "line 1: command"),
])
def test_config_errors_are_line_precise(text, where):
    with pytest.raises(ConfigError) as info:
        cli.parse_config(text, "bad.yaml")
    assert str(info.value).startswith("bad.yaml: ") and where in str(info.value)


def test_config_error_exit_code(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "command: spectrum\nworkspace:\n  n: 1\n  kk: 2\n")
    assert code == cli.EXIT_CONFIG
    assert "line 4" in capsys.readouterr().err
    assert cli.main(["spectrum", "--config", str(tmp_path / "missing.yaml")]) == cli.EXIT_CONFIG
    p = write(tmp_path, "other.yaml", {"command": "selector"})
    assert cli.main(["spectrum", "--config", str(p)]) == cli.EXIT_CONFIG


def test_infeasible_profile_is_a_config_error(tmp_path):
    code, _ = run_cli(tmp_path, {"command": "spectrum", "params": {"r": 1.0, "eps": 1e-5, "n_points": 100}})
    assert code == cli.EXIT_CONFIG


def test_json_configs_are_accepted(tmp_path):
    code, _ = run_cli(tmp_path, json.dumps({"command": "nonsqueeze"}), name="cfg.json")
    assert code == cli.EXIT_OK


def test_resolved_config_round_trips(tmp_path):
    code, out = run_cli(tmp_path, {"command": "selector", "params": {"T_points": 5}}, "--seed", "7")
    assert code == cli.EXIT_OK
    text = (out / "config.resolved.yaml").read_text()
    cfg = cli.parse_config(text, "resolved")
    assert cfg["seed"] == 7
    assert cli.resolve(cfg) == cfg
    assert cli.serialize_config(cli.resolve(cfg)) == text


def test_reports_are_deterministic_across_workers(tmp_path):
    data = {"command": "spectrum", "params": {"T": [0.5, 1.0], "n_points": 300}}
    _, a = run_cli(tmp_path, data, "--workers", "1", out="a")
    _, b = run_cli(tmp_path, data, "--workers", "2", out="b")
    _, c = run_cli(tmp_path, data, "--workers", "1", out="c")
    for name in ("report.json", "spectrum.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()
    meta = json.loads((b / "meta.json").read_text())
    assert meta["workers"] == 2 and "timestamp" in meta


def test_flag_overrides_are_validated(tmp_path, capsys):
    p = write(tmp_path, "c.yaml", {"command": "nonsqueeze"})
    assert cli.main(["nonsqueeze", "--config", str(p), "--workers", "0"]) == cli.EXIT_CONFIG
    assert "workers" in capsys.readouterr().err


def test_defaults_without_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(["nonsqueeze"]) == cli.EXIT_OK
    assert (tmp_path / "runs" / "nonsqueeze" / "report.json").exists()
