"""Command line driver: config validation, output formats, exit codes."""
import json
import subprocess
import sys

import numpy as np
import pytest

from qbs.config import ConfigError, parse_config, serialize_config


def scalar_config(**extra):
    doc = {
        "schema_version": 1,
        "seed": 7,
        "model": {
            "ops": {
                "X": [[[1.0, 0.0]]],
                "H": [[[0.0, 0.0]]],
                "L": [[[0.0, 0.0]]],
                "S": [[[1.0, 0.0]]],
            },
            "K": [[[1.0, 0.0]]],
            "r": 0.0,
            "T": 1.0,
        },
        "t_grid": [1.0],
        "z_grid": [[[[0.0, 0.0]]]],
    }
    doc.update(extra)
    return doc


def full_config():
    return {
        "schema_version": 1,
        "seed": 11,
        "model": {
            "ops": {
                "X": [[[1.2, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.8, 0.0]]],
                "H": [[[0.3, 0.0], [0.0, 0.2]], [[0.0, -0.2], [-0.1, 0.0]]],
                "L": [[[0.1, 0.0], [0.4, 0.0]], [[0.2, 0.1], [-0.3, 0.0]]],
                "S": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
            },
            "K": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
            "r": 0.05,
            "T": 1.0,
        },
        "state": [[1.0, 0.0], [0.0, 0.0]],
        "t_grid": [0.5],
        "z_grid": [[[[0.2, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-0.1, 0.0]]]],
        "ito_check": {"dims": [2], "k_max": 3, "trials": 3},
        "hedge": {
            "convention": "direct",
            "times": [0.5],
            "stock": [[[1.3, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.1, 0.0]]],
        },
        "classical": {"x": [1.5], "t": [0.7], "strike": 1.0, "r": 0.05},
        "lindblad": {"t": [0.3]},
        "replicate": {"x0": 1.0, "strike": 1.0, "r": 0.05, "T": 1.0, "steps": 100, "paths": 1000},
    }


def run_cli(args, config_doc, tmp_path, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config_doc))
    return subprocess.run(
        [sys.executable, "-m", "qbs.cli", *args, "--config", str(path)],
        capture_output=True,
        text=True,
    )


def test_price_command_scalar(tmp_path):
    proc = run_cli(["price", "--omit-timing"], scalar_config(), tmp_path)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["command"] == "price"
    w = doc["results"][0]["omega"][0][0][0]
    assert abs(w - 0.38292492254802646) <= 1e-13


def test_every_command_runs(tmp_path):
    for cmd in ("coeffs", "ito-check", "price", "residual", "terminal-check",
                "hedge", "classical", "lindblad", "replicate"):
        proc = run_cli([cmd, "--omit-timing"], full_config(), tmp_path)
        assert proc.returncode == 0, (cmd, proc.stderr)
        doc = json.loads(proc.stdout)
        assert doc["command"] == cmd
        assert doc["invariant_violations"] == []


def test_output_is_deterministic(tmp_path):
    p1 = run_cli(["price", "--omit-timing"], scalar_config(), tmp_path)
    p2 = run_cli(["price", "--omit-timing"], scalar_config(), tmp_path)
    assert p1.stdout == p2.stdout
    # timing is the only permitted difference without the flag
    p3 = run_cli(["price"], scalar_config(), tmp_path)
    d3 = json.loads(p3.stdout)
    assert d3["wall_time_s"] > 0.0
    d1 = json.loads(p1.stdout)
    d3.pop("wall_time_s")
    d1.pop("wall_time_s", None)
    assert d1 == d3


def test_replicate_is_seed_stable(tmp_path):
    p1 = run_cli(["replicate", "--omit-timing"], full_config(), tmp_path)
    p2 = run_cli(["replicate", "--omit-timing"], full_config(), tmp_path)
    assert p1.stdout == p2.stdout


def test_invalid_scattering_is_a_config_error(tmp_path):
    doc = scalar_config()
    doc["model"]["ops"]["S"] = [[[1.001, 0.0]]]
    proc = run_cli(["price"], doc, tmp_path)
    assert proc.returncode == 2
    assert "ops.S" in proc.stderr
    assert "unitary" in proc.stderr


def test_violation_exit_code(tmp_path):
    proc = run_cli(["residual", "--tol", "residual_eq8=1e-30"], scalar_config(), tmp_path)
    assert proc.returncode == 3
    doc = json.loads(proc.stdout)
    assert doc["invariant_violations"]


def test_unknown_tolerance_name(tmp_path):
    proc = run_cli(["price", "--tol", "bogus=1"], scalar_config(), tmp_path)
    assert proc.returncode == 2
    assert "bogus" in proc.stderr


def test_seed_required_for_stochastic_commands(tmp_path):
    doc = full_config()
    doc.pop("seed")
    for cmd in ("replicate", "ito-check"):
        proc = run_cli([cmd], doc, tmp_path)
        assert proc.returncode == 2, cmd
        assert "seed" in proc.stderr
    # the seed flag on the command line fills the gap
    proc = run_cli(["replicate", "--seed", "11", "--omit-timing"], doc, tmp_path)
    assert proc.returncode == 0


def test_csv_output(tmp_path):
    proc = run_cli(["classical", "--csv"], full_config(), tmp_path)
    assert proc.returncode == 0
    lines = proc.stdout.strip().splitlines()
    assert lines[0].split(",")[:2] == ["x", "t"]
    row = lines[1].split(",")
    assert abs(float(row[5]) - 0.7170498285392044) <= 1e-12


def test_missing_config_file(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "qbs.cli", "price", "--config", str(tmp_path / "absent.json")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "config error" in proc.stderr


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    proc = subprocess.run(
        [sys.executable, "-m", "qbs.cli", "price", "--config", str(path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "invalid JSON" in proc.stderr


def test_unknown_command(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(scalar_config()))
    proc = subprocess.run(
        [sys.executable, "-m", "qbs.cli", "explode", "--config", str(path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2


def test_parse_config_round_trip():
    """parse(serialize(cfg)) == cfg and the normalized form is a fixed point."""
    c1 = parse_config(json.dumps(full_config()))
    s1 = serialize_config(c1)
    c2 = parse_config(s1)
    assert c1 == c2
    assert s1 == serialize_config(c2)


def test_parse_config_reports_dotted_paths():
    doc = scalar_config()
    doc["model"]["ops"]["X"] = [[[1.0, 0.0], [0.0, 0.0]]]  # not square
    with pytest.raises(ConfigError, match="model.ops.X"):
        parse_config(json.dumps(doc))
    doc2 = scalar_config(schema_version=99)
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config(json.dumps(doc2))
    doc3 = scalar_config(state=[[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(ConfigError, match="state"):
        parse_config(json.dumps(doc3))


def test_parse_config_tolerance_merge():
    doc = scalar_config(tolerances={"residual_eq8": 1e-7})
    cfg = parse_config(json.dumps(doc))
    assert cfg.tolerances["residual_eq8"] == 1e-7
    assert cfg.tolerances["power_rule"] == 1e-10  # untouched default
    with pytest.raises(ConfigError, match="unknown tolerance"):
        parse_config(json.dumps(scalar_config(tolerances={"bogus": 1.0})))


def test_parse_config_matrix_cell_validation():
    doc = scalar_config()
    doc["z_grid"] = [[[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]]
    with pytest.raises(ConfigError, match="z_grid"):
        parse_config(json.dumps(doc))
    doc2 = scalar_config()
    doc2["model"]["ops"]["H"] = [[[float("nan"), 0.0]]]
    with pytest.raises(ConfigError):
        parse_config(json.dumps(doc2))


def test_state_dimension_checked():
    doc = scalar_config(state=[[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ConfigError, match="state"):
        parse_config(json.dumps(doc))
