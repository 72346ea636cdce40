import json
import subprocess

import numpy as np
import pytest

from lhvdyn.cli import main
from lhvdyn.config import ExperimentConfig, parse_config
from lhvdyn.errors import ConfigError
from lhvdyn.experiments import build_states, static_sweep
from lhvdyn.io import dumps_json, git_blob_hash, read_csv, read_states, write_csv, write_states
from lhvdyn.quantum import bloch_derivatives, sample_noisy_ball


def test_parse_config_values(tmp_path):
    (tmp_path / "s.txt").write_text("0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\n")
    cfg = parse_config("# c\nseed = 7\nL_list = 2, 4\nfamilies = no\nvisibility = 0.1\nstates_file = s.txt\n", str(tmp_path))
    assert cfg.seed == 7 and cfg.L_list == [2, 4] and cfg.families is False
    assert cfg.visibility == 0.1
    assert cfg.states_file == str(tmp_path / "s.txt")
    assert cfg.omega == ExperimentConfig().omega


@pytest.mark.parametrize(
    "text",
    ["seed 3", "bogus = 1", "seed = 1\nseed = 2", "seed = x", "families = maybe", "visibility = 2", "integrator_mode = exact", "states_file = missing.txt", "seed = -1"],
)
def test_parse_config_errors(text, tmp_path):
    with pytest.raises(ConfigError):
        parse_config(text, str(tmp_path))


def test_malformed_config_exits_with_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no equals sign here\n")
    assert main(["verify-static", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 2
    assert main(["nogo-table", "--config", str(tmp_path / "absent.cfg"), "--quiet"]) == 2


def test_unknown_subcommand_exits_with_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_empty_state_list_is_a_usage_error(tmp_path):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("families = false\ninclude_mixed = false\nn_random = 0\n")
    for cmd in ("verify-static", "fit-velocity"):
        assert main([cmd, "--config", str(cfg), "--out", str(tmp_path / cmd), "--quiet"]) == 2


def test_nogo_table_command(tmp_path):
    out = tmp_path / "o"
    assert main(["nogo-table", "--out", str(out), "--reproducible", "--quiet"]) == 0
    crit = {(r["D"], r["d"]): r["max_N"] for r in read_csv(out / "nogo_critical.csv")}
    assert crit == {("2", "2"): "1", ("2", "20"): "6", ("3", "2"): "0", ("3", "20"): "3"}
    rows = read_csv(out / "nogo_table.csv")
    assert len(rows) == 2 * 2 * 10
    assert {"D": "2", "d": "20", "N": "6", "B_QM": "4095", "B_LHV": "7260", "feasible": "1"} in rows
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "nogo-table"
    assert manifest["outputs"]["nogo_table.csv"] == git_blob_hash((out / "nogo_table.csv").read_bytes())


def test_covariance_check_command_and_negative_control(tmp_path):
    good, bad = tmp_path / "good", tmp_path / "bad"
    assert main(["covariance-check", "--l-max", "3", "--trials", "10", "--out", str(good), "--quiet"]) == 0
    report = json.loads((good / "covariance_report.json").read_text())
    assert report["passed"] and report["max_deviation"]["identity"] == 0
    assert json.loads((good / "basis.json").read_text())["K"] == 16
    assert main(["covariance-check", "--l-max", "3", "--trials", "3", "--corrupt", "1e-3", "--out", str(bad), "--quiet"]) == 1


def test_derivs_command(tmp_path, rng):
    states = [sample_noisy_ball(1.0, rng) for _ in range(4)]
    path = tmp_path / "states.txt"
    write_states(path, states)
    out = tmp_path / "o"
    assert main(["derivs", "--states", str(path), "--omega", "2", "--out", str(out), "--quiet"]) == 0
    rows = read_csv(out / "derivs.csv")
    assert len(rows) == 4
    da, db, dT = bloch_derivatives(states[2], 2.0)
    got = [float(rows[2][k]) for k in list(rows[2])[1:]]
    np.testing.assert_array_equal(got, np.concatenate([da, db, dT.ravel()]))
    assert main(["derivs", "--out", str(out), "--quiet"]) == 2


def test_derivs_rejects_bad_state_file(tmp_path):
    path = tmp_path / "states.txt"
    path.write_text("1 2 3\n")
    assert main(["derivs", "--states", str(path), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_state_file_round_trip(tmp_path, rng):
    states = [sample_noisy_ball(0.5, rng) for _ in range(3)]
    write_states(tmp_path / "s.txt", states)
    back = read_states(tmp_path / "s.txt")
    for s, t in zip(states, back):
        np.testing.assert_array_equal(s.as_vector(), t.as_vector())


def test_csv_quoting_and_json_order(tmp_path):
    write_csv(tmp_path / "t.csv", ("name", "x"), [('a "quoted", cell', 0.1), ("plain", True)])
    raw = (tmp_path / "t.csv").read_bytes()
    assert raw.startswith(b"name,x\r\n") and b'"a ""quoted"", cell",0.1\r\n' in raw
    assert read_csv(tmp_path / "t.csv")[1] == {"name": "plain", "x": "1"}
    assert dumps_json({"b": np.float64(1.5), "a": np.arange(2)}) == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": 1.5\n}\n'


def test_git_blob_hash_matches_git(tmp_path):
    data = b"hello\n\x00binary"
    (tmp_path / "f").write_bytes(data)
    ref = subprocess.run(["git", "hash-object", str(tmp_path / "f")], capture_output=True, text=True, check=True).stdout.strip()
    assert git_blob_hash(data) == ref


def test_seed_fixes_the_ensemble():
    cfg = ExperimentConfig(n_random=5, seed=11)
    a, b = build_states(cfg), build_states(cfg)
    assert len(a) == 6 + 1 + 5
    for s, t in zip(a, b):
        np.testing.assert_array_equal(s.as_vector(), t.as_vector())
    c = build_states(cfg.replace(seed=12))
    assert not np.array_equal(a[-1].as_vector(), c[-1].as_vector())


def test_zero_visibility_gives_uniform_probabilities():
    cfg = ExperimentConfig(visibility=0.0, families=False, include_mixed=False, n_random=3, n_settings=4)
    rows, summary = static_sweep(build_states(cfg), cfg)
    assert summary["passed"]
    assert all(abs(r[7] - 0.25) < 1e-12 for r in rows)
    assert max(r[8] for r in rows) <= 1e-3


def test_verify_static_command_is_reproducible(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("n_random = 2\nn_settings = 3\nfamilies = true\n")
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for out in outs:
        assert main(["verify-static", "--config", str(cfg), "--reproducible", "--workers", "2", "--out", str(out), "--quiet"]) == 0
    for name in ("static_errors.csv", "static_summary.json", "manifest.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    summary = json.loads((outs[0] / "static_summary.json").read_text())
    assert summary["n_probabilities"] == 9 * 3 * 4 and summary["max_abs_err"] <= 5e-3
