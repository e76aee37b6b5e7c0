"""CLI: config validation, subcommand wiring, exit codes, report files."""

import csv
import json
import math

import pytest

from hjorlicz import cli

PSI1_REC = {"family": "exp_power", "alpha": 1.0}


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run_cli(tmp_path, command, payload, *extra):
    cfg = write_config(tmp_path, payload)
    out = tmp_path / "out"
    return cli.main([command, "--config", cfg, "--out", str(out), *extra]), out


# ---------------------------------------------------------------------------
# config parsing


def test_duplicate_key_rejected():
    with pytest.raises(cli.ConfigError):
        cli.parse_config('{"psi": 1, "psi": 2}', "norm")


def test_unknown_key_rejected():
    with pytest.raises(cli.ConfigError):
        cli.parse_config('{"psi": {}, "bogus": 1}', "norm")


def test_malformed_json_rejected():
    with pytest.raises(cli.ConfigError):
        cli.parse_config("{not json", "norm")
    with pytest.raises(cli.ConfigError):
        cli.parse_config("[1, 2]", "norm")


def test_invalid_alpha_is_usage_error(tmp_path):
    code, _ = run_cli(tmp_path, "norm", {"psi": {"family": "exp_power", "alpha": 1.5}, "value": 1.0})
    assert code == cli.EXIT_USAGE


def test_missing_config_file(tmp_path):
    code = cli.main(["norm", "--config", str(tmp_path / "nope.json")])
    assert code == cli.EXIT_USAGE


def test_concave_psi_rejected_with_failing_axiom(tmp_path):
    code, _ = run_cli(tmp_path, "norm", {"psi": {"family": "power_law", "p": 0.5}, "value": 1.0})
    assert code == cli.EXIT_USAGE


# ---------------------------------------------------------------------------
# subcommands


def test_norm_point_mass_report(tmp_path):
    code, out = run_cli(tmp_path, "norm", {"psi": PSI1_REC, "value": 1.0})
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader((out / "norm.csv").open()))
    assert len(rows) == 1
    assert float(rows[0]["norm"]) == pytest.approx(1.0 / math.log(2.0), rel=1e-9)
    assert rows[0]["method"] == "exact"
    assert rows[0]["seed"] == "-"
    assert rows[0]["version"]
    assert rows[0]["psi_hash"]
    assert (out / "norm.png").exists()


def test_norm_json_format(tmp_path):
    code, out = run_cli(
        tmp_path, "norm", {"psi": PSI1_REC, "values": [0.0, 2.0], "probs": [0.5, 0.5]}, "--format", "json"
    )
    assert code == cli.EXIT_OK
    doc = json.loads((out / "norm.json").read_text())
    assert doc["command"] == "norm"
    assert doc["rows"][0]["norm"] > 0


def test_mc_command_requires_seed(tmp_path):
    code, _ = run_cli(tmp_path, "norm", {"psi": PSI1_REC, "value": 1.0, "mode": "monte-carlo"})
    assert code == cli.EXIT_USAGE


def test_check_hj_exp_square_diverging_exit_zero(tmp_path):
    grid = [2.0, 8.0, 32.0, 128.0, 512.0, 2048.0]
    code, out = run_cli(
        tmp_path, "check-hj", {"psi": {"family": "exp_square"}, "s_grid": grid, "u_grid": grid}
    )
    assert code == cli.EXIT_OK  # the verdict is data, not a failure
    rows = list(csv.DictReader((out / "check-hj.csv").open()))
    assert len(rows) == 36


def test_counterexample_command(tmp_path):
    code, out = run_cli(tmp_path, "counterexample", {"phi": PSI1_REC, "n_max": 3})
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader((out / "counterexample.csv").open()))
    assert [int(r["k"]) for r in rows] == [2, 3]
    assert all(float(r["log_margin"]) > 0 for r in rows)


def test_verify_lemmas_exit_zero(tmp_path):
    code, out = run_cli(
        tmp_path, "verify-lemmas", {"psis": [PSI1_REC], "cases": 10}, "--seed", "5"
    )
    assert code == cli.EXIT_OK
    assert (out / "verify-lemmas.csv").exists()


def test_crucial_check_exact(tmp_path):
    payload = {
        "psi": PSI1_REC,
        "family": {"kind": "atoms", "values": [1.0], "probs": [1.0], "n_members": 6},
        "q": 2,
        "k": 1,
        "u": 1.0,
        "u_prime": 1.0,
    }
    code, out = run_cli(tmp_path, "crucial-check", payload)
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader((out / "crucial-check.csv").open()))
    assert rows[0]["passed"] == "True"
    assert rows[0]["method"] == "exact"


def test_poisson_check_command(tmp_path):
    payload = {"psi": PSI1_REC, "u_grid": [2.0], "s_grid": [4.0], "n_grid": [100, 1000]}
    code, out = run_cli(tmp_path, "poisson-check", payload)
    assert code == cli.EXIT_OK


def test_tails_reports_are_deterministic_across_threads(tmp_path):
    payload = {
        "psi": PSI1_REC,
        "process": {
            "base_probs": [0.25, 0.25, 0.25, 0.25],
            "class_values": [[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]],
            "n_members": 24,
            "symmetric": True,
        },
        "n_samples": 20_000,
    }
    cfg = write_config(tmp_path, payload)
    outs = []
    for threads, sub in (("1", "a"), ("8", "b")):
        out = tmp_path / sub
        code = cli.main(
            ["tails", "--config", cfg, "--out", str(out), "--seed", "3", "--threads", threads]
        )
        assert code == cli.EXIT_OK
        outs.append((out / "tails.csv").read_bytes())
    assert outs[0] == outs[1]


def test_resource_error_maps_to_exit_three(tmp_path, monkeypatch):
    from hjorlicz.distributions import ResourceError

    def boom(cfg, seed):
        raise ResourceError("budget exceeded")

    monkeypatch.setitem(cli._RUNNERS, "norm", boom)
    code, _ = run_cli(tmp_path, "norm", {"psi": PSI1_REC, "value": 1.0})
    assert code == cli.EXIT_RESOURCE


def test_report_row_column_guard():
    from hjorlicz.reports import Report

    rep = Report("norm", ("norm",))
    with pytest.raises(ValueError):
        rep.add_row(norm=1.0, extra=2.0)
