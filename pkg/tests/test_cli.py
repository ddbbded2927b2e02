import json

import pytest
import uvicorn
from fastapi.testclient import TestClient

import api.handlers
from cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, build_parser, main, settings_from_args
from config import config_hash, load_settings, settings
from services.artifacts import read_csv


def test_diamond_command(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "diamond", "--p", "0", "0", "0", "0", "--q", "1", "0", "0", "0"])
    assert code == EXIT_OK
    document = json.loads((tmp_path / "diamond.json").read_text(encoding="utf-8"))
    assert document["bound"]["N"] == 1
    assert document["bound"]["kind"] == "bounded"
    assert len(document["config_hash"]) == 16
    assert '"kind": "bounded"' in capsys.readouterr().out


def test_empty_diamond_is_not_an_error(tmp_path):
    code = main(["diamond", "--out", str(tmp_path), "--p", "0", "0", "0", "0", "--q", "-1", "0", "0", "0"])
    assert code == EXIT_OK
    document = json.loads((tmp_path / "diamond.json").read_text(encoding="utf-8"))
    assert document["bound"]["kind"] == "empty"


def test_potential_command(tmp_path):
    assert main(["--out", str(tmp_path), "potential", "--count", "5"]) == EXIT_OK
    meta, rows = read_csv(tmp_path / "spike-table.csv")
    assert len(rows) == 5
    assert meta["summability_verdict"] == "pass"
    assert (tmp_path / "summability.json").exists()


def test_weyl_control(tmp_path):
    assert main(["--out", str(tmp_path), "weyl", "--p-z", "0"]) == EXIT_OK
    _, rows = read_csv(tmp_path / "weyl-report.csv")
    assert rows[0]["classification"] == "LimitPoint"
    assert (rows[0]["n_plus"], rows[0]["n_minus"]) == ("0", "0")


def test_weyl_real_lambda_is_a_usage_error(tmp_path):
    assert main(["--out", str(tmp_path), "weyl", "--p-z", "0", "--lambda-im", "0"]) == EXIT_USAGE


def test_geodesic_command(tmp_path):
    code = main(["--out", str(tmp_path), "geodesic", "--lambda-max", "5"])
    assert code == EXIT_OK
    meta, rows = read_csv(tmp_path / "trajectory.csv")
    assert "config_hash" in meta
    assert rows
    assert (tmp_path / "drift.json").exists()


def test_verify_rejects_unknown_check(tmp_path):
    assert main(["--out", str(tmp_path), "verify", "--only", "nonsense"]) == EXIT_USAGE


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "missing.toml"), "diamond", "--p", "0", "0", "0", "0",
                 "--q", "1", "0", "0", "0"]) == EXIT_USAGE


def test_malformed_config_file(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[geodesic\ntol = ", encoding="utf-8")
    assert main(["--config", str(path), "potential", "--count", "1"]) == EXIT_USAGE


def test_invalid_config_value(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[potential]\nwidth_exponent = 2.0\n", encoding="utf-8")
    assert main(["--config", str(path), "potential", "--count", "1"]) == EXIT_USAGE


def test_unknown_command():
    assert main(["teleport"]) == EXIT_USAGE


def test_missing_arguments():
    assert main(["diamond", "--p", "0", "0", "0", "0"]) == EXIT_USAGE


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert "kg-completeness" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["--seed", "5", "--tol", "1e-9", "--out", "somewhere", "potential"],
        ["potential", "--seed", "5", "--tol", "1e-9", "--out", "somewhere"],
        ["--seed", "5", "potential", "--tol", "1e-9", "--out", "somewhere"],
    ],
)
def test_global_flags_anywhere(argv):
    cfg = settings_from_args(build_parser().parse_args(argv))
    assert cfg.run.seed == 5
    assert cfg.run.out_dir == "somewhere"
    assert cfg.geodesic.tol == 1e-9
    assert cfg.reduced.tol == 1e-9


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_FAILED, EXIT_USAGE}) == 3


def test_help_shows_config_defaults(capsys):
    assert main(["--help"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "config default: 20240917" in text
    assert "1e-10" in text


def test_subcommand_help_shows_config_defaults(capsys):
    assert main(["normmap", "--help"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "config default: 9 9 9" in text
    assert "config default: 120" in text


def test_serve_uses_the_cli_config(tmp_path, monkeypatch):
    path = tmp_path / "serve.toml"
    path.write_text("[weyl]\nL_max = 80.0\n", encoding="utf-8")
    served = {}
    monkeypatch.setattr(uvicorn, "run", lambda app, **kwargs: served.update(app=app, **kwargs))
    try:
        assert main(["--config", str(path), "--tol", "1e-9", "serve", "--port", "9001"]) == EXIT_OK
        expected = config_hash(load_settings(str(path), geodesic={"tol": 1e-9}, reduced={"tol": 1e-9}))
        assert expected != config_hash(settings)
        assert served["port"] == 9001
        assert config_hash(served["app"].state.settings) == expected
        assert api.handlers._settings is served["app"].state.settings
        body = TestClient(served["app"]).get("/").json()
        assert body["config_hash"] == expected
    finally:
        api.handlers.configure(settings)
