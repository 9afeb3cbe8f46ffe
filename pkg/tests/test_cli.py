"""Tests for the bridgelab command line."""

import sys

import pytest

from bridgelab.exceptions import ConfigError, InvariantFailure
from bridgelab.scripts.lab import cli, main

SMALL_COLLAPSE = "grid.n = 801\ncollapse.width_floor = 1e-2\nschedule.n_samples = 3\n"


def write_config(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


def run_cli(monkeypatch, *args):
    monkeypatch.setattr(sys, "argv", ["bridgelab", *args])
    with pytest.raises(SystemExit) as excinfo:
        cli()
    return excinfo.value.code


def test_main_writes_default_output(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    path = main("nlgt-sweep", silent=True, max_workers=1)
    assert path == tmp_path / "nlgt-sweep.bridgelab.csv"
    header = path.read_text().splitlines()[0]
    assert header.startswith("alpha,sigma2_x,sigma2_p")


def test_main_json_output(tmp_path):
    path = main("curvature", output_file=tmp_path / "out.json", fmt="json", silent=True)
    assert path.read_text().lstrip().startswith("{")


def test_main_rejects_bad_config(tmp_path):
    config = write_config(tmp_path, "physics.hbar = -1\n")
    with pytest.raises(ConfigError):
        main("propagate", config_path=config, output_file=tmp_path / "x.csv", silent=True)
    assert not (tmp_path / "x.csv").exists()


def test_failed_invariant_still_writes(tmp_path):
    config = write_config(tmp_path, "grid.n = 32\ngrid.x_min = -4\ngrid.x_max = 4\n")
    output = tmp_path / "coarse.csv"
    with pytest.raises(InvariantFailure):
        main("propagate", config_path=config, output_file=output, silent=True)
    assert output.exists()


def test_deterministic_output(tmp_path):
    config = write_config(tmp_path, "schedule.n_samples = 4\nseed = 7\n")
    first = main("check", config_path=config, output_file=tmp_path / "a.csv", silent=True,
                 max_workers=1)
    second = main("check", config_path=config, output_file=tmp_path / "b.csv", silent=True,
                  max_workers=1)
    assert first.read_bytes() == second.read_bytes()


class TestExitCodes:
    def test_config_error(self, tmp_path, monkeypatch):
        config = write_config(tmp_path, "grid.n = 100\n")
        code = run_cli(monkeypatch, "nlgt-sweep", "--config", str(config), "--silent")
        assert code == 2

    def test_invariant_failure(self, tmp_path, monkeypatch):
        config = write_config(tmp_path, "grid.n = 32\ngrid.x_min = -4\ngrid.x_max = 4\n")
        out = tmp_path / "coarse.csv"
        code = run_cli(
            monkeypatch, "propagate", "--config", str(config), "--out", str(out), "--silent"
        )
        assert code == 1
        assert out.exists()

    def test_non_convergence(self, tmp_path, monkeypatch, capsys):
        config = write_config(tmp_path, SMALL_COLLAPSE + "solver.max_iter = 1\n")
        out = tmp_path / "collapse.csv"
        code = run_cli(
            monkeypatch, "collapse", "--config", str(config), "--out", str(out), "--silent"
        )
        assert code == 3
        assert "iterations 1" in capsys.readouterr().err
        assert not out.exists()

    def test_unknown_experiment(self, monkeypatch):
        assert run_cli(monkeypatch, "teleport") == 2

    def test_plain_value_error(self, monkeypatch, capsys):
        def bad_main(*args, **kwargs):
            raise ValueError("method must be one of ('action', 'power')")

        monkeypatch.setattr("bridgelab.scripts.lab.main", bad_main)
        assert run_cli(monkeypatch, "nlgt-sweep", "--silent") == 2
        err = capsys.readouterr().err
        assert err.startswith("Error: method must be one of")
        assert "Traceback" not in err

    def test_success_returns_normally(self, tmp_path, monkeypatch):
        monkeypatch.setattr(
            sys, "argv", ["bridgelab", "curvature", "--out", str(tmp_path / "c.csv"), "--silent"]
        )
        cli()
        assert (tmp_path / "c.csv").exists()
