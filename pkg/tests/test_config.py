"""Tests for experiment configuration."""

from pathlib import Path

import pytest

from bridgelab.config import EXPERIMENTS, ExperimentConfig, build_config
from bridgelab.exceptions import ConfigError


class TestBuildConfig:
    @pytest.mark.parametrize("experiment", EXPERIMENTS)
    def test_defaults_are_valid(self, experiment):
        config = build_config(experiment)
        assert isinstance(config, ExperimentConfig)
        assert config.experiment == experiment

    def test_experiment_defaults_applied(self):
        config = build_config("propagate")
        assert config.grid.n == 1024
        assert config.grid.mode == "periodic"
        assert config.schedule.t == 2.0

    def test_curvature_state_at_rest(self):
        assert build_config("curvature").state.p0 == 0.0

    def test_values_coerced(self):
        config = build_config(
            "bridge",
            {"physics.hbar": "0.5", "grid.n": "257", "seed": "7", "output.path": "out.csv"},
        )
        assert config.physics.hbar == 0.5
        assert config.grid.n == 257
        assert config.seed == 7
        assert config.output.path == Path("out.csv")

    def test_matching_experiment_key(self):
        assert build_config("check", {"experiment": "check"}).experiment == "check"

    @pytest.mark.parametrize(
        "values",
        [
            {"experiment": "bridge"},
            {"physics.planck": "1"},
            {"nonsense": "1"},
            {"physics.hbar": "abc"},
            {"physics.hbar": "-1"},
            {"physics.mass": "nan"},
            {"grid.mode": "spherical"},
            {"grid.n": "100", "grid.mode": "periodic"},
            {"grid.x_min": "5", "grid.x_max": "1"},
            {"output.format": "xml"},
            {"schedule.n_samples": "0"},
            {"solver.max_iter": "0"},
            {"state.alpha_min": "1", "state.alpha_max": "-1"},
        ],
    )
    def test_invalid_values(self, values):
        with pytest.raises(ConfigError):
            build_config("check", values)

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError) as info:
            build_config("teleport")
        assert info.value.exit_code == 2


class TestExperimentConfig:
    def test_alpha_grid(self):
        alphas = build_config("nlgt-sweep").alphas()
        assert len(alphas) == 61
        assert alphas[0] == pytest.approx(-3.0)
        assert alphas[30] == pytest.approx(0.0, abs=1e-12)
        assert alphas[-1] == pytest.approx(3.0)

    def test_default_output(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        config = build_config("check", {"output.format": "json"})
        assert config.default_output() == tmp_path / "check.bridgelab.json"
