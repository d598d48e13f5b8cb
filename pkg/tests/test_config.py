from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from aided_nav.config import DEFAULT_CONFIG, RunConfig, deep_merge, log_level_from_env, parse_durations
from aided_nav.errors import ConfigError

CONFIG_DIR = Path(__file__).parent.parent / "config"


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("NAVAID_WORKERS", raising=False)
    monkeypatch.delenv("NAVAID_LOG_LEVEL", raising=False)


class Test_load:
    def test_seed_is_mandatory(self):
        with pytest.raises(ConfigError, match="seed"):
            RunConfig.load()

    @pytest.mark.parametrize("seed", [-1, "abc", 1.5])
    def test_invalid_seed(self, seed):
        with pytest.raises(ConfigError):
            RunConfig.load(seed=seed)

    def test_seed_override_wins(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("seed: 3\n")
        assert RunConfig.load(str(path)).seed == 3
        assert RunConfig.load(str(path), seed=9).seed == 9

    @pytest.mark.parametrize("name", ["default.yaml", "toy.yaml"])
    def test_shipped_configs(self, name):
        config = RunConfig.load(str(CONFIG_DIR / name))
        assert config.seed is not None
        config.network_hyperparams()
        config.eval_params()
        assert len(config.corpus()) == config.data["simulation"]["n_train"] + config.data["simulation"]["n_eval"]

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("seed: 1\nevaluation:\n  horizon: 3\n")
        with pytest.raises(ConfigError, match="evaluation.horizon"):
            RunConfig.load(str(path))

    def test_free_sections(self):
        config = RunConfig.load(seed=1, overrides={"simulation": {"trajectory": {"depth_mean": 40.0}},
                                                   "network": {"overrides": {"D": 8}}})
        assert all(spec.depth_mean == 40.0 for _, _, spec in config.corpus())
        assert config.network_hyperparams().D == 8

    def test_bad_network_override(self):
        config = RunConfig.load(seed=1, overrides={"network": {"overrides": {"width": 8}}})
        with pytest.raises(ConfigError):
            config.network_hyperparams()

    @pytest.mark.parametrize("text", ["seed: [1\n", "- 1\n- 2\n"])
    def test_malformed_yaml(self, tmp_path, text):
        path = tmp_path / "run.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError):
            RunConfig.load(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.load(str(tmp_path / "nope.yaml"))

    def test_workers_from_env(self, monkeypatch):
        monkeypatch.setenv("NAVAID_WORKERS", "3")
        assert RunConfig.load(seed=1).workers == 3
        assert RunConfig.load(seed=1, overrides={"workers": 1}).workers == 1
        monkeypatch.setenv("NAVAID_WORKERS", "many")
        with pytest.raises(ConfigError):
            RunConfig.load(seed=1)


class Test_hash:
    def test_stable(self):
        a = RunConfig.load(seed=1)
        b = RunConfig.load(seed=1)
        assert a.config_hash == b.config_hash
        assert len(a.config_hash) == 64

    def test_ignores_output_dir_and_workers(self):
        a = RunConfig.load(seed=1)
        b = RunConfig.load(seed=1, overrides={"output_dir": "/tmp/elsewhere", "workers": 7})
        assert a.config_hash == b.config_hash

    @pytest.mark.parametrize("seed, overrides", [
        (2, {}),
        (1, {"dvl": {"noise_std": 0.05}}),
        (1, {"evaluation": {"durations": [30]}}),
    ])
    def test_changes_with_numeric_settings(self, seed, overrides):
        base = RunConfig.load(seed=1)
        assert RunConfig.load(seed=seed, overrides=overrides).config_hash != base.config_hash

    def test_header_and_manifest(self):
        config = RunConfig.load(seed=5)
        assert config.header_comment() == f"config_hash={config.config_hash},seed=5"
        manifest = config.manifest(missions=[])
        assert manifest["seed"] == 5 and "output_dir" not in manifest["config"]


class Test_accessors:
    def test_units(self):
        config = RunConfig.load(seed=1)
        noise = config.imu_noise()
        assert_allclose(noise.accel_bias, np.array([0.5, -0.3, 0.4]) * 9.80665e-3)
        assert_allclose(noise.gyro_bias, np.deg2rad([5.0, -3.0, 4.0]) / 3600.0)
        assert config.geometry().theta == pytest.approx(np.deg2rad(20.0))

    def test_measurement_noise(self):
        config = RunConfig.load(seed=1)
        assert_allclose(config.measurement_noise(), config.geometry().velocity_covariance(0.042))
        scalar = RunConfig.load(seed=1, overrides={"ekf": {"r_sigma": 0.1}})
        assert_allclose(scalar.measurement_noise(), np.eye(3) * 0.01)


def test_deep_merge_leaves_defaults():
    merged = deep_merge(DEFAULT_CONFIG, {"dvl": {"scale": 0.01}})
    assert merged["dvl"]["scale"] == 0.01
    assert DEFAULT_CONFIG["dvl"]["scale"] == 0.007
    assert merged["dvl"]["noise_std"] == 0.042


def test_deep_merge_section_must_be_mapping():
    with pytest.raises(ConfigError):
        deep_merge(DEFAULT_CONFIG, {"dvl": 3})


@pytest.mark.parametrize("text, expect", [(None, None), ("30,40", [30.0, 40.0]), ("30, 50", [30.0, 50.0])])
def test_parse_durations(text, expect):
    assert parse_durations(text) == expect


@pytest.mark.parametrize("text", ["thirty", ","])
def test_parse_durations_invalid(text):
    with pytest.raises(ConfigError):
        parse_durations(text)


def test_log_level_from_env(monkeypatch):
    assert log_level_from_env() == 20
    monkeypatch.setenv("NAVAID_LOG_LEVEL", "debug")
    assert log_level_from_env() == 10
    monkeypatch.setenv("NAVAID_LOG_LEVEL", "chatty")
    assert log_level_from_env() == 20
