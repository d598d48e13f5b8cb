import json
import os

import pandas as pd
import pytest
import yaml

import nav_app
from aided_nav.config import RunConfig
from aided_nav.set_transformer import StHyperParams
from report_extraction import read_artifact_header

SMALL_CONFIG = {
    "seed": 21,
    "workers": 1,
    "simulation": {"n_train": 2, "n_eval": 1, "duration": 150.0},
    "network": {"preset": "custom",
                "overrides": {"D": 8, "b": 1, "h": 2, "FFE": 16, "k": 2, "epochs": 1, "batch_size": 16}},
    "evaluation": {"durations": [10], "n_starts": 1, "methods": ["pure_ins", "persistence"]},
}


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "small.yaml"
    path.write_text(yaml.safe_dump(SMALL_CONFIG))
    return str(path)


@pytest.fixture(scope="module")
def simulated(config_path, tmp_path_factory):
    """Output root with data/ already simulated."""
    out = str(tmp_path_factory.mktemp("run"))
    assert nav_app.main(["simulate", "--config", config_path, "--out", out]) == 0
    return out


def test_simulate_layout(simulated):
    data_dir = os.path.join(simulated, "data")
    with open(os.path.join(data_dir, nav_app.MANIFEST_NAME)) as f:
        manifest = json.load(f)
    assert [m["split"] for m in manifest["missions"]] == ["train", "train", "eval"]
    assert manifest["seed"] == 21
    assert len(os.listdir(data_dir)) == 3 * 3 + 1
    imu_csv = os.path.join(data_dir, manifest["missions"][0]["files"]["imu"])
    assert read_artifact_header(imu_csv)["config_hash"] == manifest["config_hash"]


def test_simulate_is_reproducible(config_path, simulated, tmp_path):
    config = RunConfig.load(config_path)
    written = nav_app.cmd_simulate(config, str(tmp_path))
    assert len(written) == 10
    name = os.path.basename(written[0])
    with open(written[0], "rb") as fa, open(os.path.join(simulated, "data", name), "rb") as fb:
        assert fa.read() == fb.read()


def test_evaluate_and_report(config_path, simulated):
    assert nav_app.main(["evaluate", "--config", config_path, "--out", simulated]) == 0
    report_dir = os.path.join(simulated, "report")
    scenarios = pd.read_csv(os.path.join(report_dir, "scenarios.csv"), comment="#")
    assert len(scenarios) == 2
    assert set(scenarios["method"]) == {"pure_ins", "persistence"}
    assert set(scenarios["mission"]) == {"M3"}

    first = pd.read_csv(os.path.join(report_dir, "summary.csv"), comment="#")
    assert nav_app.main(["report", "--out", simulated]) == 0
    rebuilt = pd.read_csv(os.path.join(report_dir, "summary.csv"), comment="#")
    pd.testing.assert_frame_equal(first, rebuilt)


def test_durations_flag(config_path, simulated, tmp_path):
    config = RunConfig.load(config_path, overrides={"evaluation": {"durations": [5.0, 10.0],
                                                                   "methods": ["pure_ins"]}})
    paths = nav_app.cmd_evaluate(config, os.path.join(simulated, "data"), None, str(tmp_path))
    summary = pd.read_csv(paths[1], comment="#")
    assert summary["duration"].tolist() == [5.0, 10.0]


def test_preset_flag_accepts_paper_alias():
    args = nav_app.build_parser().parse_args(["train", "--seed", "1", "--preset", "paper"])
    assert args.preset == "paper"
    config = RunConfig.load(seed=1, overrides={"network": {"preset": args.preset}})
    assert config.network_hyperparams() == StHyperParams.preset("published")


class Test_exit_codes:
    def test_missing_seed(self, tmp_path):
        assert nav_app.main(["simulate", "--out", str(tmp_path)]) == 1

    def test_unknown_config_key(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("seed: 1\nsimulation:\n  n_missions: 3\n")
        assert nav_app.main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 1

    def test_train_without_data(self, tmp_path):
        assert nav_app.main(["train", "--seed", "1", "--out", str(tmp_path)]) == 2

    def test_evaluate_without_weights(self, simulated, tmp_path):
        cfg = tmp_path / "with_st.yaml"
        cfg.write_text(yaml.safe_dump({**SMALL_CONFIG, "evaluation": {"durations": [10], "n_starts": 1}}))
        args = ["evaluate", "--config", str(cfg), "--data", os.path.join(simulated, "data"),
                "--out", str(tmp_path), "--weights", str(tmp_path / "none.json")]
        assert nav_app.main(args) == 2

    def test_bad_arguments(self):
        assert nav_app.main(["fly"]) == 1
        assert nav_app.main(["evaluate", "--seed", "x"]) == 1

    def test_report_without_scenarios(self, tmp_path):
        assert nav_app.main(["report", "--out", str(tmp_path)]) == 2


@pytest.mark.slow
def test_train_then_evaluate(config_path, simulated, tmp_path):
    out = str(tmp_path)
    data = os.path.join(simulated, "data")
    assert nav_app.main(["train", "--config", config_path, "--data", data, "--out", out]) == 0
    history = pd.read_csv(os.path.join(out, "model", "loss_history.csv"), comment="#")
    assert history["epoch"].tolist() == [1]

    config = RunConfig.load(config_path, overrides={"evaluation": {"methods": ["st_aided", "pure_ins"]}})
    paths = nav_app.cmd_evaluate(config, data, os.path.join(out, "model", "weights.json"),
                                 os.path.join(out, "report"), svg=True)
    scenarios = pd.read_csv(paths[0], comment="#")
    assert set(scenarios["method"]) == {"st_aided", "pure_ins"}
    assert any(p.endswith(".svg") for p in paths)
