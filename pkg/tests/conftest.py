import os

import numpy as np
import pytest

from aided_nav.config import RunConfig
from aided_nav.dvl_model import DvlErrorParams, beam_directions
from aided_nav.set_transformer import train
from aided_nav.sim_data import ImuNoiseParams, TrajectorySpec, build_windows, generate_corpus, generate_mission

MG = 9.80665e-3
DEG_H = np.pi / 180.0 / 3600.0
TOY_CONFIG = os.path.join(os.path.dirname(__file__), os.pardir, "config", "toy.yaml")


@pytest.fixture
def geom20():
    return beam_directions(np.deg2rad(20.0))


@pytest.fixture(scope="session")
def noiseless_mission():
    """Two-minute lawnmower with perfect IMU and DVL."""
    return generate_mission(
        TrajectorySpec(kind="lawnmower", duration=120.0),
        ImuNoiseParams.noiseless(),
        DvlErrorParams.error_free(),
        seed=1,
        mission_id="N1",
    )


def _nominal_imu_noise():
    return ImuNoiseParams(
        vrw_ug=57.0,
        arw_deg=0.018,
        accel_bias=np.array([0.5, -0.3, 0.4]) * MG,
        gyro_bias=np.array([5.0, -3.0, 4.0]) * DEG_H,
    )


@pytest.fixture(scope="session")
def noisy_mission():
    """160 s circle with the nominal sensor grades and constant IMU biases."""
    return generate_mission(
        TrajectorySpec(kind="circle", duration=160.0),
        _nominal_imu_noise(),
        DvlErrorParams(),
        seed=11,
        mission_id="E1",
    )


@pytest.fixture(scope="session")
def survey_mission():
    """400 s lawnmower survey with the same sensor grades."""
    return generate_mission(
        TrajectorySpec(kind="lawnmower", duration=400.0),
        _nominal_imu_noise(),
        DvlErrorParams(),
        seed=12,
        mission_id="E2",
    )


@pytest.fixture(scope="session")
def toy_run():
    """The desk-scale configuration simulated and trained once; slow tests only."""
    config = RunConfig.load(TOY_CONFIG)
    specs = config.corpus()
    missions = generate_corpus(specs, config.imu_noise(), config.dvl_error(), config.geometry(), config.seed)
    hp = config.network_hyperparams()
    overlap = config.data["simulation"]["window_overlap"]
    windows = [w for mission_id, split, _ in specs if split == "train"
               for w in build_windows(missions[mission_id], overlap, hp.n_dvl, hp.m_imu)]
    return {
        "config": config,
        "result": train(windows, hp, config.seed),
        "eval_missions": {mission_id: missions[mission_id] for mission_id, split, _ in specs if split == "eval"},
    }


@pytest.fixture
def nominal_R():
    return beam_directions(np.deg2rad(20.0)).velocity_covariance(0.042)


def _numeric_grad(f, array, eps=1e-6):
    """Central-difference gradient of the scalar f() with respect to array (perturbed in place)."""
    grad = np.zeros_like(array)
    it = np.nditer(array, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = array[idx]
        array[idx] = orig + eps
        up = f()
        array[idx] = orig - eps
        down = f()
        array[idx] = orig
        grad[idx] = (up - down) / (2 * eps)
    return grad


@pytest.fixture
def numeric_grad():
    return _numeric_grad
