"""
Run configuration.

A YAML file is deep-merged over the built-in defaults below; the resolved
dictionary is what every artifact records. Environment overrides are read
through python-dotenv.
"""

import copy
import hashlib
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
import yaml
from dotenv import load_dotenv

from .dvl_model import BeamGeometry, DvlErrorParams, beam_directions
from .ekf import EkfParams
from .errors import ConfigError
from .eval_runner import EvalParams
from .set_transformer import StHyperParams
from .sim_data import ImuNoiseParams, TrajectorySpec, corpus_specs

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()

DEFAULT_CONFIG: Dict[str, Any] = {
    "seed": None,
    "output_dir": "output",
    "workers": None,
    "simulation": {
        "n_train": 11,
        "n_eval": 2,
        "duration": 400.0,
        "imu_rate_hz": 100,
        "dvl_rate_hz": 1,
        "window_overlap": "disjoint",
        "trajectory": {},
    },
    "imu_noise": {
        "vrw_ug": 57.0,
        "arw_deg": 0.018,
        "accel_bias_mg": [0.5, -0.3, 0.4],
        "gyro_bias_deg_h": [5.0, -3.0, 4.0],
    },
    "dvl": {
        "theta_deg": 20.0,
        "scale": 0.007,
        "bias": 0.0001,
        "noise_std": 0.042,
    },
    "ekf": {
        "vrw_ug": 57.0,
        "arw_deg": 0.018,
        "bias_rw_fraction": 1e-6,
        "sigma_v0": 0.1,
        "sigma_att0_deg": 0.5,
        "sigma_ba0_mg": 1.0,
        "sigma_bg0_deg_h": 10.0,
        "taylor_order": 2,
        "r_sigma": None,
    },
    "network": {
        "preset": "toy",
        "overrides": {},
    },
    "evaluation": {
        "durations": [30, 40, 50],
        "n_starts": 5,
        "t_warmup": 60.0,
        "end_margin": 5.0,
        "tail_s": 10.0,
        "r_inflation": 1.0,
        "methods": ["st_aided", "pure_ins"],
        "svg": False,
    },
}

# Keys that never change numeric outputs
UNHASHED_KEYS = ("output_dir", "workers")

# Sections whose contents are free-form (validated downstream)
FREE_SECTIONS = (("simulation", "trajectory"), ("network", "overrides"))


def deep_merge(base: dict, override: dict, path: Tuple[str, ...] = ()) -> dict:
    """Recursively merge `override` into a copy of `base`; unknown keys are rejected."""
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        where = path + (key,)
        if key not in base:
            raise ConfigError(f"Unknown configuration key '{'.'.join(where)}'")
        if isinstance(base[key], dict) and where not in FREE_SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"Configuration section '{'.'.join(where)}' must be a mapping")
            out[key] = deep_merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


class RunConfig:
    """Resolved configuration with typed accessors for every component."""

    def __init__(self, data: dict):
        self.data = data
        if data.get("seed") is None:
            raise ConfigError("A seed is mandatory (set 'seed' in the config file or pass --seed)")
        if not isinstance(data["seed"], int) or data["seed"] < 0:
            raise ConfigError(f"Seed must be a non-negative integer, got {data['seed']!r}")

    @classmethod
    def load(cls, path: Optional[str] = None, seed: Optional[int] = None,
             overrides: Optional[dict] = None) -> "RunConfig":
        """
        Load and resolve a configuration.

        Args:
            path: YAML file (optional; defaults only when omitted)
            seed: Overrides the file's seed
            overrides: Extra nested values applied after the file

        Returns:
            RunConfig
        """
        file_values = {}
        if path:
            try:
                with open(path) as f:
                    file_values = yaml.safe_load(f) or {}
            except OSError as e:
                raise ConfigError(f"Cannot read configuration {path}: {e}") from e
            except yaml.YAMLError as e:
                raise ConfigError(f"Invalid YAML in {path}: {e}") from e
            if not isinstance(file_values, dict):
                raise ConfigError(f"Configuration {path} must be a mapping at top level")

        data = deep_merge(DEFAULT_CONFIG, file_values)
        data = deep_merge(data, overrides or {})
        if seed is not None:
            data["seed"] = seed
        if data.get("workers") is None and os.getenv("NAVAID_WORKERS"):
            try:
                data["workers"] = int(os.getenv("NAVAID_WORKERS"))
            except ValueError as e:
                raise ConfigError(f"NAVAID_WORKERS must be an integer, got {os.getenv('NAVAID_WORKERS')!r}") from e
        return cls(data)

    # ── identity ───────────────────────────────────────────────────────────

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def output_dir(self) -> str:
        return self.data["output_dir"]

    @property
    def workers(self) -> Optional[int]:
        return self.data["workers"]

    def hashed_view(self) -> dict:
        return {k: v for k, v in self.data.items() if k not in UNHASHED_KEYS}

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump of the resolved configuration."""
        canonical = json.dumps(self.hashed_view(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def header_comment(self) -> str:
        return f"config_hash={self.config_hash},seed={self.seed}"

    def manifest(self, **extra) -> dict:
        return {"config_hash": self.config_hash, "seed": self.seed, "config": self.hashed_view(), **extra}

    # ── component parameters ───────────────────────────────────────────────

    def corpus(self) -> List[Tuple[str, str, TrajectorySpec]]:
        sim = self.data["simulation"]
        return corpus_specs(sim["n_train"], sim["n_eval"], sim["duration"], sim["trajectory"])

    def imu_noise(self) -> ImuNoiseParams:
        n = self.data["imu_noise"]
        return ImuNoiseParams(
            vrw_ug=n["vrw_ug"],
            arw_deg=n["arw_deg"],
            accel_bias=np.asarray(n["accel_bias_mg"], dtype=float) * 1e-3 * 9.80665,
            gyro_bias=np.deg2rad(np.asarray(n["gyro_bias_deg_h"], dtype=float)) / 3600.0,
        )

    def dvl_error(self) -> DvlErrorParams:
        d = self.data["dvl"]
        return DvlErrorParams(scale=d["scale"], bias=d["bias"], noise_std=d["noise_std"])

    def geometry(self) -> BeamGeometry:
        return beam_directions(np.deg2rad(self.data["dvl"]["theta_deg"]))

    def ekf_params(self) -> EkfParams:
        try:
            return EkfParams(**self.data["ekf"])
        except TypeError as e:
            raise ConfigError(f"Invalid ekf section: {e}") from e

    def measurement_noise(self) -> np.ndarray:
        """Nominal DVL R: the scalar override or the LS-propagated beam noise."""
        return self.ekf_params().measurement_noise(
            self.geometry().velocity_covariance(self.data["dvl"]["noise_std"]))

    def network_hyperparams(self) -> StHyperParams:
        net = self.data["network"]
        try:
            return StHyperParams.preset(net["preset"], **(net["overrides"] or {}))
        except TypeError as e:
            raise ConfigError(f"Invalid network overrides: {e}") from e

    def eval_params(self) -> EvalParams:
        e = self.data["evaluation"]
        return EvalParams(
            durations=tuple(float(d) for d in e["durations"]),
            n_starts=e["n_starts"],
            t_warmup=e["t_warmup"],
            end_margin=e["end_margin"],
            tail_s=e["tail_s"],
            r_inflation=e["r_inflation"],
            methods=tuple(e["methods"]),
        )


def parse_durations(text: Optional[str]) -> Optional[List[float]]:
    """'30,40' -> [30.0, 40.0]."""
    if not text:
        return None
    try:
        values = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as e:
        raise ConfigError(f"Invalid --durations value {text!r}") from e
    if not values:
        raise ConfigError("--durations needs at least one value")
    return values


def log_level_from_env(default: str = "INFO") -> int:
    name = os.getenv("NAVAID_LOG_LEVEL", default).upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def iter_missions(manifest: dict, split: str) -> Iterable[dict]:
    for entry in manifest.get("missions", []):
        if entry["split"] == split:
            yield entry
