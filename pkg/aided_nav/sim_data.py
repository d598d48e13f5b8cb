"""
Synthetic missions and external recordings.

Ground truth comes from analytic kinematics (heading, speed, depth, roll and
pitch profiles), the ideal IMU from inverse mechanization and the DVL from the
beam model. All randomness flows from per-mission numpy SeedSequences so that
missions can be generated in any order or in parallel.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .dvl_model import (BeamGeometry, DvlErrorParams, DvlMeasurement, beam_directions,
                        make_measurements, synthesize_beams)
from .errors import ConfigError, NavDataError
from .frames import rotation_from_euler
from .set_transformer import TrainingWindow, imu_window
from .strapdown import GRAVITY_NED, ImuStream, NavState, inverse_mechanize

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

TRAJECTORY_KINDS = ("lawnmower", "circle", "figure-eight", "spline-waypoints")
MICRO_G = 9.80665e-6

IMU_COLUMNS = ["t", "fx", "fy", "fz", "wx", "wy", "wz"]
DVL_COLUMNS = ["t", "b1", "b2", "b3", "b4", "vx", "vy", "vz", "valid"]
DVL_BEAM_COLUMNS = ["b1", "b2", "b3", "b4"]
GT_COLUMNS = ["t", "vn", "ve", "vd", "roll", "pitch", "yaw", "pn", "pe", "pd"]
CSV_FLOAT_FORMAT = "%.17g"


@dataclass
class TrajectorySpec:
    """
    Kinematic description of one synthetic mission.

    Angles are in degrees, rates in deg/s, speeds in m/s, times in seconds.
    """

    kind: str = "lawnmower"
    duration: float = 400.0
    speed_mean: float = 1.5
    speed_amp: float = 0.2
    speed_period: float = 90.0
    heading0_deg: float = 0.0
    leg_time: float = 60.0
    turn_time: float = 30.0
    turn_rate_deg: float = 3.0
    eight_period: float = 160.0
    waypoints_deg: Optional[List[float]] = None
    depth_mean: float = 20.0
    depth_amp: float = 2.0
    depth_period: float = 120.0
    roll_amp_deg: float = 2.0
    roll_period: float = 17.0
    pitch_amp_deg: float = 3.0
    pitch_period: float = 41.0
    max_accel: float = 0.5
    max_rate_deg: float = 25.0

    def validate(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ConfigError(f"Unknown trajectory kind '{self.kind}' (expected one of {TRAJECTORY_KINDS})")
        if self.duration <= 0:
            raise ConfigError(f"Trajectory duration must be positive, got {self.duration}")
        for name in ("speed_period", "leg_time", "turn_time", "eight_period",
                     "depth_period", "roll_period", "pitch_period"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"Trajectory {name} must be positive, got {getattr(self, name)}")
        if self.kind == "spline-waypoints" and self.waypoints_deg is not None and len(self.waypoints_deg) < 2:
            raise ConfigError("spline-waypoints needs at least two heading waypoints")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrajectorySpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown trajectory keys: {sorted(unknown)}")
        return cls(**data)


class Trajectory:
    """Analytic ground-truth kinematics for a TrajectorySpec."""

    def __init__(self, spec: TrajectorySpec):
        spec.validate()
        self.spec = spec
        self._spline = None
        if spec.kind == "spline-waypoints":
            headings = np.deg2rad(spec.waypoints_deg or [0.0, 60.0, 20.0, 110.0, 90.0, 180.0])
            knots = np.linspace(0.0, spec.duration, len(headings))
            self._spline = CubicSpline(knots, headings + np.deg2rad(spec.heading0_deg), bc_type="clamped")

    def time_grid(self, dt: float) -> np.ndarray:
        rate = int(round(1.0 / dt))
        n = int(round(self.spec.duration * rate))
        return np.arange(n + 1) / rate

    def heading(self, t) -> np.ndarray:
        s = self.spec
        t = np.asarray(t, dtype=float)
        psi0 = np.deg2rad(s.heading0_deg)
        if s.kind == "circle":
            return psi0 + np.deg2rad(s.turn_rate_deg) * t
        if s.kind == "figure-eight":
            omega = 2 * np.pi / s.eight_period
            return psi0 + np.pi * (1.0 - np.cos(omega * t))
        if s.kind == "spline-waypoints":
            return self._spline(t)
        # lawnmower: straight legs joined by raised-cosine U-turns of alternating direction
        cycle = s.leg_time + s.turn_time
        n = np.floor(t / cycle)
        tau = np.clip(t - n * cycle - s.leg_time, 0.0, s.turn_time)
        partial = np.pi / s.turn_time * (tau - s.turn_time / (2 * np.pi) * np.sin(2 * np.pi * tau / s.turn_time))
        completed = np.pi * (n % 2)
        sign = np.where(n % 2 == 0, 1.0, -1.0)
        return psi0 + completed + sign * partial

    def speed(self, t) -> np.ndarray:
        s = self.spec
        return s.speed_mean + s.speed_amp * np.sin(2 * np.pi * np.asarray(t, dtype=float) / s.speed_period)

    def depth(self, t) -> np.ndarray:
        s = self.spec
        return s.depth_mean + s.depth_amp * np.sin(2 * np.pi * np.asarray(t, dtype=float) / s.depth_period)

    def euler(self, t) -> np.ndarray:
        """(N, 3) roll, pitch, unwrapped yaw."""
        s = self.spec
        t = np.asarray(t, dtype=float)
        roll = np.deg2rad(s.roll_amp_deg) * np.sin(2 * np.pi * t / s.roll_period)
        pitch = np.deg2rad(s.pitch_amp_deg) * np.sin(2 * np.pi * t / s.pitch_period + 0.3)
        return np.stack([roll, pitch, self.heading(t)], axis=-1)

    def rotation(self, t) -> np.ndarray:
        e = self.euler(t)
        return rotation_from_euler(e[..., 0], e[..., 1], e[..., 2])

    def velocity_n(self, t) -> np.ndarray:
        s = self.spec
        t = np.asarray(t, dtype=float)
        psi = self.heading(t)
        speed = self.speed(t)
        vd = s.depth_amp * 2 * np.pi / s.depth_period * np.cos(2 * np.pi * t / s.depth_period)
        return np.stack([speed * np.cos(psi), speed * np.sin(psi), vd], axis=-1)

    def check_smooth(self, dt: float):
        """Reject profiles whose acceleration or angular rate exceed the configured limits."""
        t = self.time_grid(dt)
        accel = np.linalg.norm(np.gradient(self.velocity_n(t), dt, axis=0), axis=1)
        rates = np.abs(np.gradient(self.euler(t), dt, axis=0))
        if accel.max() > self.spec.max_accel:
            k = int(accel.argmax())
            raise ConfigError(f"Trajectory '{self.spec.kind}' is not smooth: acceleration "
                              f"{accel[k]:.3g} m/s^2 at t={t[k]:.2f} s exceeds {self.spec.max_accel}")
        if rates.max() > np.deg2rad(self.spec.max_rate_deg):
            k = int(rates.max(axis=1).argmax())
            raise ConfigError(f"Trajectory '{self.spec.kind}' is not smooth: angular rate "
                              f"{np.rad2deg(rates[k].max()):.3g} deg/s at t={t[k]:.2f} s exceeds "
                              f"{self.spec.max_rate_deg}")


@dataclass
class ImuNoiseParams:
    """White-noise densities (VRW ug/sqrt(Hz), ARW deg/s/sqrt(Hz)) and constant biases."""

    vrw_ug: float = 57.0
    arw_deg: float = 0.018
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    seed: Optional[int] = None

    def __post_init__(self):
        self.accel_bias = np.broadcast_to(np.asarray(self.accel_bias, dtype=float), (3,)).copy()
        self.gyro_bias = np.broadcast_to(np.asarray(self.gyro_bias, dtype=float), (3,)).copy()
        if self.vrw_ug < 0 or self.arw_deg < 0:
            raise ConfigError(f"IMU noise densities must be non-negative (vrw={self.vrw_ug}, arw={self.arw_deg})")

    @classmethod
    def noiseless(cls) -> "ImuNoiseParams":
        return cls(vrw_ug=0.0, arw_deg=0.0)

    def per_sample_std(self, rate_hz: float) -> Tuple[float, float]:
        """(accel std m/s^2, gyro std rad/s) of the discrete white sequences."""
        return (self.vrw_ug * MICRO_G * np.sqrt(rate_hz),
                np.deg2rad(self.arw_deg) * np.sqrt(rate_hz))


@dataclass
class GroundTruth:
    """Columnar reference trajectory: t (N,), v_n (N, 3), euler (N, 3), p_n (N, 3)."""

    t: np.ndarray
    v_n: np.ndarray
    euler: np.ndarray
    p_n: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def rotation(self) -> np.ndarray:
        return rotation_from_euler(self.euler[:, 0], self.euler[:, 1], self.euler[:, 2])

    def body_velocity(self) -> np.ndarray:
        return np.einsum("kji,kj->ki", self.rotation(), self.v_n)

    def index_of(self, t: float) -> int:
        k = int(np.searchsorted(self.t, t - 1e-9, side="left"))
        if k >= len(self.t) or abs(self.t[k] - t) > 1e-6:
            raise NavDataError(f"t={t} is not a ground-truth epoch")
        return k

    def state_at(self, k: int) -> NavState:
        e = self.euler[k]
        return NavState(t=float(self.t[k]), v_n=self.v_n[k].copy(),
                        C_bn=rotation_from_euler(e[0], e[1], e[2]), p_n=self.p_n[k].copy())


@dataclass
class MissionRecord:
    """Time-aligned IMU (100 Hz), DVL (1 Hz) and ground truth (100 Hz)."""

    mission_id: str
    imu: ImuStream
    dvl: List[DvlMeasurement]
    ground_truth: GroundTruth

    @property
    def duration(self) -> float:
        return float(self.imu.t[-1] - self.imu.t[0])

    @property
    def dvl_times(self) -> np.ndarray:
        return np.array([m.t for m in self.dvl])

    def dvl_velocities(self) -> np.ndarray:
        return np.array([m.body_velocity for m in self.dvl])

    def initial_state(self) -> NavState:
        return self.ground_truth.state_at(0)


def add_imu_noise(ideal: ImuStream, noise: ImuNoiseParams, rng: np.random.Generator) -> ImuStream:
    """White noise at the per-sample std for the stream rate plus constant biases."""
    sa, sg = noise.per_sample_std(round(ideal.rate_hz))
    n = len(ideal)
    f_b = ideal.f_b + noise.accel_bias + (rng.normal(0.0, sa, size=(n, 3)) if sa > 0 else 0.0)
    omega_b = ideal.omega_b + noise.gyro_bias + (rng.normal(0.0, sg, size=(n, 3)) if sg > 0 else 0.0)
    return ImuStream(t=ideal.t.copy(), f_b=f_b, omega_b=omega_b)


def generate_mission(spec: TrajectorySpec, noise: ImuNoiseParams, dvl_err: DvlErrorParams,
                     geom: Optional[BeamGeometry] = None,
                     seed: Union[int, np.random.SeedSequence, None] = None,
                     mission_id: str = "M1", imu_rate_hz: int = 100, dvl_rate_hz: int = 1) -> MissionRecord:
    """
    Generate one synthetic mission.

    Args:
        spec: Trajectory description
        noise: IMU noise; its seed is used when `seed` is None
        dvl_err: DVL beam error model
        geom: Beam geometry (20 degree Janus if omitted)
        seed: Integer or SeedSequence for this mission
        mission_id: Identifier carried into file names and reports
        imu_rate_hz: IMU and ground-truth rate
        dvl_rate_hz: DVL rate; must divide the IMU rate

    Returns:
        MissionRecord with ground truth, noisy IMU and DVL measurements
    """
    if imu_rate_hz % dvl_rate_hz != 0:
        raise ConfigError(f"DVL rate {dvl_rate_hz} Hz must divide the IMU rate {imu_rate_hz} Hz")
    geom = geom or beam_directions(np.deg2rad(20.0))
    traj = Trajectory(spec)
    dt = 1.0 / imu_rate_hz
    traj.check_smooth(dt)

    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(
        noise.seed if seed is None else seed)
    imu_seq, dvl_seq = seq.spawn(2)

    t = traj.time_grid(dt)
    v_n = traj.velocity_n(t)
    euler = traj.euler(t)
    p0 = np.array([0.0, 0.0, float(traj.depth(0.0))])
    p_n = p0 + cumulative_trapezoid(v_n, dx=dt, axis=0, initial=0)
    euler_wrapped = euler.copy()
    euler_wrapped[:, 2] = np.angle(np.exp(1j * euler[:, 2]))
    gt = GroundTruth(t=t, v_n=v_n, euler=euler_wrapped, p_n=p_n)

    ideal = inverse_mechanize(traj, dt, GRAVITY_NED)
    imu = add_imu_noise(ideal, noise, np.random.default_rng(imu_seq))

    step = imu_rate_hz // dvl_rate_hz
    idx = np.arange(0, len(t), step)
    C = traj.rotation(t[idx])
    v_body = np.einsum("kji,kj->ki", C, v_n[idx])
    beams = synthesize_beams(v_body, geom, dvl_err, np.random.default_rng(dvl_seq))
    dvl = make_measurements(t[idx], beams, geom)

    logger.info(f"Generated mission {mission_id}: {spec.kind}, {spec.duration:.0f} s, "
                f"{len(imu)} IMU / {len(dvl)} DVL samples")
    return MissionRecord(mission_id=mission_id, imu=imu, dvl=dvl, ground_truth=gt)


def build_windows(mission: MissionRecord, overlap: str = "disjoint", n_dvl: int = 3, m_imu: int = 400,
                  exclude: Sequence[Tuple[float, float]] = ()) -> List[TrainingWindow]:
    """
    Cut a mission into (3 past DVL, 400 past IMU) -> withheld DVL windows.

    Disjoint mode withholds every (n_dvl + 1)-th DVL epoch; strided mode
    hops one DVL epoch. Windows touching an invalid DVL epoch or any
    `exclude` interval [t0, t1) are skipped.
    """
    if overlap not in ("disjoint", "strided"):
        raise ConfigError(f"Unknown window overlap '{overlap}' (expected disjoint or strided)")
    span = n_dvl + 1
    if len(mission.dvl) < span + 1:
        raise NavDataError(f"Mission {mission.mission_id} is too short for {span} s windows "
                           f"({len(mission.dvl)} DVL epochs)")

    hop = span if overlap == "disjoint" else 1
    windows = []
    for j in range(span, len(mission.dvl), hop):
        epochs = mission.dvl[j - n_dvl:j + 1]
        if not all(m.valid for m in epochs):
            continue
        t_j = epochs[-1].t
        t_start = t_j - span
        if any(t0 <= t_j and t_start < t1 for t0, t1 in exclude):
            continue
        windows.append(TrainingWindow(
            dvl_past=np.array([m.body_velocity for m in epochs[:-1]]),
            imu_past=imu_window(mission.imu, t_j, m_imu),
            target=np.array(epochs[-1].body_velocity, dtype=float),
            t_target=float(t_j),
            mission_id=mission.mission_id,
        ))
    logger.debug(f"Built {len(windows)} {overlap} windows from mission {mission.mission_id}")
    return windows


# ── CSV export / ingestion ─────────────────────────────────────────────────

def mission_paths(out_dir: str, mission_id: str) -> Dict[str, str]:
    return {kind: os.path.join(out_dir, f"{mission_id}_{kind}.csv") for kind in ("imu", "dvl", "gt")}


def _write_csv(df: pd.DataFrame, path: str, header_comment: Optional[str]):
    with open(path, "w", newline="") as f:
        if header_comment:
            f.write(f"# {header_comment}\n")
        df.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def export_mission(mission: MissionRecord, out_dir: str, header_comment: Optional[str] = None) -> Dict[str, str]:
    """Write the mission's IMU, DVL and ground-truth CSVs; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = mission_paths(out_dir, mission.mission_id)

    imu = mission.imu
    _write_csv(pd.DataFrame(np.column_stack([imu.t, imu.f_b, imu.omega_b]), columns=IMU_COLUMNS),
               paths["imu"], header_comment)

    rows = []
    for m in mission.dvl:
        beams = m.beams if m.beams is not None else np.full(4, np.nan)
        rows.append([m.t, *beams, *m.body_velocity, int(m.valid)])
    dvl = pd.DataFrame(rows, columns=DVL_COLUMNS)
    dvl["valid"] = dvl["valid"].astype(int)
    _write_csv(dvl, paths["dvl"], header_comment)

    gt = mission.ground_truth
    _write_csv(pd.DataFrame(np.column_stack([gt.t, gt.v_n, gt.euler, gt.p_n]), columns=GT_COLUMNS),
               paths["gt"], header_comment)
    return paths


def _leading_comment_lines(path: str) -> int:
    n = 0
    with open(path) as f:
        for line in f:
            if not line.startswith("#"):
                break
            n += 1
    return n


def _parse_float(text: str) -> float:
    # float() is correctly rounded, so %.17g text reads back bit-identical
    try:
        return float(text)
    except ValueError:
        return np.nan


def _read_csv(path: str, columns: List[str], optional: Sequence[str] = ()) -> Tuple[pd.DataFrame, int]:
    """
    Read and type-check a CSV against its schema.

    Returns:
        (frame, first_data_line) where first_data_line is the 1-based file line
        of row 0
    """
    try:
        df = pd.read_csv(path, comment="#", dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise NavDataError(f"Missing input file {path}") from e
    except pd.errors.ParserError as e:
        raise NavDataError(f"Malformed CSV {path}: {e}") from e
    first_line = _leading_comment_lines(path) + 2

    for col in columns:
        if col not in df.columns:
            raise NavDataError(f"{os.path.basename(path)}: missing column '{col}'")

    out = pd.DataFrame(index=df.index)
    for col in columns:
        raw = df[col].str.strip()
        blank = raw == ""
        values = raw.map(_parse_float)
        bad = values.isna() & ~(blank & (col in optional))
        if bad.any():
            i = int(np.flatnonzero(bad.to_numpy())[0])
            raise NavDataError(f"{os.path.basename(path)} line {first_line + i}: "
                               f"malformed value {df[col].iloc[i]!r} in column '{col}'")
        out[col] = values.astype(float)
    return out, first_line


def _check_time_axis(t: np.ndarray, rate_hz: float, path: str, first_line: int):
    if len(t) < 2:
        raise NavDataError(f"{os.path.basename(path)}: need at least two samples")
    dt = np.diff(t)
    back = np.flatnonzero(dt <= 0)
    if len(back):
        raise NavDataError(f"{os.path.basename(path)} line {first_line + back[0] + 1}: "
                           f"non-monotonic timestamp {t[back[0] + 1]}")
    nominal = 1.0 / rate_hz
    off = np.flatnonzero(np.abs(dt - nominal) > 0.01 * nominal)
    if len(off):
        raise NavDataError(f"{os.path.basename(path)} line {first_line + off[0] + 1}: sample interval "
                           f"{dt[off[0]]:.6g} s deviates more than 1% from the {rate_hz} Hz rate")


def ingest_external(imu_path: str, dvl_path: str, gt_path: str, mission_id: Optional[str] = None,
                    imu_rate_hz: float = 100.0, dvl_rate_hz: float = 1.0,
                    dvl_to_body: Optional[np.ndarray] = None) -> MissionRecord:
    """
    Load a mission recorded in the CSV schema.

    Args:
        imu_path: `t,fx,fy,fz,wx,wy,wz`
        dvl_path: `t,b1,b2,b3,b4,vx,vy,vz,valid` (beam columns may be empty)
        gt_path: `t,vn,ve,vd,roll,pitch,yaw,pn,pe,pd`
        mission_id: Identifier (derived from the IMU file name if omitted)
        imu_rate_hz: Expected IMU / ground-truth rate
        dvl_rate_hz: Expected DVL rate
        dvl_to_body: Optional 3x3 rotation from the DVL frame to the body frame

    Returns:
        MissionRecord
    """
    imu_df, imu_line = _read_csv(imu_path, IMU_COLUMNS)
    dvl_df, dvl_line = _read_csv(dvl_path, DVL_COLUMNS, optional=DVL_BEAM_COLUMNS)
    gt_df, gt_line = _read_csv(gt_path, GT_COLUMNS)

    _check_time_axis(imu_df["t"].to_numpy(), imu_rate_hz, imu_path, imu_line)
    _check_time_axis(dvl_df["t"].to_numpy(), dvl_rate_hz, dvl_path, dvl_line)
    _check_time_axis(gt_df["t"].to_numpy(), imu_rate_hz, gt_path, gt_line)

    imu = ImuStream(t=imu_df["t"].to_numpy(), f_b=imu_df[["fx", "fy", "fz"]].to_numpy(),
                    omega_b=imu_df[["wx", "wy", "wz"]].to_numpy())
    gt = GroundTruth(t=gt_df["t"].to_numpy(), v_n=gt_df[["vn", "ve", "vd"]].to_numpy(),
                     euler=gt_df[["roll", "pitch", "yaw"]].to_numpy(),
                     p_n=gt_df[["pn", "pe", "pd"]].to_numpy())
    if len(gt) != len(imu) or np.max(np.abs(gt.t - imu.t)) > 1e-6:
        raise NavDataError(f"{os.path.basename(gt_path)}: ground-truth epochs are not aligned with the IMU")

    rotation = None if dvl_to_body is None else np.asarray(dvl_to_body, dtype=float)
    dvl = []
    for i, row in enumerate(dvl_df.itertuples(index=False)):
        k = int(np.searchsorted(imu.t, row.t - 1e-9))
        if k >= len(imu) or abs(imu.t[k] - row.t) > 1e-6:
            raise NavDataError(f"{os.path.basename(dvl_path)} line {dvl_line + i}: "
                               f"DVL epoch t={row.t} does not coincide with an IMU epoch")
        beams = np.array([row.b1, row.b2, row.b3, row.b4])
        v = np.array([row.vx, row.vy, row.vz])
        if rotation is not None:
            v = rotation @ v
        dvl.append(DvlMeasurement(t=float(row.t), body_velocity=v,
                                  beams=None if np.isnan(beams).any() else beams,
                                  valid=bool(row.valid)))

    mission_id = mission_id or os.path.basename(imu_path).rsplit("_imu", 1)[0]
    logger.info(f"Ingested mission {mission_id}: {len(imu)} IMU / {len(dvl)} DVL samples")
    return MissionRecord(mission_id=mission_id, imu=imu, dvl=dvl, ground_truth=gt)


# ── corpus ─────────────────────────────────────────────────────────────────

def corpus_specs(n_train: int = 11, n_eval: int = 2, duration: float = 400.0,
                 overrides: Optional[dict] = None) -> List[Tuple[str, str, TrajectorySpec]]:
    """
    (mission_id, split, spec) triples for a synthetic corpus.

    Trajectory kinds cycle through all shapes; headings and speed vary per
    mission so that no two missions coincide. Keys in `overrides` apply to
    every mission and take precedence over that variation.
    """
    if n_train < 0 or n_eval < 0 or n_train + n_eval == 0:
        raise ConfigError(f"Corpus needs at least one mission (train={n_train}, eval={n_eval})")
    out = []
    for i in range(n_train + n_eval):
        params = dict(
            kind=TRAJECTORY_KINDS[i % len(TRAJECTORY_KINDS)],
            duration=duration,
            heading0_deg=(37.0 * i) % 360.0,
            speed_mean=1.2 + 0.1 * (i % 5),
            turn_rate_deg=2.0 + 0.5 * (i % 3),
        )
        # user overrides win over the per-mission variation
        params.update(overrides or {})
        split = "train" if i < n_train else "eval"
        out.append((f"M{i + 1}", split, TrajectorySpec.from_dict(params)))
    return out


def generate_corpus(specs: Sequence[Tuple[str, str, TrajectorySpec]], noise: ImuNoiseParams,
                    dvl_err: DvlErrorParams, geom: BeamGeometry, seed: int) -> Dict[str, MissionRecord]:
    """Generate every mission with its own child SeedSequence of `seed`."""
    children = np.random.SeedSequence(seed).spawn(len(specs))
    return {
        mission_id: generate_mission(spec, noise, dvl_err, geom, seed=child, mission_id=mission_id)
        for (mission_id, _, spec), child in zip(specs, children)
    }
