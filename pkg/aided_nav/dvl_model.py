"""
DVL beam model.

Four-beam Janus x-configuration: every beam shares the pitch angle theta and
beam i has yaw psi_i = (i - 1) * pi/2 + pi/4. Beam velocities are produced
with a scale/bias/white-noise error model and the body velocity is recovered
with a least-squares solve. The DVL frame coincides with the body frame.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import NavDataError, NumericalError

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

DEFAULT_THETA_DEG = 20.0


@dataclass(frozen=True)
class BeamGeometry:
    """Beam pitch angle and the stacked 4x3 beam direction matrix A."""

    theta: float
    A: np.ndarray

    @property
    def pseudo_inverse(self) -> np.ndarray:
        return np.linalg.solve(self.A.T @ self.A, self.A.T)

    def velocity_covariance(self, noise_std: float) -> np.ndarray:
        """Covariance of the LS velocity for white beam noise of the given std."""
        return noise_std**2 * np.linalg.inv(self.A.T @ self.A)


@dataclass(frozen=True)
class DvlErrorParams:
    """Per-beam scale factor, bias (m/s) and white noise std (m/s)."""

    scale: np.ndarray = field(default_factory=lambda: np.full(4, 0.007))
    bias: np.ndarray = field(default_factory=lambda: np.full(4, 0.0001))
    noise_std: float = 0.042

    def __post_init__(self):
        object.__setattr__(self, "scale", np.broadcast_to(np.asarray(self.scale, dtype=float), (4,)).copy())
        object.__setattr__(self, "bias", np.broadcast_to(np.asarray(self.bias, dtype=float), (4,)).copy())
        if self.noise_std < 0:
            raise NavDataError(f"DVL noise_std must be non-negative, got {self.noise_std}")

    @classmethod
    def error_free(cls) -> "DvlErrorParams":
        return cls(scale=np.zeros(4), bias=np.zeros(4), noise_std=0.0)


@dataclass(frozen=True)
class DvlMeasurement:
    """
    One DVL epoch.

    beams is None when only the solved body velocity is available (e.g.
    external recordings without beam columns).
    """

    t: float
    body_velocity: np.ndarray
    beams: Optional[np.ndarray] = None
    valid: bool = True
    predicted: bool = False


def beam_directions(theta: float) -> BeamGeometry:
    """
    Build the beam geometry for a common beam pitch angle.

    Args:
        theta: Beam pitch angle (rad), strictly inside (0, pi/2)

    Returns:
        BeamGeometry with rows [cos(psi) sin(theta), sin(psi) sin(theta), cos(theta)]
    """
    if not (0.0 < theta < np.pi / 2):
        raise NavDataError(f"Beam pitch angle must lie in (0, pi/2), got {theta}")

    psi = np.arange(4) * np.pi / 2 + np.pi / 4
    A = np.column_stack([
        np.cos(psi) * np.sin(theta),
        np.sin(psi) * np.sin(theta),
        np.full(4, np.cos(theta)),
    ])
    return BeamGeometry(theta=float(theta), A=A)


def _as_rng(rng_seed: Union[int, np.random.Generator, None]) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def synthesize_beams(v_body, geom: BeamGeometry, err: DvlErrorParams,
                     rng_seed: Union[int, np.random.Generator, None] = None) -> np.ndarray:
    """
    Measured beam velocities y = (A v)(1 + s) + b + noise.

    Args:
        v_body: Body velocity, shape (3,) or (N, 3)
        geom: Beam geometry
        err: Beam error parameters
        rng_seed: Seed or generator for the white noise

    Returns:
        Beam velocities of shape (4,) or (N, 4)
    """
    v_body = np.asarray(v_body, dtype=float)
    ideal = v_body @ geom.A.T
    beams = ideal * (1.0 + err.scale) + err.bias
    if err.noise_std > 0:
        beams = beams + _as_rng(rng_seed).normal(0.0, err.noise_std, size=beams.shape)
    return beams


def ls_solve(beams, geom: BeamGeometry) -> np.ndarray:
    """
    Least-squares body velocity from beam velocities, (A^T A)^-1 A^T y.

    Works on a single (4,) vector or a stack (N, 4).
    """
    AtA = geom.A.T @ geom.A
    cond = np.linalg.cond(AtA)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(f"Beam geometry is singular (theta={geom.theta}, cond={cond:.3g})")
    beams = np.asarray(beams, dtype=float)
    return np.linalg.solve(AtA, geom.A.T @ beams.T).T


def make_measurements(t, beams, geom: BeamGeometry) -> List[DvlMeasurement]:
    """Wrap beam arrays into valid DvlMeasurements with their LS velocity."""
    velocities = ls_solve(beams, geom)
    return [
        DvlMeasurement(t=float(ti), body_velocity=v, beams=b)
        for ti, v, b in zip(t, velocities, np.asarray(beams, dtype=float))
    ]


def apply_outage(stream: Sequence[DvlMeasurement], t_init: float, t_duration: float) -> List[DvlMeasurement]:
    """
    Mark every measurement with t in [t_init, t_init + t_duration) invalid.

    Args:
        stream: DVL measurements ordered in time
        t_init: Outage start (s)
        t_duration: Outage length (s)

    Returns:
        A new list; measurements outside the window are returned untouched
    """
    if t_duration < 0:
        raise NavDataError(f"Outage duration must be non-negative, got {t_duration}")
    if t_duration == 0:
        return list(stream)
    if not stream:
        raise NavDataError("Cannot apply an outage to an empty DVL stream")

    t_first, t_last = stream[0].t, stream[-1].t
    if t_init < t_first or t_init + t_duration > t_last + 1e-9:
        raise NavDataError(
            f"Outage window [{t_init}, {t_init + t_duration}) lies outside the stream span "
            f"[{t_first}, {t_last}]"
        )

    t_end = t_init + t_duration
    out = [
        replace(m, valid=False) if (t_init <= m.t < t_end and m.valid) else m
        for m in stream
    ]
    n_hit = sum(1 for m in stream if t_init <= m.t < t_end)
    logger.debug(f"Outage [{t_init}, {t_end}) invalidated {n_hit} DVL epochs")
    return out
