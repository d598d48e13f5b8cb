"""
Strapdown INS mechanization in a local-level NED frame.

Earth rotation and transport rate are neglected and gravity is constant.
An IMU sample at t_k describes the interval [t_k, t_k + dt): attitude is
advanced with the closed-form rotation of (omega - b_g) * dt, velocity with
the specific force resolved through the attitude at the start of the step,
and position with the trapezoidal rule on velocity.
"""

from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional

import numpy as np
from scipy.spatial.transform import Rotation as ScipyRotation

from .frames import orthonormalize, rodrigues

GRAVITY_NED = np.array([0.0, 0.0, 9.80665])


@dataclass(frozen=True)
class ImuSample:
    """Specific force f_b (m/s^2) and angular rate omega_b (rad/s) at time t."""

    t: float
    f_b: np.ndarray
    omega_b: np.ndarray


@dataclass
class ImuStream:
    """Columnar IMU record: t (N,), f_b (N, 3), omega_b (N, 3)."""

    t: np.ndarray
    f_b: np.ndarray
    omega_b: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, k: int) -> ImuSample:
        return ImuSample(t=float(self.t[k]), f_b=self.f_b[k], omega_b=self.omega_b[k])

    def __iter__(self) -> Iterator[ImuSample]:
        for k in range(len(self)):
            yield self[k]

    @property
    def rate_hz(self) -> float:
        return (len(self.t) - 1) / (self.t[-1] - self.t[0])

    def stacked(self) -> np.ndarray:
        """(N, 6) array of [f_b, omega_b] channels."""
        return np.hstack([self.f_b, self.omega_b])

    @classmethod
    def from_samples(cls, samples: List[ImuSample]) -> "ImuStream":
        return cls(
            t=np.array([s.t for s in samples]),
            f_b=np.array([s.f_b for s in samples]),
            omega_b=np.array([s.omega_b for s in samples]),
        )


@dataclass
class NavState:
    """Full navigation state. C_bn maps body to NED."""

    t: float
    v_n: np.ndarray
    C_bn: np.ndarray
    p_n: np.ndarray = field(default_factory=lambda: np.zeros(3))
    b_a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    b_g: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "NavState":
        return NavState(
            t=self.t,
            v_n=self.v_n.copy(),
            C_bn=self.C_bn.copy(),
            p_n=self.p_n.copy(),
            b_a=self.b_a.copy(),
            b_g=self.b_g.copy(),
        )

    @property
    def body_velocity(self) -> np.ndarray:
        return self.C_bn.T @ self.v_n


def mechanize_step(state: NavState, imu: ImuSample, dt: float, g_n=GRAVITY_NED) -> NavState:
    """
    Propagate the navigation state over one IMU interval.

    Args:
        state: State at the start of the interval
        imu: IMU sample for the interval
        dt: Interval length (s), > 0
        g_n: Gravity vector in NED (m/s^2)

    Returns:
        State at t + dt; biases are carried unchanged
    """
    if dt <= 0:
        raise ValueError(f"Mechanization step must be positive, got dt={dt}")

    f_n = state.C_bn @ (imu.f_b - state.b_a)
    v_next = state.v_n + (f_n + g_n) * dt
    C_next = orthonormalize(state.C_bn @ rodrigues((imu.omega_b - state.b_g) * dt))
    p_next = state.p_n + 0.5 * (state.v_n + v_next) * dt

    return replace(state, t=state.t + dt, v_n=v_next, C_bn=C_next, p_n=p_next)


def mechanize(initial: NavState, imu: ImuStream, g_n=GRAVITY_NED, steps: Optional[int] = None) -> List[NavState]:
    """
    Free-running mechanization over an IMU stream.

    Returns one state per IMU epoch, starting with a copy of `initial`.
    """
    n = len(imu) - 1 if steps is None else steps
    states = [initial.copy()]
    state = initial
    for k in range(n):
        dt = imu.t[k + 1] - imu.t[k]
        state = mechanize_step(state, imu[k], dt, g_n)
        states.append(state)
    return states


def inverse_mechanize(traj, dt: float, g_n=GRAVITY_NED) -> ImuStream:
    """
    Synthesize noiseless, bias-free IMU samples from a ground-truth trajectory.

    The samples are the exact discrete increments of the trajectory, so that
    mechanize_step reproduces its attitude and velocity up to round-off:
    omega_k = Log(C_k^T C_{k+1}) / dt and f_k = C_k^T ((v_{k+1} - v_k) / dt - g).

    Args:
        traj: Object exposing `time_grid(dt)`, `rotation(t)` -> (N, 3, 3) and
            `velocity_n(t)` -> (N, 3)
        dt: IMU sampling interval (s)
        g_n: Gravity vector in NED

    Returns:
        ImuStream aligned with traj.time_grid(dt); the last sample repeats the
        previous interval
    """
    t = traj.time_grid(dt)
    C = traj.rotation(t)
    v = traj.velocity_n(t)

    rel = np.einsum("kji,kjl->kil", C[:-1], C[1:])
    omega = ScipyRotation.from_matrix(rel).as_rotvec() / dt

    accel_n = np.diff(v, axis=0) / dt - g_n
    f_b = np.einsum("kji,kj->ki", C[:-1], accel_n)

    omega = np.vstack([omega, omega[-1:]])
    f_b = np.vstack([f_b, f_b[-1:]])
    return ImuStream(t=t, f_b=f_b, omega_b=omega)
