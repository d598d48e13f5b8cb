"""
12-state error-state EKF for INS/DVL fusion.

Error state dx = [dv_n, eps_n, db_a, db_g] with the convention
true = estimate (+) dx:

    v_true = v + dv
    C_true = (I - skew(eps)) C
    b_true = b + db

Under this convention the DVL measurement h(x) = C^T v linearizes to
H = [C^T, -C^T skew(v), 0, 0] and the innovation is dz = v_dvl - C^T v.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .dvl_model import DEFAULT_THETA_DEG, DvlErrorParams, beam_directions
from .errors import NumericalError
from .frames import apply_small_angle_correction, skew
from .strapdown import ImuSample, NavState, mechanize_step, GRAVITY_NED

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

N_STATES = 12
VEL, ATT, BA, BG = slice(0, 3), slice(3, 6), slice(6, 9), slice(9, 12)

MICRO_G = 9.80665e-6
DEG = np.pi / 180.0


@dataclass
class ErrorState:
    """Velocity, attitude and bias errors; stacked as a 12-vector."""

    delta_v_n: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eps_n: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta_b_a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta_b_g: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.delta_v_n, self.eps_n, self.delta_b_a, self.delta_b_g])

    @classmethod
    def from_vector(cls, dx) -> "ErrorState":
        dx = np.asarray(dx, dtype=float)
        if dx.shape != (N_STATES,):
            raise ValueError(f"Error state must have shape (12,), got {dx.shape}")
        return cls(dx[VEL].copy(), dx[ATT].copy(), dx[BA].copy(), dx[BG].copy())

    @classmethod
    def zero(cls) -> "ErrorState":
        return cls()


@dataclass
class Covariance:
    """12x12 error-state covariance P."""

    P: np.ndarray

    def symmetrized(self) -> "Covariance":
        return Covariance(0.5 * (self.P + self.P.T))

    @property
    def trace(self) -> float:
        return float(np.trace(self.P))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.P).min())

    def is_valid(self, rel_tol: float = 1e-9) -> bool:
        """Symmetric and PSD down to -rel_tol * trace."""
        return (
            np.array_equal(self.P, self.P.T)
            and self.min_eigenvalue() >= -rel_tol * self.trace
        )


@dataclass
class EkfParams:
    """
    Filter tuning.

    Noise densities use the sensor datasheet units: VRW in ug/sqrt(Hz), ARW in
    deg/s/sqrt(Hz). Bias random walks are expressed as a fraction of the
    initial bias sigma per sqrt(s).
    """

    vrw_ug: float = 57.0
    arw_deg: float = 0.018
    bias_rw_fraction: float = 1e-6
    sigma_v0: float = 0.1
    sigma_att0_deg: float = 0.5
    sigma_ba0_mg: float = 1.0
    sigma_bg0_deg_h: float = 10.0
    taylor_order: int = 2
    r_sigma: Optional[float] = None

    def initial_covariance(self) -> Covariance:
        sig = np.concatenate([
            np.full(3, self.sigma_v0),
            np.full(3, self.sigma_att0_deg * DEG),
            np.full(3, self.sigma_ba0_mg * 1e3 * MICRO_G),
            np.full(3, self.sigma_bg0_deg_h * DEG / 3600.0),
        ])
        return Covariance(np.diag(sig**2))

    def process_noise(self) -> np.ndarray:
        """Continuous-time PSD Q = diag(w_a, w_g, w_a_b, w_g_b)."""
        w_a = self.vrw_ug * MICRO_G
        w_g = self.arw_deg * DEG
        w_ab = self.bias_rw_fraction * self.sigma_ba0_mg * 1e3 * MICRO_G
        w_gb = self.bias_rw_fraction * self.sigma_bg0_deg_h * DEG / 3600.0
        dens = np.concatenate([np.full(3, w_a), np.full(3, w_g), np.full(3, w_ab), np.full(3, w_gb)])
        return np.diag(dens**2)

    def measurement_noise(self, beam_velocity_cov: Optional[np.ndarray] = None) -> np.ndarray:
        """
        DVL velocity noise R.

        The scalar override r_sigma wins; otherwise the LS-propagated beam
        noise covariance is used.
        """
        if self.r_sigma is not None:
            return np.eye(3) * self.r_sigma**2
        if beam_velocity_cov is None:
            raise ValueError("Either r_sigma or the beam velocity covariance is required")
        return np.array(beam_velocity_cov, dtype=float)


def assemble_F(state: NavState, imu: ImuSample) -> np.ndarray:
    """
    Continuous-time error dynamics matrix.

    Only the velocity/attitude, velocity/accel-bias and attitude/gyro-bias
    blocks are nonzero; the attitude/attitude block vanishes without Earth
    rate and the bias rows are zero.
    """
    C = state.C_bn
    f_n = C @ (imu.f_b - state.b_a)
    F = np.zeros((N_STATES, N_STATES))
    F[VEL, ATT] = skew(f_n)
    F[VEL, BA] = -C
    F[ATT, BG] = C
    return F


def assemble_G(state: NavState) -> np.ndarray:
    """Noise shaping: w_a -> dv via -C, w_g -> eps via C, bias walks directly."""
    C = state.C_bn
    G = np.zeros((N_STATES, N_STATES))
    G[VEL, VEL] = -C
    G[ATT, ATT] = C
    G[BA, BA] = np.eye(3)
    G[BG, BG] = np.eye(3)
    return G


def transition_matrix(F: np.ndarray, tau_s: float, order: int = 2) -> np.ndarray:
    """Truncated Taylor series Phi = sum_{r=0}^{order} (F tau)^r / r!."""
    if order < 1:
        raise ValueError(f"Taylor order must be >= 1, got {order}")
    Ft = F * tau_s
    Phi = np.eye(F.shape[0])
    term = np.eye(F.shape[0])
    for r in range(1, order + 1):
        term = term @ Ft / r
        Phi = Phi + term
    return Phi


def discretize_Q(Phi: np.ndarray, G: np.ndarray, Q: np.ndarray, dt: float) -> np.ndarray:
    """Mid-point rule Q_k = 0.5 (Phi G Q G^T + G Q G^T Phi^T) dt, symmetrized."""
    if dt <= 0:
        raise ValueError(f"Discretization step must be positive, got dt={dt}")
    GQG = G @ Q @ G.T
    Qk = 0.5 * (Phi @ GQG + GQG @ Phi.T) * dt
    return 0.5 * (Qk + Qk.T)


def predict(P: Covariance, Phi: np.ndarray, Q_k: np.ndarray) -> Covariance:
    """P- = Phi P+ Phi^T + Q_k; the error state itself stays zero."""
    return Covariance(Phi @ P.P @ Phi.T + Q_k).symmetrized()


def assemble_H(state: NavState) -> np.ndarray:
    """DVL measurement matrix H = [C_n^b, -C_n^b skew(v_n), 0, 0]."""
    C_nb = state.C_bn.T
    H = np.zeros((3, N_STATES))
    H[:, VEL] = C_nb
    H[:, ATT] = -C_nb @ skew(state.v_n)
    return H


def innovation(state: NavState, body_velocity) -> np.ndarray:
    """dz = measured body velocity - C_n^b v_n."""
    return np.asarray(body_velocity, dtype=float) - state.C_bn.T @ state.v_n


def update(P: Covariance, H: np.ndarray, R: np.ndarray, dz) -> Tuple[ErrorState, Covariance]:
    """
    Kalman measurement update.

    Returns:
        (dx+, P+) with K = P H^T (H P H^T + R)^-1, P+ = (I - K H) P,
        dx+ = K dz
    """
    K = kalman_gain(P, H, R)
    dx = K @ np.asarray(dz, dtype=float)
    P_post = Covariance((np.eye(P.P.shape[0]) - K @ H) @ P.P).symmetrized()
    return ErrorState.from_vector(dx), P_post


def kalman_gain(P: Covariance, H: np.ndarray, R: np.ndarray) -> np.ndarray:
    """K = P H^T S^-1 with S = H P H^T + R, solved through the Cholesky factor of S."""
    HP = H @ P.P
    S = HP @ H.T + R
    try:
        factor = cho_factor(S, lower=True)
    except LinAlgError as e:
        raise NumericalError(f"Innovation covariance is singular: {e}") from e
    return cho_solve(factor, HP).T


def feedback(state: NavState, dx: ErrorState) -> NavState:
    """Correct the nominal state with the estimated error (true = state (+) dx)."""
    out = state.copy()
    out.v_n = state.v_n + dx.delta_v_n
    out.C_bn = apply_small_angle_correction(state.C_bn, dx.eps_n)
    out.b_a = state.b_a + dx.delta_b_a
    out.b_g = state.b_g + dx.delta_b_g
    return out


class ErrorStateEkf:
    """
    INS/DVL filter: 100 Hz prediction, measurement update at DVL epochs.

    One instance per scenario; instances share nothing.
    """

    def __init__(self, initial_state: NavState, params: Optional[EkfParams] = None,
                 R: Optional[np.ndarray] = None, g_n=GRAVITY_NED):
        """
        Initialize the filter.

        Args:
            initial_state: Nominal navigation state at the first epoch
            params: Filter tuning (defaults if omitted)
            R: Nominal DVL measurement noise. When omitted, params.r_sigma is used
                if set, otherwise the LS covariance of the nominal 20 deg Janus
                geometry with the default beam noise
            g_n: Gravity vector in NED
        """
        self.params = params or EkfParams()
        self.state = initial_state.copy()
        self.P = self.params.initial_covariance()
        self.Q = self.params.process_noise()
        if R is None:
            nominal = beam_directions(np.deg2rad(DEFAULT_THETA_DEG))
            R = self.params.measurement_noise(nominal.velocity_covariance(DvlErrorParams().noise_std))
        self.R = np.array(R, dtype=float)
        self.g_n = np.asarray(g_n, dtype=float)
        self.n_updates = 0

    def propagate(self, imu: ImuSample, dt: float) -> NavState:
        """Mechanize the nominal state and propagate P over one IMU interval."""
        F = assemble_F(self.state, imu)
        G = assemble_G(self.state)
        Phi = transition_matrix(F, dt, self.params.taylor_order)
        Q_k = discretize_Q(Phi, G, self.Q, dt)
        self.P = predict(self.P, Phi, Q_k)
        self.state = mechanize_step(self.state, imu, dt, self.g_n)
        return self.state

    def correct(self, body_velocity, R: Optional[np.ndarray] = None) -> ErrorState:
        """Apply a DVL (or surrogate) body-velocity update and feed back the error."""
        H = assemble_H(self.state)
        dz = innovation(self.state, body_velocity)
        dx, self.P = update(self.P, H, self.R if R is None else R, dz)
        self.state = feedback(self.state, dx)
        self.n_updates += 1
        return dx
