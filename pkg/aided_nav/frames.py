"""
Coordinate-frame primitives.

Rotations are direction-cosine matrices C_b^n mapping body vectors into the
North-East-Down navigation frame. Euler angles follow the ZYX intrinsic
(yaw-pitch-roll) convention.
"""

import numpy as np

# Tolerance used when checking orthonormality of a DCM
ORTHONORMAL_TOL = 1e-12


def skew(v):
    """
    Skew-symmetric (cross-product) matrix of a 3-vector.

    Args:
        v: Vector of shape (3,)

    Returns:
        3x3 matrix S with S @ u == cross(v, u)
    """
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(S):
    """Inverse of skew for the antisymmetric part of S."""
    S = np.asarray(S, dtype=float)
    return 0.5 * np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]])


def rotation_from_euler(roll, pitch, yaw):
    """
    Body-to-navigation DCM from ZYX Euler angles.

    Accepts scalars or equally shaped arrays; for arrays the result has
    shape (..., 3, 3).

    Args:
        roll: Rotation about body x (rad)
        pitch: Rotation about body y (rad)
        yaw: Rotation about nav z, heading from north (rad)

    Returns:
        C_b^n = Rz(yaw) @ Ry(pitch) @ Rx(roll)
    """
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)

    rows = [
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ]
    return np.moveaxis(np.array(rows, dtype=float), (0, 1), (-2, -1))


def euler_from_rotation(C):
    """
    Extract ZYX Euler angles (roll, pitch, yaw) from a DCM.

    Works on a single (3, 3) matrix or a stack (..., 3, 3).
    Valid away from gimbal lock (|pitch| < pi/2).
    """
    C = np.asarray(C, dtype=float)
    roll = np.arctan2(C[..., 2, 1], C[..., 2, 2])
    pitch = -np.arcsin(np.clip(C[..., 2, 0], -1.0, 1.0))
    yaw = np.arctan2(C[..., 1, 0], C[..., 0, 0])
    return np.stack([roll, pitch, yaw], axis=-1)


def orthonormalize(C):
    """Closest rotation matrix to C (symmetric orthogonalization via SVD)."""
    U, _, Vt = np.linalg.svd(C)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U = U.copy()
        U[:, -1] *= -1.0
        R = U @ Vt
    return R


def is_rotation(C, tol=ORTHONORMAL_TOL):
    """True if C is orthonormal with determinant +1 within tol."""
    C = np.asarray(C, dtype=float)
    return (
        np.allclose(C.T @ C, np.eye(3), atol=tol, rtol=0.0)
        and abs(np.linalg.det(C) - 1.0) <= tol
    )


def apply_small_angle_correction(R, eps):
    """
    Apply a small attitude error to a DCM.

    Args:
        R: Body-to-nav DCM
        eps: Attitude error vector in the navigation frame (rad), |eps| < 0.1

    Returns:
        (I - skew(eps)) @ R, re-orthonormalized
    """
    eps = np.asarray(eps, dtype=float)
    if not np.any(eps):
        return np.array(R, dtype=float, copy=True)
    return orthonormalize((np.eye(3) - skew(eps)) @ R)


def rodrigues(phi):
    """
    Rotation matrix exp(skew(phi)) in closed form.

    Args:
        phi: Rotation vector (rad)
    """
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi)
    K = skew(phi)
    if angle < 1e-8:
        # second-order series is exact to machine precision here
        return np.eye(3) + K + 0.5 * (K @ K)
    return (
        np.eye(3)
        + (np.sin(angle) / angle) * K
        + ((1.0 - np.cos(angle)) / angle**2) * (K @ K)
    )
