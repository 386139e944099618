"""z-y-x Euler angle kinematics.

Angles are ordered ``(phi, theta, psi)`` = (roll, pitch, yaw).  All functions
broadcast over leading axes.
"""

import numpy as np

from .errors import GimbalLock

GIMBAL_EPS = 1e-3


def euler_to_rotation(theta) -> np.ndarray:
    """Body-to-world rotation ``Rz(psi) @ Ry(theta) @ Rx(phi)``."""
    theta = np.asarray(theta, dtype=float)
    cphi, ctht, cpsi = np.cos(theta[..., 0]), np.cos(theta[..., 1]), np.cos(theta[..., 2])
    sphi, stht, spsi = np.sin(theta[..., 0]), np.sin(theta[..., 1]), np.sin(theta[..., 2])
    R = np.empty(theta.shape[:-1] + (3, 3))
    R[..., 0, 0] = cpsi * ctht
    R[..., 0, 1] = cpsi * stht * sphi - spsi * cphi
    R[..., 0, 2] = cpsi * stht * cphi + spsi * sphi
    R[..., 1, 0] = spsi * ctht
    R[..., 1, 1] = spsi * stht * sphi + cpsi * cphi
    R[..., 1, 2] = spsi * stht * cphi - cpsi * sphi
    R[..., 2, 0] = -stht
    R[..., 2, 1] = ctht * sphi
    R[..., 2, 2] = ctht * cphi
    return R


def rate_matrix(theta) -> np.ndarray:
    """``R_omega``: maps Euler-angle rates to body angular velocity."""
    theta = np.asarray(theta, dtype=float)
    cphi, sphi = np.cos(theta[..., 0]), np.sin(theta[..., 0])
    ctht, stht = np.cos(theta[..., 1]), np.sin(theta[..., 1])
    M = np.zeros(theta.shape[:-1] + (3, 3))
    M[..., 0, 0] = 1.0
    M[..., 0, 2] = -stht
    M[..., 1, 1] = cphi
    M[..., 1, 2] = sphi * ctht
    M[..., 2, 1] = -sphi
    M[..., 2, 2] = cphi * ctht
    return M


def check_gimbal(theta, eps=GIMBAL_EPS) -> None:
    pitch = np.asarray(theta, dtype=float)[..., 1]
    if np.any(np.abs(pitch) >= np.pi / 2 - eps):
        raise GimbalLock(f"pitch within {eps} rad of +-pi/2")


def euler_rate_map(theta, omega, eps=GIMBAL_EPS) -> np.ndarray:
    """Euler-angle rates ``R_omega^-1 @ omega``.

    Raises:
        GimbalLock: if ``|pitch| >= pi/2 - eps``.
    """
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    check_gimbal(theta, eps)
    cphi, sphi = np.cos(theta[..., 0]), np.sin(theta[..., 0])
    ctht, ttht = np.cos(theta[..., 1]), np.tan(theta[..., 1])
    p, q, r = omega[..., 0], omega[..., 1], omega[..., 2]
    s = q * sphi + r * cphi
    return np.stack([p + s * ttht, q * cphi - r * sphi, s / ctht], axis=-1)


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)
