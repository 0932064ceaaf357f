"""Constant-twist unicycle propagation shared by the ground-truth platform and the EKF.

State layout: ``[p_x, p_y, v, theta, theta_dot]``.
"""

from __future__ import annotations

import numpy as np

STRAIGHT_RATE = 1e-6  # rad/s; below this the straight-line formula is used
_SERIES_PHI = 1e-3


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


def _sinc(phi):
    # sin(phi)/phi and its derivative
    if abs(phi) < _SERIES_PHI:
        p2 = phi * phi
        return 1.0 - p2 / 6.0 + p2 * p2 / 120.0, -phi / 3.0 + phi * p2 / 30.0
    return np.sin(phi) / phi, (phi * np.cos(phi) - np.sin(phi)) / (phi * phi)


def _cosc(phi):
    # (1 - cos(phi))/phi and its derivative
    if abs(phi) < _SERIES_PHI:
        p2 = phi * phi
        return phi / 2.0 - phi * p2 / 24.0, 0.5 - p2 / 8.0
    return (1.0 - np.cos(phi)) / phi, (phi * np.sin(phi) - (1.0 - np.cos(phi))) / (phi * phi)


def arc_step(x, dt: float) -> np.ndarray:
    """Exact propagation of the unicycle state over ``dt`` at constant v and yaw rate."""
    px, py, v, th, om = (float(c) for c in x)
    if abs(om) < STRAIGHT_RATE:
        return np.array([px + v * np.cos(th) * dt, py + v * np.sin(th) * dt, v, wrap_angle(th + om * dt), om])
    phi = om * dt
    sc, _ = _sinc(phi)
    cc, _ = _cosc(phi)
    c, s = np.cos(th), np.sin(th)
    dx = v * dt * (c * sc - s * cc)
    dy = v * dt * (s * sc + c * cc)
    return np.array([px + dx, py + dy, v, wrap_angle(th + phi), om])


def arc_jacobian(x, dt: float) -> np.ndarray:
    """Jacobian of :func:`arc_step` with respect to the state.

    Written in terms of sin(phi)/phi and (1-cos(phi))/phi with series
    expansions near phi = 0, so there is no 0/0 at zero yaw rate.
    """
    _, _, v, th, om = (float(c) for c in x)
    phi = om * dt
    sc, dsc = _sinc(phi)
    cc, dcc = _cosc(phi)
    c, s = np.cos(th), np.sin(th)
    F = np.eye(5)
    # d(dx)/dv, d(dx)/dtheta, d(dx)/domega
    F[0, 2] = dt * (c * sc - s * cc)
    F[0, 3] = v * dt * (-s * sc - c * cc)
    F[0, 4] = v * dt * dt * (c * dsc - s * dcc)
    F[1, 2] = dt * (s * sc + c * cc)
    F[1, 3] = v * dt * (c * sc - s * cc)
    F[1, 4] = v * dt * dt * (s * dsc + c * dcc)
    F[3, 4] = dt
    return F
