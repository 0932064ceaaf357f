"""EKF over the platform state ``[p_x, p_y, v_p, theta, theta_dot]``.

Prediction uses the exact constant-twist arc map and its analytic Jacobian;
updates take ``(p_x, p_y, theta)`` from either GPS or the tag detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from landsim.plant import QuadrotorTruth
from landsim.sensors import VisionMeasurement, yaw_rotation
from landsim.unicycle import arc_jacobian, arc_step, wrap_angle

H = np.zeros((3, 5))
H[0, 0] = H[1, 1] = H[2, 3] = 1.0

_EIG_FLOOR = 0.0


@dataclass
class PlatformBelief:
    mean: np.ndarray
    covariance: np.ndarray
    last_update_time: float = 0.0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(5)
        self.mean[3] = wrap_angle(self.mean[3])
        self.covariance = np.asarray(self.covariance, dtype=float).reshape(5, 5)


@dataclass
class NoiseConfig:
    Q: np.ndarray = field(default_factory=lambda: np.diag([1e-4, 1e-4, 0.05, 1e-4, 0.02]))
    R_gps: np.ndarray = field(default_factory=lambda: np.diag([0.25, 0.25, 0.0225]))
    R_vision: np.ndarray = field(default_factory=lambda: np.diag([4e-4, 4e-4, 4e-4]))
    init_var_speed: float = 10.0
    init_var_yaw_rate: float = 1.0

    @classmethod
    def from_dict(cls, cfg: dict) -> "NoiseConfig":
        out = cls()
        if "q_diag" in cfg:
            out.Q = np.diag(np.asarray(cfg["q_diag"], dtype=float))
        if "r_gps_diag" in cfg:
            out.R_gps = np.diag(np.asarray(cfg["r_gps_diag"], dtype=float))
        if "r_vision_diag" in cfg:
            out.R_vision = np.diag(np.asarray(cfg["r_vision_diag"], dtype=float))
        return out


def _condition(P: np.ndarray) -> np.ndarray:
    P = 0.5 * (P + P.T)
    w, V = np.linalg.eigh(P)
    if w.min() < _EIG_FLOOR:
        P = (V * np.maximum(w, _EIG_FLOOR)) @ V.T
        P = 0.5 * (P + P.T)
    return P


def init_belief(z, R, t: float, noise: NoiseConfig | None = None) -> PlatformBelief:
    """Start from a pose fix; speed and yaw rate unknown (zero mean, large variance)."""
    noise = noise or NoiseConfig()
    z = np.asarray(z, dtype=float)
    P = np.zeros((5, 5))
    R = np.asarray(R, dtype=float)
    P[np.ix_([0, 1, 3], [0, 1, 3])] = R
    P[2, 2] = noise.init_var_speed
    P[4, 4] = noise.init_var_yaw_rate
    return PlatformBelief(np.array([z[0], z[1], 0.0, z[2], 0.0]), P, t)


def ekf_predict(belief: PlatformBelief, dt: float, noise: NoiseConfig) -> PlatformBelief:
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = arc_jacobian(belief.mean, dt)
    mean = arc_step(belief.mean, dt)
    P = _condition(F @ belief.covariance @ F.T + noise.Q * dt)
    return PlatformBelief(mean, P, belief.last_update_time + dt)


def predict_to(belief: PlatformBelief, t: float, noise: NoiseConfig) -> PlatformBelief:
    dt = t - belief.last_update_time
    if dt <= 1e-12:
        return belief
    return ekf_predict(belief, dt, noise)


def ekf_update(belief: PlatformBelief, z, R) -> PlatformBelief:
    z = np.asarray(z, dtype=float)
    R = np.asarray(R, dtype=float)
    P = belief.covariance
    innov = z - H @ belief.mean
    innov[2] = wrap_angle(innov[2])
    S = H @ P @ H.T + R
    try:
        K = np.linalg.solve(S, H @ P).T
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError("singular innovation covariance") from exc
    mean = belief.mean + K @ innov
    I_KH = np.eye(5) - K @ H
    P_new = _condition(I_KH @ P @ I_KH.T + K @ R @ K.T)
    return replace(belief, mean=mean, covariance=P_new)


def nees(belief: PlatformBelief, truth) -> float:
    err = np.asarray(truth, dtype=float) - belief.mean
    err[3] = wrap_angle(err[3])
    return float(err @ np.linalg.solve(belief.covariance, err))


def vision_to_measurement(vis: VisionMeasurement, quad: QuadrotorTruth, tag_offset_back: float = 0.0) -> np.ndarray:
    """World-frame platform pose ``(p_x, p_y, theta)`` from a relative tag detection.

    The tag normal points against the platform heading, so
    ``theta = uav_yaw + relative_tag_yaw - pi``. A non-zero ``tag_offset_back``
    moves the result from the tag centre forward to the deck reference point.
    """
    world = quad.position + yaw_rotation(quad.yaw) @ np.asarray(vis.relative_tag_position, dtype=float)
    theta = float(wrap_angle(quad.yaw + vis.relative_tag_yaw - math.pi))
    px = world[0] + tag_offset_back * math.cos(theta)
    py = world[1] + tag_offset_back * math.sin(theta)
    return np.array([px, py, theta])


def predict_platform_ahead(belief: PlatformBelief, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Pose ``(p_x, p_y, theta)`` and planar velocity after ``tau`` seconds of constant twist."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    x = arc_step(belief.mean, tau) if tau > 0 else belief.mean.copy()
    pose = np.array([x[0], x[1], x[3]])
    vel = x[2] * np.array([math.cos(x[3]), math.sin(x[3])])
    return pose, vel
