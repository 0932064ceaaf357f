"""Simulated platform GPS and geometric tag detection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from landsim.plant import PlatformTruth, QuadrotorTruth, tag_pose
from landsim.unicycle import wrap_angle

_TICK_EPS = 1e-9


@dataclass(frozen=True)
class GpsMeasurement:
    px: float
    py: float
    theta: float
    timestamp: float

    @property
    def z(self) -> np.ndarray:
        return np.array([self.px, self.py, self.theta])


@dataclass(frozen=True)
class VisionMeasurement:
    relative_tag_position: np.ndarray  # tag minus UAV, rotated into the UAV yaw frame
    relative_tag_yaw: float  # tag normal yaw minus UAV yaw
    timestamp: float


@dataclass
class GpsConfig:
    rate_hz: float = 2.0
    sigma_pos: float = 0.5
    sigma_theta: float = 0.15


@dataclass
class VisionConfig:
    rate_hz: float = 30.0
    min_range: float = 0.05
    max_range: float = 3.5
    fov_half_angle_deg: float = 45.0
    sigma0: float = 0.005
    sigma_per_m: float = 0.01
    sigma_yaw: float = 0.02


def tick_due(t: float, rate_hz: float, window: float = 0.0) -> bool:
    """True if a sample boundary n/rate falls in (t - window, t].

    With ``window = 0`` only exact boundaries (to 1e-9) qualify; a loop that
    runs at step ``dt`` passes ``window = dt`` so every boundary is hit once.
    """
    n = math.floor(t * rate_hz + _TICK_EPS)
    boundary = n / rate_hz
    if window <= 0:
        return abs(t - boundary) <= _TICK_EPS
    return boundary > t - window + _TICK_EPS


def gps_sense(platform: PlatformTruth, rng: np.random.Generator, t: float, cfg: GpsConfig | None = None,
              window: float = 0.0) -> GpsMeasurement | None:
    cfg = cfg or GpsConfig()
    if not tick_due(t, cfg.rate_hz, window):
        return None
    n = rng.standard_normal(3)
    return GpsMeasurement(
        px=platform.px + cfg.sigma_pos * n[0],
        py=platform.py + cfg.sigma_pos * n[1],
        theta=float(wrap_angle(platform.theta + cfg.sigma_theta * n[2])),
        timestamp=t,
    )


def yaw_rotation(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def detectable(quad: QuadrotorTruth, platform: PlatformTruth, cfg: VisionConfig | None = None) -> bool:
    """Range gate, camera cone about the UAV yaw, and front side of the tag."""
    cfg = cfg or VisionConfig()
    tag, facing = tag_pose(platform)
    rel = tag - quad.position
    r = float(np.linalg.norm(rel))
    if not cfg.min_range <= r <= cfg.max_range:
        return False
    if np.dot(-rel, facing) <= 0:
        return False
    forward = np.array([math.cos(quad.yaw), math.sin(quad.yaw), 0.0])
    return float(np.dot(rel, forward)) >= r * math.cos(math.radians(cfg.fov_half_angle_deg))


def vision_sense(quad: QuadrotorTruth, platform: PlatformTruth, rng: np.random.Generator, t: float,
                 cfg: VisionConfig | None = None, window: float = 0.0) -> VisionMeasurement | None:
    cfg = cfg or VisionConfig()
    if not tick_due(t, cfg.rate_hz, window) or not detectable(quad, platform, cfg):
        return None
    tag, facing = tag_pose(platform)
    rel = tag - quad.position
    r = float(np.linalg.norm(rel))
    n = rng.standard_normal(4)
    sigma = cfg.sigma0 + cfg.sigma_per_m * r
    rel_body = yaw_rotation(quad.yaw).T @ rel + sigma * n[:3]
    tag_yaw = math.atan2(facing[1], facing[0])
    rel_yaw = float(wrap_angle(tag_yaw - quad.yaw + cfg.sigma_yaw * n[3]))
    return VisionMeasurement(rel_body, rel_yaw, t)


def vision_noise_sigma(cfg: VisionConfig, distance: float) -> float:
    return cfg.sigma0 + cfg.sigma_per_m * distance
