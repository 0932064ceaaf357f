"""Distance-dependent turbulent wind in front of the landing plate.

The jet is described by a table of (distance, mean speed, std) samples along
a fixed direction. Gusts are a scalar Ornstein-Uhlenbeck process along that
direction; the field is constant perpendicular to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from landsim.errors import ConfigError


@dataclass
class WindProfile:
    samples: np.ndarray  # (k, 3): distance_m, mean_mps, std_mps
    direction: np.ndarray  # unit 3-vector the air moves along
    correlation_time_s: float = 0.2

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        self.direction = np.asarray(self.direction, dtype=float)
        if self.samples.size == 0:
            raise ConfigError("wind profile has no samples")
        if self.samples.shape[1] != 3:
            raise ConfigError("wind samples must be (distance, mean, std) triples")
        d = self.samples[:, 0]
        if np.any(d < 0) or np.any(np.diff(d) <= 0):
            raise ConfigError("wind sample distances must be >= 0 and strictly increasing")
        if np.any(self.samples[:, 1:] < 0):
            raise ConfigError("wind mean and std must be non-negative")
        norm = np.linalg.norm(self.direction)
        if self.direction.shape != (3,) or norm == 0:
            raise ConfigError("wind direction must be a non-zero 3-vector")
        self.direction = self.direction / norm
        if self.correlation_time_s <= 0:
            raise ConfigError("correlation_time_s must be positive")

    @classmethod
    def calm(cls, direction=(-1.0, 0.0, 0.0)) -> "WindProfile":
        return cls(samples=[[0.0, 0.0, 0.0]], direction=direction)

    @classmethod
    def from_dict(cls, cfg: dict) -> "WindProfile":
        try:
            return cls(
                samples=cfg["samples"],
                direction=cfg.get("direction", [-1.0, 0.0, 0.0]),
                correlation_time_s=float(cfg.get("correlation_time_s", 0.2)),
            )
        except KeyError as exc:
            raise ConfigError(f"wind profile missing key {exc}") from None

    def to_dict(self) -> dict:
        return {
            "samples": self.samples.tolist(),
            "direction": self.direction.tolist(),
            "correlation_time_s": self.correlation_time_s,
        }


def wind_params_at(profile: WindProfile, distance: float) -> tuple[float, float]:
    """Mean speed and gust std at ``distance`` from the plate.

    Linear interpolation between samples, held at the first sample below the
    table. Past the last sample both taper linearly to zero over one sample
    spacing (a single-sample table tapers over 0.5 m).
    """
    s = profile.samples
    if s.size == 0:
        raise ConfigError("wind profile has no samples")
    d = max(float(distance), 0.0)
    dist, mean, std = s[:, 0], s[:, 1], s[:, 2]
    if d <= dist[-1]:
        return float(np.interp(d, dist, mean)), float(np.interp(d, dist, std))
    spacing = dist[-1] - dist[-2] if len(dist) > 1 else 0.5
    frac = max(0.0, 1.0 - (d - dist[-1]) / spacing)
    return float(mean[-1] * frac), float(std[-1] * frac)


@dataclass
class WindState:
    gust: float = 0.0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    correlation_time_s: float = 0.2

    @classmethod
    def seeded(cls, seed, correlation_time_s: float = 0.2) -> "WindState":
        return cls(0.0, np.random.default_rng(seed), correlation_time_s)


def step_gust(state: WindState, std: float, dt: float, clip_sigmas: float | None = None) -> WindState:
    """Advance the gust by one exact OU transition; stationary law is N(0, std^2).

    ``clip_sigmas`` truncates the gust to +-clip_sigmas*std (used for bounded
    disturbance experiments).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    decay = np.exp(-dt / state.correlation_time_s)
    noise = state.rng.standard_normal()
    gust = state.gust * decay + std * np.sqrt(-np.expm1(-2.0 * dt / state.correlation_time_s)) * noise
    if clip_sigmas is not None:
        bound = clip_sigmas * std
        gust = min(max(gust, -bound), bound)
    state.gust = float(gust)
    return state


def wind_velocity(profile: WindProfile, state: WindState, distance: float, direction=None) -> np.ndarray:
    """World-frame air velocity at ``distance``; always parallel to the jet axis."""
    mean, _ = wind_params_at(profile, distance)
    u = profile.direction if direction is None else np.asarray(direction, dtype=float)
    return (mean + state.gust) * u
