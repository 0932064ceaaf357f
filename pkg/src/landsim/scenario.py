"""Scenario configuration: one JSON document per closed-loop run.

Top-level keys (all optional except ``name``)::

    name, seed, duration_s, plant_dt, control_rate_hz,
    controller_mode ("aware" | "naive"), success_radius,
    quad {position, velocity, yaw, drag_c, gain_b, thrust_to_weight, tau_att, tau_yaw, mass_kg},
    platform {px, py, theta, speed, yaw_rate, deck_height, tag_offset_back},
    wind {samples, direction, correlation_time_s, mounting ("world" | "platform"), clip_sigmas},
    gps {...}, vision {...}, estimator {q_diag, r_gps_diag, r_vision_diag},
    planner {...}, controller {...}, mission {...}
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from landsim.controller import BlscGains
from landsim.errors import ConfigError
from landsim.estimator import NoiseConfig
from landsim.mission import MissionThresholds
from landsim.planner import PlannerConfig
from landsim.plant import PlatformTruth, QuadrotorTruth
from landsim.sensors import GpsConfig, VisionConfig
from landsim.wind import WindProfile

DEFAULT_WIND_SAMPLES = [
    [0.5, 4.0, 2.0], [1.0, 5.5, 1.5], [1.5, 5.0, 1.2], [2.0, 4.2, 1.0],
    [2.5, 3.5, 0.8], [3.0, 2.8, 0.7], [3.5, 2.2, 0.6],
]

CONTROLLER_MODES = ("aware", "naive")
WIND_MOUNTINGS = ("world", "platform")


def _build(cls, cfg: dict, section: str, exclude=()):
    if not isinstance(cfg, dict):
        raise ConfigError(f"{section} must be an object")
    allowed = {f.name for f in fields(cls)} - set(exclude)
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")
    try:
        return cls(**cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


@dataclass
class Scenario:
    name: str
    seed: int = 0
    duration_s: float = 40.0
    plant_dt: float = 0.002
    control_rate_hz: float = 100.0
    controller_mode: str = "aware"
    success_radius: float = 0.3
    quad: QuadrotorTruth = field(default_factory=QuadrotorTruth)
    platform: PlatformTruth = field(default_factory=PlatformTruth)
    wind: WindProfile = field(default_factory=WindProfile.calm)
    wind_mounting: str = "world"
    wind_clip_sigmas: float | None = None
    gps: GpsConfig = field(default_factory=GpsConfig)
    vision: VisionConfig = field(default_factory=VisionConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    gains: BlscGains = field(default_factory=BlscGains)
    mission: MissionThresholds = field(default_factory=MissionThresholds)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def control_every(self) -> int:
        """Plant ticks per control tick."""
        return int(round(1.0 / (self.control_rate_hz * self.plant_dt)))

    @classmethod
    def from_dict(cls, cfg: dict) -> "Scenario":
        if not isinstance(cfg, dict) or "name" not in cfg:
            raise ConfigError("scenario must be an object with a 'name'")
        known = {"name", "seed", "duration_s", "plant_dt", "control_rate_hz", "controller_mode", "success_radius",
                 "quad", "platform", "wind", "gps", "vision", "estimator", "planner", "controller", "mission"}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            seed = int(cfg.get("seed", 0))
            duration = float(cfg.get("duration_s", 40.0))
            plant_dt = float(cfg.get("plant_dt", 0.002))
            rate = float(cfg.get("control_rate_hz", 100.0))
            radius = float(cfg.get("success_radius", 0.3))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if duration <= 0 or not 0 < plant_dt <= 0.01 or rate <= 0 or radius <= 0:
            raise ConfigError("duration_s, control_rate_hz and success_radius must be positive; plant_dt in (0, 0.01]")
        ratio = 1.0 / (rate * plant_dt)
        if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
            raise ConfigError("control period must be a whole number of plant steps")
        mode = cfg.get("controller_mode", "aware")
        if mode not in CONTROLLER_MODES:
            raise ConfigError(f"controller_mode must be one of {CONTROLLER_MODES}")

        quad = _build(QuadrotorTruth, dict(cfg.get("quad", {})), "quad", exclude=("achieved_accel", "gravity"))
        platform = _build(PlatformTruth, dict(cfg.get("platform", {})), "platform")

        wind_cfg = dict(cfg.get("wind", {}))
        mounting = wind_cfg.pop("mounting", "world")
        if mounting not in WIND_MOUNTINGS:
            raise ConfigError(f"wind.mounting must be one of {WIND_MOUNTINGS}")
        clip = wind_cfg.pop("clip_sigmas", None)
        wind_cfg.setdefault("samples", DEFAULT_WIND_SAMPLES)
        unknown = set(wind_cfg) - {"samples", "direction", "correlation_time_s"}
        if unknown:
            raise ConfigError(f"unknown wind keys: {sorted(unknown)}")
        wind = WindProfile.from_dict(wind_cfg)

        est = dict(cfg.get("estimator", {}))
        unknown = set(est) - {"q_diag", "r_gps_diag", "r_vision_diag"}
        if unknown:
            raise ConfigError(f"unknown estimator keys: {sorted(unknown)}")
        try:
            noise = NoiseConfig.from_dict(est)
        except ValueError as exc:
            raise ConfigError(f"estimator: {exc}") from None

        planner_cfg = dict(cfg.get("planner", {}))
        planner_cfg.setdefault("deck_height", platform.deck_height)
        planner_cfg.setdefault("tag_offset_back", platform.tag_offset_back)
        planner = PlannerConfig.from_dict(planner_cfg)

        gains_cfg = dict(cfg.get("controller", {}))
        gains_cfg.setdefault("lag_comp", quad.tau_att)
        gains = _build(BlscGains, gains_cfg, "controller")

        return cls(
            name=str(cfg["name"]), seed=seed, duration_s=duration, plant_dt=plant_dt, control_rate_hz=rate,
            controller_mode=mode, success_radius=radius, quad=quad, platform=platform, wind=wind,
            wind_mounting=mounting, wind_clip_sigmas=None if clip is None else float(clip),
            gps=_build(GpsConfig, dict(cfg.get("gps", {})), "gps"),
            vision=_build(VisionConfig, dict(cfg.get("vision", {})), "vision"),
            noise=noise, planner=planner,
            gains=gains,
            mission=_build(MissionThresholds, dict(cfg.get("mission", {})), "mission"),
            raw=copy.deepcopy(cfg),
        )

    def replace(self, **overrides) -> "Scenario":
        """A new scenario from the raw config with top-level overrides."""
        cfg = copy.deepcopy(self.raw) if self.raw else {"name": self.name}
        cfg.update(overrides)
        return Scenario.from_dict(cfg)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return Scenario.from_dict(cfg)


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``"static_aware"``."""
    return Path(str(resources.files("landsim") / "scenarios" / f"{name}.json"))


def bundled_scenario(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))


def stream_seeds(seed: int, name: str, n: int) -> list[np.random.SeedSequence]:
    """Independent RNG streams derived from (seed, scenario name)."""
    key = [int(b) for b in name.encode("utf-8")]
    return np.random.SeedSequence([int(seed)] + key).spawn(n)
