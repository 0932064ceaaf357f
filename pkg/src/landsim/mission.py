"""Four-mode mission executive: StandBy -> Search -> Landing -> End."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace


class Mode(str, enum.Enum):
    STANDBY = "StandBy"
    SEARCH = "Search"
    LANDING = "Landing"
    END = "End"


@dataclass(frozen=True)
class MissionThresholds:
    hover_altitude: float = 1.3
    hover_tolerance: float = 0.1
    hover_dwell: float = 0.5
    d_land: float = 0.10
    v_rel_land: float = 0.30
    detection_timeout: float = 0.8

    def __post_init__(self):
        for name in ("hover_altitude", "hover_tolerance", "d_land", "v_rel_land", "detection_timeout"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, cfg: dict) -> "MissionThresholds":
        return cls(**{k: float(v) for k, v in cfg.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class MissionState:
    mode: Mode = Mode.STANDBY
    last_detection_time: float | None = None
    first_detection_time: float | None = None
    entry_time: float = 0.0


@dataclass(frozen=True)
class MissionEvents:
    hover_reached: bool = False
    detection: bool = False
    dist_to_tag: float = float("inf")
    rel_speed: float = float("inf")


def fsm_step(state: MissionState, t: float, events: MissionEvents, th: MissionThresholds) -> MissionState:
    if state.mode is Mode.END:
        return state

    if events.detection and state.mode is not Mode.STANDBY:
        state = replace(
            state,
            last_detection_time=t,
            first_detection_time=t if state.first_detection_time is None else state.first_detection_time,
        )

    if state.mode is Mode.STANDBY:
        if events.hover_reached:
            return replace(state, mode=Mode.SEARCH, entry_time=t)
    elif state.mode is Mode.SEARCH:
        if events.detection:
            return replace(state, mode=Mode.LANDING, entry_time=t)
    elif state.mode is Mode.LANDING:
        if events.dist_to_tag <= th.d_land and events.rel_speed <= th.v_rel_land:
            return replace(state, mode=Mode.END, entry_time=t)
        last = state.last_detection_time
        if last is None or t - last > th.detection_timeout:
            return replace(state, mode=Mode.SEARCH, entry_time=t)
    return state


class HoverMonitor:
    """Declares the hover reached once the UAV stays near the setpoint for the dwell time."""

    def __init__(self, th: MissionThresholds):
        self.th = th
        self._since: float | None = None

    def update(self, t: float, error: float) -> bool:
        if error > self.th.hover_tolerance:
            self._since = None
            return False
        if self._since is None:
            self._since = t
        return t - self._since >= self.th.hover_dwell - 1e-9
