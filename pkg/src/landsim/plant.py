"""Ground-truth plants: quadrotor translational dynamics and the unicycle platform.

The quadrotor is a double integrator driven by a lagged, saturated net
acceleration with quadratic drag on the air-relative velocity:

    p' = v
    v' = -c |v - w| (v - w) + a
    a' = (sat(b u - g e_z) - a) / tau_att

``a`` is the achieved acceleration net of gravity, so the per-axis saturation
``max_accel = (thrust_to_weight - 1) g`` is the vertical authority bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from landsim.errors import SimulationFault
from landsim.unicycle import arc_step, wrap_angle

GRAVITY = 9.81
E_Z = np.array([0.0, 0.0, 1.0])


def _vec3(x=None):
    return np.zeros(3) if x is None else np.asarray(x, dtype=float).reshape(3)


@dataclass
class QuadrotorTruth:
    position: np.ndarray = field(default_factory=_vec3)
    velocity: np.ndarray = field(default_factory=_vec3)
    achieved_accel: np.ndarray = field(default_factory=_vec3)
    yaw: float = 0.0
    mass_kg: float = 0.564
    drag_c: float = 0.05
    gain_b: float = 1.0
    thrust_to_weight: float = 1.75
    tau_att: float = 0.15
    tau_yaw: float = 0.2
    gravity: float = GRAVITY

    def __post_init__(self):
        self.position = _vec3(self.position)
        self.velocity = _vec3(self.velocity)
        self.achieved_accel = _vec3(self.achieved_accel)
        if self.mass_kg <= 0 or self.gain_b <= 0:
            raise ValueError("mass_kg and gain_b must be positive")

    @property
    def max_accel(self) -> float:
        return (self.thrust_to_weight - 1.0) * GRAVITY

    def hover_command(self) -> np.ndarray:
        return self.gravity / self.gain_b * E_Z


def _accel_target(state: QuadrotorTruth, u: np.ndarray) -> np.ndarray:
    lim = state.max_accel
    return np.clip(state.gain_b * u - state.gravity * E_Z, -lim, lim)


def step_quadrotor(state: QuadrotorTruth, command_u, wind_vel, dt: float, yaw_cmd: float | None = None) -> QuadrotorTruth:
    """One RK4 step of the quadrotor plant; returns a new state."""
    u = np.asarray(command_u, dtype=float)
    w = np.asarray(wind_vel, dtype=float)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
        raise SimulationFault("non-finite command or wind")
    if not 0 < dt <= 0.01:
        raise ValueError("plant dt must lie in (0, 0.01]")

    target = _accel_target(state, u)
    c = state.drag_c
    tau = state.tau_att
    lagged = tau > 0

    def deriv(v, a):
        rel = v - w
        dv = -c * np.linalg.norm(rel) * rel + a
        da = (target - a) / tau if lagged else np.zeros(3)
        return dv, da

    p0, v0 = state.position, state.velocity
    a0 = state.achieved_accel if lagged else target
    k1v, k1a = deriv(v0, a0)
    k2v, k2a = deriv(v0 + 0.5 * dt * k1v, a0 + 0.5 * dt * k1a)
    k3v, k3a = deriv(v0 + 0.5 * dt * k2v, a0 + 0.5 * dt * k2a)
    k4v, k4a = deriv(v0 + dt * k3v, a0 + dt * k3a)
    # position derivative is velocity, so its RK4 stages are the velocity stages
    p1 = p0 + dt / 6.0 * (v0 + 2 * (v0 + 0.5 * dt * k1v) + 2 * (v0 + 0.5 * dt * k2v) + (v0 + dt * k3v))
    v1 = v0 + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    a1 = a0 + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
    a1 = np.clip(a1, -state.max_accel, state.max_accel)

    yaw = state.yaw
    if yaw_cmd is not None:
        blend = 1.0 if state.tau_yaw <= 0 else -np.expm1(-dt / state.tau_yaw)
        yaw = float(wrap_angle(yaw + blend * wrap_angle(yaw_cmd - yaw)))

    out = replace(state, position=p1, velocity=v1, achieved_accel=a1, yaw=yaw)
    if not (np.all(np.isfinite(p1)) and np.all(np.isfinite(v1))):
        raise SimulationFault("quadrotor state diverged")
    return out


@dataclass
class PlatformTruth:
    px: float = 0.0
    py: float = 0.0
    theta: float = 0.0
    speed: float = 0.0
    yaw_rate: float = 0.0
    deck_height: float = 0.8
    tag_offset_back: float = 0.3

    def __post_init__(self):
        if self.deck_height < 0:
            raise ValueError("deck_height must be non-negative")

    @property
    def heading(self) -> np.ndarray:
        return np.array([np.cos(self.theta), np.sin(self.theta), 0.0])

    @property
    def velocity(self) -> np.ndarray:
        return self.speed * self.heading

    def as_state(self) -> np.ndarray:
        return np.array([self.px, self.py, self.speed, self.theta, self.yaw_rate])


def step_platform(state: PlatformTruth, dt: float) -> PlatformTruth:
    if dt <= 0:
        raise ValueError("dt must be positive")
    px, py, _, th, _ = arc_step(state.as_state(), dt)
    return replace(state, px=float(px), py=float(py), theta=float(th))


def tag_pose(state: PlatformTruth) -> tuple[np.ndarray, np.ndarray]:
    """Tag centre and its outward normal; the tag looks back along the approach."""
    h = state.heading
    pos = np.array([state.px, state.py, state.deck_height]) - state.tag_offset_back * h
    return pos, -h
