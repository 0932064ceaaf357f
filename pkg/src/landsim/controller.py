"""Boundary-layer sliding controller with a turbulence-aware switching gain.

Per axis the command is

    u = (xdd_d - lam * e_v - f_hat - K sat(s / Phi) + g e_z) / b_hat,
    s = e_v + lam * e_p,

where ``f_hat`` is the modelled drag on the air-relative velocity and
``K = F_bar + eta`` bounds the drag mismatch caused by the coefficient error
and by gusts of up to two standard deviations along the wind axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from landsim.plant import E_Z, GRAVITY


@dataclass
class BlscGains:
    lam: float = 2.5
    eta: float = 0.8
    phi: float = 0.35
    b_hat: float = 1.0
    c_hat: float = 0.05
    c_tilde: float = 0.02
    gravity: float = GRAVITY
    max_accel: float | None = None  # net-of-gravity command limit per axis
    lag_comp: float = 0.0  # s; reference jerk feed-forward that cancels a first-order actuator lag

    def __post_init__(self):
        if min(self.lam, self.eta, self.phi, self.b_hat) <= 0:
            raise ValueError("lam, eta, phi and b_hat must be positive")
        if self.c_hat < 0 or self.c_tilde < 0:
            raise ValueError("drag coefficients must be non-negative")
        if self.lag_comp < 0:
            raise ValueError("lag_comp must be non-negative")

    @classmethod
    def from_dict(cls, cfg: dict) -> "BlscGains":
        keys = ("lam", "eta", "phi", "b_hat", "c_hat", "c_tilde", "gravity", "max_accel", "lag_comp")
        return cls(**{k: cfg[k] for k in keys if k in cfg})


@dataclass
class WindEstimate:
    mean_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sigma: float = 0.0
    direction: np.ndarray = field(default_factory=lambda: np.array([-1.0, 0.0, 0.0]))

    def __post_init__(self):
        self.mean_velocity = np.asarray(self.mean_velocity, dtype=float)
        self.direction = np.asarray(self.direction, dtype=float)
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        n = np.linalg.norm(self.direction)
        if n == 0:
            raise ValueError("wind direction must be non-zero")
        self.direction = self.direction / n

    @classmethod
    def calm(cls, direction=(-1.0, 0.0, 0.0)) -> "WindEstimate":
        return cls(np.zeros(3), 0.0, np.asarray(direction, dtype=float))


def sliding_var(pos_err, vel_err, lam: float) -> np.ndarray:
    if lam <= 0:
        raise ValueError("lam must be positive")
    return np.asarray(vel_err, dtype=float) + lam * np.asarray(pos_err, dtype=float)


def sat(x):
    return np.clip(x, -1.0, 1.0)


def _drag(c, rel):
    rel = np.asarray(rel, dtype=float)
    return -c * np.linalg.norm(rel) * rel


def drag_model(velocity, wind: WindEstimate, c_hat: float) -> np.ndarray:
    """Modelled drag acceleration, opposing the air-relative velocity."""
    return _drag(c_hat, np.asarray(velocity, dtype=float) - wind.mean_velocity)


def disturbance_bound(velocity, wind: WindEstimate, c_hat: float, c_tilde: float) -> float:
    """Magnitude bound on true-minus-modelled drag with a 2-sigma gust along the wind axis.

    Both gust signs are evaluated and the larger mismatch is kept; for a UAV
    flying into the jet this is the sign that strengthens the wind.
    """
    V = np.asarray(velocity, dtype=float) - wind.mean_velocity
    f_hat = _drag(c_hat, V)
    best = 0.0
    for sign in (1.0, -1.0):
        W = V - sign * 2.0 * wind.sigma * wind.direction
        best = max(best, float(np.linalg.norm(_drag(c_hat + c_tilde, W) - f_hat)))
    return best


def switching_gains(velocity, wind: WindEstimate, gains: BlscGains) -> np.ndarray:
    """Per-axis K = eta + worst-case drag mismatch on that axis.

    Extremes are taken over c in {c_hat - c_tilde, c_hat + c_tilde} and gusts
    in {-2 sigma, 0, +2 sigma} along the wind axis. On the wind axis this
    reproduces :func:`disturbance_bound`; axes perpendicular to the wind only
    see the coefficient error acting on their own velocity component.
    """
    V = np.asarray(velocity, dtype=float) - wind.mean_velocity
    f_hat = _drag(gains.c_hat, V)
    worst = np.zeros(3)
    for c in (max(gains.c_hat - gains.c_tilde, 0.0), gains.c_hat + gains.c_tilde):
        for g in (-2.0 * wind.sigma, 0.0, 2.0 * wind.sigma):
            worst = np.maximum(worst, np.abs(_drag(c, V - g * wind.direction) - f_hat))
    return gains.eta + worst


def clamp_command(u, gains: BlscGains) -> np.ndarray:
    if gains.max_accel is None:
        return u
    net = np.clip(gains.b_hat * u - gains.gravity * E_Z, -gains.max_accel, gains.max_accel)
    return (net + gains.gravity * E_Z) / gains.b_hat


def blsc_command(state_est, desired, wind: WindEstimate, gains: BlscGains, return_s: bool = False,
                 jerk_d=None):
    """Command ``u`` (and optionally the sliding variable) for one control tick.

    ``state_est = (pos, vel)``, ``desired = (x_d, xd_d, xdd_d)``. With
    ``gains.lag_comp > 0`` the reference jerk ``jerk_d`` is fed forward so a
    first-order actuator with that time constant reproduces ``xdd_d``.
    """
    pos, vel = (np.asarray(a, dtype=float) for a in state_est)
    x_d, v_d, a_d = (np.asarray(a, dtype=float) for a in desired)
    e_p = pos - x_d
    e_v = vel - v_d
    s = sliding_var(e_p, e_v, gains.lam)
    K = switching_gains(vel, wind, gains)
    accel = a_d - gains.lam * e_v - drag_model(vel, wind, gains.c_hat) - K * sat(s / gains.phi)
    if jerk_d is not None and gains.lag_comp > 0:
        accel = accel + gains.lag_comp * np.asarray(jerk_d, dtype=float)
    u = clamp_command((accel + gains.gravity * E_Z) / gains.b_hat, gains)
    return (u, s) if return_s else u
