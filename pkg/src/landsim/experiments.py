"""Monte-Carlo experiments shared by the acceptance suite and scripts/."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from landsim.controller import BlscGains, WindEstimate, blsc_command
from landsim.estimator import NoiseConfig, ekf_predict, ekf_update, init_belief, nees
from landsim.plant import QuadrotorTruth, step_quadrotor
from landsim.scenario import DEFAULT_WIND_SAMPLES
from landsim.unicycle import arc_step, wrap_angle
from landsim.wind import WindProfile, WindState, step_gust, wind_params_at, wind_velocity


def _measure(x, rng, L):
    z = x[[0, 1, 3]] + (L @ rng.standard_normal(3) if L is not None else 0.0)
    z[2] = wrap_angle(z[2])
    return z


def nees_run(seed: int, noise: NoiseConfig | None = None, duration: float = 20.0, dt: float = 1 / 30,
             update_every: int = 15, R: np.ndarray | None = None, speed: float = 1.0,
             yaw_rate: float = math.radians(-4.0)) -> np.ndarray:
    """NEES history of one turning-platform run with matched noise.

    Truth follows the unicycle with additive process noise of covariance
    ``Q dt`` per step, exactly the filter's model. Measurements of
    (p_x, p_y, theta) arrive every ``update_every`` steps with covariance ``R``
    (GPS by default).
    """
    noise = noise or NoiseConfig()
    R = noise.R_gps if R is None else R
    rng = np.random.default_rng(seed)
    Lq = np.linalg.cholesky(noise.Q * dt)
    Lr = np.linalg.cholesky(R)
    x = np.array([0.0, 0.0, speed, 0.0, yaw_rate])
    b = init_belief(_measure(x, rng, Lr), R, 0.0, noise)
    out = np.empty(int(round(duration / dt)))
    for k in range(1, out.size + 1):
        x = arc_step(x, dt) + Lq @ rng.standard_normal(5)
        x[3] = wrap_angle(x[3])
        b = ekf_predict(b, dt, noise)
        if k % update_every == 0:
            b = ekf_update(b, _measure(x, rng, Lr), R)
        out[k - 1] = nees(b, x)
    return out


def nees_monte_carlo(runs: int = 100, **kw) -> np.ndarray:
    """NEES histories, one row per run."""
    return np.array([nees_run(seed, **kw) for seed in range(runs)])


def noise_free_error(duration: float = 1.0, dt: float = 1 / 30, noise: NoiseConfig | None = None,
                     speed: float = 1.0, yaw_rate: float = math.radians(-4.0)) -> np.ndarray:
    """Position error history with exact measurements at the vision rate."""
    noise = noise or NoiseConfig()
    x = np.array([0.0, 0.0, speed, 0.0, yaw_rate])
    b = init_belief(_measure(x, None, None), noise.R_vision, 0.0, noise)
    err = []
    for _ in range(int(round(duration / dt))):
        x = arc_step(x, dt)
        b = ekf_update(ekf_predict(b, dt, noise), _measure(x, None, None), noise.R_vision)
        err.append(float(np.linalg.norm(b.mean[:2] - x[:2])))
    return np.array(err)


@dataclass
class TrialResult:
    max_s_over_phi: float  # after first entry into the layer
    max_error_over_bound: float  # per-axis error over the second half, in units of phi / lam


def boundary_layer_trial(seed: int, tau_att: float = 0.15, duration: float = 8.0, plant_dt: float = 0.002,
                         control_every: int = 5, clip_sigmas: float = 2.0) -> TrialResult:
    """One closed-loop tracking run in the blower jet.

    The true drag coefficient is drawn uniformly from the controller's
    uncertainty interval. The reference oscillates along the jet axis between
    roughly 0.6 m and 3.2 m from the plate.
    """
    rng = np.random.default_rng(seed)
    prof = WindProfile(DEFAULT_WIND_SAMPLES, [-1.0, 0.0, 0.0])
    gains = BlscGains(lag_comp=tau_att)
    c = rng.uniform(gains.c_hat - gains.c_tilde, gains.c_hat + gains.c_tilde)
    tag = np.array([0.0, 0.0, 1.0])
    d0, amp, w = rng.uniform(1.2, 2.6), rng.uniform(0.2, 0.6), rng.uniform(0.3, 1.0)
    lateral = rng.uniform(-0.3, 0.3)

    def ref(t):
        d = d0 + amp * math.sin(w * t)
        dd = amp * w * math.cos(w * t)
        ddd = -amp * w * w * math.sin(w * t)
        jerk = -amp * w**3 * math.cos(w * t)
        return tag + np.array([-d, lateral, 0.0]), np.array([-dd, 0, 0]), np.array([-ddd, 0, 0]), \
            np.array([-jerk, 0, 0])

    p, v, a, _ = ref(0.0)
    quad = QuadrotorTruth(position=p, velocity=v, achieved_accel=a, drag_c=c, tau_att=tau_att)
    gains.max_accel = quad.max_accel
    gust = WindState(0.0, rng, 0.2)
    entered, s_max, err_max = False, 0.0, 0.0
    n = int(round(duration / plant_dt))
    u = quad.hover_command()
    for i in range(n):
        t = i * plant_dt
        dist = max(0.0, tag[0] - quad.position[0])
        mean, std = wind_params_at(prof, dist)
        if i % control_every == 0:
            p, v, a, j = ref(t)
            west = WindEstimate(mean * prof.direction, std, prof.direction)
            u, s = blsc_command((quad.position, quad.velocity), (p, v, a), west, gains, return_s=True, jerk_d=j)
            ms = float(np.max(np.abs(s)))
            entered = entered or ms <= gains.phi
            if entered:
                s_max = max(s_max, ms / gains.phi)
            if t > duration / 2:
                err_max = max(err_max, float(np.max(np.abs(quad.position - p))))
        step_gust(gust, std, plant_dt, clip_sigmas=clip_sigmas)
        quad = step_quadrotor(quad, u, wind_velocity(prof, gust, dist), plant_dt)
    return TrialResult(s_max, err_max / (gains.phi / gains.lam))
