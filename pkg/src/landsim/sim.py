"""Fixed-step closed-loop simulation of the landing mission.

The plant is integrated at ``plant_dt``. The controller, mission executive and
planner run every ``control_every`` plant ticks. Sensors are polled every plant
tick and fire on their own sample clocks. Time is counted in integer ticks and
only simulated time is used, so a (scenario, seed) pair fully determines the
log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from landsim.controller import WindEstimate, blsc_command, drag_model
from landsim.errors import PlanningError, SimulationFault
from landsim.estimator import PlatformBelief, ekf_update, init_belief, predict_to, vision_to_measurement
from landsim.mission import HoverMonitor, MissionEvents, MissionState, Mode, fsm_step
from landsim.planner import (TrajectoryPlan, hold_plan, landing_target, plan_landing, plan_search, plan_to_state,
                             plan_jerk, quad_plan_state, sample_plan, yaw_toward)
from landsim.plant import PlatformTruth, QuadrotorTruth, step_platform, step_quadrotor, tag_pose
from landsim.scenario import Scenario, stream_seeds
from landsim.sensors import gps_sense, vision_sense
from landsim.wind import WindState, step_gust, wind_params_at, wind_velocity

LOG_COLUMNS = (
    "t", "mode",
    "quad_px", "quad_py", "quad_pz", "quad_vx", "quad_vy", "quad_vz", "quad_yaw",
    "plat_px", "plat_py", "plat_theta", "plat_speed", "plat_yaw_rate",
    "est_px", "est_py", "est_v", "est_theta", "est_omega",
    "var_px", "var_py", "var_v", "var_theta", "var_omega",
    "ref_px", "ref_py", "ref_pz", "ref_vx", "ref_vy", "ref_vz", "ref_ax", "ref_ay", "ref_az",
    "u_x", "u_y", "u_z", "s_x", "s_y", "s_z",
    "wind_x", "wind_y", "wind_z", "wind_dir_x", "wind_dir_y", "wind_dir_z",
    "plan_id",
)
EVENT_COLUMNS = ("t", "kind", "detail")


@dataclass
class SimLog:
    scenario: str
    seed: int
    controller_mode: str
    rows: list = field(default_factory=list)  # tuples in LOG_COLUMNS order
    events: list = field(default_factory=list)  # (t, kind, detail)
    fault: str | None = None
    phi: float = 1.0
    success_radius: float = 0.3

    def column(self, name: str) -> np.ndarray:
        i = LOG_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows], dtype=object if name == "mode" else float)

    def events_of(self, kind: str) -> list:
        return [e for e in self.events if e[1] == kind]


def _wind_geometry(scn: Scenario, plat_px, plat_py, plat_theta, quad_pos):
    """Jet direction and the along-jet distance of the UAV from the tag plane."""
    h = np.array([math.cos(plat_theta), math.sin(plat_theta), 0.0])
    tag = np.array([plat_px, plat_py, scn.platform.deck_height]) - scn.platform.tag_offset_back * h
    facing = -h
    if scn.wind_mounting == "platform":
        d = scn.wind.direction
        c, s = math.cos(plat_theta), math.sin(plat_theta)
        direction = np.array([c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]])
    else:
        direction = scn.wind.direction
    distance = max(0.0, float(np.dot(np.asarray(quad_pos) - tag, facing)))
    return direction, distance


def _wind_estimate(scn: Scenario, belief: PlatformBelief | None, quad_pos) -> WindEstimate:
    if scn.controller_mode == "naive" or belief is None:
        return WindEstimate.calm()
    m = belief.mean
    direction, distance = _wind_geometry(scn, m[0], m[1], m[3], quad_pos)
    mean, std = wind_params_at(scn.wind, distance)
    return WindEstimate(mean * direction, std, direction)


def _belief_tag(belief: PlatformBelief, scn: Scenario) -> np.ndarray:
    m = belief.mean
    return np.array([m[0], m[1], scn.platform.deck_height]) - scn.platform.tag_offset_back * np.array(
        [math.cos(m[3]), math.sin(m[3]), 0.0])


def run_scenario(scn: Scenario) -> tuple[SimLog, dict]:
    """Run one closed-loop scenario; returns the log and its metrics."""
    from landsim.metrics import compute_metrics

    log = simulate(scn)
    return log, compute_metrics(log, scn)


def simulate(scn: Scenario) -> SimLog:
    wind_seed, gps_seed, vision_seed = stream_seeds(scn.seed, scn.name, 3)
    gps_rng = np.random.default_rng(gps_seed)
    vis_rng = np.random.default_rng(vision_seed)
    wind_state = WindState(0.0, np.random.default_rng(wind_seed), scn.wind.correlation_time_s)

    quad: QuadrotorTruth = replace(scn.quad)
    plat: PlatformTruth = replace(scn.platform)
    pcfg = scn.planner
    gains = replace(scn.gains, max_accel=scn.gains.max_accel if scn.gains.max_accel is not None else quad.max_accel)

    log = SimLog(scn.name, scn.seed, scn.controller_mode, phi=gains.phi, success_radius=scn.success_radius)
    ev = log.events

    dt = scn.plant_dt
    every = scn.control_every
    n_ticks = int(round(scn.duration_s / dt))
    replan_gap = int(round(1.0 / (pcfg.replan_rate_hz * dt)))

    belief: PlatformBelief | None = None
    mission = MissionState(Mode.STANDBY, entry_time=0.0)
    hover = HoverMonitor(scn.mission)
    hover_point = np.array([quad.position[0], quad.position[1], scn.mission.hover_altitude])
    plan: TrajectoryPlan | None = None
    plan_id = 0
    last_replan_tick = -10**9
    updated = False
    detection = False
    need_plan = True
    deadline = None  # end time of the current landing plan
    u = quad.hover_command()
    yaw_cmd = quad.yaw
    wind_vel = np.zeros(3)
    wind_dir = scn.wind.direction

    def swap(new_plan, t):
        nonlocal plan, plan_id
        plan = new_plan
        plan_id += 1
        ev.append((t, "plan", f"{plan_id} {new_plan.kind} N={new_plan.N}"))

    try:
        for i in range(n_ticks + 1):
            t = i * dt

            # -- sensing
            gps = gps_sense(plat, gps_rng, t, scn.gps, window=dt)
            if gps is not None:
                if belief is None:
                    belief = init_belief(gps.z, scn.noise.R_gps, t, scn.noise)
                else:
                    belief = ekf_update(predict_to(belief, t, scn.noise), gps.z, scn.noise.R_gps)
                updated = True
            vis = vision_sense(quad, plat, vis_rng, t, scn.vision, window=dt)
            if vis is not None:
                tag, facing = tag_pose(plat)
                rel = tag - quad.position
                r = float(np.linalg.norm(rel))
                fwd = np.array([math.cos(quad.yaw), math.sin(quad.yaw), 0.0])
                ev.append((t, "detection", f"range={r!r} cos_bearing={float(rel @ fwd) / r!r} "
                                           f"facing={float(-rel @ facing)!r}"))
                z = vision_to_measurement(vis, quad, scn.platform.tag_offset_back)
                if belief is None:
                    belief = init_belief(z, scn.noise.R_vision, t, scn.noise)
                else:
                    belief = ekf_update(predict_to(belief, t, scn.noise), z, scn.noise.R_vision)
                updated = True
                detection = True

            if i % every == 0:
                # -- mission
                est = predict_to(belief, t, scn.noise) if belief is not None else None
                dist, rel_speed = math.inf, math.inf
                if est is not None:
                    point, pvel = landing_target(est, 0.0, pcfg)
                    dist = float(np.linalg.norm(quad.position - point))
                    rel_speed = float(np.linalg.norm(quad.velocity - pvel))
                hover_ok = hover.update(t, float(np.linalg.norm(quad.position - hover_point)))
                new = fsm_step(mission, t, MissionEvents(hover_ok, detection, dist, rel_speed), scn.mission)
                detection = False
                if new.mode is not mission.mode:
                    deadline = None
                    ev.append((t, "mode", f"{mission.mode.value}->{new.mode.value}"))
                    need_plan = True
                mission = new
                if mission.mode is Mode.END:
                    tp, tv = landing_target_truth(plat, pcfg)
                    ev.append((t, "touchdown", f"offset={float(np.linalg.norm(quad.position - tp))!r} "
                                               f"rel_speed={float(np.linalg.norm(quad.velocity - tv))!r}"))
                    _record(log, t, mission, quad, plat, est, plan, u, np.zeros(3), wind_vel, wind_dir, plan_id)
                    break

                # -- planning
                wind_est = _wind_estimate(scn, est, quad.position)
                x0 = _plan_start(plan, t, quad, wind_est, gains, pcfg)
                due = updated and i - last_replan_tick >= replan_gap
                if mission.mode is Mode.STANDBY:
                    if need_plan:
                        try:
                            swap(plan_to_state(x0, np.concatenate([[p, 0, 0] for p in hover_point]), t, pcfg,
                                               "hover"), t)
                        except PlanningError as exc:
                            ev.append((t, "plan_failed", str(exc)))
                            swap(hold_plan(quad.position, t, pcfg), t)
                        last_replan_tick = i
                elif est is not None and (need_plan or due):
                    try:
                        if mission.mode is Mode.SEARCH:
                            swap(plan_search(x0, est, pcfg, t0=t), t)
                        else:
                            swap(plan_landing(x0, est, dist, pcfg, t0=t, deadline=deadline), t)
                            deadline = plan.t_end
                    except PlanningError as exc:
                        ev.append((t, "plan_failed", str(exc)))
                        if mission.mode is Mode.SEARCH or plan is None:
                            swap(hold_plan(quad.position, t, pcfg), t)
                    last_replan_tick = i
                    updated = False
                need_plan = False

                # -- control
                ref = sample_plan(plan, t)
                u, s = blsc_command((quad.position, quad.velocity), ref, wind_est, gains, return_s=True,
                                    jerk_d=plan_jerk(plan, t))
                if est is not None:
                    yaw_cmd = yaw_toward(quad.position, _belief_tag(est, scn))
                _record(log, t, mission, quad, plat, est, plan, u, s, wind_vel, wind_dir, plan_id, ref)

            if i == n_ticks:
                break

            # -- physics
            wind_dir, distance = _wind_geometry(scn, plat.px, plat.py, plat.theta, quad.position)
            _, std = wind_params_at(scn.wind, distance)
            step_gust(wind_state, std, dt, scn.wind_clip_sigmas)
            wind_vel = wind_velocity(scn.wind, wind_state, distance, wind_dir)
            quad = step_quadrotor(quad, u, wind_vel, dt, yaw_cmd)
            plat = step_platform(plat, dt)
    except (SimulationFault, FloatingPointError) as exc:
        log.fault = str(exc)
        ev.append((i * dt, "fault", str(exc)))
    return log


def _plan_start(plan, t, quad, wind_est, gains, pcfg) -> np.ndarray:
    """Initial state for a replan.

    While the sliding variable stays within ``reanchor_s_ratio`` boundary
    layers the new plan continues from the current reference, so the tracking
    error stays with the controller. Otherwise it starts from the measured
    state, with the acceleration taken as achieved thrust plus modelled drag
    in the mean wind.
    """
    if plan is not None:
        p, v, a = sample_plan(plan, t)
        s = (quad.velocity - v) + gains.lam * (quad.position - p)
        if np.max(np.abs(s)) <= pcfg.reanchor_s_ratio * gains.phi:
            return quad_plan_state(p, v, a, pcfg.a_max)
    a_now = quad.achieved_accel + drag_model(quad.velocity, wind_est, gains.c_hat)
    return quad_plan_state(quad.position, quad.velocity, a_now, pcfg.a_max)


def landing_target_truth(plat: PlatformTruth, pcfg) -> tuple[np.ndarray, np.ndarray]:
    """True landing point (tag offset back by ``tag_offset_back_cm``) and platform velocity."""
    tag, _ = tag_pose(plat)
    return tag - pcfg.tag_offset_back_cm * plat.heading, plat.velocity


def _record(log, t, mission, quad, plat, est, plan, u, s, wind_vel, wind_dir, plan_id, ref=None):
    if ref is None:
        ref = sample_plan(plan, t) if plan is not None else (quad.position, quad.velocity, np.zeros(3))
    if est is None:
        mean = var = (math.nan,) * 5
    else:
        mean, var = tuple(est.mean), tuple(np.diag(est.covariance))
    log.rows.append((
        t, mission.mode.value,
        *quad.position, *quad.velocity, quad.yaw,
        plat.px, plat.py, plat.theta, plat.speed, plat.yaw_rate,
        *mean, *var,
        *ref[0], *ref[1], *ref[2],
        *u, *s, *wind_vel, *wind_dir,
        plan_id,
    ))
