"""Receding-horizon trajectory generation for the Search and Landing modes.

Plans are triple-integrator trajectories from the QP in :mod:`landsim.qpsolver`.
State vectors use the solver's per-axis stacking
``[p_x, v_x, a_x, p_y, v_y, a_y, p_z, v_z, a_z]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect, linprog

from landsim.errors import ConfigError, PlanningError
from landsim.estimator import PlatformBelief, predict_platform_ahead
from landsim.qpsolver import (OPTIMAL, QpProblem, QpSolver, SolverSettings, stack_state, triple_integrator,
                               unstack_state)
from landsim.unicycle import arc_step


@dataclass
class PlannerConfig:
    dt: float = 0.05
    v_uav_assumed: float = 2.0
    search_offset_back: float = 1.5
    tag_offset_back_cm: float = 0.05
    a_max: float = 7.0
    j_max: float = 40.0
    d_blend: float = 3.5
    T_min: float = 0.5
    T_max: float = 20.0
    T_max_land: float = 3.0
    replan_latency_budget: float = 0.05
    replan_rate_hz: float = 20.0
    h_approach: float = 0.0
    jerk_weight: float = 1.0
    lead_through_horizon: bool = True
    search_arrive_at_rendezvous: bool = True
    feasibility_margin: float = 0.95  # fraction of the boxes the horizon search may use
    reanchor_s_ratio: float = 3.0  # replan from the measured state once max|s| exceeds this many Phi
    # platform geometry, copied from the scenario
    deck_height: float = 0.8
    tag_offset_back: float = 0.3

    def __post_init__(self):
        positive = ("dt", "v_uav_assumed", "a_max", "j_max", "d_blend", "T_min", "T_max", "T_max_land",
                    "replan_latency_budget", "replan_rate_hz", "jerk_weight", "reanchor_s_ratio")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"planner.{name} must be positive")
        for name in ("search_offset_back", "tag_offset_back_cm", "h_approach", "deck_height", "tag_offset_back"):
            if getattr(self, name) < 0:
                raise ConfigError(f"planner.{name} must be non-negative")
        if not 0 < self.feasibility_margin <= 1:
            raise ConfigError("planner.feasibility_margin must lie in (0, 1]")
        if not self.T_min < self.T_max:
            raise ConfigError("planner.T_min must be below planner.T_max")
        if not self.T_min <= self.T_max_land <= self.T_max:
            raise ConfigError("planner.T_max_land must lie in [T_min, T_max]")

    @classmethod
    def from_dict(cls, cfg: dict) -> "PlannerConfig":
        unknown = set(cfg) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown planner keys: {sorted(unknown)}")
        return cls(**cfg)

    @property
    def N_min(self) -> int:
        return max(2, math.ceil(self.T_min / self.dt - 1e-9))

    @property
    def N_max(self) -> int:
        return max(self.N_min, math.floor(self.T_max / self.dt + 1e-9))


@dataclass(frozen=True)
class TrajectoryPlan:
    t0: float
    dt: float
    states: np.ndarray  # (N+1, 9)
    jerks: np.ndarray  # (N, 3)
    terminal_velocity: np.ndarray
    kind: str = "search"

    @property
    def N(self) -> int:
        return self.jerks.shape[0]

    @property
    def duration(self) -> float:
        return self.N * self.dt

    @property
    def t_end(self) -> float:
        return self.t0 + self.duration


class Rendezvous(NamedTuple):
    point: np.ndarray
    time: float
    intercepting: bool


def quad_plan_state(position, velocity, acceleration, a_max: float) -> np.ndarray:
    """Stacked planner state with the acceleration clipped into the QP box."""
    return stack_state(position, velocity, np.clip(acceleration, -a_max, a_max))


# ----------------------------------------------------------------------------
# rendezvous


def _ugv_at(belief: PlatformBelief, t: float) -> np.ndarray:
    return arc_step(belief.mean, t) if t > 0 else belief.mean.copy()


def predict_rendezvous(quad_pos, belief: PlatformBelief, cfg: PlannerConfig) -> Rendezvous:
    """Earliest intercept of the constant-twist UGV by a UAV closing at ``v_uav_assumed``.

    Solves ``v t = |ugv_xy(t) - quad_xy|`` for the smallest root (grid scan then
    bisection). The returned point sits ``search_offset_back`` behind the UGV
    along its heading, at the approach altitude.
    """
    q = np.asarray(quad_pos, dtype=float)[:2]

    def g(t):
        x = _ugv_at(belief, t)
        return cfg.v_uav_assumed * t - math.hypot(x[0] - q[0], x[1] - q[1])

    t_star, hit = cfg.T_max, False
    if g(0.0) >= 0.0:
        t_star, hit = 0.0, True
    else:
        grid = np.linspace(0.0, cfg.T_max, max(2, int(math.ceil(cfg.T_max / 0.05)) + 1))
        prev = grid[0]
        for t in grid[1:]:
            if g(t) >= 0.0:
                t_star, hit = bisect(g, prev, t, xtol=1e-10), True
                break
            prev = t
    x = _ugv_at(belief, t_star)
    h = np.array([math.cos(x[3]), math.sin(x[3])])
    xy = x[:2] - cfg.search_offset_back * h
    return Rendezvous(np.array([xy[0], xy[1], cfg.deck_height + cfg.h_approach]), float(t_star), hit)


# ----------------------------------------------------------------------------
# minimum-time horizon


def _axis_feasible(x0, xf, N: int, cfg: PlannerConfig) -> bool:
    """LP feasibility of one axis: reach ``xf`` in N steps inside the shrunken boxes.

    Horizons are chosen with ``feasibility_margin`` times the boxes so the QP,
    solved with the full boxes, keeps some slack.
    """
    A, B = triple_integrator(cfg.dt)
    G = np.zeros((3, N))
    col = B.copy()
    for k in range(N - 1, -1, -1):
        G[:, k] = col
        col = A @ col
    b_eq = np.asarray(xf) - np.linalg.matrix_power(A, N) @ np.asarray(x0)
    # a_t = a_0 + dt * sum_{k<t} j_k for t = 1..N-1 (a_N is fixed by the terminal row)
    L = cfg.dt * np.tril(np.ones((N - 1, N)))
    margin = cfg.a_max * cfg.feasibility_margin
    A_ub = np.vstack([L, -L])
    b_ub = np.concatenate([np.full(N - 1, margin - x0[2]), np.full(N - 1, margin + x0[2])])
    jb = cfg.j_max * cfg.feasibility_margin
    res = linprog(np.zeros(N), A_ub=A_ub, b_ub=b_ub, A_eq=G, b_eq=b_eq, bounds=[(-jb, jb)] * N, method="highs")
    return res.status == 0


def horizon_feasible(x0, xf, N: int, cfg: PlannerConfig) -> bool:
    x0 = np.asarray(x0, dtype=float).reshape(-1, 3)
    xf = np.asarray(xf, dtype=float).reshape(-1, 3)
    return all(_axis_feasible(a, b, N, cfg) for a, b in zip(x0, xf))


def min_time_horizon(x0, xf, cfg: PlannerConfig, N_start: int | None = None) -> int:
    """Smallest feasible N in [N_start, N_max]: doubling bracket, then bisection."""
    lo, hi = (cfg.N_min if N_start is None else max(2, N_start)), cfg.N_max
    if horizon_feasible(x0, xf, lo, cfg):
        return lo
    step = max(lo, 4)
    while True:
        probe = min(hi, lo + step)
        if horizon_feasible(x0, xf, probe, cfg):
            hi = probe
            break
        if probe == hi:
            raise PlanningError(f"target unreachable within T_max = {cfg.T_max} s")
        lo, step = probe, 2 * step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if horizon_feasible(x0, xf, mid, cfg):
            hi = mid
        else:
            lo = mid
    return hi


# ----------------------------------------------------------------------------
# plans


# Capped so that a near-degenerate horizon falls through to N + 1 quickly.
_SOLVER = QpSolver(SolverSettings(max_iter=500))


def _solve(x0, xf, N: int, t0: float, cfg: PlannerConfig, kind: str, solver: QpSolver | None) -> TrajectoryPlan | None:
    prob = QpProblem(N, cfg.dt, x0, xf, cfg.a_max, cfg.j_max, cfg.jerk_weight)
    sol = (solver or _SOLVER).solve(prob)
    if sol.status != OPTIMAL:
        return None
    states = sol.states.copy()
    states[0] = prob.x0  # exact continuity with the current state
    return TrajectoryPlan(t0, cfg.dt, states, sol.jerks.copy(), unstack_state(prob.xf)[1], kind)


def plan_to_state(x0, xf, t0: float, cfg: PlannerConfig, kind: str = "search", extra_steps: int = 3,
                  N_start: int | None = None, solver: QpSolver | None = None) -> TrajectoryPlan:
    """Minimum-time horizon, then the jerk-optimal trajectory at that horizon."""
    N_star = min_time_horizon(x0, xf, cfg, N_start)
    for N in range(N_star, min(N_star + extra_steps, cfg.N_max) + 1):
        plan = _solve(x0, xf, N, t0, cfg, kind, solver)
        if plan is not None:
            return plan
    raise PlanningError(f"QP failed near the minimum-time horizon N = {N_star}")


def plan_search(quad_state, belief: PlatformBelief, cfg: PlannerConfig, t0: float = 0.0,
                solver: QpSolver | None = None) -> TrajectoryPlan:
    """Plan to the rendezvous point, arriving with the UGV's predicted velocity.

    With ``search_arrive_at_rendezvous`` the horizon search starts at the
    predicted intercept time, since the UGV only reaches the rendezvous point
    then; otherwise it starts at ``T_min``.
    """
    x0 = np.asarray(quad_state, dtype=float)
    if x0.shape != (9,) or not np.all(np.isfinite(x0)):
        raise PlanningError("quadrotor state must be a finite 9-vector")
    rv = predict_rendezvous(x0[0::3], belief, cfg)
    _, vel = predict_platform_ahead(belief, rv.time)
    xf = stack_state(rv.point, np.array([vel[0], vel[1], 0.0]), np.zeros(3))
    N_start = cfg.N_min
    if cfg.search_arrive_at_rendezvous:
        N_start = min(max(N_start, int(math.ceil(rv.time / cfg.dt - 1e-9))), cfg.N_max)
    return plan_to_state(x0, xf, t0, cfg, "search", N_start=N_start, solver=solver)


def landing_horizon(d: float, cfg: PlannerConfig) -> float:
    """Plan duration T(d): long and smooth far out, short near the tag."""
    T = cfg.T_min + (cfg.T_max_land - cfg.T_min) * min(max(d, 0.0) / cfg.d_blend, 1.0)
    return min(max(T, cfg.T_min), cfg.T_max_land)


def landing_target(belief: PlatformBelief, tau: float, cfg: PlannerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Landing point and platform velocity ``tau`` seconds ahead."""
    pose, vel = predict_platform_ahead(belief, tau)
    h = np.array([math.cos(pose[2]), math.sin(pose[2])])
    xy = pose[:2] - (cfg.tag_offset_back + cfg.tag_offset_back_cm) * h
    return np.array([xy[0], xy[1], cfg.deck_height]), np.array([vel[0], vel[1], 0.0])


def landing_steps(distance_d: float, cfg: PlannerConfig, t0: float = 0.0, deadline: float | None = None) -> int:
    """Horizon length in steps: T(d), never ending after ``deadline``, at least T_min."""
    N = int(round(landing_horizon(distance_d, cfg) / cfg.dt))
    if deadline is not None:
        N = min(N, int(round((deadline - t0) / cfg.dt)))
    return max(N, cfg.N_min)


def plan_landing(quad_state, belief: PlatformBelief, distance_d: float, cfg: PlannerConfig, t0: float = 0.0,
                 deadline: float | None = None, solver: QpSolver | None = None) -> TrajectoryPlan:
    """Jerk-optimal plan onto the (predicted) landing point over the horizon T(d).

    ``deadline`` (the end time of the plan being replaced) stops the horizon
    from receding, so successive replans converge. If the boxes make that
    horizon infeasible it is stretched to the shortest feasible one.

    With ``lead_through_horizon`` the target is predicted ahead by the replan
    latency plus the plan duration, i.e. to where the platform will be when
    the plan ends; otherwise by the latency alone.
    """
    x0 = np.asarray(quad_state, dtype=float)
    if x0.shape != (9,) or not np.all(np.isfinite(x0)):
        raise PlanningError("quadrotor state must be a finite 9-vector")

    def target(N):
        tau = cfg.replan_latency_budget + (N * cfg.dt if cfg.lead_through_horizon else 0.0)
        point, vel = landing_target(belief, tau, cfg)
        return stack_state(point, vel, np.zeros(3))

    N = landing_steps(distance_d, cfg, t0, deadline)
    if not horizon_feasible(x0, target(N), N, cfg):
        # the target moves with N, so search on the pair
        lo, hi = N, None
        for probe in (N + 4, N + 8, N + 16, N + 32, N + 64, cfg.N_max):
            probe = min(probe, cfg.N_max)
            if horizon_feasible(x0, target(probe), probe, cfg):
                hi = probe
                break
            lo = probe
        if hi is None:
            raise PlanningError("landing target unreachable within T_max")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if horizon_feasible(x0, target(mid), mid, cfg):
                hi = mid
            else:
                lo = mid
        N = hi
    for n in range(N, min(N + 3, cfg.N_max) + 1):
        plan = _solve(x0, target(n), n, t0, cfg, "landing", solver)
        if plan is not None:
            return plan
    raise PlanningError(f"landing QP failed at N = {N}")


def hold_plan(position, t0: float, cfg: PlannerConfig) -> TrajectoryPlan:
    """Stationary plan at ``position`` (used while holding after a planning failure)."""
    x = stack_state(position, np.zeros(3), np.zeros(3))
    N = cfg.N_min
    return TrajectoryPlan(t0, cfg.dt, np.tile(x, (N + 1, 1)), np.zeros((N, 3)), np.zeros(3), "hold")


def sample_plan(plan: TrajectoryPlan, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reference ``(x_d, v_d, a_d)`` at time ``t``; exact inside the horizon.

    Past the horizon the reference coasts at the terminal velocity with zero
    acceleration.
    """
    s = t - plan.t0
    if s < -1e-12:
        raise ValueError("t precedes the plan start")
    s = max(s, 0.0)
    N = plan.N
    if s >= N * plan.dt - 1e-12:
        p, v, _ = unstack_state(plan.states[-1])
        return p + plan.terminal_velocity * (s - N * plan.dt), plan.terminal_velocity.copy(), np.zeros(3)
    k = min(int(math.floor(s / plan.dt + 1e-9)), N - 1)
    tau = max(s - k * plan.dt, 0.0)
    p, v, a = unstack_state(plan.states[k])
    j = plan.jerks[k]
    return (p + v * tau + a * tau**2 / 2 + j * tau**3 / 6,
            v + a * tau + j * tau**2 / 2,
            a + j * tau)


def plan_jerk(plan: TrajectoryPlan, t: float) -> np.ndarray:
    """Piecewise-constant reference jerk at ``t`` (zero outside the horizon)."""
    s = t - plan.t0
    if s < 0 or s >= plan.N * plan.dt - 1e-12:
        return np.zeros(3)
    return plan.jerks[min(int(math.floor(s / plan.dt + 1e-9)), plan.N - 1)].copy()


def yaw_toward(position, target) -> float:
    d = np.asarray(target, dtype=float)[:2] - np.asarray(position, dtype=float)[:2]
    return math.atan2(d[1], d[0])
