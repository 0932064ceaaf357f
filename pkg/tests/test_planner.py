import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from landsim.errors import ConfigError, PlanningError
from landsim.estimator import PlatformBelief, predict_platform_ahead
from landsim.planner import (PlannerConfig, TrajectoryPlan, horizon_feasible, landing_horizon, landing_target,
                             min_time_horizon, plan_landing, plan_search, plan_to_state, predict_rendezvous,
                             sample_plan)
from landsim.qpsolver import stack_state, triple_integrator

CFG = PlannerConfig()


def belief(px=0.0, py=0.0, v=0.0, th=0.0, om=0.0):
    return PlatformBelief(np.array([px, py, v, th, om]), np.eye(5) * 1e-3)


def rest(p):
    return stack_state(p, np.zeros(3), np.zeros(3))


def check_dynamics(plan: TrajectoryPlan, tol=1e-6):
    A, B = triple_integrator(plan.dt)
    X = plan.states.reshape(plan.N + 1, 3, 3)
    for k in range(plan.N):
        for ax in range(3):
            assert np.max(np.abs(X[k + 1, ax] - A @ X[k, ax] - B * plan.jerks[k, ax])) <= tol


# -- rendezvous ---------------------------------------------------------------

def test_rendezvous_moving_example():
    cfg = PlannerConfig(search_offset_back=0.0)
    rv = predict_rendezvous([0, -3, 1], belief(v=1.0), cfg)
    assert rv.time == pytest.approx(math.sqrt(3), abs=1e-9)
    assert rv.point[:2] == pytest.approx([math.sqrt(3), 0], abs=1e-9)
    assert rv.intercepting


def test_rendezvous_offset_and_altitude():
    cfg = PlannerConfig(search_offset_back=1.5, h_approach=0.2, deck_height=0.8)
    rv = predict_rendezvous([0, -3, 1], belief(v=1.0), cfg)
    assert rv.point == pytest.approx([math.sqrt(3) - 1.5, 0, 1.0], abs=1e-9)


def test_rendezvous_static_and_coincident():
    cfg = PlannerConfig(search_offset_back=0.0)
    rv = predict_rendezvous([3, 4, 1], belief(), cfg)
    assert rv.time == pytest.approx(5 / cfg.v_uav_assumed, abs=1e-9)
    assert rv.point[:2] == pytest.approx([0, 0], abs=1e-12)
    assert predict_rendezvous([0, 0, 1], belief(v=1.0), cfg).time == 0.0


def test_rendezvous_chase_flagged():
    cfg = PlannerConfig(v_uav_assumed=0.5, T_max=5.0)
    rv = predict_rendezvous([0, -3, 1], belief(v=2.0), cfg)
    assert not rv.intercepting and rv.time == cfg.T_max


@given(st.floats(-8, 8), st.floats(-8, 8), st.floats(0, 1.5), st.floats(-math.pi, math.pi), st.floats(-0.3, 0.3))
def test_rendezvous_is_earliest_root(qx, qy, v, th, om):
    cfg = PlannerConfig(search_offset_back=0.0)
    b = belief(v=v, th=th, om=om)
    rv = predict_rendezvous([qx, qy, 1], b, cfg)
    if not rv.intercepting:
        return
    gap = lambda t: cfg.v_uav_assumed * t - math.hypot(*(predict_platform_ahead(b, t)[0][:2] - [qx, qy]))
    assert abs(gap(rv.time)) <= 1e-6
    grid = np.linspace(0, rv.time, 200)[:-1]
    assert all(gap(t) < 1e-9 for t in grid)


# -- minimum-time horizon -------------------------------------------------------

def scan_feasible(x0, xf, N, cfg):
    """Independent LP over the full jerk sequence with the same shrunken boxes."""
    A, B = triple_integrator(cfg.dt)
    for a, b in zip(np.reshape(x0, (-1, 3)), np.reshape(xf, (-1, 3))):
        # simulate symbolically: x_k = A^k a + sum M_kj j
        M = np.zeros((N + 1, 3, N))
        for k in range(1, N + 1):
            M[k] = A @ M[k - 1]
            M[k][:, k - 1] += B
        free = np.array([np.linalg.matrix_power(A, k) @ a for k in range(N + 1)])
        am, jm = cfg.a_max * cfg.feasibility_margin, cfg.j_max * cfg.feasibility_margin
        A_ub = np.vstack([M[1:N, 2], -M[1:N, 2]])
        b_ub = np.concatenate([am - free[1:N, 2], am + free[1:N, 2]])
        res = linprog(np.zeros(N), A_ub=A_ub, b_ub=b_ub, A_eq=M[N], b_eq=b - free[N], bounds=[(-jm, jm)] * N,
                      method="highs")
        if res.status != 0:
            return False
    return True


def linear_scan(x0, xf, cfg):
    for N in range(cfg.N_min, cfg.N_max + 1):
        if scan_feasible(x0, xf, N, cfg):
            return N
    return None


@pytest.mark.parametrize("seed", range(6))
def test_min_time_matches_linear_scan(seed):
    rng = np.random.default_rng(seed)
    cfg = PlannerConfig(T_max=6.0)
    x0 = stack_state(rng.uniform(-2, 2, 3), rng.uniform(-1.5, 1.5, 3), rng.uniform(-3, 3, 3))
    xf = stack_state(rng.uniform(-2, 2, 3), rng.uniform(-1, 1, 3), np.zeros(3))
    N = min_time_horizon(x0, xf, cfg)
    assert N == linear_scan(x0, xf, cfg)
    assert horizon_feasible(x0, xf, N, cfg)
    if N > cfg.N_min:
        assert not horizon_feasible(x0, xf, N - 1, cfg)


def test_search_plan_duration_near_minimum():
    cfg = PlannerConfig(search_offset_back=0.0, h_approach=0.0, deck_height=1.0, search_arrive_at_rendezvous=False)
    x0 = rest([0, -1.0, 1.0])
    plan = plan_search(x0, belief(), cfg)
    N_scan = linear_scan(x0, rest([0, 0, 1.0]), cfg)
    assert abs(plan.N - N_scan) <= 2
    assert plan.states[-1] == pytest.approx(rest([0, 0, 1.0]), abs=1e-6)
    check_dynamics(plan)


def test_search_already_at_target():
    cfg = PlannerConfig(search_offset_back=0.0, h_approach=0.0, deck_height=1.0)
    plan = plan_search(rest([0, 0, 1.0]), belief(), cfg)
    assert plan.N == cfg.N_min
    assert np.max(np.abs(plan.jerks)) <= 1e-6


def test_search_unreachable():
    cfg = PlannerConfig(a_max=1.0, T_max=2.0, T_max_land=2.0)
    assert 0.5 * cfg.a_max * cfg.T_max**2 < 100
    with pytest.raises(PlanningError):
        plan_to_state(rest([0, 0, 1]), rest([100, 0, 1]), 0.0, cfg)


def test_search_terminal_velocity_is_ugv():
    b = belief(px=2.0, v=1.0, th=0.4, om=0.05)
    plan = plan_search(rest([-1, 2, 1]), b, CFG)
    rv = predict_rendezvous([-1, 2, 1], b, CFG)
    _, vel = predict_platform_ahead(b, rv.time)
    assert plan.terminal_velocity[:2] == pytest.approx(vel, abs=1e-12)


# -- landing --------------------------------------------------------------------

def test_landing_horizon_schedule():
    assert landing_horizon(0.0, CFG) == CFG.T_min
    assert landing_horizon(CFG.d_blend, CFG) == CFG.T_max_land
    assert landing_horizon(10.0, CFG) == CFG.T_max_land
    assert landing_horizon(CFG.d_blend / 2, CFG) == pytest.approx((CFG.T_min + CFG.T_max_land) / 2)


def test_landing_terminal_leads_tag():
    cfg = PlannerConfig(lead_through_horizon=False, replan_latency_budget=0.1, tag_offset_back=0.3,
                        tag_offset_back_cm=0.05)
    b = belief(v=1.0)
    now, _ = landing_target(b, 0.0, cfg)
    plan = plan_landing(rest([-2.0, 0.0, 1.2]), b, 2.0, cfg)
    assert plan.states[-1][0::3] == pytest.approx(now + [0.1, 0, 0], abs=1e-6)
    assert now == pytest.approx([-0.35, 0, cfg.deck_height])
    assert plan.terminal_velocity == pytest.approx([1, 0, 0], abs=1e-9)


def test_landing_at_tag_uses_min_horizon():
    cfg = PlannerConfig(lead_through_horizon=False)
    b = belief()
    point, _ = landing_target(b, cfg.replan_latency_budget, cfg)
    plan = plan_landing(rest(point), b, 0.0, cfg)
    assert plan.N == cfg.N_min
    assert plan.states[-1][0::3] == pytest.approx(point, abs=1e-6)


def test_config_validation():
    with pytest.raises(ConfigError):
        PlannerConfig(T_min=5.0, T_max=4.0)
    with pytest.raises(ConfigError):
        PlannerConfig.from_dict({"bogus": 1})


landing_cases = st.tuples(
    st.floats(-3.5, -0.8), st.floats(-1.5, 1.5), st.floats(0.9, 1.8),  # quad position relative to tag
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.5, 0.5),  # quad velocity
    st.floats(0, 1.2), st.floats(-math.pi, math.pi), st.floats(-0.1, 0.1),  # platform speed, heading, yaw rate
)


@given(landing_cases)
def test_landing_invariants(case):
    rx, ry, z, vx, vy, vz, v, th, om = case
    b = belief(v=v, th=th, om=om)
    h = np.array([math.cos(th), math.sin(th)])
    n = np.array([-h[1], h[0]])
    xy = rx * h + ry * n
    x0 = stack_state([xy[0], xy[1], z], [vx, vy, vz], [0.3, -0.2, 0.1])
    d = float(np.hypot(*xy))
    plan = plan_landing(x0, b, d, CFG)
    # replan continuity and terminal velocity
    assert np.array_equal(plan.states[0], x0)
    tau = CFG.replan_latency_budget + plan.N * CFG.dt
    _, vel = predict_platform_ahead(b, tau)
    assert plan.terminal_velocity == pytest.approx([vel[0], vel[1], 0.0], abs=1e-9)
    assert plan.duration <= CFG.T_max + 1e-12
    check_dynamics(plan)


# -- sampling -------------------------------------------------------------------

def a_plan():
    b = belief(px=1.0, v=0.8, th=0.2, om=0.03)
    return plan_landing(stack_state([-1.5, 0.5, 1.3], [0.4, -0.2, 0.0], [0.0, 0.5, -0.3]), b, 2.5, CFG, t0=3.0)


PLAN = a_plan()


def test_sample_at_start_and_knots():
    p, v, a = sample_plan(PLAN, PLAN.t0)
    assert np.concatenate([p, v, a]) == pytest.approx(np.concatenate(np.reshape(PLAN.states[0], (3, 3)).T), abs=0)
    for k in (1, 7, PLAN.N - 1):
        p, v, a = sample_plan(PLAN, PLAN.t0 + k * PLAN.dt)
        X = PLAN.states[k].reshape(3, 3)
        assert p == pytest.approx(X[:, 0], abs=1e-9)
        assert v == pytest.approx(X[:, 1], abs=1e-9)
        assert a == pytest.approx(X[:, 2], abs=1e-9)


def test_sample_midway_closed_form():
    k, tau = 4, 0.3 * PLAN.dt
    X, j = PLAN.states[k].reshape(3, 3), PLAN.jerks[k]
    p, v, a = sample_plan(PLAN, PLAN.t0 + k * PLAN.dt + tau)
    assert a == pytest.approx(X[:, 2] + j * tau, abs=1e-12)
    assert v == pytest.approx(X[:, 1] + X[:, 2] * tau + j * tau**2 / 2, abs=1e-12)
    assert p == pytest.approx(X[:, 0] + X[:, 1] * tau + X[:, 2] * tau**2 / 2 + j * tau**3 / 6, abs=1e-12)


def test_sample_beyond_horizon():
    p_end = PLAN.states[-1][0::3]
    p, v, a = sample_plan(PLAN, PLAN.t_end + 0.5)
    assert p == pytest.approx(p_end + 0.5 * PLAN.terminal_velocity, abs=1e-9)
    assert v == pytest.approx(PLAN.terminal_velocity) and np.all(a == 0)


@given(st.integers(1, PLAN.N - 1))
def test_sample_c1_at_knots(k):
    t = PLAN.t0 + k * PLAN.dt
    eps = 1e-10
    _, v_lo, _ = sample_plan(PLAN, t - eps)
    _, v_hi, _ = sample_plan(PLAN, t + eps)
    assert np.max(np.abs(v_lo - v_hi)) <= 1e-9
