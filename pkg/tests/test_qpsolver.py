import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from landsim.qpsolver import (INFEASIBLE, OPTIMAL, QpProblem, QpSolution, QpSolver, kkt_residuals, solve_qp,
                              stack_state, triple_integrator)
from oracles import brute_force_axis, quintic, random_feasible_problem

LOOSE = dict(a_max=100.0, j_max=1000.0)


def one_axis(N, dt, x0, xf, **kw):
    args = {**LOOSE, **kw}
    return QpProblem(N, dt, x0, xf, args["a_max"], args["j_max"], args.get("jerk_weight", 1.0))


def test_zero_problem():
    sol = solve_qp(QpProblem(10, 0.1, np.zeros(9), np.zeros(9), 5, 20))
    assert sol.status == OPTIMAL
    assert np.max(np.abs(sol.jerks)) <= 1e-9 and sol.objective <= 1e-15


def test_quintic_position():
    sol = solve_qp(one_axis(100, 0.01, [0, 0, 0], [1, 0, 0]), tol=1e-8)
    p, _, _ = quintic(np.linspace(0, 1, 101))
    assert sol.status == OPTIMAL
    assert np.max(np.abs(sol.positions[:, 0] - p)) <= 1e-3


def test_infeasible_detected():
    sol = solve_qp(QpProblem(50, 0.01, [0, 0, 0], [1, 0, 0], 7.0, 1.0))
    assert sol.status == INFEASIBLE


def test_dynamics_and_boxes_hold():
    rng = np.random.default_rng(3)
    prob = random_feasible_problem(rng, (30, 60))
    sol = solve_qp(prob)
    A, B = triple_integrator(prob.dt)
    X = sol.states.reshape(prob.N + 1, 3, 3)
    for k in range(prob.N):
        for ax in range(3):
            assert np.max(np.abs(X[k + 1, ax] - A @ X[k, ax] - B * sol.jerks[k, ax])) <= 1e-6
    assert np.max(np.abs(sol.accelerations)) <= prob.a_max + 1e-6
    assert np.max(np.abs(sol.jerks)) <= prob.j_max + 1e-6
    assert sol.states[0] == pytest.approx(prob.x0, abs=1e-6)
    assert sol.states[-1] == pytest.approx(prob.xf, abs=1e-6)


def test_kkt_zero():
    prob = QpProblem(4, 0.1, np.zeros(3), np.zeros(3), 1, 1)
    sol = QpSolution(np.zeros((5, 3)), np.zeros((4, 1)), OPTIMAL, duals=np.zeros((27, 1)))
    assert kkt_residuals(prob, sol) == (0.0, 0.0, 0.0)


def test_kkt_tight_tolerance():
    rng = np.random.default_rng(11)
    prob = random_feasible_problem(rng, (20, 40))
    sol = solve_qp(prob, tol=1e-8)
    assert sol.status == OPTIMAL
    assert max(kkt_residuals(prob, sol)) <= 1e-8


def test_perturbation_detected():
    # a problem with an active jerk box
    prob = QpProblem(20, 0.05, [0, 0, 0], [1.0, 0, 0], 7.0, 40.0)  # unconstrained peak jerk 60
    sol = solve_qp(prob, tol=1e-9)
    assert sol.status == OPTIMAL and np.max(np.abs(sol.jerks)) >= 40 - 1e-6
    k = int(np.argmax(np.abs(sol.jerks[:, 0])))
    bumped = QpSolution(sol.states, sol.jerks.copy(), sol.status, duals=sol.duals)
    bumped.jerks[k, 0] += 0.1
    pr, du, _ = kkt_residuals(prob, bumped)
    assert max(pr, du) >= 1e-3


@pytest.mark.parametrize("seed", range(3))
def test_axis_separability(seed):
    prob = random_feasible_problem(np.random.default_rng(seed), (20, 80))
    full = solve_qp(prob, tol=1e-9)
    for ax in range(3):
        sub = QpProblem(prob.N, prob.dt, prob.x0[3 * ax:3 * ax + 3], prob.xf[3 * ax:3 * ax + 3], prob.a_max,
                        prob.j_max, prob.jerk_weight)
        one = QpSolver().solve(sub, tol=1e-9)
        assert one.states == pytest.approx(full.states[:, 3 * ax:3 * ax + 3], abs=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_warm_start_independence(seed):
    rng = np.random.default_rng(100 + seed)
    prob = random_feasible_problem(rng, (20, 80))
    cold = QpSolver().solve(prob)
    other = random_feasible_problem(rng, (prob.N, prob.N))
    junk = QpSolver().solve(QpProblem(prob.N, prob.dt, other.x0, other.xf, prob.a_max, prob.j_max))
    warm = QpSolver().solve(prob, warm_start=junk)
    assert warm.status == OPTIMAL
    assert warm.states == pytest.approx(cold.states, abs=1e-6)


@given(st.floats(0.1, 5.0), st.floats(-2, 2), st.floats(-2, 2))
def test_scaling_inactive_boxes(s, p0, pf):
    x0, xf = stack_state([p0], [0.0], [0.0]), stack_state([pf], [0.0], [0.0])
    base = solve_qp(one_axis(20, 0.05, x0, xf), tol=1e-9)
    scaled = solve_qp(one_axis(20, 0.05, s * x0, s * xf), tol=1e-9)
    assert scaled.jerks == pytest.approx(s * base.jerks, abs=1e-6 * (1 + s))


@pytest.mark.parametrize("N", [3, 5])
@pytest.mark.parametrize("seed", range(4))
def test_brute_force_equivalence(N, seed):
    rng = np.random.default_rng(seed)
    dt = 0.1
    a_max, j_max = float(rng.uniform(0.5, 2)), float(rng.uniform(2, 8))
    # endpoints from an admissible rollout, scaled so some boxes bind
    A, B = triple_integrator(dt)
    x0 = np.array([rng.uniform(-0.1, 0.1), rng.uniform(-0.3, 0.3), rng.uniform(-0.5, 0.5) * a_max])
    x = x0.copy()
    for _ in range(N):
        j = float(np.clip(rng.uniform(-1, 1) * j_max, (-a_max - x[2]) / dt, (a_max - x[2]) / dt))
        x = A @ x + B * j
    oracle = brute_force_axis(N, dt, x0, x, a_max, j_max)
    assert oracle is not None
    sol = solve_qp(QpProblem(N, dt, x0, x, a_max, j_max), tol=1e-10)
    assert sol.status == OPTIMAL
    assert sol.jerks[:, 0] == pytest.approx(oracle[0], abs=1e-6)


def test_brute_force_active_box():
    # rest to a displacement that needs saturated jerk over N = 5
    N, dt, j_max = 5, 0.1, 10.0
    x0, xf = np.zeros(3), np.array([0.004, 0.02, 0.0])
    oracle = brute_force_axis(N, dt, x0, xf, 5.0, j_max)
    sol = solve_qp(QpProblem(N, dt, x0, xf, 5.0, j_max), tol=1e-10)
    assert oracle is not None and sol.status == OPTIMAL
    assert sol.jerks[:, 0] == pytest.approx(oracle[0], abs=1e-6)
