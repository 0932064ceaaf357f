"""Minimum-jerk trajectory QP solved by ADMM operator splitting.

Problem, per axis (axes are independent but solved together)::

    minimise    1/2 w sum_t j[t]^2
    subject to  x[t+1] = A x[t] + B j[t]     (triple integrator, x = [p, v, a])
                x[0] = x0, x[N] = xf
                |a[t]| <= a_max, |j[t]| <= j_max

Layout conventions
------------------
* A 9-vector state is stacked per axis: ``[p_x, v_x, a_x, p_y, v_y, a_y, p_z, v_z, a_z]``.
  One-axis problems use 3-vectors.
* Decision vector per axis, time-interleaved so the KKT matrix is banded:
  ``z = [x_0, j_0, x_1, j_1, ..., j_{N-1}, x_N]`` (length ``4N + 3``).
* Constraint rows per axis, in order: initial state (3), dynamics (3 per
  step, ``3N``), terminal state (3), acceleration box (``N + 1``), jerk box
  (``N``). ``QpSolution.duals`` follows this order with the convention that a
  positive multiplier marks an active upper bound.

The ADMM follows the usual OSQP recipe (Ruiz equilibration, over-relaxation,
adaptive penalty, primal-infeasibility certificates) with the linear system
``P + sigma I + C^T diag(rho) C`` factorised once per penalty value as a
banded Cholesky (half bandwidth 6, so each solve is O(N)). An active-set
polish step recovers a high-accuracy KKT point once the iterates settle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_solve_banded, cholesky_banded
from scipy.sparse.linalg import splu

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERATIONS = "max_iterations"

BANDWIDTH = 6


def triple_integrator(dt: float) -> tuple[np.ndarray, np.ndarray]:
    A = np.array([[1.0, dt, 0.5 * dt * dt], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
    B = np.array([dt**3 / 6.0, 0.5 * dt * dt, dt])
    return A, B


def stack_state(p, v, a) -> np.ndarray:
    """Per-axis ``[p, v, a]`` stacking of position/velocity/acceleration vectors."""
    return np.column_stack([np.atleast_1d(p), np.atleast_1d(v), np.atleast_1d(a)]).astype(float).ravel()


def unstack_state(x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m = np.asarray(x, dtype=float).reshape(-1, 3)
    return m[:, 0].copy(), m[:, 1].copy(), m[:, 2].copy()


@dataclass
class QpProblem:
    N: int
    dt: float
    x0: np.ndarray
    xf: np.ndarray
    a_max: float
    j_max: float
    jerk_weight: float = 1.0

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).ravel()
        self.xf = np.asarray(self.xf, dtype=float).ravel()
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.dt <= 0 or self.a_max <= 0 or self.j_max <= 0:
            raise ValueError("dt, a_max and j_max must be positive")
        if self.jerk_weight < 0:
            raise ValueError("jerk_weight must be non-negative")
        if self.x0.size % 3 or self.x0.shape != self.xf.shape:
            raise ValueError("x0 and xf must be matching stacks of [p, v, a] triples")
        slack = 1e-9 * max(1.0, self.a_max)
        if np.any(np.abs(self.x0[2::3]) > self.a_max + slack) or np.any(np.abs(self.xf[2::3]) > self.a_max + slack):
            raise ValueError("endpoint accelerations exceed a_max")

    @property
    def n_axes(self) -> int:
        return self.x0.size // 3

    def to_dict(self) -> dict:
        return {"N": self.N, "dt": self.dt, "x0": self.x0.tolist(), "xf": self.xf.tolist(),
                "a_max": self.a_max, "j_max": self.j_max, "jerk_weight": self.jerk_weight}

    @classmethod
    def from_dict(cls, d: dict) -> "QpProblem":
        return cls(int(d["N"]), float(d["dt"]), d["x0"], d["xf"], float(d["a_max"]), float(d["j_max"]),
                   float(d.get("jerk_weight", 1.0)))


@dataclass
class QpSolution:
    states: np.ndarray  # (N+1, 3 * n_axes)
    jerks: np.ndarray  # (N, n_axes)
    status: str
    iterations: int = 0
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    complementarity: float = float("nan")
    duals: np.ndarray | None = None  # (m, n_axes)
    objective: float = float("nan")
    polished: bool = False
    axis_status: list = field(default_factory=list)

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, 0::3]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, 1::3]

    @property
    def accelerations(self) -> np.ndarray:
        return self.states[:, 2::3]


# ----------------------------------------------------------------------------
# problem structure


def n_vars(N: int) -> int:
    return 4 * N + 3


def n_rows(N: int) -> int:
    return 5 * N + 7


def constraint_matrix(N: int, dt: float) -> sp.csc_matrix:
    """Per-axis constraint matrix ``C`` in the documented row/column order."""
    A, B = triple_integrator(dt)
    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    r = 0
    for i in range(3):
        put(r + i, i, 1.0)
    r += 3
    for k in range(N):
        xk, uk, xk1 = 4 * k, 4 * k + 3, 4 * k + 4
        for i in range(3):
            put(r + i, xk1 + i, 1.0)
            for j in range(3):
                if A[i, j] != 0.0:
                    put(r + i, xk + j, -A[i, j])
            put(r + i, uk, -B[i])
        r += 3
    for i in range(3):
        put(r + i, 4 * N + i, 1.0)
    r += 3
    for k in range(N + 1):
        put(r + k, 4 * k + 2, 1.0)
    r += N + 1
    for k in range(N):
        put(r + k, 4 * k + 3, 1.0)
    r += N
    return sp.csc_matrix((vals, (rows, cols)), shape=(r, n_vars(N)))


def cost_diagonal(N: int, weight: float) -> np.ndarray:
    d = np.zeros(n_vars(N))
    d[3:4 * N:4] = weight
    return d


def constraint_bounds(problem: QpProblem) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper bounds, shape ``(m, n_axes)``."""
    N, na = problem.N, problem.n_axes
    m = n_rows(N)
    lo = np.zeros((m, na))
    hi = np.zeros((m, na))
    x0 = problem.x0.reshape(na, 3).T
    xf = problem.xf.reshape(na, 3).T
    lo[0:3] = hi[0:3] = x0
    t = 3 + 3 * N
    lo[t:t + 3] = hi[t:t + 3] = xf
    a0 = t + 3
    lo[a0:a0 + N + 1] = -problem.a_max
    hi[a0:a0 + N + 1] = problem.a_max
    j0 = a0 + N + 1
    lo[j0:] = -problem.j_max
    hi[j0:] = problem.j_max
    return lo, hi


def pack(states: np.ndarray, jerks: np.ndarray) -> np.ndarray:
    """Trajectory arrays to decision vectors, shape ``(n, n_axes)``."""
    states = np.asarray(states, dtype=float)
    jerks = np.asarray(jerks, dtype=float)
    N = jerks.shape[0]
    na = jerks.shape[1]
    z = np.zeros((n_vars(N), na))
    for ax in range(na):
        blocks = np.zeros((N + 1, 4))
        blocks[:, :3] = states[:, 3 * ax:3 * ax + 3]
        blocks[:N, 3] = jerks[:, ax]
        z[:, ax] = blocks.ravel()[: n_vars(N)]
    return z


def unpack(z: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    na = z.shape[1]
    states = np.zeros((N + 1, 3 * na))
    jerks = np.zeros((N, na))
    for ax in range(na):
        full = np.concatenate([z[:, ax], [0.0]]).reshape(N + 1, 4)
        states[:, 3 * ax:3 * ax + 3] = full[:, :3]
        jerks[:, ax] = full[:N, 3]
    return states, jerks


def _residuals(P_diag, C, lo, hi, z, y):
    """Primal, dual and complementarity residuals (infinity norms over all axes)."""
    Cz = C @ z
    primal = float(np.max(np.maximum(Cz - hi, 0.0) + np.maximum(lo - Cz, 0.0), initial=0.0))
    dual = float(np.max(np.abs(P_diag[:, None] * z + C.T @ y), initial=0.0))
    ineq = lo < hi
    yp = np.maximum(y, 0.0)
    yn = np.maximum(-y, 0.0)
    comp = np.where(ineq, yp * np.abs(hi - Cz) + yn * np.abs(Cz - lo), 0.0)
    return primal, dual, float(np.max(comp, initial=0.0))


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> tuple[float, float, float]:
    """``(primal, dual, complementarity)`` residual norms of a candidate solution."""
    N = problem.N
    C = constraint_matrix(N, problem.dt)
    lo, hi = constraint_bounds(problem)
    z = pack(solution.states, solution.jerks)
    y = np.zeros_like(lo) if solution.duals is None else np.asarray(solution.duals, dtype=float).reshape(lo.shape)
    return _residuals(cost_diagonal(N, problem.jerk_weight), C, lo, hi, z, y)


# ----------------------------------------------------------------------------
# solver


@dataclass
class SolverSettings:
    rho: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6
    max_iter: int = 4000
    check_every: int = 25
    adaptive_rho_tolerance: float = 5.0
    eps_pinf: float = 1e-6
    scaling_iter: int = 15
    polish: bool = True
    polish_delta: float = 1e-9
    polish_refine: int = 30  # cap; refinement stops once the KKT residual reaches round-off
    polish_passes: int = 6
    polish_threshold: float = float("inf")


class _Structure:
    """Scaled problem data for one (N, dt, weight) triple plus cached factorisations."""

    def __init__(self, N: int, dt: float, weight: float, settings: SolverSettings):
        self.N = N
        self.C = constraint_matrix(N, dt)
        self.P_diag = cost_diagonal(N, weight)
        n, m = self.C.shape[1], self.C.shape[0]
        D = np.ones(n)
        E = np.ones(m)
        # Ruiz equilibration of [[P, C^T], [C, 0]] on the COO triplets
        coo = self.C.tocoo()
        rows, cols, vals = coo.row, coo.col, np.abs(coo.data)
        Ps = self.P_diag.copy()
        for _ in range(settings.scaling_iter):
            col_c = np.zeros(n)
            row_c = np.zeros(m)
            np.maximum.at(col_c, cols, vals)
            np.maximum.at(row_c, rows, vals)
            dn = np.maximum(np.abs(Ps), col_c)
            dn = 1.0 / np.sqrt(np.where(dn < 1e-4, 1.0, dn))
            em = 1.0 / np.sqrt(np.where(row_c < 1e-4, 1.0, row_c))
            D *= dn
            E *= em
            Ps = dn * Ps * dn
            vals = vals * em[rows] * dn[cols]
        Cs = sp.csc_matrix((coo.data * E[rows] * D[cols], (rows, cols)), shape=(m, n))
        mean_p = float(np.mean(np.abs(Ps)))
        self.cost_scale = 1.0 / mean_p if mean_p > 1e-12 else 1.0
        self.D, self.E = D, E
        self.Ps = self.cost_scale * Ps
        self.Cs = sp.csc_matrix(Cs)
        self.CsT = sp.csr_matrix(self.Cs.T)
        self.is_eq = None  # filled per problem (pattern identical across problems of same N)
        self._factors: dict[float, np.ndarray] = {}
        self.sigma = settings.sigma

    def rho_vector(self, rho: float, is_eq: np.ndarray) -> np.ndarray:
        return np.where(is_eq, 1e3 * rho, rho)

    def factor(self, rho: float, is_eq: np.ndarray) -> np.ndarray:
        key = rho
        if key not in self._factors:
            rv = self.rho_vector(rho, is_eq)
            M = sp.diags(self.Ps + self.sigma) + self.CsT @ sp.diags(rv) @ self.Cs
            M = sp.dia_matrix(M)
            n = M.shape[0]
            ab = np.zeros((BANDWIDTH + 1, n))
            for k in range(BANDWIDTH + 1):
                ab[BANDWIDTH - k, k:] = M.diagonal(k)
            if len(self._factors) > 8:
                self._factors.clear()
            self._factors[key] = cholesky_banded(ab, lower=False)
        return self._factors[key]


class QpSolver:
    """Reusable solver; holds per-size scaled structures and factorisations.

    Not thread-safe: use one instance per thread.
    """

    def __init__(self, settings: SolverSettings | None = None):
        self.settings = settings or SolverSettings()
        self._structures: dict[tuple, _Structure] = {}

    def _structure(self, problem: QpProblem) -> _Structure:
        key = (problem.N, float(problem.dt), float(problem.jerk_weight))
        if key not in self._structures:
            if len(self._structures) > 64:
                self._structures.clear()
            self._structures[key] = _Structure(problem.N, problem.dt, problem.jerk_weight, self.settings)
        return self._structures[key]

    def solve(self, problem: QpProblem, tol: float = 1e-6, warm_start: QpSolution | None = None) -> QpSolution:
        st = self.settings
        S = self._structure(problem)
        N = problem.N
        lo, hi = constraint_bounds(problem)
        is_eq = lo[:, 0] == hi[:, 0]
        E, D, cs = S.E, S.D, S.cost_scale
        lo_s = lo * E[:, None]
        hi_s = hi * E[:, None]
        n, m = S.Cs.shape[1], S.Cs.shape[0]
        na = problem.n_axes

        if warm_start is not None:
            x = pack(warm_start.states, warm_start.jerks) / D[:, None]
            y = np.zeros((m, na)) if warm_start.duals is None else warm_start.duals / E[:, None] * cs
        else:
            x = np.zeros((n, na))
            y = np.zeros((m, na))
        z = np.clip(S.Cs @ x, lo_s, hi_s)

        rho = st.rho
        rv = S.rho_vector(rho, is_eq)[:, None]
        L = S.factor(rho, is_eq)
        alpha, sigma = st.alpha, st.sigma
        Ps = S.Ps[:, None]
        y_prev = y.copy()
        best = None
        status = MAX_ITERATIONS
        it = 0
        axis_status = [MAX_ITERATIONS] * na
        tried = set()  # active sets whose polish already failed

        for it in range(1, st.max_iter + 1):
            y_prev = y
            rhs = sigma * x + S.CsT @ (rv * z - y)
            xt = cho_solve_banded((L, False), rhs, check_finite=False)
            zt = S.Cs @ xt
            x = alpha * xt + (1.0 - alpha) * x
            zh = alpha * zt + (1.0 - alpha) * z
            z = np.clip(zh + y / rv, lo_s, hi_s)
            y = y + rv * (zh - z)

            if it % st.check_every and it != st.max_iter:
                continue

            xu = D[:, None] * x
            yu = E[:, None] * y / cs
            pr, du, comp = _residuals(S.P_diag, S.C, lo, hi, xu, yu)
            if max(pr, du, comp) <= tol:
                best = (xu, yu, pr, du, comp, False)
                status = OPTIMAL
                axis_status = [OPTIMAL] * na
                break

            if st.polish and max(pr, du) <= st.polish_threshold:
                pol = self._polish(S, problem, lo, hi, x, y, tol, tried)
                if pol is not None:
                    best = pol
                    status = OPTIMAL
                    axis_status = [OPTIMAL] * na
                    break

            infeasible = self._infeasible_axes(S, lo, hi, y - y_prev)
            if any(infeasible):
                status = INFEASIBLE
                axis_status = [INFEASIBLE if f else MAX_ITERATIONS for f in infeasible]
                best = (xu, yu, pr, du, comp, False)
                break

            best = (xu, yu, pr, du, comp, False)
            # adaptive penalty
            Cx = S.Cs @ x
            Px = Ps * x
            CTy = S.CsT @ y
            pn = np.max(np.abs(Cx - z)) / max(np.abs(Cx).max(), np.abs(z).max(), 1e-12)
            dn = np.max(np.abs(Px + CTy)) / max(np.abs(Px).max(initial=0.0), np.abs(CTy).max(), 1e-12)
            if dn > 0 and pn > 0:
                new_rho = float(np.clip(rho * np.sqrt(pn / dn), 1e-6, 1e6))
                if new_rho > rho * st.adaptive_rho_tolerance or new_rho < rho / st.adaptive_rho_tolerance:
                    rho = new_rho
                    rv = S.rho_vector(rho, is_eq)[:, None]
                    L = S.factor(rho, is_eq)

        xu, yu, pr, du, comp, polished = best
        states, jerks = unpack(xu, N)
        obj = 0.5 * problem.jerk_weight * float(np.sum(jerks**2))
        return QpSolution(states, jerks, status, it, pr, du, comp, yu, obj, polished, axis_status)

    # -- helpers -------------------------------------------------------------

    def _infeasible_axes(self, S: _Structure, lo, hi, dy_s) -> list[bool]:
        eps = self.settings.eps_pinf
        dy = S.E[:, None] * dy_s / S.cost_scale
        out = []
        for ax in range(dy.shape[1]):
            d = dy[:, ax]
            nrm = np.abs(d).max()
            if nrm < 1e-12:
                out.append(False)
                continue
            d = d / nrm
            support = hi[:, ax] @ np.maximum(d, 0.0) + lo[:, ax] @ np.minimum(d, 0.0)
            ctd = np.abs(S.C.T @ d).max()
            out.append(bool(support < -eps and ctd < eps))
        return out

    def _polish(self, S: _Structure, problem: QpProblem, lo, hi, x_s, y_s, tol, tried: set):
        """Solve the equality QP on the guessed active set for every axis.

        The ADMM guess is corrected by a few primal-dual active-set passes:
        violated rows join the set and rows whose multiplier has the wrong
        sign leave it.
        """
        E, D, cs = S.E, S.D, S.cost_scale
        lo_s, hi_s = lo * E[:, None], hi * E[:, None]
        z_s = S.Cs @ x_s
        is_eq = lo[:, 0] == hi[:, 0]
        lows = (z_s - lo_s < -y_s) & ~is_eq[:, None]
        ups = (hi_s - z_s < y_s) & ~is_eq[:, None]
        key = lows.tobytes() + ups.tobytes()
        if key in tried:
            return None
        tried.add(key)
        n = S.Cs.shape[1]
        na = x_s.shape[1]
        xu = np.zeros((n, na))
        yu = np.zeros_like(lo)
        for ax in range(na):
            out = self._polish_axis(S, lo_s[:, ax], hi_s[:, ax], is_eq, lows[:, ax].copy(), ups[:, ax].copy())
            if out is None:
                return None
            xu[:, ax] = D * out[0]
            yu[:, ax] = E * out[1] / cs
        pr, du, comp = _residuals(S.P_diag, S.C, lo, hi, xu, yu)
        if max(pr, du, comp) <= tol:
            return xu, yu, pr, du, comp, True
        return None

    def _polish_axis(self, S: _Structure, lo_s, hi_s, is_eq, low, up):
        st = self.settings
        n = S.Cs.shape[1]
        delta = st.polish_delta
        x = y_full = None
        for _ in range(st.polish_passes):
            act = is_eq | low | up
            idx = np.flatnonzero(act)
            target = np.where(up, hi_s, lo_s)[idx]
            CA = S.Cs[idx]
            nA = len(idx)
            K_reg = sp.bmat([[sp.diags(S.Ps + delta), CA.T], [CA, -delta * sp.eye(nA)]], format="csc")
            K_true = sp.bmat([[sp.diags(S.Ps), CA.T], [CA, None]], format="csc")
            rhs = np.concatenate([np.zeros(n), target])
            try:
                lu = splu(K_reg)
            except RuntimeError:
                return None
            sol = lu.solve(rhs)
            floor = 1e-15 * (1.0 + np.abs(rhs).max())
            for _ in range(st.polish_refine):
                r = rhs - K_true @ sol
                if np.abs(r).max() <= floor:
                    break
                sol = sol + lu.solve(r)
            if not np.all(np.isfinite(sol)):
                return None
            x = sol[:n]
            y_full = np.zeros(lo_s.shape[0])
            y_full[idx] = sol[n:]
            z = S.Cs @ x
            scale = 1e-9 * max(1.0, np.abs(hi_s[~is_eq]).max(initial=1.0))
            add_up = ~act & (z > hi_s + scale)
            add_low = ~act & (z < lo_s - scale)
            drop_up = up & (y_full < -scale)
            drop_low = low & (y_full > scale)
            if not (add_up.any() or add_low.any() or drop_up.any() or drop_low.any()):
                return x, y_full
            up = (up & ~drop_up) | add_up
            low = (low & ~drop_low) | add_low
        return x, y_full


_DEFAULT = None


def solve_qp(problem: QpProblem, tol: float = 1e-6, warm_start: QpSolution | None = None,
             solver: QpSolver | None = None) -> QpSolution:
    """Solve with a module-level solver instance unless one is supplied."""
    global _DEFAULT
    if solver is None:
        if _DEFAULT is None:
            _DEFAULT = QpSolver()
        solver = _DEFAULT
    return solver.solve(problem, tol=tol, warm_start=warm_start)
