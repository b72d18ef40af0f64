"""Linear programs: a small problem container and two interchangeable solvers.

``backend="highs"`` hands the problem to HiGHS through scipy and is what the
dominance checks use. ``backend="simplex"`` is a dense two-phase simplex with
Bland's rule, written out here so small test oracles do not depend on the
same solver as the code they check.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILED = "failed"

TOL_FEAS = 1e-8


class LpError(RuntimeError):
    def __init__(self, status: str, message: str = ""):
        super().__init__(f"LP {status}" + (f": {message}" if message else ""))
        self.status = status


def _as_sparse(A, n):
    if A is None:
        return sp.csr_matrix((0, n))
    return sp.csr_matrix(A, dtype=float)


@dataclass
class LpProblem:
    """``sense`` objective·x subject to equality, >= and <= rows and bounds.

    Bounds default to x >= 0; use ``-inf``/``inf`` for free variables and equal
    bounds to fix a value.
    """

    objective: np.ndarray
    sense: str = "max"
    A_eq: object = None
    b_eq: np.ndarray | None = None
    A_ge: object = None
    b_ge: np.ndarray | None = None
    A_le: object = None
    b_le: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        n = self.objective.size
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', not {self.sense!r}")
        for name in ("eq", "ge", "le"):
            A = _as_sparse(getattr(self, f"A_{name}"), n)
            b = getattr(self, f"b_{name}")
            b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
            if A.shape[1] != n:
                raise ValueError(f"A_{name} has {A.shape[1]} columns for {n} variables")
            if b.shape != (A.shape[0],):
                raise ValueError(f"b_{name} has shape {b.shape}, expected ({A.shape[0]},)")
            setattr(self, f"A_{name}", A)
            setattr(self, f"b_{name}", b)
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)

    @property
    def n(self) -> int:
        return self.objective.size

    def fix(self, j: int, value: float) -> None:
        self.lower[j] = self.upper[j] = value

    def residual(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation of ``x``."""
        r = [0.0]
        if self.A_eq.shape[0]:
            r.append(np.abs(self.A_eq @ x - self.b_eq).max())
        if self.A_ge.shape[0]:
            r.append(np.max(self.b_ge - self.A_ge @ x))
        if self.A_le.shape[0]:
            r.append(np.max(self.A_le @ x - self.b_le))
        r.append(np.max(self.lower - x))
        r.append(np.max(x - self.upper))
        return float(max(r))


@dataclass
class LpSolution:
    status: str
    value: float = float("nan")
    x: np.ndarray | None = None
    duals_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals_ge: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals_le: np.ndarray = field(default_factory=lambda: np.zeros(0))
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def require(self) -> "LpSolution":
        if not self.ok:
            raise LpError(self.status, self.message)
        return self


def _row_scale(A: sp.csr_matrix) -> np.ndarray:
    if A.shape[0] == 0:
        return np.ones(0)
    m = np.asarray(abs(A).max(axis=1).todense()).ravel()
    m[m == 0] = 1.0
    return 1.0 / m


def solve(problem: LpProblem, backend: str = "highs", tol_feas: float = TOL_FEAS) -> LpSolution:
    """Solve ``problem``; infeasibility and unboundedness come back as statuses.

    Each constraint row is divided by its largest absolute coefficient first.
    Duals are reported for the original (unscaled) rows, as the rate of change
    of the optimal value per unit of right-hand side.
    """
    s_eq, s_ge, s_le = (_row_scale(problem.A_eq), _row_scale(problem.A_ge),
                        _row_scale(problem.A_le))
    scaled = LpProblem(
        problem.objective, problem.sense,
        sp.diags(s_eq) @ problem.A_eq, problem.b_eq * s_eq,
        sp.diags(s_ge) @ problem.A_ge, problem.b_ge * s_ge,
        sp.diags(s_le) @ problem.A_le, problem.b_le * s_le,
        problem.lower.copy(), problem.upper.copy(),
    )
    if backend == "highs":
        sol = _solve_highs(scaled)
    elif backend == "simplex":
        sol = _solve_simplex(scaled)
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    if sol.ok:
        sol.duals_eq = sol.duals_eq * s_eq
        sol.duals_ge = sol.duals_ge * s_ge
        sol.duals_le = sol.duals_le * s_le
        resid = scaled.residual(sol.x)
        if resid > tol_feas:
            return LpSolution(FAILED, message=f"feasibility residual {resid:.3g}")
    return sol


# -- HiGHS adapter ------------------------------------------------------------

def _solve_highs(p: LpProblem) -> LpSolution:
    sign = -1.0 if p.sense == "max" else 1.0
    A_ub = sp.vstack([-p.A_ge, p.A_le]).tocsr()
    b_ub = np.concatenate([-p.b_ge, p.b_le])
    bounds = np.column_stack([
        np.where(np.isinf(p.lower), None, p.lower),
        np.where(np.isinf(p.upper), None, p.upper),
    ])
    res = linprog(
        sign * p.objective,
        A_ub=A_ub if A_ub.shape[0] else None, b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=p.A_eq if p.A_eq.shape[0] else None, b_eq=p.b_eq if p.A_eq.shape[0] else None,
        bounds=bounds, method="highs",
        options={"presolve": True, "primal_feasibility_tolerance": 1e-10,
                 "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return LpSolution(INFEASIBLE, message=res.message)
    if res.status == 3:
        return LpSolution(UNBOUNDED, message=res.message)
    if res.status != 0:
        return LpSolution(FAILED, message=res.message)
    n_ge = p.A_ge.shape[0]
    ineq = res.ineqlin.marginals if A_ub.shape[0] else np.zeros(0)
    eq = res.eqlin.marginals if p.A_eq.shape[0] else np.zeros(0)
    return LpSolution(
        OPTIMAL, value=float(p.objective @ res.x), x=np.asarray(res.x),
        duals_eq=sign * np.asarray(eq),
        duals_ge=-sign * np.asarray(ineq[:n_ge]),
        duals_le=sign * np.asarray(ineq[n_ge:]),
    )


# -- dense simplex --------------------------------------------------------------

def _solve_simplex(p: LpProblem, max_iter: int = 50_000) -> LpSolution:
    """Two-phase tableau simplex with Bland's rule on a standard-form rewrite.

    Variables are shifted/split so every column is >= 0; finite upper bounds
    become extra <= rows.
    """
    n = p.n
    # column map: x_j = shift_j + sum(coef * z_k)
    cols: list[tuple[int, float]] = []
    shift = np.zeros(n)
    for j in range(n):
        lo, hi = p.lower[j], p.upper[j]
        if np.isfinite(lo) and lo == hi:
            shift[j] = lo
        elif np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    T = np.zeros((n, len(cols)))
    for k, (j, coef) in enumerate(cols):
        T[j, k] = coef

    rows, rhs, kinds = [], [], []
    for A, b, kind in ((p.A_eq, p.b_eq, "eq"), (p.A_ge, p.b_ge, "ge"), (p.A_le, p.b_le, "le")):
        if A.shape[0]:
            Ad = A.toarray()
            rows.append(Ad @ T)
            rhs.append(b - Ad @ shift)
            kinds += [kind] * A.shape[0]
    for j in range(n):
        lo, hi = p.lower[j], p.upper[j]
        if np.isfinite(lo) and np.isfinite(hi) and lo != hi:
            r = np.zeros((1, n))
            r[0, j] = 1.0
            rows.append(r @ T)
            rhs.append(np.array([hi - shift[j]]))
            kinds.append("bound")
    m = len(kinds)
    Araw = np.vstack(rows) if rows else np.zeros((0, len(cols)))
    b = np.concatenate(rhs) if rhs else np.zeros(0)

    # slacks: ge -> -s, le/bound -> +s
    n_z = len(cols)
    slack_idx = [k for k in range(m) if kinds[k] != "eq"]
    S = np.zeros((m, len(slack_idx)))
    for t, k in enumerate(slack_idx):
        S[k, t] = -1.0 if kinds[k] == "ge" else 1.0
    A = np.hstack([Araw, S])
    sign_rows = np.where(b < 0, -1.0, 1.0)
    A = A * sign_rows[:, None]
    b = b * sign_rows
    n_std = A.shape[1]
    A_full = np.hstack([A, np.eye(m)])
    c_full = np.zeros(n_std + m)
    obj = p.objective @ T
    c_std = np.concatenate([obj if p.sense == "max" else -obj, np.zeros(len(slack_idx))])
    basis = list(range(n_std, n_std + m))

    def run(cost, allowed, basis):
        for _ in range(max_iter):
            B = A_full[:, basis]
            try:
                xB = np.linalg.solve(B, b)
                y = np.linalg.solve(B.T, cost[basis])
            except np.linalg.LinAlgError:
                return "singular", basis
            reduced = cost - A_full.T @ y
            enter = next((j for j in range(len(cost)) if allowed[j] and j not in basis
                          and reduced[j] > 1e-10), None)
            if enter is None:
                return OPTIMAL, basis
            d = np.linalg.solve(B, A_full[:, enter])
            ratios = [(xB[i] / d[i], basis[i], i) for i in range(m) if d[i] > 1e-12]
            if not ratios:
                return UNBOUNDED, basis
            best = min(r for r, _, _ in ratios)
            leave = min((var, i) for r, var, i in ratios if r <= best + 1e-12)[1]
            basis = basis.copy()
            basis[leave] = enter
        return FAILED, basis

    allowed = np.ones(n_std + m, dtype=bool)
    phase1 = np.concatenate([np.zeros(n_std), -np.ones(m)])
    status, basis = run(phase1, allowed, basis)
    if status != OPTIMAL:
        return LpSolution(FAILED, message=f"phase 1 {status}")
    xB = np.linalg.solve(A_full[:, basis], b)
    if sum(xB[i] for i, v in enumerate(basis) if v >= n_std) > 1e-9:
        return LpSolution(INFEASIBLE)
    # drive remaining zero-level artificials out of the basis where possible
    for i, v in enumerate(list(basis)):
        if v >= n_std:
            B = A_full[:, basis]
            row = np.linalg.solve(B, A_full[:, :n_std])[i]
            cand = next((j for j in range(n_std) if j not in basis and abs(row[j]) > 1e-9), None)
            if cand is not None:
                basis[i] = cand
    allowed[n_std:] = False
    for i, v in enumerate(basis):
        if v >= n_std:
            allowed[v] = True  # redundant row; artificial stays at zero
    c_full[:n_std] = c_std
    c_full[n_std:] = np.where(allowed[n_std:], 0.0, 0.0)
    status, basis = run(c_full, allowed, basis)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED)
    if status != OPTIMAL:
        return LpSolution(FAILED, message=f"phase 2 {status}")
    B = A_full[:, basis]
    xB = np.linalg.solve(B, b)
    z = np.zeros(n_std + m)
    z[basis] = xB
    x = shift + T @ z[:n_z]
    y = np.linalg.solve(B.T, c_full[basis]) * sign_rows
    if p.sense == "min":
        y = -y
    kinds_arr = np.array(kinds)
    return LpSolution(
        OPTIMAL, value=float(p.objective @ x), x=x,
        duals_eq=y[kinds_arr == "eq"], duals_ge=y[kinds_arr == "ge"],
        duals_le=y[kinds_arr == "le"],
    )
