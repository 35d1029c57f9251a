"""Dense linear programs with a deterministic, vertex-producing solver.

All programs are stated as maximization over variables with default bounds
[0, inf).  The backend is HiGHS dual simplex via scipy, which is
deterministic for a fixed instance and returns basic feasible solutions, so
optimal points are vertices of the feasible polyhedron.  Optimal points are
re-checked against the constraints before being reported; a check failure is
surfaced as a distinct FAILED status rather than a silent wrong answer.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog

# Feasibility and optimality tolerances of the solver contract.
FEAS_TOL = 1e-7
OPT_TOL = 1e-7

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = (LE, EQ, GE)


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    FAILED = "failed"


@dataclass(frozen=True)
class LinearConstraint:
    """coeffs . x  <relation>  bound"""

    coeffs: np.ndarray
    relation: str
    bound: float

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 1:
            raise ValueError("constraint coefficients must be a 1-D vector")
        if self.relation not in _RELATIONS:
            raise ValueError(f"relation must be one of {_RELATIONS}, got {self.relation!r}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "bound", float(self.bound))


@dataclass(frozen=True)
class LPInstance:
    """A maximization LP.  ``var_bounds`` defaults to [0, inf) per variable."""

    num_vars: int
    objective: np.ndarray
    constraints: tuple[LinearConstraint, ...] = ()
    var_bounds: tuple[tuple[float | None, float | None], ...] | None = None

    def __post_init__(self):
        objective = np.asarray(self.objective, dtype=float)
        if objective.shape != (self.num_vars,):
            raise ValueError(f"objective has shape {objective.shape}, expected ({self.num_vars},)")
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            if c.coeffs.shape != (self.num_vars,):
                raise ValueError(
                    f"constraint over {c.coeffs.shape[0]} variables in an LP with {self.num_vars}"
                )
        if self.var_bounds is not None and len(self.var_bounds) != self.num_vars:
            raise ValueError("var_bounds length does not match num_vars")


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    point: np.ndarray | None = None
    value: float | None = None
    is_vertex: bool = False
    message: str = ""


class LPSolverError(RuntimeError):
    """Raised by the convenience wrappers when a program has no optimum."""

    def __init__(self, status: LPStatus, message: str = ""):
        self.status = status
        super().__init__(f"LP solve failed with status {status.value}: {message}")


def feasible_region(
    num_vars: int,
    constraints: tuple[LinearConstraint, ...] = (),
    var_bounds: tuple[tuple[float | None, float | None], ...] | None = None,
) -> LPInstance:
    """An LPInstance used purely as a constraint container (objective ignored)."""
    return LPInstance(num_vars, np.zeros(num_vars), constraints, var_bounds)


def _violation(instance: LPInstance, x: np.ndarray) -> float:
    """Largest constraint or bound violation at x."""
    worst = 0.0
    for c in instance.constraints:
        lhs = float(c.coeffs @ x)
        if c.relation == LE:
            worst = max(worst, lhs - c.bound)
        elif c.relation == GE:
            worst = max(worst, c.bound - lhs)
        else:
            worst = max(worst, abs(lhs - c.bound))
    bounds = instance.var_bounds or ((0.0, None),) * instance.num_vars
    for xi, (lo, hi) in zip(x, bounds):
        if lo is not None:
            worst = max(worst, lo - xi)
        if hi is not None:
            worst = max(worst, xi - hi)
    return worst


def solve_lp(instance: LPInstance) -> LPSolution:
    """Solve a maximization LP.  Deterministic: identical instances produce
    bitwise-identical optimal points."""
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for c in instance.constraints:
        if c.relation == LE:
            a_ub.append(c.coeffs)
            b_ub.append(c.bound)
        elif c.relation == GE:
            a_ub.append(-c.coeffs)
            b_ub.append(-c.bound)
        else:
            a_eq.append(c.coeffs)
            b_eq.append(c.bound)
    bounds = list(instance.var_bounds) if instance.var_bounds is not None else [(0, None)] * instance.num_vars
    res = linprog(
        -instance.objective,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds,
        method="highs-ds",
    )
    if res.status == 2:
        return LPSolution(LPStatus.INFEASIBLE, message=res.message)
    if res.status == 3:
        return LPSolution(LPStatus.UNBOUNDED, message=res.message)
    if res.status != 0 or res.x is None:
        return LPSolution(LPStatus.FAILED, message=res.message)
    x = np.asarray(res.x, dtype=float)
    viol = _violation(instance, x)
    if viol > FEAS_TOL:
        return LPSolution(LPStatus.FAILED, message=f"reported optimum violates constraints by {viol:.3e}")
    value = float(instance.objective @ x)
    # Dual simplex returns a basic feasible solution of the stated program.
    return LPSolution(LPStatus.OPTIMAL, point=x, value=value, is_vertex=True, message=res.message)


def _require_optimal(solution: LPSolution) -> LPSolution:
    if solution.status is not LPStatus.OPTIMAL:
        raise LPSolverError(solution.status, solution.message)
    return solution


def _pad(c: LinearConstraint, extra: int) -> LinearConstraint:
    return LinearConstraint(np.concatenate([c.coeffs, np.zeros(extra)]), c.relation, c.bound)


def solve_maxmin_linear(rows: np.ndarray, region: LPInstance) -> tuple[float, np.ndarray]:
    """Maximize the minimum of linear functionals over a feasible region.

    Standard epigraph lift: maximize t subject to row_r . x >= t for every
    row, plus the region constraints.  Returns (value, point) where point has
    region.num_vars entries.  Raises LPSolverError when the region is empty
    or the lifted program is unbounded.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    nv = region.num_vars
    if rows.shape[1] != nv:
        raise ValueError(f"rows have {rows.shape[1]} coefficients, region has {nv} variables")
    objective = np.zeros(nv + 1)
    objective[nv] = 1.0
    constraints = [_pad(c, 1) for c in region.constraints]
    for r in rows:
        constraints.append(LinearConstraint(np.concatenate([r, [-1.0]]), GE, 0.0))
    base_bounds = region.var_bounds if region.var_bounds is not None else ((0, None),) * nv
    bounds = tuple(base_bounds) + ((None, None),)
    sol = _require_optimal(solve_lp(LPInstance(nv + 1, objective, tuple(constraints), bounds)))
    point = sol.point[:nv]
    # Report the value attained by the returned point, not the lifted
    # variable: downstream code reuses it as a constraint bound and needs it
    # to be exactly achievable.
    return float(np.min(rows @ point)), point


def sum_k_smallest_epigraph(rows: np.ndarray, k: int, region: LPInstance) -> tuple[float, np.ndarray]:
    """Maximize the sum of the k smallest of the given linear functionals.

    Lift: maximize k*t - sum_r s_r with s_r >= t - row_r . x and s_r >= 0.
    At the optimum t is the k-th smallest value and the objective equals the
    sum of the k smallest rows.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    nrows = rows.shape[0]
    if not 1 <= k <= nrows:
        raise ValueError(f"k must lie in [1, {nrows}], got {k}")
    nv = region.num_vars
    if rows.shape[1] != nv:
        raise ValueError(f"rows have {rows.shape[1]} coefficients, region has {nv} variables")
    total = nv + 1 + nrows  # x, t, s
    objective = np.zeros(total)
    objective[nv] = float(k)
    objective[nv + 1 :] = -1.0
    constraints = [_pad(c, 1 + nrows) for c in region.constraints]
    for r_idx, r in enumerate(rows):
        coeffs = np.zeros(total)
        coeffs[:nv] = r
        coeffs[nv] = -1.0
        coeffs[nv + 1 + r_idx] = 1.0
        constraints.append(LinearConstraint(coeffs, GE, 0.0))  # row . x - t + s_r >= 0
    base_bounds = region.var_bounds if region.var_bounds is not None else ((0, None),) * nv
    bounds = tuple(base_bounds) + ((None, None),) + ((0, None),) * nrows
    sol = _require_optimal(solve_lp(LPInstance(total, objective, tuple(constraints), bounds)))
    point = sol.point[:nv]
    vals = np.sort(rows @ point)
    return float(vals[:k].sum()), point
