"""First-order numerical routines used by the optimizer.

Contains the Euclidean simplex projection, Dykstra's alternating projection
method for nearest points in an intersection of convex sets, and a
maximizer for weighted sums of logarithms of affine functionals over either
a product of simplices (projected gradient ascent) or a general linear
region (Frank-Wolfe with a linear-minimization oracle).  Both concave paths
terminate on the Frank-Wolfe duality gap, which upper-bounds the distance
to the optimum value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp

# Default certificate tolerance for the concave solver.
GAP_TOL = 1e-6
MAX_ITER = 100_000


class NonConvergenceError(RuntimeError):
    pass


def project_rows_to_simplex(rows: np.ndarray) -> np.ndarray:
    """Euclidean projection of every row onto the probability simplex."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    n = rows.shape[1]
    srt = np.sort(rows, axis=1)[:, ::-1]
    csum = np.cumsum(srt, axis=1) - 1.0
    arange = np.arange(1, n + 1)
    cond = srt - csum / arange > 0
    rho = n - np.argmax(cond[:, ::-1], axis=1) - 1  # last index where cond holds
    theta = csum[np.arange(rows.shape[0]), rho] / (rho + 1.0)
    return np.maximum(rows - theta[:, None], 0.0)


@dataclass(frozen=True)
class HalfspaceSet:
    """{x : a . x >= b}"""

    a: np.ndarray
    b: float

    def project(self, x):
        gap = self.b - float(self.a @ x)
        if gap <= 0:
            return x
        return x + (gap / float(self.a @ self.a)) * self.a


@dataclass(frozen=True)
class HyperplaneSet:
    """{x : a . x == b}"""

    a: np.ndarray
    b: float

    def project(self, x):
        return x + ((self.b - float(self.a @ x)) / float(self.a @ self.a)) * self.a


@dataclass(frozen=True)
class SimplexRowsSet:
    """{x : each consecutive block of row_len entries is a distribution}"""

    num_rows: int
    row_len: int

    def project(self, x):
        return project_rows_to_simplex(x.reshape(self.num_rows, self.row_len)).ravel()


def dykstra_project(
    target: np.ndarray,
    sets,
    tol: float = 1e-12,
    max_cycles: int = 200_000,
) -> np.ndarray:
    """Nearest point to ``target`` in the intersection of the given sets.

    Standard Dykstra iteration with one correction term per set; converges
    to the exact Euclidean projection for closed convex sets.  Stops when a
    full cycle moves the iterate by at most ``tol`` (sup norm).
    """
    x = np.asarray(target, dtype=float).copy()
    mem = [np.zeros_like(x) for _ in sets]
    for _ in range(max_cycles):
        start = x.copy()
        for idx, s in enumerate(sets):
            y = s.project(x + mem[idx])
            mem[idx] = x + mem[idx] - y
            x = y
        if np.max(np.abs(x - start)) <= tol:
            return x
    raise NonConvergenceError(f"Dykstra projection did not converge in {max_cycles} cycles")


def min_norm_face_point(
    target: np.ndarray,
    num_rows: int,
    row_len: int,
    halfspaces,
    start: np.ndarray | None = None,
    feas_tol: float = 1e-8,
) -> np.ndarray:
    """Nearest point to ``target`` among row-stochastic points satisfying
    every halfspace constraint.

    Solves the projection as one quadratic program (sequential quadratic
    programming with exact gradients); Dykstra's method is kept as a
    fallback because it is slow when active halfspaces form a thin wedge,
    which is exactly the shape of a tight optimal face.
    """
    from scipy.optimize import minimize

    target = np.asarray(target, dtype=float)
    nv = num_rows * row_len
    a_eq = np.zeros((num_rows, nv))
    for r in range(num_rows):
        a_eq[r, r * row_len : (r + 1) * row_len] = 1.0
    cons = [{"type": "eq", "fun": lambda x: a_eq @ x - 1.0, "jac": lambda x: a_eq}]
    if halfspaces:
        g = np.vstack([h.a for h in halfspaces])
        hb = np.array([h.b for h in halfspaces])
        cons.append({"type": "ineq", "fun": lambda x: g @ x - hb, "jac": lambda x: g})
    x0 = target.copy() if start is None else np.asarray(start, dtype=float).copy()
    res = minimize(
        lambda x: 0.5 * float((x - target) @ (x - target)),
        x0,
        jac=lambda x: x - target,
        bounds=[(0.0, None)] * nv,
        method="SLSQP",
        constraints=cons,
        options={"maxiter": 500, "ftol": 1e-16},
    )
    x = res.x
    feasible = (
        np.all(np.isfinite(x))
        and np.max(np.abs(a_eq @ x - 1.0)) <= feas_tol
        and x.min() >= -feas_tol
        and (not halfspaces or np.min(g @ x - hb) >= -feas_tol)
    )
    if feasible:
        return x
    sets = [SimplexRowsSet(num_rows, row_len), *halfspaces]
    return dykstra_project(target, sets)


@dataclass(frozen=True)
class LogObjective:
    """F(x) = sum_r weights_r * log(coeffs_r . x + offsets_r)."""

    coeffs: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        nrows = coeffs.shape[0]
        offsets = np.zeros(nrows) if self.offsets is None else np.asarray(self.offsets, dtype=float)
        weights = np.ones(nrows) if self.weights is None else np.asarray(self.weights, dtype=float)
        if offsets.shape != (nrows,) or weights.shape != (nrows,):
            raise ValueError("offsets and weights must have one entry per functional")
        if np.any(weights <= 0):
            raise ValueError("log-term weights must be strictly positive")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "weights", weights)

    def value(self, x):
        vals = self.coeffs @ x + self.offsets
        if np.any(vals <= 0):
            return -np.inf
        return float(self.weights @ np.log(vals))

    def gradient(self, x):
        vals = self.coeffs @ x + self.offsets
        return self.coeffs.T @ (self.weights / vals)


@dataclass(frozen=True)
class SimplexProduct:
    """Feasible region made of ``num_rows`` independent distributions."""

    num_rows: int
    row_len: int

    @property
    def num_vars(self) -> int:
        return self.num_rows * self.row_len

    def uniform(self) -> np.ndarray:
        return np.full(self.num_vars, 1.0 / self.row_len)


@dataclass(frozen=True)
class ConcaveResult:
    value: float
    point: np.ndarray
    gap: float
    iterations: int
    converged: bool


def _armijo_accept(f_new, f_old, g, x_new, x_old) -> bool:
    return np.isfinite(f_new) and f_new >= f_old + 1e-4 * float(g @ (x_new - x_old))


def _ascend_simplex_product(objective, region, start, tol, max_iter) -> ConcaveResult:
    k, n = region.num_rows, region.row_len
    x = start.copy()
    fx = objective.value(x)
    if not np.isfinite(fx):
        raise ValueError("starting point is not strictly feasible for the log objective")
    eta = 1.0
    gap = np.inf
    for it in range(1, max_iter + 1):
        g = objective.gradient(x)
        grid = g.reshape(k, n)
        xg = x.reshape(k, n)
        gap = float(np.sum(grid.max(axis=1) - np.einsum("ij,ij->i", grid, xg)))
        if gap <= tol * (1.0 + abs(fx)):
            return ConcaveResult(fx, x, gap, it, True)
        eta = min(eta * 2.0, 1e8)
        while True:
            xn = project_rows_to_simplex((x + eta * g).reshape(k, n)).ravel()
            fn = objective.value(xn)
            if _armijo_accept(fn, fx, g, xn, x):
                break
            eta *= 0.5
            if eta < 1e-18:
                xn, fn = x, fx  # no productive step left; gap check decides next round
                break
        if np.array_equal(xn, x):
            # Projection is at a fixed point; nothing further to gain from
            # shrinking steps, so report whatever certificate is in hand.
            return ConcaveResult(fx, x, gap, it, gap <= tol * (1.0 + abs(fx)))
        x, fx = xn, fn
    return ConcaveResult(fx, x, gap, max_iter, False)


def _frank_wolfe_region(objective, region: lp.LPInstance, start, tol, max_iter) -> ConcaveResult:
    x = start.copy()
    fx = objective.value(x)
    if not np.isfinite(fx):
        raise ValueError("starting point is not strictly feasible for the log objective")
    gap = np.inf
    lmo_cap = min(max_iter, 20_000)  # every step solves one LP
    for it in range(1, lmo_cap + 1):
        g = objective.gradient(x)
        sol = lp.solve_lp(lp.LPInstance(region.num_vars, g, region.constraints, region.var_bounds))
        if sol.status is not lp.LPStatus.OPTIMAL:
            raise lp.LPSolverError(sol.status, "linear oracle failed inside Frank-Wolfe")
        s = sol.point
        gap = float(g @ (s - x))
        if gap <= tol * (1.0 + abs(fx)):
            return ConcaveResult(fx, x, gap, it, True)
        step = 1.0
        d = s - x
        while True:
            xn = x + step * d
            fn = objective.value(xn)
            if _armijo_accept(fn, fx, g, xn, x):
                break
            step *= 0.5
            if step < 1e-18:
                return ConcaveResult(fx, x, gap, it, False)
        x, fx = xn, fn
    return ConcaveResult(fx, x, gap, lmo_cap, False)


def nash_concave_solve(
    objective: LogObjective,
    region,
    start: np.ndarray | None = None,
    tol: float = GAP_TOL,
    max_iter: int = MAX_ITER,
) -> ConcaveResult:
    """Maximize a weighted sum of logs of affine functionals over ``region``.

    ``region`` is either a SimplexProduct (projected gradient ascent with
    backtracking line search) or an LPInstance of linear constraints
    (Frank-Wolfe, objective field ignored).  Returns the point, the value,
    and the final Frank-Wolfe gap certificate; convergence means
    gap <= tol * (1 + |value|), and ``converged`` is False when the
    iteration cap is exhausted first.
    """
    if isinstance(region, SimplexProduct):
        x0 = region.uniform() if start is None else np.asarray(start, dtype=float).copy()
        return _ascend_simplex_product(objective, region, x0, tol, max_iter)
    if isinstance(region, lp.LPInstance):
        if start is None:
            raise ValueError("a strictly feasible start is required for a general linear region")
        return _frank_wolfe_region(objective, region, np.asarray(start, dtype=float), tol, max_iter)
    raise TypeError(f"unsupported region type {type(region).__name__}")
