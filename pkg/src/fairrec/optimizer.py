"""Optimal recommendation policies under item-fairness constraints.

The central problem: maximize a fairness measure of the users' normalized
utilities subject to the item side retaining at least a fraction gamma of
its own best attainable fairness.  Populations are first collapsed to one
policy row per user type; averaging the rows of any feasible policy within
a type changes no item utility and never hurts the worst-off user, so the
reduction is lossless.

For the max-min measure the item-fairness optimum is computed by a single
linear program that forces all item utilities to a common value lambda and
maximizes it; every max-min item-optimal policy equalizes the items, which
makes the gamma = 1 constraint expressible as plain inequalities.  The sum
of the k smallest utilities uses the standard epigraph lift on both sides.
Nash welfare (sum of logs) is handled by a first-order concave maximizer
plus Lagrangian bisection on the item constraint.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import lp
from .core import (
    MAX_MIN,
    FairnessMeasure,
    ItemUtilityModel,
    MeasureKind,
    RecommendationPolicy,
    UtilityMatrix,
    apply_item_utility_model,
    measure_value,
    user_utility_vector,
)
from .numerics import (
    HalfspaceSet,
    LogObjective,
    NonConvergenceError,
    SimplexProduct,
    min_norm_face_point,
    nash_concave_solve,
)

# Backoff applied when an optimal value is reused as a constraint threshold,
# so that floating-point optima stay feasible.
SLACK = 1e-9
# Tolerance for sweep monotonicity and constraint satisfaction checks.
SWEEP_TOL = 1e-6
# Certificate tolerance for the Nash first-order path.
NASH_GAP_TOL = 1e-6


class TieBreak(str, Enum):
    SOLVER = "solver"
    CANONICAL = "canonical"


class Scope(str, Enum):
    ALL_USERS = "all"
    MISESTIMATED_GROUP = "misest-group"


@dataclass(frozen=True)
class TypeReduction:
    """Collapse of an instance to one row per user type."""

    matrix: UtilityMatrix
    counts: np.ndarray
    user_to_type: np.ndarray

    @property
    def k(self) -> int:
        return self.matrix.m


def reduce_by_types(w: UtilityMatrix) -> TypeReduction:
    """Group users into types by the type annotation or by exact row equality."""
    if w.type_of is not None:
        ids = w.type_of
    else:
        seen: dict[bytes, int] = {}
        ids = np.empty(w.m, dtype=int)
        for i in range(w.m):
            key = w.values[i].tobytes()
            ids[i] = seen.setdefault(key, len(seen))
    # Renumber in first-occurrence order so the reduction is deterministic.
    order: dict[int, int] = {}
    user_to_type = np.empty(w.m, dtype=int)
    for i, t in enumerate(ids):
        user_to_type[i] = order.setdefault(int(t), len(order))
    k = len(order)
    rows = np.empty((k, w.n))
    counts = np.zeros(k, dtype=int)
    for i in range(w.m):
        rows[user_to_type[i]] = w.values[i]
        counts[user_to_type[i]] += 1
    return TypeReduction(UtilityMatrix(rows), counts, user_to_type)


def expand_policy(rows_by_type: np.ndarray, reduction: TypeReduction) -> np.ndarray:
    """Inverse of the type reduction; preserves every user and item utility."""
    return np.asarray(rows_by_type, dtype=float)[reduction.user_to_type]


def _user_norm_rows(wt: np.ndarray) -> np.ndarray:
    """U_k = sum_j B[k, j] rho[k, j] with B the row-normalized utilities."""
    return wt / wt.max(axis=1, keepdims=True)


def _item_share_rows(wt: np.ndarray, counts: np.ndarray, model: ItemUtilityModel) -> np.ndarray:
    """I_j = sum_k A[k, j] rho[k, j] on the delta-transformed matrix."""
    wi = model.delta + (1.0 - model.delta) * wt
    weighted = counts[:, None] * wi
    return weighted / weighted.sum(axis=0, keepdims=True)


def _flatten_user_rows(b: np.ndarray) -> np.ndarray:
    """(K, K*n) coefficient rows for the per-type user utilities."""
    k, n = b.shape
    rows = np.zeros((k, k * n))
    for t in range(k):
        rows[t, t * n : (t + 1) * n] = b[t]
    return rows


def _flatten_item_rows(a: np.ndarray) -> np.ndarray:
    """(n, K*n) coefficient rows for the item utilities."""
    k, n = a.shape
    rows = np.zeros((n, k * n))
    for j in range(n):
        rows[j, j::n] = a[:, j]
    return rows


def _simplex_constraints(k: int, n: int) -> list[lp.LinearConstraint]:
    out = []
    for t in range(k):
        coeffs = np.zeros(k * n)
        coeffs[t * n : (t + 1) * n] = 1.0
        out.append(lp.LinearConstraint(coeffs, lp.EQ, 1.0))
    return out


def _validate_measure(measure: FairnessMeasure, m: int, n: int) -> None:
    if measure.kind is MeasureKind.SUM_K_MIN:
        if measure.k > m:
            raise ValueError(f"k = {measure.k} exceeds the population of {m} users")
        if measure.k > n:
            raise ValueError(f"k = {measure.k} exceeds the catalog of {n} items")


@dataclass(frozen=True)
class IfStarResult:
    """Item-fairness optimum IF* together with an attaining policy."""

    value: float
    policy: RecommendationPolicy
    rows_by_type: np.ndarray
    reduction: TypeReduction
    measure: FairnessMeasure
    delta: float
    lp_solution: lp.LPSolution | None = None
    gap: float | None = None


_IF_STAR_CACHE: dict[bytes, IfStarResult] = {}


def _cache_key(w: UtilityMatrix, model: ItemUtilityModel, measure: FairnessMeasure) -> bytes:
    h = hashlib.sha256()
    h.update(w.values.tobytes())
    h.update(b"|" + (w.type_of.tobytes() if w.type_of is not None else b"-"))
    h.update(f"|{model.delta!r}|{measure.kind.value}|{measure.k}".encode())
    return h.digest()


def clear_caches() -> None:
    _IF_STAR_CACHE.clear()


def compute_if_star(
    w: UtilityMatrix,
    item_model: ItemUtilityModel | None = None,
    measure: FairnessMeasure = MAX_MIN,
) -> IfStarResult:
    """Best attainable item fairness, cached per (matrix, delta, measure)."""
    model = item_model or ItemUtilityModel()
    key = _cache_key(w, model, measure)
    hit = _IF_STAR_CACHE.get(key)
    if hit is not None:
        return hit
    _validate_measure(measure, w.m, w.n)
    red = reduce_by_types(w)
    k, n = red.k, w.n
    a = _item_share_rows(red.matrix.values, red.counts, model)
    item_rows = _flatten_item_rows(a)
    lp_solution = None
    gap = None
    if measure.kind is MeasureKind.MAX_MIN:
        # One LP: maximize lambda subject to every item utility equaling it.
        nv = k * n + 1
        objective = np.zeros(nv)
        objective[-1] = 1.0
        constraints = [_pad_one(c) for c in _simplex_constraints(k, n)]
        for j in range(n):
            coeffs = np.concatenate([item_rows[j], [-1.0]])
            constraints.append(lp.LinearConstraint(coeffs, lp.EQ, 0.0))
        bounds = ((0, None),) * (k * n) + ((None, None),)
        lp_solution = lp.solve_lp(lp.LPInstance(nv, objective, tuple(constraints), bounds))
        if lp_solution.status is not lp.LPStatus.OPTIMAL:
            raise lp.LPSolverError(lp_solution.status, "item-fairness program has no optimum")
        point = lp_solution.point[: k * n]
    elif measure.kind is MeasureKind.SUM_K_MIN:
        region = lp.feasible_region(k * n, tuple(_simplex_constraints(k, n)))
        _, point = lp.sum_k_smallest_epigraph(item_rows, measure.k, region)
    else:
        res = nash_concave_solve(
            LogObjective(item_rows, None, None), SimplexProduct(k, n), tol=NASH_GAP_TOL
        )
        if not res.converged:
            raise NonConvergenceError("item-side Nash optimization hit the iteration cap")
        point, gap = res.point, res.gap
    rows = RecommendationPolicy.from_solver(point.reshape(k, n), reduced=True).rows
    value = measure_value((a * rows).sum(axis=0), measure)
    policy = RecommendationPolicy(expand_policy(rows, red))
    result = IfStarResult(value, policy, rows, red, measure, model.delta, lp_solution, gap)
    if len(_IF_STAR_CACHE) > 256:
        _IF_STAR_CACHE.clear()
    _IF_STAR_CACHE[key] = result
    return result


def _pad_one(c: lp.LinearConstraint) -> lp.LinearConstraint:
    return lp.LinearConstraint(np.concatenate([c.coeffs, [0.0]]), c.relation, c.bound)


@dataclass(frozen=True)
class UfStarResult:
    """Constrained user-fairness optimum for one gamma."""

    value: float
    policy: RecommendationPolicy
    rows_by_type: np.ndarray
    gamma: float
    if_star: float | None
    if_target: float
    measure: FairnessMeasure
    delta: float


def _argmax_mixing_rows(wt: np.ndarray) -> np.ndarray:
    """Uniform mixture over each type's tied favorite items."""
    k, n = wt.shape
    rows = np.zeros((k, n))
    for t in range(k):
        row = wt[t]
        ties = row >= row.max() * (1.0 - 1e-12)
        rows[t, ties] = 1.0 / ties.sum()
    return rows


def _canonical_maxmin_rows(
    user_rows: np.ndarray,
    item_rows: np.ndarray,
    solver_point: np.ndarray,
    if_target: float,
    k: int,
    n: int,
) -> np.ndarray:
    """Deterministic point of the optimal face: nearest to the uniform policy.

    The face is cut out by the attained optimal user-fairness value and the
    item target; projecting the uniform policy onto it picks the unique
    minimum-distance point, which inherits every symmetry of the instance
    (any symmetry permutes the face and fixes the uniform policy, and the
    projection is unique).  Tied supports therefore end up uniformly mixed.

    Both bounds are scalars derived from values the solver point actually
    attains, backed off by a hair, so the face provably contains that point
    and is never empty; asymmetric per-constraint slacks would break the
    symmetry argument.
    """
    u_bound = float(np.min(user_rows @ solver_point)) - 1e-12
    halfspaces = [HalfspaceSet(r, u_bound) for r in user_rows]
    if if_target > 0:
        i_bound = min(if_target - SLACK, float(np.min(item_rows @ solver_point))) - 1e-12
        halfspaces.extend(HalfspaceSet(r, i_bound) for r in item_rows)
    x = min_norm_face_point(
        np.full(k * n, 1.0 / n), k, n, halfspaces, start=solver_point
    )
    return x.reshape(k, n)


def compute_uf_star(
    w: UtilityMatrix,
    gamma: float,
    item_model: ItemUtilityModel | None = None,
    measure: FairnessMeasure = MAX_MIN,
    if_star: IfStarResult | None = None,
    tie_break: TieBreak = TieBreak.SOLVER,
) -> UfStarResult:
    """Best attainable user fairness when the item side must keep a gamma
    fraction of its optimum.  gamma = 0 drops the item constraint entirely."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    model = item_model or ItemUtilityModel()
    tie_break = TieBreak(tie_break)
    if tie_break is TieBreak.CANONICAL and measure.kind is not MeasureKind.MAX_MIN:
        raise ValueError("the canonical tie-break is defined for the max-min measure only")
    _validate_measure(measure, w.m, w.n)
    if gamma > 0 and if_star is None:
        if_star = compute_if_star(w, model, measure)
    red = if_star.reduction if if_star is not None else reduce_by_types(w)
    k, n = red.k, w.n
    b = _user_norm_rows(red.matrix.values)
    a = _item_share_rows(red.matrix.values, red.counts, model)
    user_rows = _flatten_user_rows(b)
    item_rows = _flatten_item_rows(a)
    if_value = if_star.value if if_star is not None else None

    if measure.kind is MeasureKind.MAX_MIN:
        if_target = gamma * if_value if gamma > 0 else 0.0
        constraints = _simplex_constraints(k, n)
        if gamma > 0:
            for j in range(n):
                constraints.append(lp.LinearConstraint(item_rows[j], lp.GE, if_target - SLACK))
        region = lp.feasible_region(k * n, tuple(constraints))
        value, point = lp.solve_maxmin_linear(user_rows, region)
        rows = point.reshape(k, n)
        if tie_break is TieBreak.CANONICAL:
            if gamma == 0:
                rows = _argmax_mixing_rows(red.matrix.values)
            else:
                rows = _canonical_maxmin_rows(user_rows, item_rows, point, if_target, k, n)
    elif measure.kind is MeasureKind.SUM_K_MIN:
        if_target = gamma * if_value if gamma > 0 else 0.0
        rows = _sum_k_min_rows(red, b, item_rows, gamma, if_target, measure, k, n)
    else:
        if_target = (if_value / gamma) if gamma > 0 else -np.inf
        rows = _nash_uf_rows(red, user_rows, item_rows, gamma, if_target, k, n)

    policy_rows = RecommendationPolicy.from_solver(rows, reduced=True).rows
    value = measure_value((b * policy_rows).sum(axis=1), measure, weights=red.counts)
    policy = RecommendationPolicy(expand_policy(policy_rows, red))
    return UfStarResult(value, policy, policy_rows, gamma, if_value, if_target, measure, model.delta)


def _sum_k_min_rows(red, b, item_rows, gamma, if_target, measure, k, n):
    """Epigraph program for the sum of the k smallest user utilities, with a
    certificate block encoding the item-side constraint when gamma > 0."""
    nv = k * n
    if gamma > 0:
        # Extra variables tv, sv_j certify that the sum of the k smallest
        # item utilities reaches the target.
        total = nv + 1 + n
        constraints = [_pad_many(c, 1 + n) for c in _simplex_constraints(k, n)]
        cert = np.zeros(total)
        cert[nv] = float(measure.k)
        cert[nv + 1 :] = -1.0
        constraints.append(lp.LinearConstraint(cert, lp.GE, if_target - SLACK))
        for j in range(n):
            coeffs = np.zeros(total)
            coeffs[:nv] = item_rows[j]
            coeffs[nv] = -1.0
            coeffs[nv + 1 + j] = 1.0
            constraints.append(lp.LinearConstraint(coeffs, lp.GE, 0.0))
        bounds = ((0, None),) * nv + ((None, None),) + ((0, None),) * n
        region = lp.feasible_region(total, tuple(constraints), bounds)
    else:
        total = nv
        region = lp.feasible_region(nv, tuple(_simplex_constraints(k, n)))
    # One epigraph row per user, so type multiplicities count.
    per_user = np.repeat(_flatten_user_rows(b), red.counts, axis=0)
    if total > nv:
        per_user = np.hstack([per_user, np.zeros((per_user.shape[0], total - nv))])
    _, point = lp.sum_k_smallest_epigraph(per_user, measure.k, region)
    return point[:nv].reshape(k, n)


def _pad_many(c: lp.LinearConstraint, extra: int) -> lp.LinearConstraint:
    return lp.LinearConstraint(np.concatenate([c.coeffs, np.zeros(extra)]), c.relation, c.bound)


def _nash_uf_rows(red, user_rows, item_rows, gamma, target, k, n):
    """Lagrangian bisection for the Nash path.

    The inner problem max U_NW + mu * I_NW is an unconstrained weighted
    log-sum over the simplex product; the achieved item welfare increases
    with mu, so bisection finds the multiplier where the constraint just
    binds.  gamma = 0 needs no multiplier at all.
    """
    region = SimplexProduct(k, n)
    counts = red.counts.astype(float)
    user_obj = LogObjective(user_rows, None, counts)

    def inw(x) -> float:
        vals = item_rows @ x
        if np.any(vals <= 0):
            return -np.inf
        return float(np.log(vals).sum())

    res = nash_concave_solve(user_obj, region, tol=NASH_GAP_TOL)
    if not res.converged:
        raise NonConvergenceError("user-side Nash optimization hit the iteration cap")
    if gamma == 0 or inw(res.point) >= target - SLACK:
        return res.point.reshape(k, n)

    stacked = np.vstack([user_rows, item_rows])

    def inner(mu, x0):
        obj = LogObjective(stacked, None, np.concatenate([counts, np.full(n, mu)]))
        # Warm starts can sit on the boundary of the log domain; pull them
        # toward the uniform policy until strictly feasible.
        for t in (0.0, 1e-6, 1e-3, 1e-1, 1.0):
            start = (1.0 - t) * x0 + t * region.uniform()
            if np.isfinite(obj.value(start)):
                break
        out = nash_concave_solve(obj, region, start=start, tol=NASH_GAP_TOL)
        if not out.converged:
            raise NonConvergenceError(f"Nash inner solve stalled at multiplier {mu}")
        return out

    lo, hi = 0.0, 1.0
    res_hi = inner(hi, res.point)
    while inw(res_hi.point) < target - SLACK:
        if hi >= 1e12:
            raise NonConvergenceError("item constraint unreachable within the multiplier range")
        lo, hi = hi, hi * 10.0
        res_hi = inner(hi, res_hi.point)
    slack_tol = SLACK * (1.0 + abs(target))
    for _ in range(120):
        if inw(res_hi.point) - target <= slack_tol:
            break
        mid = 0.5 * (lo + hi)
        res_mid = inner(mid, res_hi.point)
        if inw(res_mid.point) >= target - SLACK:
            hi, res_hi = mid, res_mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * (1.0 + hi):
            break
    return res_hi.point.reshape(k, n)


def price_of_fairness(
    w: UtilityMatrix,
    item_model: ItemUtilityModel | None = None,
    measure: FairnessMeasure = MAX_MIN,
) -> float:
    """Relative loss in optimal user fairness caused by maximal item fairness."""
    uf0 = compute_uf_star(w, 0.0, item_model, measure).value
    if abs(uf0) < 1e-12:
        raise ValueError("price of fairness is undefined when the unconstrained optimum is 0")
    uf1 = compute_uf_star(w, 1.0, item_model, measure).value
    return (uf0 - uf1) / uf0


def misestimated_users(w: UtilityMatrix, w_hat: UtilityMatrix) -> np.ndarray:
    if w.values.shape != w_hat.values.shape:
        raise ValueError("true and estimated matrices must have identical shape")
    return np.where(np.any(w.values != w_hat.values, axis=1))[0]


def price_of_misestimation(
    w: UtilityMatrix,
    w_hat: UtilityMatrix,
    gamma: float,
    scope: Scope,
    item_model: ItemUtilityModel | None = None,
    measure: FairnessMeasure = MAX_MIN,
    tie_break: TieBreak = TieBreak.SOLVER,
) -> float:
    """Relative user-fairness loss from optimizing against estimated utilities.

    Both the estimated-optimal and the true-optimal policy are computed with
    the same gamma and tie-break; both are then evaluated on the true
    matrix, restricted to the misestimated users when scope says so.
    """
    scope = Scope(scope)
    group = misestimated_users(w, w_hat)
    if scope is Scope.MISESTIMATED_GROUP and group.size == 0:
        raise ValueError("no users are misestimated; the group scope is undefined")
    ref = compute_uf_star(w, gamma, item_model, measure, tie_break=tie_break)
    est = compute_uf_star(w_hat, gamma, item_model, measure, tie_break=tie_break)
    u_ref = user_utility_vector(ref.policy, w)
    u_est = user_utility_vector(est.policy, w)
    if scope is Scope.MISESTIMATED_GROUP:
        u_ref, u_est = u_ref[group], u_est[group]
    ref_val = measure_value(u_ref, measure)
    est_val = measure_value(u_est, measure)
    if abs(ref_val) < 1e-12:
        raise ValueError("price of misestimation is undefined when the reference optimum is 0")
    return (ref_val - est_val) / ref_val


@dataclass(frozen=True)
class FairnessPrices:
    """Bundle of computed prices for reporting."""

    pof: float | None
    pom_by_gamma: dict[float, float]
    scope: Scope | None


@dataclass(frozen=True)
class TradeoffRow:
    gamma: float
    if_target: float
    uf_achieved: float
    if_achieved: float
    status: str
    solve_ms: float


@dataclass(frozen=True)
class TradeoffCurve:
    """Sweep of the constrained optimum over a gamma grid."""

    rows: tuple[TradeoffRow, ...]
    if_star: float
    measure: FairnessMeasure
    delta: float
    provenance: dict

    def __post_init__(self):
        gammas = [r.gamma for r in self.rows]
        if any(g2 <= g1 for g1, g2 in zip(gammas, gammas[1:])):
            raise ValueError("gamma grid must be strictly increasing")


def tradeoff_sweep(
    w: UtilityMatrix,
    gammas,
    item_model: ItemUtilityModel | None = None,
    measure: FairnessMeasure = MAX_MIN,
    tie_break: TieBreak = TieBreak.SOLVER,
) -> TradeoffCurve:
    """Solve the constrained problem across a gamma grid.

    The item-side optimum is computed once and shared by every row.  A
    failing gamma is recorded in its row and the sweep continues.  The
    user-fairness column is checked to be nonincreasing; a violation means
    the solver contract is broken and raises.
    """
    model = item_model or ItemUtilityModel()
    gammas = [float(g) for g in gammas]
    ifres = compute_if_star(w, model, measure)
    a = _item_share_rows(ifres.reduction.matrix.values, ifres.reduction.counts, model)
    rows = []
    prev_ok = np.inf
    for g in gammas:
        start = time.perf_counter()
        try:
            r = compute_uf_star(w, g, model, measure, if_star=ifres, tie_break=tie_break)
            elapsed = (time.perf_counter() - start) * 1000.0
            i_vals = (a * r.rows_by_type).sum(axis=0)
            if measure.kind is MeasureKind.NASH_WELFARE and np.any(i_vals <= 0.0):
                # a starved item puts the log-welfare at its floor
                if_achieved = -np.inf
            else:
                if_achieved = measure_value(i_vals, measure)
            if r.value > prev_ok + SWEEP_TOL * (1.0 + abs(prev_ok)):
                raise RuntimeError(
                    f"user fairness increased along the sweep at gamma = {g}: "
                    f"{r.value} after {prev_ok}"
                )
            prev_ok = r.value
            rows.append(TradeoffRow(g, r.if_target, r.value, if_achieved, "ok", elapsed))
        except (lp.LPSolverError, NonConvergenceError) as exc:
            elapsed = (time.perf_counter() - start) * 1000.0
            rows.append(TradeoffRow(g, np.nan, np.nan, np.nan, f"error: {exc}", elapsed))
    provenance = {
        "tool": "fairrec",
        "measure": measure.kind.value,
        "k": measure.k,
        "delta": model.delta,
        "tie_break": TieBreak(tie_break).value,
        "matrix_sha256": hashlib.sha256(w.values.tobytes()).hexdigest()[:16],
        "feasibility_tol": lp.FEAS_TOL,
        "optimality_tol": lp.OPT_TOL,
        "nash_gap_tol": NASH_GAP_TOL,
    }
    return TradeoffCurve(tuple(rows), ifres.value, measure, model.delta, provenance)
