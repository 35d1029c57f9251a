"""Synthetic population generators for the structured experiments.

All generators are deterministic given their arguments.  The misestimation
generator's seed only permutes row order; the multiset of rows never
depends on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import _check_values
from .core import UtilityMatrix


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def gen_homogeneous(v, m: int) -> UtilityMatrix:
    """m users who all share the value vector v."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or np.any(v <= 0):
        raise ValueError("v must be a 1-D strictly positive value vector")
    if m < 1:
        raise ValueError(f"population size must be at least 1, got {m}")
    values = np.tile(v, (m, 1))
    return UtilityMatrix(values, type_of=np.zeros(m, dtype=int))


def gen_two_type(v, alpha: float, m: int) -> UtilityMatrix:
    """Mirrored two-type population: round-half-up(alpha*m) rows of v, the rest reversed."""
    v = _check_values(v)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
    if m < 2:
        raise ValueError(f"a two-type population needs at least 2 users, got {m}")
    n1 = _round_half_up(alpha * m)
    if n1 < 1 or n1 > m - 1:
        raise ValueError(
            f"alpha = {alpha} with m = {m} rounds to an empty type ({n1} vs {m - n1} users)"
        )
    values = np.vstack([np.tile(v, (n1, 1)), np.tile(v[::-1], (m - n1, 1))])
    type_of = np.concatenate([np.zeros(n1, dtype=int), np.ones(m - n1, dtype=int)])
    return UtilityMatrix(values, type_of=type_of)


@dataclass(frozen=True)
class MisestimationData:
    """True and estimated matrices plus the indices of misestimated users."""

    w: UtilityMatrix
    w_hat: UtilityMatrix
    misestimated: np.ndarray


def gen_misestimation(v, beta: float, m: int, seed: int = 0) -> MisestimationData:
    """Population where a share of users is only known up to the type average.

    round-half-up(beta*m) users are recognized as each of the two mirrored
    types.  The remaining users' estimated rows are the palindromic average
    (v_j + v_{n-j+1}) / 2; their true rows alternate deterministically
    between the two types, starting with v.  The seed permutes row order
    and nothing else.
    """
    v = _check_values(v)
    if not 0.0 < beta < 0.5:
        raise ValueError(f"beta must lie strictly in (0, 1/2), got {beta}")
    nk = _round_half_up(beta * m)
    cold = m - 2 * nk
    if nk < 1:
        raise ValueError(f"beta = {beta} with m = {m} rounds to zero recognized users per type")
    if cold < 1:
        raise ValueError(f"beta = {beta} with m = {m} leaves no misestimated users")
    avg = 0.5 * (v + v[::-1])
    true_rows = [np.tile(v, (nk, 1)), np.tile(v[::-1], (nk, 1))]
    est_rows = [np.tile(v, (nk, 1)), np.tile(v[::-1], (nk, 1))]
    true_cold_types = np.array([c % 2 for c in range(cold)], dtype=int)
    true_rows.append(np.where(true_cold_types[:, None] == 0, v, v[::-1]))
    est_rows.append(np.tile(avg, (cold, 1)))
    w_values = np.vstack(true_rows)
    what_values = np.vstack(est_rows)
    true_type = np.concatenate([np.zeros(nk, dtype=int), np.ones(nk, dtype=int), true_cold_types])
    est_type = np.concatenate([np.zeros(nk, dtype=int), np.ones(nk, dtype=int), np.full(cold, 2, dtype=int)])
    misest = np.arange(2 * nk, m)

    perm = np.random.default_rng(seed).permutation(m)
    inverse = np.empty(m, dtype=int)
    inverse[perm] = np.arange(m)
    return MisestimationData(
        w=UtilityMatrix(w_values[perm], type_of=true_type[perm]),
        w_hat=UtilityMatrix(what_values[perm], type_of=est_type[perm]),
        misestimated=np.sort(inverse[misest]),
    )


@dataclass(frozen=True)
class PopulationRecipe:
    """Config object describing one generated population."""

    kind: str  # "two-type", "homogeneous", or "misest"
    v: tuple[float, ...]
    m: int
    alpha: float | None = None
    beta: float | None = None
    seed: int = 0

    def build(self):
        if self.kind == "two-type":
            if self.alpha is None:
                raise ValueError("two-type recipe requires alpha")
            return gen_two_type(np.asarray(self.v), self.alpha, self.m)
        if self.kind == "homogeneous":
            return gen_homogeneous(np.asarray(self.v), self.m)
        if self.kind == "misest":
            if self.beta is None:
                raise ValueError("misest recipe requires beta")
            return gen_misestimation(np.asarray(self.v), self.beta, self.m, self.seed)
        raise ValueError(f"unknown population kind {self.kind!r}")
