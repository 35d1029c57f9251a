"""Utility matrices, recommendation policies, and normalized fairness measures.

A recommendation instance is an m x n matrix of strictly positive utilities.
Each user's realized utility is normalized by the value of their single best
item; each item's realized utility is normalized by the value it would collect
if it were recommended to every user.  Both sides then live on a common
[0, 1] scale and can be aggregated by the same family of fairness measures.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Policy rows must sum to one within this tolerance.
ROW_SUM_TOL = 1e-9


class MeasureKind(str, Enum):
    """Aggregation applied to a vector of normalized utilities."""

    MAX_MIN = "maxmin"
    NASH_WELFARE = "nash"
    SUM_K_MIN = "sumkmin"


@dataclass(frozen=True)
class FairnessMeasure:
    """A fairness aggregation. ``k`` is only meaningful for SUM_K_MIN."""

    kind: MeasureKind = MeasureKind.MAX_MIN
    k: int = 1

    def __post_init__(self):
        if not isinstance(self.kind, MeasureKind):
            object.__setattr__(self, "kind", MeasureKind(self.kind))
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))


MAX_MIN = FairnessMeasure(MeasureKind.MAX_MIN)


@dataclass(frozen=True)
class ItemUtilityModel:
    """Interpolates item-side utility between popularity and match quality.

    An item recommended to user i collects ``delta + (1 - delta) * w_ij``.
    ``delta = 0`` reproduces the user utility matrix, ``delta = 1`` counts
    raw recommendation probability mass.
    """

    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class UtilityMatrix:
    """Strictly positive m x n utilities, optionally annotated with user types.

    When ``type_of`` is given, users sharing a type id must have identical
    rows; optimizers use it to collapse the instance to one row per type.
    """

    values: np.ndarray
    type_of: np.ndarray | None = None
    user_labels: tuple[str, ...] | None = None
    item_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.size == 0:
            raise ValueError(f"utility matrix must be 2-D and nonempty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"non-finite utility at row {bad[0]}, column {bad[1]}")
        if np.any(values <= 0):
            bad = np.argwhere(values <= 0)[0]
            raise ValueError(
                f"utilities must be strictly positive; "
                f"entry at row {bad[0]}, column {bad[1]} is {values[bad[0], bad[1]]}"
            )
        object.__setattr__(self, "values", _freeze(values.copy()))
        if self.type_of is not None:
            type_of = np.asarray(self.type_of, dtype=int)
            if type_of.shape != (values.shape[0],):
                raise ValueError(f"type_of must have one entry per user, got shape {type_of.shape}")
            for t in np.unique(type_of):
                rows = values[type_of == t]
                if not np.all(rows == rows[0]):
                    raise ValueError(f"users of type {t} do not share identical utility rows")
            object.__setattr__(self, "type_of", _freeze(type_of.copy()))
        if self.user_labels is not None and len(self.user_labels) != values.shape[0]:
            raise ValueError("user_labels length does not match the number of rows")
        if self.item_labels is not None and len(self.item_labels) != values.shape[1]:
            raise ValueError("item_labels length does not match the number of columns")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RecommendationPolicy:
    """One probability distribution over items per user (or per type)."""

    rows: np.ndarray
    reduced: bool = False

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.size == 0:
            raise ValueError(f"policy must be 2-D and nonempty, got shape {rows.shape}")
        if np.any(rows < 0) or np.any(rows > 1):
            bad = np.argwhere((rows < 0) | (rows > 1))[0]
            raise ValueError(
                f"policy entries must lie in [0, 1]; "
                f"entry at row {bad[0]}, column {bad[1]} is {rows[bad[0], bad[1]]}"
            )
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"policy row {bad} sums to {sums[bad]}, expected 1 within {ROW_SUM_TOL}")
        object.__setattr__(self, "rows", _freeze(rows.copy()))

    @classmethod
    def from_solver(cls, rows: np.ndarray, reduced: bool = False) -> "RecommendationPolicy":
        """Clamp tiny numerical negatives and renormalize exact row sums."""
        rows = np.asarray(rows, dtype=float).copy()
        rows[rows < 0] = 0.0
        sums = rows.sum(axis=1, keepdims=True)
        if np.any(sums <= 0):
            raise ValueError("solver returned an all-zero policy row")
        return cls(rows / sums, reduced=reduced)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]


def apply_item_utility_model(w: UtilityMatrix, model: ItemUtilityModel) -> UtilityMatrix:
    """Blend the matrix toward uniform popularity weight: delta + (1 - delta) w."""
    out = model.delta + (1.0 - model.delta) * w.values
    return UtilityMatrix(out, type_of=w.type_of, user_labels=w.user_labels, item_labels=w.item_labels)


def _check_pair(policy: RecommendationPolicy, w: UtilityMatrix) -> None:
    if policy.rows.shape != w.values.shape:
        raise ValueError(
            f"policy shape {policy.rows.shape} does not match matrix shape {w.values.shape}"
        )


def user_utility_vector(policy: RecommendationPolicy, w: UtilityMatrix) -> np.ndarray:
    """Normalized expected utility of every user, in [0, 1]."""
    _check_pair(policy, w)
    raw = (policy.rows * w.values).sum(axis=1)
    return raw / w.values.max(axis=1)


def item_utility_vector(
    policy: RecommendationPolicy, w: UtilityMatrix, model: ItemUtilityModel | None = None
) -> np.ndarray:
    """Normalized utility collected by every item, in [0, 1].

    The item side always evaluates on the delta-transformed matrix; the
    denominator is the value the item would collect if recommended to all
    users with probability one.
    """
    model = model or ItemUtilityModel()
    wi = apply_item_utility_model(w, model).values
    _check_pair(policy, w)
    return (policy.rows * wi).sum(axis=0) / wi.sum(axis=0)


def normalized_user_utility(policy: RecommendationPolicy, w: UtilityMatrix, i: int) -> float:
    if not 0 <= i < w.m:
        raise IndexError(f"user index {i} out of range for {w.m} users")
    return float(user_utility_vector(policy, w)[i])


def normalized_item_utility(
    policy: RecommendationPolicy, w: UtilityMatrix, j: int, model: ItemUtilityModel | None = None
) -> float:
    if not 0 <= j < w.n:
        raise IndexError(f"item index {j} out of range for {w.n} items")
    return float(item_utility_vector(policy, w, model)[j])


def measure_value(values: np.ndarray, measure: FairnessMeasure, weights: np.ndarray | None = None) -> float:
    """Aggregate a vector of normalized utilities.

    ``weights`` are integer multiplicities (type counts); MAX_MIN ignores
    them, NASH_WELFARE weights the log terms, SUM_K_MIN expands the multiset
    before taking the k smallest.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot aggregate an empty utility vector")
    if measure.kind is MeasureKind.MAX_MIN:
        return float(values.min())
    if measure.kind is MeasureKind.NASH_WELFARE:
        if np.any(values <= 0):
            raise ValueError("Nash welfare is undefined when some normalized utility is 0")
        if weights is None:
            return float(np.log(values).sum())
        return float((np.asarray(weights, dtype=float) * np.log(values)).sum())
    expanded = values if weights is None else np.repeat(values, np.asarray(weights, dtype=int))
    if measure.k > expanded.size:
        raise ValueError(f"k = {measure.k} exceeds the {expanded.size} available utilities")
    return float(np.sort(expanded)[: measure.k].sum())


def user_fairness(policy: RecommendationPolicy, w: UtilityMatrix, measure: FairnessMeasure = MAX_MIN) -> float:
    """Fairness of the user side: the measure applied to normalized user utilities."""
    return measure_value(user_utility_vector(policy, w), measure)


def item_fairness(
    policy: RecommendationPolicy,
    w: UtilityMatrix,
    model: ItemUtilityModel | None = None,
    measure: FairnessMeasure = MAX_MIN,
) -> float:
    """Fairness of the item side, evaluated on the delta-transformed matrix."""
    return measure_value(item_utility_vector(policy, w, model), measure)
