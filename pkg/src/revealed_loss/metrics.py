"""Consistency, counterfactual and steering diagnostics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import (
    BenchmarkCost,
    CostVector,
    check_belief,
    decision_arrays,
    loss_loadings,
    optimal_actions,
    total_benchmark_loss,
)
from .exceptions import (
    DegenerateInputError,
    DimensionError,
    EmptyDatasetError,
    IncompleteRecordError,
    ParameterError,
    UndefinedDenominatorError,
    UndefinedProgressError,
)

__all__ = [
    "CounterfactualReport",
    "SteeringClass",
    "classify_steering",
    "counterfactual_reduction",
    "ilfc",
    "pearson_r",
    "realized_reduction",
    "rmsd",
    "self_report_ilfc",
    "steering_progress",
]

TARGET_BAND = (0.8, 1.2)


class SteeringClass(str, enum.Enum):
    WRONG = "Wrong"
    UNDER = "Under"
    TARGET = "Target"
    OVER = "Over"


@dataclass(frozen=True)
class CounterfactualReport:
    """Predicted and realized percent loss reductions for one benchmark.

    ``kind`` is ``"cost"`` for cost-function prompting and ``"prob"`` for
    prompting with the reference probability.
    """

    benchmark_id: str
    kind: str
    target_prediction: float
    steered_prediction: float
    realized_effect: float
    n_cases: int
    domain: str = "all"

    def to_dict(self):
        return dict(self.__dict__)


def ilfc(cases, regime, belief_source: str = "elicited",
         cost: Union[CostVector, Sequence[CostVector]] = None) -> float:
    """Percent of cases whose recorded action is optimal under ``cost``.

    ``cost`` is either one vector for all cases or one per case (as with
    case-specific self-reports).
    """
    cases = list(cases)
    if not cases:
        raise EmptyDatasetError("ilfc needs at least one case")
    if cost is None:
        raise ParameterError("ilfc needs a cost vector")
    p, a, _ = decision_arrays(cases, regime, belief_source)
    if isinstance(cost, CostVector):
        opt = optimal_actions(cost, p)
    else:
        costs = list(cost)
        if len(costs) != len(cases):
            raise DimensionError(f"{len(costs)} cost vectors for {len(cases)} cases")
        for case, c in zip(cases, costs):
            if c is None:
                raise IncompleteRecordError(
                    f"case {case.case_id!r} has no cost vector", case_id=case.case_id
                )
        opt = np.argmin(loss_loadings(p) * np.array([c.as_array() for c in costs]), axis=1)
    return 100.0 * float(np.mean(opt == a))


def self_report_ilfc(cases, kind: str = "global", regime="baseline",
                     belief_source: str = "elicited") -> float:
    """ILFC of recorded decisions against each case's self-reported costs."""
    field = {"global": "self_report_global", "case": "self_report_case"}.get(kind)
    if field is None:
        raise ParameterError(f"self-report kind must be 'global' or 'case', got {kind!r}")
    cases = list(cases)
    costs = []
    for case in cases:
        c = getattr(case, field)
        if c is None:
            raise IncompleteRecordError(
                f"case {case.case_id!r} has no {field}", case_id=case.case_id, field=field
            )
        costs.append(c)
    return ilfc(cases, regime, belief_source, costs)


def _percent_reduction(benchmark, before, after, states):
    if not (len(before) == len(after) == len(states)):
        raise DimensionError(
            f"length mismatch: {len(before)} vs {len(after)} decisions, {len(states)} states"
        )
    base = total_benchmark_loss(benchmark, list(before), list(states))
    if base == 0:
        bid = getattr(benchmark, "id", "?")
        raise UndefinedDenominatorError(f"baseline loss under benchmark {bid!r} is zero")
    new = total_benchmark_loss(benchmark, list(after), list(states))
    return 100.0 * (base - new) / base


def counterfactual_reduction(benchmark: BenchmarkCost, from_cost: CostVector, from_beliefs,
                             to_cost: CostVector, to_beliefs, states) -> float:
    """Percent drop in benchmark loss when rational decisions switch belief-cost pairs."""
    if not (len(from_beliefs) == len(to_beliefs) == len(states)):
        raise DimensionError(
            f"length mismatch: {len(from_beliefs)} / {len(to_beliefs)} beliefs, {len(states)} states"
        )
    before = optimal_actions(from_cost, np.asarray(from_beliefs, dtype=float))
    after = optimal_actions(to_cost, np.asarray(to_beliefs, dtype=float))
    return _percent_reduction(benchmark, before, after, states)


def realized_reduction(benchmark: BenchmarkCost, baseline_actions, prompted_actions, states) -> float:
    """Percent drop in benchmark loss between two recorded decision vectors."""
    return _percent_reduction(benchmark, baseline_actions, prompted_actions, states)


def steering_progress(baseline_ratio: float, steered_ratio: float, true_ratio: float) -> float:
    """Directed progress from the baseline ratio toward the target on a log2 scale.

    0 means no movement, 1 exact recovery, negative values movement away
    and values above 1 overshoot.
    """
    for name, value in (("baseline", baseline_ratio), ("steered", steered_ratio), ("true", true_ratio)):
        if not (value > 0 and math.isfinite(value)):
            raise ParameterError(f"{name} ratio must be positive and finite, got {value!r}")
    b = math.log2(baseline_ratio / true_ratio)
    if b == 0:
        raise UndefinedProgressError("baseline ratio already equals the target ratio")
    l = math.log2(steered_ratio / true_ratio)  # noqa: E741
    return math.copysign(1.0, b) * (b - l) / abs(b)


def classify_steering(progress: float) -> SteeringClass:
    if not math.isfinite(progress):
        raise ParameterError(f"progress must be finite, got {progress!r}")
    lo, hi = TARGET_BAND
    if progress < 0:
        return SteeringClass.WRONG
    if progress < lo:
        return SteeringClass.UNDER
    if progress <= hi:
        return SteeringClass.TARGET
    return SteeringClass.OVER


def pearson_r(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"pearson_r needs equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DegenerateInputError("pearson_r needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = dx @ dx, dy @ dy
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("pearson_r is undefined for a constant input")
    r = (dx @ dy) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def rmsd(p_a, p_b) -> float:
    """Root mean squared deviation between two equal-length belief vectors."""
    if len(p_a) != len(p_b):
        raise DimensionError(f"rmsd needs equal lengths, got {len(p_a)} and {len(p_b)}")
    if len(p_a) == 0:
        raise EmptyDatasetError("rmsd of empty vectors")
    a = np.array([check_belief(p) for p in p_a])
    b = np.array([check_belief(p) for p in p_b])
    return float(np.sqrt(np.mean((a - b) ** 2)))
