"""Domain types and decision-theoretic primitives.

The decision problem is binary diagnosis with deferral: the latent state is
``0`` (condition absent) or ``1`` (present) and the agent picks one of three
actions. Losses are parameterized by a :class:`CostVector`
``(c_fp, c_fn, c_defer)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .exceptions import DimensionError, EmptyDatasetError, IncompleteRecordError, ParameterError

__all__ = [
    "Action",
    "BenchmarkCost",
    "CaseRecord",
    "CostVector",
    "Regime",
    "check_belief",
    "decision_arrays",
    "default_catalog",
    "expected_loss",
    "expected_losses",
    "loss_loadings",
    "optimal_action",
    "optimal_actions",
    "realized_loss",
    "realized_losses",
    "total_benchmark_loss",
]


class Action(enum.IntEnum):
    """Diagnostic action. The integer value is the tie-breaking order."""

    POSITIVE = 0
    NEGATIVE = 1
    DEFER = 2

    @property
    def label(self) -> str:
        return _ACTION_LABELS[self]

    @classmethod
    def from_label(cls, label) -> "Action":
        if isinstance(label, Action):
            return label
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            return cls(int(label))
        try:
            return _LABEL_ACTIONS[str(label).strip().lower()]
        except KeyError:
            raise ParameterError(f"unknown action label {label!r}") from None


_ACTION_LABELS = {Action.POSITIVE: "yes", Action.NEGATIVE: "no", Action.DEFER: "defer"}
_LABEL_ACTIONS = {v: k for k, v in _ACTION_LABELS.items()}

N_ACTIONS = len(Action)


def check_belief(p, name="belief") -> float:
    """Return ``p`` as a float, raising if it is not a probability."""
    try:
        value = float(p)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a number, got {p!r}") from None
    if not (0.0 <= value <= 1.0):  # also rejects NaN
        raise ParameterError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def _check_state(state) -> int:
    if state not in (0, 1):
        raise ParameterError(f"state must be 0 or 1, got {state!r}")
    return int(state)


@dataclass(frozen=True)
class CostVector:
    """Nonnegative loss weights for false positives, false negatives and deferral."""

    c_fp: float
    c_fn: float
    c_defer: float

    def __post_init__(self):
        for name in ("c_fp", "c_fn", "c_defer"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ParameterError(f"{name} must be a number, got {value!r}") from None
            if not math.isfinite(value) or value < 0:
                raise ParameterError(f"{name} must be finite and nonnegative, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values) -> "CostVector":
        values = np.asarray(values, dtype=float).ravel()
        if values.shape != (3,):
            raise DimensionError(f"cost vector needs 3 components, got {values.shape}")
        return cls(*values.tolist())

    @classmethod
    def from_ratios(cls, fn_fp: float, defer_fp: float, c_fp: float = 1.0) -> "CostVector":
        return cls(c_fp, fn_fp * c_fp, defer_fp * c_fp)

    def as_array(self) -> np.ndarray:
        return np.array([self.c_fp, self.c_fn, self.c_defer])

    def scaled(self, factor: float) -> "CostVector":
        if not factor > 0:
            raise ParameterError(f"scale factor must be positive, got {factor!r}")
        return CostVector(self.c_fp * factor, self.c_fn * factor, self.c_defer * factor)

    def _require_fp(self):
        if self.c_fp <= 0:
            raise ParameterError("cost ratios are undefined when c_fp is 0")

    @property
    def fn_fp(self) -> float:
        self._require_fp()
        return self.c_fn / self.c_fp

    @property
    def defer_fp(self) -> float:
        self._require_fp()
        return self.c_defer / self.c_fp

    def ratios(self) -> dict:
        return {"fn_fp": self.fn_fp, "defer_fp": self.defer_fp}


@dataclass(frozen=True)
class BenchmarkCost:
    id: str
    cost: CostVector

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ParameterError("benchmark id must be a nonempty string")
        if not isinstance(self.cost, CostVector):
            object.__setattr__(self, "cost", CostVector(*self.cost))


_PLAIN_REGIMES = frozenset(
    {"baseline", "elicited_p", "true_p", "self_report_global", "self_report_case"}
)


@dataclass(frozen=True, order=True)
class Regime:
    """Prompting regime under which a decision was recorded.

    ``tag`` is one of ``baseline``, ``elicited_p``, ``true_p``, ``cost``,
    ``self_report_global`` or ``self_report_case``; cost-function prompts
    carry the id of the benchmark they supplied.
    """

    tag: str
    benchmark_id: Optional[str] = None

    def __post_init__(self):
        if self.tag == "cost":
            if not self.benchmark_id:
                raise ParameterError("cost-function regime needs a benchmark id")
        elif self.tag in _PLAIN_REGIMES:
            if self.benchmark_id is not None:
                raise ParameterError(f"regime {self.tag!r} takes no benchmark id")
        else:
            raise ParameterError(f"unknown regime {self.tag!r}")

    @property
    def key(self) -> str:
        return f"cost:{self.benchmark_id}" if self.tag == "cost" else self.tag

    @classmethod
    def parse(cls, key) -> "Regime":
        if isinstance(key, Regime):
            return key
        key = str(key)
        if key.startswith("cost:"):
            return cls("cost", key[len("cost:"):])
        return cls(key)

    def __str__(self):
        return self.key


BASELINE = Regime("baseline")
ELICITED_P = Regime("elicited_p")
TRUE_P = Regime("true_p")


@dataclass(frozen=True)
class CaseRecord:
    """One decision instance with its beliefs, outcome and recorded actions."""

    case_id: str
    domain: str
    p_elicited: float
    p_true: Optional[float] = None
    theta: Optional[int] = None
    actions: Mapping[Regime, Action] = field(default_factory=dict)
    self_report_global: Optional[CostVector] = None
    self_report_case: Optional[CostVector] = None
    belief_replicates: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "p_elicited", check_belief(self.p_elicited, "p_elicited"))
        if self.p_true is not None:
            object.__setattr__(self, "p_true", check_belief(self.p_true, "p_true"))
        if self.theta is not None:
            object.__setattr__(self, "theta", _check_state(self.theta))
        actions = {Regime.parse(k): Action.from_label(v) for k, v in dict(self.actions).items()}
        object.__setattr__(self, "actions", dict(sorted(actions.items())))
        if self.belief_replicates is not None:
            reps = tuple(check_belief(p, "belief_replicates") for p in self.belief_replicates)
            object.__setattr__(self, "belief_replicates", reps)

    def action(self, regime) -> Optional[Action]:
        return self.actions.get(Regime.parse(regime))

    def belief(self, source: str) -> Optional[float]:
        if source == "elicited":
            return self.p_elicited
        if source == "true":
            return self.p_true
        raise ParameterError(f"belief source must be 'elicited' or 'true', got {source!r}")


def realized_loss(cost: CostVector, action, state) -> float:
    action = Action.from_label(action)
    state = _check_state(state)
    if action is Action.DEFER:
        return cost.c_defer
    if action is Action.POSITIVE and state == 0:
        return cost.c_fp
    if action is Action.NEGATIVE and state == 1:
        return cost.c_fn
    return 0.0


def expected_loss(cost: CostVector, belief, action) -> float:
    p = check_belief(belief)
    action = Action.from_label(action)
    if action is Action.POSITIVE:
        return cost.c_fp * (1.0 - p)
    if action is Action.NEGATIVE:
        return cost.c_fn * p
    return cost.c_defer


def loss_loadings(beliefs) -> np.ndarray:
    """Per-action multiplier of each cost component, shape ``(n, 3)``.

    Expected losses are ``loadings * cost`` because each action's loss
    depends on exactly one cost component.
    """
    p = np.asarray(beliefs, dtype=float).reshape(-1)
    return np.column_stack([1.0 - p, p, np.ones_like(p)])


def expected_losses(cost, beliefs) -> np.ndarray:
    """Vectorized :func:`expected_loss` over all actions, shape ``(n, 3)``."""
    c = cost.as_array() if isinstance(cost, CostVector) else np.asarray(cost, dtype=float)
    return loss_loadings(beliefs) * c


def optimal_action(cost: CostVector, belief) -> Action:
    p = check_belief(belief)
    losses = [expected_loss(cost, p, a) for a in Action]
    # min() returns the first minimizer, i.e. the lowest Action value
    return Action(min(range(N_ACTIONS), key=losses.__getitem__))


def optimal_actions(cost, beliefs) -> np.ndarray:
    """Vectorized :func:`optimal_action`; returns integer action codes."""
    return np.argmin(expected_losses(cost, beliefs), axis=1)


def realized_losses(cost: CostVector, actions, states) -> np.ndarray:
    a = np.asarray([Action.from_label(x) for x in actions], dtype=int)
    s = np.asarray(states, dtype=int)
    if a.shape != s.shape:
        raise DimensionError(f"{a.size} actions but {s.size} states")
    if s.size and not np.isin(s, (0, 1)).all():
        raise ParameterError("states must be 0 or 1")
    out = np.zeros(a.shape, dtype=float)
    out[(a == Action.POSITIVE) & (s == 0)] = cost.c_fp
    out[(a == Action.NEGATIVE) & (s == 1)] = cost.c_fn
    out[a == Action.DEFER] = cost.c_defer
    return out


def total_benchmark_loss(benchmark, actions: Sequence, states: Sequence) -> float:
    """Sum of realized losses under a benchmark cost (``BenchmarkCost`` or ``CostVector``)."""
    cost = benchmark.cost if isinstance(benchmark, BenchmarkCost) else benchmark
    if len(actions) != len(states):
        raise DimensionError(f"{len(actions)} actions but {len(states)} states")
    if len(actions) == 0:
        raise EmptyDatasetError("cannot total the loss of an empty decision vector")
    return float(realized_losses(cost, actions, states).sum())


def decision_arrays(cases, regime, belief_source="elicited", require_theta=False):
    """Extract ``(beliefs, actions, thetas)`` arrays for one regime.

    Raises :class:`IncompleteRecordError` naming the first case that lacks
    the action, the requested belief or (if required) the outcome.
    """
    regime = Regime.parse(regime)
    beliefs, actions, thetas = [], [], []
    for case in cases:
        action = case.actions.get(regime)
        if action is None:
            raise IncompleteRecordError(
                f"case {case.case_id!r} has no action under regime {regime.key!r}",
                case_id=case.case_id, field=f"actions.{regime.key}",
            )
        p = case.belief(belief_source)
        if p is None:
            raise IncompleteRecordError(
                f"case {case.case_id!r} has no {belief_source} belief",
                case_id=case.case_id, field=f"p_{belief_source}",
            )
        if require_theta and case.theta is None:
            raise IncompleteRecordError(
                f"case {case.case_id!r} has no realized state (theta)",
                case_id=case.case_id, field="theta",
            )
        beliefs.append(p)
        actions.append(int(action))
        thetas.append(-1 if case.theta is None else case.theta)
    return np.array(beliefs, dtype=float), np.array(actions, dtype=np.intp), np.array(thetas, dtype=int)


DEFAULT_FN_FP = (0.5, 1.0, 2.0, 4.0, 8.0)
DEFAULT_DEFER_FP = (0.1, 0.3, 0.5)


def default_catalog():
    """Benchmark grid with ``c_fp = 1``, spanning FN/FP and Defer/FP ratios."""
    return [
        BenchmarkCost(f"fn{fn:g}_d{d:g}", CostVector.from_ratios(fn, d))
        for fn in DEFAULT_FN_FP
        for d in DEFAULT_DEFER_FP
    ]
