"""Synthetic rational agents and belief-noise sensitivity procedures.

A simulated agent draws a belief per case, experiences the true state with
that probability, and picks an action from the logit choice model. Fitting
the estimator on such data must recover the generating cost ratios, which
makes the simulator the ground-truth oracle for the rest of the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_beliefs, check_dataset
from .core import (
    BASELINE,
    N_ACTIONS,
    Action,
    BenchmarkCost,
    CaseRecord,
    CostVector,
    Regime,
    check_belief,
    default_catalog,
    loss_loadings,
)
from .estimator import RATIO_NAMES, FitOptions, choice_probabilities, fit_mle
from .exceptions import IncompleteRecordError, ParameterError

__all__ = [
    "AgentSpec",
    "BeliefDistribution",
    "SensitivityRow",
    "SensitivitySpec",
    "StudySpec",
    "average_beliefs",
    "noise_sensitivity",
    "perturb_beliefs",
    "sample_actions",
    "simulate_arrays",
    "simulate_dataset",
    "simulate_study",
]

DEFAULT_NOISE_SDS = (0.0, 0.01, 0.02, 0.05, 0.10, 0.20)


@dataclass(frozen=True)
class BeliefDistribution:
    """Where simulated beliefs come from.

    ``kind`` is ``"uniform"`` on [0, 1], ``"beta"`` with shape ``(a, b)``,
    or ``"grid"``, which cycles through ``grid`` deterministically.
    """

    kind: str = "uniform"
    a: float = 1.0
    b: float = 1.0
    grid: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "beta":
            if not (self.a > 0 and self.b > 0):
                raise ParameterError(f"beta shape parameters must be positive, got ({self.a}, {self.b})")
        elif self.kind == "grid":
            if len(self.grid) == 0:
                raise ParameterError("grid distribution needs at least one value")
            object.__setattr__(self, "grid", tuple(check_belief(p, "grid value") for p in self.grid))
        elif self.kind != "uniform":
            raise ParameterError(f"unknown belief distribution {self.kind!r}")

    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def beta(cls, a, b):
        return cls("beta", a=float(a), b=float(b))

    @classmethod
    def fixed_grid(cls, values):
        return cls("grid", grid=tuple(values))

    def sample(self, rng, n):
        if self.kind == "uniform":
            return rng.random(n)
        if self.kind == "beta":
            return rng.beta(self.a, self.b, size=n)
        return np.resize(np.asarray(self.grid, dtype=float), n)

    def to_dict(self):
        if self.kind == "uniform":
            return {"kind": "uniform"}
        if self.kind == "beta":
            return {"kind": "beta", "a": self.a, "b": self.b}
        return {"kind": "grid", "grid": list(self.grid)}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        kind = data.pop("kind", "uniform")
        if kind == "grid":
            return cls.fixed_grid(data.get("grid", ()))
        if kind == "beta":
            return cls.beta(data.get("a", 1.0), data.get("b", 1.0))
        return cls(kind)


@dataclass(frozen=True)
class AgentSpec:
    cost: CostVector
    beta: float = 1.0
    beliefs: BeliefDistribution = field(default_factory=BeliefDistribution)
    n_cases: int = 1000
    seed: int = 0
    domain: str = "synthetic"
    method: str = "softmax"

    def __post_init__(self):
        if not isinstance(self.cost, CostVector):
            object.__setattr__(self, "cost", CostVector.from_array(self.cost))
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ParameterError(f"beta must be positive, got {self.beta!r}")
        if int(self.n_cases) < 1:
            raise ParameterError(f"n_cases must be at least 1, got {self.n_cases!r}")
        if self.method not in ("softmax", "gumbel"):
            raise ParameterError(f"method must be 'softmax' or 'gumbel', got {self.method!r}")


def sample_actions(cost, beliefs, beta, rng, method="softmax"):
    """Draw one logit-model action per belief.

    ``"softmax"`` inverts the choice-probability CDF; ``"gumbel"`` adds
    Gumbel(0, beta) shocks to negated expected losses and takes the argmax.
    The two are equal in distribution.
    """
    p = check_beliefs(beliefs)
    if method == "gumbel":
        c = cost.as_array() if isinstance(cost, CostVector) else np.asarray(cost, dtype=float)
        utility = -loss_loadings(p) * c + rng.gumbel(scale=beta, size=(p.size, N_ACTIONS))
        return np.argmax(utility, axis=1)
    probs = choice_probabilities(cost, p, beta)
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(p.size)
    # guard against cdf[-1] rounding below u
    return np.minimum((u[:, None] >= cdf).sum(axis=1), N_ACTIONS - 1)


def simulate_arrays(spec: AgentSpec):
    """``(beliefs, thetas, actions)`` arrays for a synthetic agent."""
    rng = np.random.default_rng(spec.seed)
    n = int(spec.n_cases)
    p = spec.beliefs.sample(rng, n)
    theta = (rng.random(n) < p).astype(int)
    actions = sample_actions(spec.cost, p, spec.beta, rng, spec.method)
    return p, theta, actions


def simulate_dataset(spec: AgentSpec, regime=BASELINE) -> List[CaseRecord]:
    """Case records with ``p_elicited == p_true`` and one recorded regime."""
    regime = Regime.parse(regime)
    p, theta, actions = simulate_arrays(spec)
    width = len(str(len(p)))
    return [
        CaseRecord(
            case_id=f"{spec.domain}-{i:0{width}d}",
            domain=spec.domain,
            p_elicited=float(p[i]),
            p_true=float(p[i]),
            theta=int(theta[i]),
            actions={regime: Action(int(actions[i]))},
        )
        for i in range(len(p))
    ]


def perturb_beliefs(beliefs, sd: float, seed) -> np.ndarray:
    """Add independent N(0, sd^2) noise to each belief and clip to [0, 1]."""
    if not sd >= 0:
        raise ParameterError(f"noise sd must be nonnegative, got {sd!r}")
    p = check_beliefs(beliefs, allow_empty=True)
    if sd == 0:
        return p.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.clip(p + rng.normal(0.0, sd, size=p.size), 0.0, 1.0)


def average_beliefs(replicates: Sequence[float], k: int = 5) -> float:
    """Mean of the first ``k`` elicited belief replicates."""
    if int(k) < 1:
        raise ParameterError(f"k must be at least 1, got {k!r}")
    if replicates is None or len(replicates) < k:
        have = 0 if replicates is None else len(replicates)
        raise IncompleteRecordError(f"need {k} belief replicates, have {have}", field="belief_replicates")
    return float(np.mean([check_belief(p) for p in list(replicates)[:k]]))


@dataclass(frozen=True)
class SensitivitySpec:
    noise_sds: Tuple[float, ...] = DEFAULT_NOISE_SDS
    n_repetitions: int = 20
    seed: int = 0
    n_band_resamples: int = 1000

    def __post_init__(self):
        sds = tuple(float(s) for s in self.noise_sds)
        if any(s < 0 for s in sds):
            raise ParameterError("noise sds must be nonnegative")
        if list(sds) != sorted(sds):
            raise ParameterError("noise sds must be sorted ascending")
        if 0.0 not in sds:
            raise ParameterError("noise sds must include 0 as a control point")
        object.__setattr__(self, "noise_sds", sds)
        if int(self.n_repetitions) < 1:
            raise ParameterError("n_repetitions must be at least 1")


@dataclass(frozen=True)
class SensitivityRow:
    """Median absolute percent change of each ratio at one noise level."""

    sd: float
    n_repetitions: int
    fn_fp_median: float
    fn_fp_lower: float
    fn_fp_upper: float
    defer_fp_median: float
    defer_fp_lower: float
    defer_fp_upper: float
    baseline_at_boundary: bool
    n_boundary_refits: int

    def to_dict(self):
        return dict(self.__dict__)


_PERTURB_STREAM, _BAND_STREAM = 0, 1


def _perturbed_ratios(p, a, sd, options, seed, i, r):
    rng = np.random.default_rng([seed, _PERTURB_STREAM, i, r])
    fit = fit_mle(perturb_beliefs(p, sd, rng), a, options)
    return fit.fn_fp, fit.defer_fp, fit.at_boundary


def _median_band(values, rng, n_resamples):
    if n_resamples < 1 or values.size < 2:
        med = float(np.median(values))
        return med, med
    draws = rng.choice(values, size=(n_resamples, values.size), replace=True)
    lo, hi = np.percentile(np.median(draws, axis=1), [2.5, 97.5])
    return float(lo), float(hi)


def noise_sensitivity(
    beliefs,
    actions,
    spec: Optional[SensitivitySpec] = None,
    options: Optional[FitOptions] = None,
    n_jobs: Optional[int] = None,
) -> List[SensitivityRow]:
    """Refit after Gaussian belief perturbation at each noise level.

    For every ``(sd, repetition)`` the beliefs are perturbed with a stream
    seeded by ``(seed, sd index, repetition)``, the model is refit, and the
    absolute percent change of each ratio against the unperturbed fit is
    recorded. Rows report the median over repetitions with a percentile
    bootstrap band for that median.
    """
    spec = spec or SensitivitySpec()
    options = options or FitOptions()
    p, a, _ = check_dataset(beliefs, actions)
    base = fit_mle(p, a, options)
    base_ratios = np.array([base.fn_fp, base.defer_fp])

    tasks = [(i, r) for i in range(len(spec.noise_sds)) for r in range(int(spec.n_repetitions))]
    if n_jobs in (None, 1):
        out = [_perturbed_ratios(p, a, spec.noise_sds[i], options, spec.seed, i, r) for i, r in tasks]
    else:
        out = Parallel(n_jobs=n_jobs)(
            delayed(_perturbed_ratios)(p, a, spec.noise_sds[i], options, spec.seed, i, r)
            for i, r in tasks
        )
    out = np.asarray(out, dtype=float).reshape(len(spec.noise_sds), int(spec.n_repetitions), 3)

    rows = []
    for i, sd in enumerate(spec.noise_sds):
        change = np.abs(out[i, :, :2] - base_ratios) / base_ratios * 100.0
        band_rng = np.random.default_rng([spec.seed, _BAND_STREAM, i])
        stats = {}
        for k, name in enumerate(RATIO_NAMES):
            lo, hi = _median_band(change[:, k], band_rng, int(spec.n_band_resamples))
            stats[name] = (float(np.median(change[:, k])), lo, hi)
        rows.append(SensitivityRow(
            sd=float(sd),
            n_repetitions=int(spec.n_repetitions),
            fn_fp_median=stats["fn_fp"][0],
            fn_fp_lower=stats["fn_fp"][1],
            fn_fp_upper=stats["fn_fp"][2],
            defer_fp_median=stats["defer_fp"][0],
            defer_fp_lower=stats["defer_fp"][1],
            defer_fp_upper=stats["defer_fp"][2],
            baseline_at_boundary=base.at_boundary,
            n_boundary_refits=int(out[i, :, 2].sum()),
        ))
    return rows


@dataclass(frozen=True)
class StudySpec:
    """Multi-regime synthetic study mirroring a full elicitation log.

    The agent acts on ``baseline_cost`` with its elicited beliefs, on
    ``probability_cost`` whenever a probability is supplied in the prompt,
    and under a cost-function prompt moves its ratios a fraction
    ``steering_strength`` of the way (in log space) towards the benchmark.
    Elicited beliefs are the true posterior plus clipped Gaussian noise.
    """

    baseline_cost: CostVector = CostVector(1.0, 3.0, 0.4)
    probability_cost: CostVector = CostVector(1.0, 2.0, 0.7)
    benchmarks: Tuple[BenchmarkCost, ...] = ()
    steering_strength: float = 0.7
    belief_noise_sd: float = 0.08
    beliefs: BeliefDistribution = BeliefDistribution.beta(1.5, 1.5)
    domains: Tuple[str, ...] = ("cardiac", "diabetes")
    n_cases_per_domain: int = 300
    beta: float = 0.5
    n_replicates: int = 5
    self_report_inflation: float = 3.0
    seed: int = 0

    def catalog(self):
        if self.benchmarks:
            return list(self.benchmarks)
        grid = {b.id: b for b in default_catalog()}
        return [grid[k] for k in ("fn0.5_d0.1", "fn2_d0.3", "fn8_d0.5", "fn4_d0.1")]


def _steered_cost(base: CostVector, target: CostVector, strength: float) -> CostVector:
    fn = base.fn_fp ** (1 - strength) * target.fn_fp ** strength
    d = base.defer_fp ** (1 - strength) * target.defer_fp ** strength
    return CostVector.from_ratios(fn, d)


def simulate_study(spec: StudySpec):
    """Return ``(records, catalog)`` for a synthetic multi-regime study."""
    rng = np.random.default_rng(spec.seed)
    catalog = spec.catalog()
    records = []
    for domain in spec.domains:
        n = int(spec.n_cases_per_domain)
        p_true = spec.beliefs.sample(rng, n)
        theta = (rng.random(n) < p_true).astype(int)
        p_elicited = np.clip(p_true + rng.normal(0, spec.belief_noise_sd, n), 0, 1)
        replicates = np.clip(
            p_true[:, None] + rng.normal(0, spec.belief_noise_sd, (n, spec.n_replicates)), 0, 1
        )
        acts = {
            BASELINE: sample_actions(spec.baseline_cost, p_elicited, spec.beta, rng),
            Regime("elicited_p"): sample_actions(spec.probability_cost, p_elicited, spec.beta, rng),
            Regime("true_p"): sample_actions(spec.probability_cost, p_true, spec.beta, rng),
        }
        for bench in catalog:
            steered = _steered_cost(spec.baseline_cost, bench.cost, spec.steering_strength)
            acts[Regime("cost", bench.id)] = sample_actions(steered, p_elicited, spec.beta, rng)

        base = spec.baseline_cost
        global_report = CostVector(
            base.c_fp,
            round(base.c_fn * spec.self_report_inflation, 6),
            round(base.c_defer * spec.self_report_inflation, 6),
        )
        case_jitter = np.exp(rng.normal(0, 0.3, (n, 2)))
        for i in range(n):
            records.append(CaseRecord(
                case_id=f"{domain}-{i:04d}",
                domain=domain,
                p_elicited=round(float(p_elicited[i]), 2),
                p_true=round(float(p_true[i]), 4),
                theta=int(theta[i]),
                actions={k: Action(int(v[i])) for k, v in acts.items()},
                self_report_global=global_report,
                self_report_case=CostVector(
                    global_report.c_fp,
                    round(global_report.c_fn * case_jitter[i, 0], 2),
                    round(global_report.c_defer * case_jitter[i, 1], 2),
                ),
                belief_replicates=tuple(round(float(x), 2) for x in replicates[i]),
            ))
    return records, catalog
