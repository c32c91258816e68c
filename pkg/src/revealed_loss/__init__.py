"""Revealed-preference estimation of diagnostic cost functions.

Fit the false-positive, false-negative and deferral costs that best explain
an agent's decisions given its stated beliefs, then score how consistently
and how steerably it acts on them.
"""

from .core import (
    Action,
    BenchmarkCost,
    CaseRecord,
    CostVector,
    Regime,
    decision_arrays,
    default_catalog,
    expected_loss,
    optimal_action,
    optimal_actions,
    realized_loss,
    total_benchmark_loss,
)
from .estimator import (
    FitOptions,
    FitResult,
    ImpliedLossEstimator,
    RatioInterval,
    bootstrap_ratios,
    choice_probabilities,
    fit_mle,
    log_likelihood,
    log_likelihood_gradient,
)
from .exceptions import RevealedLossError
from .io import DatasetFile, load_catalog, load_dataset, write_catalog, write_dataset
from .metrics import (
    CounterfactualReport,
    SteeringClass,
    classify_steering,
    counterfactual_reduction,
    ilfc,
    pearson_r,
    realized_reduction,
    rmsd,
    self_report_ilfc,
    steering_progress,
)
from .parsing import parse_decision_response, parse_probability_response, parse_self_report
from .report import AnalysisConfig, ReportBundle, emit_report, run_analysis
from .simulator import (
    AgentSpec,
    BeliefDistribution,
    SensitivitySpec,
    StudySpec,
    average_beliefs,
    noise_sensitivity,
    perturb_beliefs,
    simulate_dataset,
    simulate_study,
)

__version__ = "0.1.0"
