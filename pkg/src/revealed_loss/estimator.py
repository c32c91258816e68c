"""Multinomial-logit likelihood and maximum-likelihood recovery of costs.

The agent is modeled as choosing action ``a`` with probability proportional
to ``exp(-expected_loss(a) / beta)``. Expected losses are linear in the cost
components, so the log-likelihood is concave in the cost vector and can be
maximized reliably with a bound-constrained quasi-Newton method.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_actions, check_beliefs, check_beta, check_dataset
from .core import N_ACTIONS, CostVector, loss_loadings, optimal_actions
from .exceptions import EmptyDatasetError, NumericError, ParameterError

__all__ = [
    "FitOptions",
    "FitResult",
    "ImpliedLossEstimator",
    "RatioInterval",
    "bootstrap_ratios",
    "choice_probabilities",
    "fit_mle",
    "log_likelihood",
    "log_likelihood_gradient",
]

COMPONENTS = ("c_fp", "c_fn", "c_defer")
RATIO_NAMES = ("fn_fp", "defer_fp")
BOUND_RTOL = 1e-6


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-8
    lower_bound: float = 1e-6
    upper_bound: float = 1e4
    initial_cost: CostVector = field(default_factory=lambda: CostVector(1.0, 1.0, 1.0))
    beta: float = 1.0

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ParameterError("max_iterations must be at least 1")
        if not self.gradient_tolerance > 0:
            raise ParameterError("gradient_tolerance must be positive")
        if not (0 <= self.lower_bound < self.upper_bound) or not np.isfinite(self.upper_bound):
            raise ParameterError(
                f"need 0 <= lower_bound < upper_bound < inf, got "
                f"[{self.lower_bound}, {self.upper_bound}]"
            )
        if not isinstance(self.initial_cost, CostVector):
            object.__setattr__(self, "initial_cost", CostVector.from_array(self.initial_cost))
        x0 = self.initial_cost.as_array()
        if np.any(x0 < self.lower_bound) or np.any(x0 > self.upper_bound):
            raise ParameterError("initial_cost must lie within the bounds")
        check_beta(self.beta)

    def with_initial(self, cost: CostVector) -> "FitOptions":
        x0 = np.clip(cost.as_array(), self.lower_bound, self.upper_bound)
        return FitOptions(
            self.max_iterations, self.gradient_tolerance, self.lower_bound,
            self.upper_bound, CostVector.from_array(x0), self.beta,
        )


@dataclass(frozen=True)
class FitResult:
    """Outcome of :func:`fit_mle`.

    ``boundary_flags`` holds one entry per cost component: ``"lower"`` or
    ``"upper"`` when the estimate sits within one part in 10^6 of that
    bound, otherwise ``None``.
    """

    cost: CostVector
    log_likelihood: float
    converged: bool
    iterations: int
    boundary_flags: Tuple[Optional[str], Optional[str], Optional[str]]
    gradient_norm: float
    n_records: float
    n_distinct_actions: int

    @property
    def at_boundary(self) -> bool:
        return any(flag is not None for flag in self.boundary_flags)

    @property
    def degenerate(self) -> bool:
        return self.n_distinct_actions < 2

    @property
    def fn_fp(self) -> float:
        return self.cost.fn_fp

    @property
    def defer_fp(self) -> float:
        return self.cost.defer_fp

    def to_dict(self) -> dict:
        return {
            "c_fp": self.cost.c_fp,
            "c_fn": self.cost.c_fn,
            "c_defer": self.cost.c_defer,
            "fn_fp": self.fn_fp,
            "defer_fp": self.defer_fp,
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "iterations": self.iterations,
            "boundary_flags": dict(zip(COMPONENTS, self.boundary_flags)),
            "gradient_norm": self.gradient_norm,
            "n_records": self.n_records,
            "n_distinct_actions": self.n_distinct_actions,
        }


@dataclass(frozen=True)
class RatioInterval:
    """Percentile bootstrap interval for one cost ratio."""

    ratio_name: str
    point: float
    lower_95: float
    upper_95: float
    n_resamples: int
    seed: int
    n_boundary: int = 0

    def contains(self, value: float) -> bool:
        return self.lower_95 <= value <= self.upper_95

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio_name,
            "point": self.point,
            "lower_95": self.lower_95,
            "upper_95": self.upper_95,
            "n_resamples": self.n_resamples,
            "seed": self.seed,
            "n_boundary": self.n_boundary,
        }


def _cost_array(cost) -> np.ndarray:
    return cost.as_array() if isinstance(cost, CostVector) else np.asarray(cost, dtype=float)


def choice_probabilities(cost, belief, beta: float = 1.0) -> np.ndarray:
    """Logit choice probabilities over (positive, negative, defer).

    Returns shape ``(3,)`` for a scalar belief and ``(n, 3)`` for an array.
    """
    beta = check_beta(beta)
    scalar = np.ndim(belief) == 0
    p = check_beliefs(np.atleast_1d(belief))
    losses = loss_loadings(p) * _cost_array(cost)
    # shift by the smallest expected loss so the largest exponent is exp(0)
    z = np.exp(-(losses - losses.min(axis=1, keepdims=True)) / beta)
    probs = z / z.sum(axis=1, keepdims=True)
    return probs[0] if scalar else probs


def _objective(c, loadings, actions, weights, beta):
    """Log-likelihood and its gradient for prevalidated arrays."""
    util = -loadings * c / beta
    shift = util.max(axis=1)
    z = np.exp(util - shift[:, None])
    denom = z.sum(axis=1)
    rows = np.arange(actions.size)
    ll_i = util[rows, actions] - shift - np.log(denom)
    # d ll_i / d c_j = (P_ij - [a_i == j]) * L_ij / beta
    resid = z / denom[:, None]
    resid[rows, actions] -= 1.0
    resid *= loadings / beta
    if weights is None:
        return ll_i.sum(), resid.sum(axis=0)
    return weights @ ll_i, weights @ resid


def _hessian(c, loadings, actions, weights, beta):
    util = -loadings * c / beta
    z = np.exp(util - util.max(axis=1, keepdims=True))
    probs = z / z.sum(axis=1, keepdims=True)
    g = probs * loadings / beta
    w = np.ones(actions.size) if weights is None else weights
    # d^2 LL / dc_j dc_k = -sum_i w_i (g_ij * L_ij / beta * [j == k] - g_ij g_ik)
    diag = (w[:, None] * g * loadings / beta).sum(axis=0)
    return -(np.diag(diag) - (g * w[:, None]).T @ g)


def log_likelihood(cost, beliefs, actions, beta: float = 1.0, weights=None) -> float:
    """Sum of log choice probabilities of the observed actions."""
    p, a, w = check_dataset(beliefs, actions, weights)
    ll, _ = _objective(_cost_array(cost), loss_loadings(p), a, w, check_beta(beta))
    return float(ll)


def log_likelihood_gradient(cost, beliefs, actions, beta: float = 1.0, weights=None) -> np.ndarray:
    """Exact gradient of :func:`log_likelihood` w.r.t. ``(c_fp, c_fn, c_defer)``."""
    p, a, w = check_dataset(beliefs, actions, weights)
    _, grad = _objective(_cost_array(cost), loss_loadings(p), a, w, check_beta(beta))
    return np.asarray(grad, dtype=float)


def _collapse(p, a, w):
    """Merge duplicate (belief, action) records into weighted unique rows.

    The likelihood depends only on the multiset of records, so this makes
    fits independent of record order and cheap for bootstrap resamples.
    """
    if w is None:
        w = np.ones(p.size)
    keep = w > 0
    keys = np.column_stack([p[keep], a[keep].astype(float)])
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    counts = np.bincount(inverse.reshape(-1), weights=w[keep], minlength=len(uniq))
    return uniq[:, 0], uniq[:, 1].astype(np.intp), counts


def _bound_flags(c, lo, hi):
    flags = []
    for value in c:
        if value <= lo + BOUND_RTOL * max(lo, np.finfo(float).tiny):
            flags.append("lower")
        elif value >= hi - BOUND_RTOL * hi:
            flags.append("upper")
        else:
            flags.append(None)
    return tuple(flags)


def _projected_gradient(grad, flags):
    """Zero out components pinned at a bound by an outward-pointing gradient."""
    pg = np.array(grad, dtype=float)
    for j, flag in enumerate(flags):
        if (flag == "lower" and pg[j] <= 0) or (flag == "upper" and pg[j] >= 0):
            pg[j] = 0.0
    return pg


def _newton_polish(c, loadings, actions, weights, beta, opts, max_steps=25):
    """Projected Newton refinement on the free coordinates.

    L-BFGS-B can stall a hair above a tight gradient tolerance; with only
    three parameters an exact Newton step is cheap and finishes the job.
    """
    lo, hi = opts.lower_bound, opts.upper_bound
    steps = 0
    ll, grad = _objective(c, loadings, actions, weights, beta)
    for _ in range(max_steps):
        pg = _projected_gradient(grad, _bound_flags(c, lo, hi))
        if np.abs(pg).max() <= opts.gradient_tolerance:
            break
        free = pg != 0
        hess = _hessian(c, loadings, actions, weights, beta)[np.ix_(free, free)]
        try:
            direction = np.linalg.solve(-hess, pg[free])
        except np.linalg.LinAlgError:
            break
        t = 1.0
        while t > 1e-10:
            trial = c.copy()
            trial[free] = np.clip(c[free] + t * direction, lo, hi)
            trial_ll, trial_grad = _objective(trial, loadings, actions, weights, beta)
            # near the optimum likelihood gains drop below rounding noise
            slack = 64 * np.finfo(float).eps * max(abs(ll), 1.0)
            if np.isfinite(trial_ll) and trial_ll >= ll - slack:
                break
            t *= 0.5
        else:
            break
        steps += 1
        if np.array_equal(trial, c):
            break
        c, ll, grad = trial, trial_ll, trial_grad
    return c, ll, grad, steps


def _corner_cost(a_single, lo, hi):
    """Box maximizer for data in which every record took the same action.

    The log-likelihood is then monotone in every component: the chosen
    action's cost wants the lower bound and the alternatives' the upper.
    """
    c = np.full(N_ACTIONS, hi)
    c[a_single] = lo
    return c


def fit_mle(beliefs, actions, options: Optional[FitOptions] = None, weights=None) -> FitResult:
    """Maximum-likelihood cost vector under box bounds via L-BFGS-B."""
    opts = options or FitOptions()
    p, a, w = check_dataset(beliefs, actions, weights)
    p, a, w = _collapse(p, a, w)
    if w.size == 0 or w.sum() <= 0:
        raise EmptyDatasetError("cannot fit an empty dataset")
    beta = check_beta(opts.beta)
    loadings = loss_loadings(p)
    lo, hi = opts.lower_bound, opts.upper_bound

    state = {"iterate": None, "evals": 0}

    def negll(c):
        state["evals"] += 1
        ll, grad = _objective(c, loadings, a, w, beta)
        if not np.isfinite(ll) or not np.all(np.isfinite(grad)):
            raise NumericError(
                "non-finite log-likelihood during optimization",
                context={"iterate": c.tolist(), "evaluation": state["evals"]},
            )
        return -ll, -grad

    res = minimize(
        negll,
        opts.initial_cost.as_array(),
        jac=True,
        method="L-BFGS-B",
        bounds=[(lo, hi)] * N_ACTIONS,
        options={
            "maxiter": int(opts.max_iterations),
            "gtol": opts.gradient_tolerance,
            "ftol": 1e-15,
        },
    )
    c = np.clip(res.x, lo, hi)
    c, ll, grad, polish_steps = _newton_polish(c, loadings, a, w, beta, opts)

    distinct = np.unique(a)
    if distinct.size == 1:
        corner = _corner_cost(int(distinct[0]), lo, hi)
        corner_ll, corner_grad = _objective(corner, loadings, a, w, beta)
        if corner_ll >= ll:
            c, ll, grad = corner, corner_ll, corner_grad

    flags = _bound_flags(c, lo, hi)
    pg_norm = float(np.abs(_projected_gradient(grad, flags)).max())
    return FitResult(
        cost=CostVector.from_array(c),
        log_likelihood=float(ll),
        converged=pg_norm <= opts.gradient_tolerance,
        iterations=int(res.nit) + polish_steps,
        boundary_flags=flags,
        gradient_norm=pg_norm,
        n_records=float(w.sum()),
        n_distinct_actions=int(distinct.size),
    )


def _resample_fit(p, a, opts, seed, index):
    rng = np.random.default_rng([seed, index])
    counts = np.bincount(rng.integers(0, p.size, size=p.size), minlength=p.size)
    fit = fit_mle(p, a, opts, weights=counts)
    return fit.fn_fp, fit.defer_fp, fit.at_boundary


def bootstrap_ratios(
    beliefs,
    actions,
    options: Optional[FitOptions] = None,
    n_resamples: int = 1000,
    seed: int = 0,
    n_jobs: Optional[int] = None,
    point: Optional[FitResult] = None,
) -> Tuple[RatioInterval, RatioInterval]:
    """Case-resampling percentile intervals for ``fn_fp`` and ``defer_fp``.

    Resample ``i`` draws from ``default_rng([seed, i])``, so results do not
    depend on ``n_jobs``. Each refit starts from the full-data estimate.
    Resamples whose fit lands on a bound are kept and counted.
    """
    if int(n_resamples) < 1:
        raise ParameterError(f"n_resamples must be at least 1, got {n_resamples}")
    opts = options or FitOptions()
    p, a, _ = check_dataset(beliefs, actions)
    if point is None:
        point = fit_mle(p, a, opts)
    warm = opts.with_initial(point.cost)
    indices = range(int(n_resamples))
    if n_jobs in (None, 1):
        draws = [_resample_fit(p, a, warm, int(seed), i) for i in indices]
    else:
        draws = Parallel(n_jobs=n_jobs)(
            delayed(_resample_fit)(p, a, warm, int(seed), i) for i in indices
        )
    draws = np.asarray(draws, dtype=float)
    n_boundary = int(draws[:, 2].sum())
    out = []
    for k, name in enumerate(RATIO_NAMES):
        lower, upper = np.percentile(draws[:, k], [2.5, 97.5])
        out.append(RatioInterval(
            ratio_name=name,
            point=getattr(point, name),
            lower_95=float(lower),
            upper_95=float(upper),
            n_resamples=int(n_resamples),
            seed=int(seed),
            n_boundary=n_boundary,
        ))
    return out[0], out[1]


class ImpliedLossEstimator(ClassifierMixin, BaseEstimator):
    """Recover the cost vector that best rationalizes observed decisions.

    ``X`` holds the agent's belief that the condition is present (a 1-D
    array or single column) and ``y`` the chosen actions, given as
    :class:`~revealed_loss.core.Action` members, integer codes or the labels
    ``"yes"``, ``"no"``, ``"defer"``.

    After fitting, ``predict`` returns the expected-loss-minimizing action
    under ``cost_`` and ``score`` is the implied loss-function consistency
    as a fraction. Setting ``n_resamples > 0`` also stores bootstrap
    intervals in ``intervals_``.
    """

    def __init__(
        self,
        beta=1.0,
        lower_bound=1e-6,
        upper_bound=1e4,
        initial_cost=(1.0, 1.0, 1.0),
        max_iter=500,
        tol=1e-8,
        n_resamples=0,
        random_state=0,
        n_jobs=None,
    ):
        self.beta = beta
        self.lower_bound = lower_bound
        self.upper_bound = upper_bound
        self.initial_cost = initial_cost
        self.max_iter = max_iter
        self.tol = tol
        self.n_resamples = n_resamples
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _options(self):
        return FitOptions(
            max_iterations=self.max_iter,
            gradient_tolerance=self.tol,
            lower_bound=self.lower_bound,
            upper_bound=self.upper_bound,
            initial_cost=CostVector.from_array(self.initial_cost),
            beta=self.beta,
        )

    def fit(self, X, y, sample_weight=None):
        p, a, w = check_dataset(X, y, sample_weight)
        opts = self._options()
        self.fit_result_ = fit_mle(p, a, opts, weights=w)
        self.cost_ = self.fit_result_.cost
        self.classes_ = np.arange(N_ACTIONS)
        self.n_features_in_ = 1
        if self.n_resamples:
            if w is not None:
                raise ParameterError("bootstrap intervals do not support sample_weight")
            self.intervals_ = dict(zip(RATIO_NAMES, bootstrap_ratios(
                p, a, opts, self.n_resamples, self.random_state or 0, self.n_jobs,
                point=self.fit_result_,
            )))
        return self

    @property
    def ratios_(self):
        check_is_fitted(self, "cost_")
        return self.cost_.ratios()

    def predict_proba(self, X):
        check_is_fitted(self, "cost_")
        return choice_probabilities(self.cost_, check_beliefs(X), self.beta)

    def predict_log_proba(self, X):
        return np.log(self.predict_proba(X))

    def predict(self, X):
        check_is_fitted(self, "cost_")
        return optimal_actions(self.cost_, check_beliefs(X))

    def score(self, X, y, sample_weight=None):
        pred = self.predict(X)
        truth = check_actions(y)
        hits = (pred == truth).astype(float)
        return float(np.average(hits, weights=sample_weight))

    def log_likelihood(self, X, y):
        check_is_fitted(self, "cost_")
        return log_likelihood(self.cost_, X, y, self.beta)
