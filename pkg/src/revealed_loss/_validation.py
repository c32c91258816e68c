"""Input checks shared by the functional API and the estimator class."""

import numpy as np

from .core import Action
from .exceptions import DimensionError, EmptyDatasetError, ParameterError


def check_beliefs(X, allow_empty=False):
    """Coerce beliefs to a 1-D float array in [0, 1].

    Accepts a sequence of probabilities or a single-column 2-D array, the
    latter so the estimator slots into sklearn pipelines.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise DimensionError(f"beliefs must have exactly one column, got {arr.shape[1]}")
        arr = arr[:, 0]
    elif arr.ndim != 1:
        raise DimensionError(f"beliefs must be 1-D or a single column, got ndim={arr.ndim}")
    if arr.size == 0 and not allow_empty:
        raise EmptyDatasetError("no beliefs supplied")
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise ParameterError("beliefs must be finite probabilities in [0, 1]")
    return arr


def check_actions(y):
    """Coerce actions (enum members, labels or integer codes) to int codes."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.dtype.kind in "iu":
        if arr.size and (arr.min() < 0 or arr.max() >= len(Action)):
            raise ParameterError("integer action codes must be 0, 1 or 2")
        return arr.astype(np.intp)
    return np.fromiter((Action.from_label(a) for a in arr), dtype=np.intp, count=arr.size)


def check_dataset(beliefs, actions, weights=None):
    p = check_beliefs(beliefs)
    a = check_actions(actions)
    if p.shape != a.shape:
        raise DimensionError(f"{p.size} beliefs but {a.size} actions")
    if weights is None:
        return p, a, None
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape != p.shape:
        raise DimensionError(f"{w.size} weights for {p.size} records")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ParameterError("weights must be finite and nonnegative")
    return p, a, w


def check_beta(beta):
    beta = float(beta)
    if not beta > 0 or not np.isfinite(beta):
        raise ParameterError(f"beta must be positive and finite, got {beta!r}")
    return beta
