"""Importance weights from fitted ratios, and weighted least squares.

Synthetic records drawn from a misspecified generator can be treated as a
biased sample from the observed distribution; weighting each record by its
estimated density ratio corrects downstream analyses toward what the
observed data would give.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, as_vector
from .errors import InputError, RankDeficientError, UninformativeFitError


@dataclass(frozen=True)
class WeightVector:
    """Non-negative per-record importance weights; mean one when normalized."""

    weights: np.ndarray
    normalized: bool


@dataclass(frozen=True)
class RegressionResult:
    """Solution of the (weighted) normal equations."""

    names: tuple
    coefficients: np.ndarray
    residual_variance: float
    weighted: bool


def importance_weights(fit, synthetic, normalize=True):
    """Truncated predicted ratios at the synthetic rows, as weights.

    Negative predictions are clamped to zero; with ``normalize`` the weights
    are rescaled to mean one (harmless for weighted least squares, which is
    scale invariant).  All-zero weights raise, since they carry no
    information.
    """
    values = fit.predict(synthetic, truncate=True)
    if not values.any():
        raise UninformativeFitError("all importance weights truncated to zero")
    if normalize:
        values = values / values.mean()
    return WeightVector(weights=values, normalized=bool(normalize))


def weighted_least_squares(X, y, w, names=None):
    """Minimize the weighted sum of squared residuals.

    Parameters
    ----------
    X : ndarray of shape (n, p)
        Design matrix, intercept column included by the caller.
    y : ndarray of shape (n,)
    w : WeightVector or ndarray of shape (n,)
        Non-negative weights; unit weights reduce to ordinary least squares.
    names : sequence of str, optional
        Coefficient names for reporting.

    Notes
    -----
    Solved through the weighted normal equations.  The residual variance is
    the weighted residual sum of squares over ``n - p``.
    """
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    weights = w.weights if isinstance(w, WeightVector) else as_vector(w, "w")
    n, p = X.shape
    if y.size != n or weights.size != n:
        raise InputError("X, y and w must have matching row counts")
    if weights.min() < 0:
        raise InputError("weights must be non-negative")
    Xw = X * np.sqrt(weights)[:, None]
    if np.linalg.matrix_rank(Xw) < p:
        raise RankDeficientError("weighted design matrix is rank deficient")
    XtW = X.T * weights[None, :]
    beta = np.linalg.solve(XtW @ X, XtW @ y)
    residuals = y - X @ beta
    dof = max(n - p, 1)
    sigma2 = float(weights @ residuals**2) / dof
    if names is None:
        names = tuple(f"b{j}" for j in range(p))
    return RegressionResult(
        names=tuple(names),
        coefficients=beta,
        residual_variance=sigma2,
        weighted=bool(np.ptp(weights) > 0),
    )
