"""Classifier-based utility: propensity score mean squared error.

Observed and synthetic rows are stacked with an indicator label; a
classifier predicts the probability of each row being synthetic, and the
mean squared deviation of those propensities from the synthetic share is the
pMSE.  Dividing by its expectation under indistinguishability (closed form
for main-effects logistic regression, label-permutation resampling for the
tree) gives the pMSE-ratio baseline.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix
from .errors import DegenerateNullError, InputError, RankDeficientError

#: Linear predictors are clipped here; hitting the bound signals separation.
ETA_CLIP = 30.0


@dataclass(frozen=True)
class StackedSample:
    """Observed rows followed by synthetic rows, with a synthetic indicator."""

    X: np.ndarray
    labels: np.ndarray  # 1 = synthetic
    n_obs: int
    n_syn: int

    @property
    def n_rows(self):
        return self.n_obs + self.n_syn


def stack_samples(observed, synthetic):
    """Build a StackedSample from two row-aligned matrices."""
    X_obs = as_matrix(observed, "observed")
    X_syn = as_matrix(synthetic, "synthetic")
    if X_obs.shape[1] != X_syn.shape[1]:
        raise InputError("observed and synthetic must have the same columns")
    X = np.vstack([X_obs, X_syn])
    labels = np.concatenate(
        [np.zeros(X_obs.shape[0], dtype=np.int64), np.ones(X_syn.shape[0], dtype=np.int64)]
    )
    return StackedSample(X=X, labels=labels, n_obs=X_obs.shape[0], n_syn=X_syn.shape[0])


# ----------------------------------------------------------------------
# logistic regression (iteratively reweighted least squares)
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LogitFit:
    """Main-effects logistic propensity fit."""

    probabilities: np.ndarray
    coefficients: np.ndarray  # intercept first
    k: int  # parameter count including intercept
    converged: bool
    n_iter: int


def _design(X):
    """Intercept plus the zero-variance-pruned columns of X."""
    keep = np.ptp(X, axis=0) > 0
    A = np.hstack([np.ones((X.shape[0], 1)), X[:, keep]])
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise RankDeficientError(
            "design matrix is rank deficient after zero-variance pruning"
        )
    return A


def _fit_logit_xy(X, y, max_iter=100, tol=1e-8):
    A = _design(X)
    n, k = A.shape
    if n <= k:
        raise InputError(f"need more rows ({n}) than parameters ({k})")
    beta = np.zeros(k)
    converged = False
    saturated = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = A @ beta
        saturated = bool(np.max(np.abs(eta)) >= ETA_CLIP)
        pi = 1.0 / (1.0 + np.exp(-np.clip(eta, -ETA_CLIP, ETA_CLIP)))
        grad = A.T @ (y - pi)
        if np.max(np.abs(grad)) < tol:
            converged = not saturated
            break
        w = np.maximum(pi * (1.0 - pi), 1e-10)
        try:
            step = np.linalg.solve(A.T @ (A * w[:, None]), grad)
        except np.linalg.LinAlgError:
            break  # keep last iterate, flag non-convergence
        beta = beta + step
    eta = np.clip(A @ beta, -ETA_CLIP, ETA_CLIP)
    pi = 1.0 / (1.0 + np.exp(-eta))
    return LogitFit(
        probabilities=pi, coefficients=beta, k=k, converged=converged, n_iter=it
    )


def fit_logit(sample, max_iter=100, tol=1e-8):
    """Fit the synthetic-record propensity by logistic regression.

    Newton/IRLS iterations run until the infinity norm of the score drops
    below ``tol``.  Under separation or non-convergence the last iterate is
    returned with ``converged=False``.
    """
    return _fit_logit_xy(sample.X, sample.labels.astype(np.float64), max_iter, tol)


# ----------------------------------------------------------------------
# classification tree (Gini impurity)
# ----------------------------------------------------------------------


@dataclass
class _Node:
    probability: float
    feature: int = -1
    threshold: float = 0.0
    left: "_Node" = None
    right: "_Node" = None

    @property
    def is_leaf(self):
        return self.left is None


def _predict_tree(root, X):
    out = np.empty(X.shape[0])
    for i, row in enumerate(X):
        node = root
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        out[i] = node.probability
    return out


@dataclass(frozen=True)
class CartFit:
    """Binary Gini tree propensity fit."""

    probabilities: np.ndarray
    root: _Node
    n_leaves: int
    splits: tuple  # (feature, threshold) in growth order, for diagnostics

    def predict(self, X):
        return _predict_tree(self.root, as_matrix(X, "X"))


def _gini_from_counts(c1, n):
    p = c1 / n
    return 2.0 * p * (1.0 - p)


def _best_split(X, y, min_node):
    """Best (feature, threshold, weighted-child-impurity) by exhaustive scan.

    Candidates are midpoints between consecutive distinct sorted values.
    Ties keep the lowest feature index, then the lowest threshold.
    """
    n = y.size
    total1 = y.sum()
    best = None  # (weighted_impurity, feature, threshold)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        cum1 = np.cumsum(y[order])
        sizes_left = np.arange(1, n)
        valid = (
            (xs[:-1] != xs[1:])
            & (sizes_left >= min_node)
            & ((n - sizes_left) >= min_node)
        )
        if not valid.any():
            continue
        idx = np.flatnonzero(valid)
        n_l = sizes_left[idx].astype(np.float64)
        n_r = n - n_l
        c1_l = cum1[idx]
        c1_r = total1 - c1_l
        weighted = n_l * _gini_from_counts(c1_l, n_l) + n_r * _gini_from_counts(
            c1_r, n_r
        )
        pos = int(np.argmin(weighted))  # first minimum = lowest threshold
        if best is None or weighted[pos] < best[0]:
            i = idx[pos]
            best = (weighted[pos], j, (xs[i] + xs[i + 1]) / 2.0)
    return best


def _fit_cart_xy(X, y, min_node=5, max_depth=30, cp=1e-4):
    n_total = y.size
    root_gini = _gini_from_counts(y.sum(), n_total)
    splits = []

    def grow(idx, depth):
        y_node = y[idx]
        n_node = y_node.size
        c1 = y_node.sum()
        node = _Node(probability=c1 / n_node)
        node_gini = _gini_from_counts(c1, n_node)
        if depth >= max_depth or n_node < 2 * min_node or node_gini == 0.0:
            return node
        found = _best_split(X[idx], y_node, min_node)
        if found is None:
            return node
        weighted, feature, threshold = found
        # impurity decrease relative to the whole sample, gated by the root
        decrease = (n_node * node_gini - weighted) / n_total
        if decrease < cp * root_gini:
            return node
        splits.append((feature, threshold))
        mask = X[idx, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.left = grow(idx[mask], depth + 1)
        node.right = grow(idx[~mask], depth + 1)
        return node

    root = grow(np.arange(n_total), 0)

    def count_leaves(node):
        return 1 if node.is_leaf else count_leaves(node.left) + count_leaves(node.right)

    return CartFit(
        probabilities=_predict_tree(root, X),
        root=root,
        n_leaves=count_leaves(root),
        splits=tuple(splits),
    )


def fit_cart(sample, min_node=5, max_depth=30, cp=1e-4):
    """Fit the synthetic-record propensity with a binary Gini tree.

    A split is accepted only if the impurity decrease (weighted by node
    share of the whole sample) is at least ``cp`` times the root impurity
    and both children hold at least ``min_node`` rows; leaves predict their
    synthetic fraction.  Degenerate data yields a root-only tree.
    """
    return _fit_cart_xy(
        sample.X, sample.labels.astype(np.float64), min_node, max_depth, cp
    )


# ----------------------------------------------------------------------
# the statistic and its null expectation
# ----------------------------------------------------------------------


def pmse(pi, n_syn, n_total):
    """Mean squared deviation of propensities from the synthetic share."""
    pi = np.asarray(pi, dtype=np.float64)
    if pi.size == 0:
        raise InputError("empty propensity vector")
    if pi.min() < 0 or pi.max() > 1:
        raise InputError("propensities must lie in [0, 1]")
    share = n_syn / n_total
    return float(np.mean((pi - share) ** 2))


def expected_pmse_logit(k, n_obs, n_syn):
    """Null expectation of the pMSE for a k-parameter logistic propensity.

    ((k - 1) / N) * (n_obs / N)^2 * (n_syn / N), with N the stacked size;
    requires at least one non-intercept parameter (k >= 2).
    """
    if k < 2:
        raise InputError(f"parameter count must include a predictor (k >= 2), got {k}")
    N = n_obs + n_syn
    return (k - 1) / N * (n_obs / N) ** 2 * (n_syn / N)


@dataclass(frozen=True)
class PmseReport:
    """pMSE with its null expectation and ratio."""

    pmse: float
    expected: float
    ratio: float
    model_kind: str
    null_method: str
    converged: bool = True


def pmse_ratio(sample, model_kind="logit", resamples=100, seed=0, **model_params):
    """pMSE-ratio under a logistic or tree propensity model.

    The logistic null expectation is closed form; the tree null is the mean
    pMSE over ``resamples`` label-permutation refits (at least 20), with one
    RNG stream per resample index so results do not depend on scheduling.
    """
    N = sample.n_rows
    if model_kind == "logit":
        fit = fit_logit(sample, **model_params)
        if not fit.converged:
            warnings.warn(
                "logistic propensity fit did not converge (possible separation); "
                "using last iterate",
                stacklevel=2,
            )
        statistic = pmse(fit.probabilities, sample.n_syn, N)
        expected = expected_pmse_logit(fit.k, sample.n_obs, sample.n_syn)
        null_method = "closed_form"
        converged = fit.converged
    elif model_kind == "cart":
        if resamples < 20:
            raise InputError("tree null needs at least 20 resamples")
        fit = fit_cart(sample, **model_params)
        statistic = pmse(fit.probabilities, sample.n_syn, N)
        y = sample.labels.astype(np.float64)
        null = np.empty(resamples)
        for b in range(resamples):
            rng = np.random.default_rng([seed, b])
            y_perm = y[rng.permutation(N)]
            perm_fit = _fit_cart_xy(sample.X, y_perm, **model_params)
            null[b] = pmse(perm_fit.probabilities, sample.n_syn, N)
        expected = float(null.mean())
        null_method = "permutation"
        converged = True
    else:
        raise InputError(f"unknown model kind {model_kind!r}")
    if expected == 0:
        raise DegenerateNullError("null expectation of the pMSE is zero")
    return PmseReport(
        pmse=statistic,
        expected=expected,
        ratio=statistic / expected,
        model_kind=model_kind,
        null_method=null_method,
        converged=converged,
    )
