"""k-nearest-neighbor density ratio estimation and its KL plug-in.

A baseline against the kernel model: the ratio at an observed point is
estimated from the distances to its k-th nearest neighbor within the other
observed rows and within the synthetic rows.  Averaging the log ratios gives
a plug-in estimate of the KL divergence of the observed distribution from
the synthetic one.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, check_same_columns
from .errors import InputError
from .kernels import pairwise_sq_distances

#: Zero neighbor distances (duplicate rows) are floored here so ratios and
#: log ratios stay finite.
DISTANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class KnnRatioResult:
    """Per-observed-row ratio estimates with their KL plug-in."""

    k: int
    values: np.ndarray
    kl: float
    n_floored: int


def default_k(n):
    """Square-root-of-n neighbor count, the variance-friendly default."""
    return max(1, round(np.sqrt(n)))


def _kth_smallest(D, k):
    """Row-wise k-th smallest value (1-based) of a distance matrix."""
    return np.partition(D, k - 1, axis=1)[:, k - 1]


def knn_density_ratio(observed, synthetic, k):
    """Density ratio estimates at the observed rows.

    For each observed row, let B_obs be the Euclidean distance to its k-th
    nearest neighbor among the *other* observed rows and B_syn the distance
    to its k-th nearest neighbor among the synthetic rows.  The estimate is
    ``(m / (n - 1)) * (B_syn / B_obs) ** d``, with both distances floored at
    ``DISTANCE_FLOOR``.  Requires ``1 <= k < n`` and ``k <= m``.
    """
    X = as_matrix(observed, "observed")
    Y = as_matrix(synthetic, "synthetic")
    check_same_columns(X, Y, ("observed", "synthetic"))
    n, d = X.shape
    m = Y.shape[0]
    if n < 2:
        raise InputError("need at least 2 observed rows")
    if not (1 <= k < n and k <= m):
        raise InputError(f"k={k} out of range for n={n}, m={m}")

    D_oo = pairwise_sq_distances(X, X)
    np.fill_diagonal(D_oo, np.inf)  # a row is never its own neighbor
    D_os = pairwise_sq_distances(X, Y)
    b_obs = np.sqrt(_kth_smallest(D_oo, k))
    b_syn = np.sqrt(_kth_smallest(D_os, k))
    n_floored = int((b_obs < DISTANCE_FLOOR).sum() + (b_syn < DISTANCE_FLOOR).sum())
    b_obs = np.maximum(b_obs, DISTANCE_FLOOR)
    b_syn = np.maximum(b_syn, DISTANCE_FLOOR)
    values = (m / (n - 1)) * (b_syn / b_obs) ** d
    kl = float(np.mean(np.log(values)))
    return KnnRatioResult(k=k, values=values, kl=kl, n_floored=n_floored)


def kl_divergence_knn(observed, synthetic, k):
    """KL divergence plug-in: mean log of the k-NN ratio estimates."""
    return knn_density_ratio(observed, synthetic, k).kl


def knn_ratio_at(query, observed, synthetic, k):
    """Ratio estimates at external query points (not sample members).

    Same construction as :func:`knn_density_ratio` but the query rows belong
    to neither sample, so no self-exclusion applies and the constant becomes
    ``m / n``.  Used to evaluate the estimator on evaluation grids.
    """
    Q = as_matrix(query, "query")
    X = as_matrix(observed, "observed")
    Y = as_matrix(synthetic, "synthetic")
    check_same_columns(Q, X, ("query", "observed"))
    check_same_columns(Q, Y, ("query", "synthetic"))
    n, d = X.shape
    m = Y.shape[0]
    if not (1 <= k <= n and k <= m):
        raise InputError(f"k={k} out of range for n={n}, m={m}")
    b_obs = np.sqrt(_kth_smallest(pairwise_sq_distances(Q, X), k))
    b_syn = np.sqrt(_kth_smallest(pairwise_sq_distances(Q, Y), k))
    b_obs = np.maximum(b_obs, DISTANCE_FLOOR)
    b_syn = np.maximum(b_syn, DISTANCE_FLOOR)
    return (m / n) * (b_syn / b_obs) ** d
