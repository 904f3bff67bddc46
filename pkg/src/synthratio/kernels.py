"""Distance computation, Gaussian kernels, and hyperparameter grids.

The kernel model downstream is linear in Gaussian basis functions placed at
sampled data points ("centers").  Everything here is a pure function of its
inputs; randomness only enters through an explicit seed.
"""

import numpy as np

from ._validation import as_matrix, check_positive, check_same_columns
from .errors import InputError

#: Quantile levels of the positive squared distances used for the width grid.
SIGMA_QUANTILES = np.arange(0.05, 1.0, 0.10)

#: Endpoints (log10) and length of the ridge-strength grid.
LAMBDA_LOG_RANGE = (3.0, -3.0)
LAMBDA_GRID_SIZE = 20


def pairwise_sq_distances(A, B):
    """Squared Euclidean distances between the rows of two matrices.

    Parameters
    ----------
    A : array-like of shape (n, p)
    B : array-like of shape (m, p)

    Returns
    -------
    ndarray of shape (n, m)
        Entry ``(i, j)`` equals ``||A_i - B_j||**2``.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    check_same_columns(A, B, ("A", "B"))
    sq_a = np.einsum("ij,ij->i", A, A)
    sq_b = np.einsum("ij,ij->i", B, B)
    D = sq_a[:, None] + sq_b[None, :] - 2.0 * (A @ B.T)
    # cross-term cancellation can leave tiny negatives
    np.maximum(D, 0.0, out=D)
    return D


def gaussian_kernel(D, sigma):
    """Evaluate ``exp(-D / (2 * sigma**2))`` entrywise on squared distances."""
    check_positive(sigma, "sigma")
    D = np.asarray(D, dtype=np.float64)
    if D.size and D.min() < 0:
        raise InputError("squared distances must be non-negative")
    return np.exp(-D / (2.0 * sigma**2))


def sigma_grid(D):
    """Ten kernel widths from quantiles of the positive squared distances.

    The k-th width is ``sqrt(q_k / 2)`` where ``q_k`` is the empirical
    quantile of the positive entries of ``D`` at level 0.05, 0.15, ..., 0.95
    (linear interpolation).  Duplicate widths are perturbed upward by a factor
    ``1 + 1e-6`` so the grid is strictly increasing.
    """
    D = np.asarray(D, dtype=np.float64)
    positive = D[D > 0]
    if positive.size == 0:
        raise InputError("all pairwise distances are zero; cannot build a width grid")
    q = np.quantile(positive, SIGMA_QUANTILES)
    sigmas = np.sqrt(q / 2.0)
    for k in range(1, sigmas.size):
        if sigmas[k] <= sigmas[k - 1]:
            sigmas[k] = sigmas[k - 1] * (1.0 + 1e-6)
    return sigmas


def lambda_grid():
    """Twenty ridge strengths, log-equispaced and descending from 1e3 to 1e-3."""
    hi, lo = LAMBDA_LOG_RANGE
    return np.logspace(hi, lo, LAMBDA_GRID_SIZE)


def sample_center_indices(n, b, seed):
    """Indices of ``b`` distinct rows out of ``n``, determined by ``seed``."""
    if not 1 <= b <= n:
        raise InputError(f"center count must satisfy 1 <= b <= {n}, got {b}")
    rng = np.random.default_rng(seed)
    return rng.choice(n, size=b, replace=False)


def sample_centers(data, b, seed):
    """Sample ``b`` distinct rows of ``data`` without replacement.

    The draw is fully determined by ``seed``; ``b`` must not exceed the row
    count.
    """
    data = as_matrix(data, "data")
    return data[sample_center_indices(data.shape[0], b, seed)]
