"""Permutation-based two-sample homogeneity test on the Pearson divergence.

Under the null that both samples share a distribution, group labels are
exchangeable: pooling rows and redrawing the group split yields the null
distribution of the statistic.  The default (frozen) mode splits each sample
in half: hyperparameters and centers are selected on one half with its true
labels, and the statistic plus its permutation null are computed on the
held-out half, refitting only the ridge weights per relabeling.  Selection
never sees the held-out labels, so observed and permuted statistics are
exactly exchangeable, while the selection still tunes to real structure
(selection on the full observed split rejects a true null far too often;
label-free selection is calibrated but blind to exactly the differences the
test should detect).  ``reselect=True`` instead reruns the full selection
pipeline per permutation on the full samples (two orders of magnitude
slower, exchangeable by construction).
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import clone

from ._validation import as_matrix, check_same_columns
from .errors import InputError
from .ulsif import UlsifEstimator, _solve_ridge


@dataclass(frozen=True)
class PermutationTestResult:
    """Observed divergence, its permutation null, and the smoothed p-value."""

    statistic: float
    null_values: np.ndarray
    p_value: float
    n_permutations: int
    seed: int
    reselected: bool
    sigma: float
    lambda_: float

    @property
    def B(self):
        return self.n_permutations


def permutation_test(numerator, denominator, n_permutations=199, estimator=None,
                     seed=0, reselect=False):
    """Test whether two samples come from one distribution.

    Parameters
    ----------
    numerator, denominator : matrices or FeatureMatrix
        The two samples (observed and synthetic, in the utility setting).
    n_permutations : int
        Number of label permutations, at least 19.
    estimator : UlsifEstimator or None
        Prototype fit configuration; cloned, never mutated.
    seed : int
        Drives everything stochastic: permutation ``b`` uses an RNG stream
        keyed by ``(seed, b)`` so results are independent of evaluation
        order, and the frozen-mode sample split uses a stream keyed past the
        permutation range.
    reselect : bool
        Redo hyperparameter selection on every permutation on the full
        samples instead of the split-then-freeze protocol.

    Returns
    -------
    PermutationTestResult
        With ``p_value = (1 + #{null >= statistic}) / (n_permutations + 1)``.
    """
    if n_permutations < 19:
        raise InputError("need at least 19 permutations")
    proto = UlsifEstimator() if estimator is None else estimator
    Xn = as_matrix(numerator, "numerator")
    Xd = as_matrix(denominator, "denominator")
    check_same_columns(Xn, Xd, ("numerator", "denominator"))
    n_nu, n_de = Xn.shape[0], Xd.shape[0]
    N = n_nu + n_de
    pooled = np.vstack([Xn, Xd])

    null_values = np.empty(n_permutations)
    if reselect:
        observed_fit = clone(proto).fit(numerator, denominator)
        statistic = observed_fit.pearson_divergence(Xn, Xd)
        for b in range(n_permutations):
            rng = np.random.default_rng([seed, b])
            perm = rng.permutation(N)
            Pn, Pd = pooled[perm[:n_nu]], pooled[perm[n_nu:]]
            fit_b = clone(proto).fit(Pn, Pd)
            null_values[b] = fit_b.pearson_divergence(Pn, Pd)
        selected = observed_fit
    else:
        # Everything reused across relabelings must not depend on the
        # held-out labels, or the observed statistic is favored over
        # relabeled ones and the test rejects far too often (measured 12-25%
        # at the 5% level when hyperparameters are selected on the full
        # observed split).  Label-free selection is calibrated but blind to
        # the structure the test should detect, so the samples are split:
        # hyperparameters (and centers) are selected on a seed-drawn half of
        # each sample with its true labels, and the statistic plus its
        # permutation null are computed on the held-out halves only.
        if n_nu < 4 or n_de < 4:
            raise InputError(
                "the frozen permutation test needs at least 4 rows per sample"
            )
        rng_split = np.random.default_rng([seed, n_permutations])
        order_nu = rng_split.permutation(n_nu)
        order_de = rng_split.permutation(n_de)
        sel_nu, test_nu = order_nu[: n_nu // 2], order_nu[n_nu // 2 :]
        sel_de, test_de = order_de[: n_de // 2], order_de[n_de // 2 :]
        selected = clone(proto).fit(Xn[sel_nu], Xd[sel_de])

        frozen = clone(proto)
        frozen.set_params(
            centers=selected.centers_,
            sigma_grid=[selected.sigma_],
            lambda_grid=[selected.lambda_],
        )
        observed_fit = clone(frozen).fit(Xn[test_nu], Xd[test_de])
        statistic = observed_fit.pearson_divergence(Xn[test_nu], Xd[test_de])

        pooled_test = np.vstack([Xn[test_nu], Xd[test_de]])
        m_nu, m_de = test_nu.size, test_de.size
        M = m_nu + m_de
        # the held-out basis never changes; only group membership does
        Phi = observed_fit.basis(pooled_test)
        G_total = Phi.T @ Phi
        lam = observed_fit.lambda_
        for b in range(n_permutations):
            rng = np.random.default_rng([seed, b])
            perm = rng.permutation(M)
            Phi_nu = Phi[perm[:m_nu]]
            H = (G_total - Phi_nu.T @ Phi_nu) / m_de
            h = Phi_nu.mean(axis=0)
            theta = _solve_ridge(H, lam, h)
            r = Phi @ theta
            r_nu, r_de = r[perm[:m_nu]], r[perm[m_nu:]]
            null_values[b] = r_nu.mean() - 0.5 * np.mean(r_de**2) - 0.5

    p_value = (1 + int(np.sum(null_values >= statistic))) / (n_permutations + 1)
    return PermutationTestResult(
        statistic=statistic,
        null_values=null_values,
        p_value=p_value,
        n_permutations=n_permutations,
        seed=seed,
        reselected=reselect,
        sigma=selected.sigma_,
        lambda_=selected.lambda_,
    )
