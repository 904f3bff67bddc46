"""Least-squares density ratio estimation with a Gaussian kernel basis.

The ratio of two densities, r(x) = p_num(x) / p_den(x), is modelled as a
linear combination of Gaussian kernels placed at rows sampled from the
numerator data, plus an intercept.  Fitting minimizes the out-of-sample
squared error between model and true ratio, which reduces to a ridge system
with a closed-form solution per (width, ridge) pair; the pair itself is
chosen by cross-validation on a fixed grid.

The fitted ratio doubles as (a) a global utility score through the Pearson
divergence and (b) per-record importance weights.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator

from . import _jsonio, kernels
from ._validation import as_matrix, check_same_columns
from .dataset import PairEncoder
from .errors import InputError, NumericError

#: Relative residual bound for the ridge solve (lambda > 0 keeps the system
#: well conditioned, so exceeding this indicates a genuine numerical failure).
RIDGE_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class RatioVector:
    """Predicted density ratio values; non-negative when truncated."""

    values: np.ndarray
    truncated: bool


def _basis(D, sigma):
    """Kernel design matrix [1, K(x, c_1), ..., K(x, c_b)] from sq-distances."""
    K = kernels.gaussian_kernel(D, sigma)
    return np.hstack([np.ones((K.shape[0], 1)), K])


def _solve_ridge(H, lam, h):
    """Solve (H + lam I) theta = h via Cholesky and verify the residual."""
    A = H + lam * np.eye(H.shape[0])
    try:
        theta = cho_solve(cho_factor(A), h)
    except np.linalg.LinAlgError as exc:  # unreachable for lam > 0
        raise NumericError(f"ridge system not SPD at lambda={lam}") from exc
    h_norm = np.linalg.norm(h)
    if h_norm > 0:
        residual = np.linalg.norm(A @ theta - h) / h_norm
        if residual > RIDGE_RESIDUAL_TOL:
            raise NumericError(f"ridge solve residual {residual:.2e} too large")
    return theta


class UlsifEstimator(BaseEstimator):
    """Density ratio model fit by least squares with ridge regularization.

    Parameters
    ----------
    sigma_grid : array-like or None
        Kernel widths to cross-validate over.  None derives ten widths from
        quantiles of the squared distances between the numerator rows and
        the centers.
    lambda_grid : array-like or None
        Ridge strengths.  None uses twenty log-spaced values from 1e3 down
        to 1e-3.
    n_centers : int or "all"
        Number of kernel centers sampled (without replacement) from the
        numerator rows; capped at the numerator row count.
    centers : array-like or None
        Explicit centers, overriding sampling.
    cv : {"kfold", "loocv"}
        Cross-validation flavor: "kfold" scores each grid pair on held-out
        folds, "loocv" uses the closed-form leave-one-out score in which the
        i-th numerator and denominator rows are removed jointly.
    n_folds : int
        Fold count for "kfold" (reduced if either sample is smaller).
    random_state : int
        Seeds center sampling and fold assignment.

    Attributes
    ----------
    centers_ : ndarray of shape (b, p)
    sigma_, lambda_ : float
        Selected kernel width and ridge strength.
    theta_ : ndarray of shape (b + 1,)
        Intercept followed by kernel weights.
    cv_table_ : ndarray of shape (n_sigma, n_lambda)
        Cross-validation score per grid pair (lower is better).
    cv_method_ : str
    """

    def __init__(self, sigma_grid=None, lambda_grid=None, n_centers=200,
                 centers=None, cv="kfold", n_folds=5, random_state=0):
        self.sigma_grid = sigma_grid
        self.lambda_grid = lambda_grid
        self.n_centers = n_centers
        self.centers = centers
        self.cv = cv
        self.n_folds = n_folds
        self.random_state = random_state

    # ------------------------------------------------------------------
    # fitting
    # ------------------------------------------------------------------

    def fit(self, numerator, denominator):
        """Fit the ratio model of numerator density over denominator density.

        Both arguments are matrices (or FeatureMatrix objects) with matching
        columns and at least two rows each.
        """
        scaling = getattr(numerator, "scaling", None)
        encoder = getattr(numerator, "encoder", None)
        Xn = as_matrix(numerator, "numerator")
        Xd = as_matrix(denominator, "denominator")
        check_same_columns(Xn, Xd, ("numerator", "denominator"))
        n_nu, n_de = Xn.shape[0], Xd.shape[0]
        if n_nu < 2 or n_de < 2:
            raise InputError("need at least 2 rows in each sample")

        seed_centers, seed_folds = np.random.SeedSequence(self.random_state).spawn(2)
        if self.centers is not None:
            C = as_matrix(self.centers, "centers")
            check_same_columns(Xn, C, ("numerator", "centers"))
            center_rows = None  # fixed user basis, no row identity known
        else:
            b = n_nu if self.n_centers == "all" else min(int(self.n_centers), n_nu)
            center_rows = kernels.sample_center_indices(n_nu, b, seed_centers)
            C = Xn[center_rows]

        D_nu = kernels.pairwise_sq_distances(Xn, C)
        D_de = kernels.pairwise_sq_distances(Xd, C)

        if self.sigma_grid is not None:
            sigmas = np.atleast_1d(np.asarray(self.sigma_grid, dtype=np.float64))
        else:
            # numerator-to-center distances only: the width grid then depends
            # only on the reference sample, so competing denominator sets are
            # scored on identical grids
            sigmas = kernels.sigma_grid(D_nu)
        if self.lambda_grid is not None:
            lambdas = np.atleast_1d(np.asarray(self.lambda_grid, dtype=np.float64))
        else:
            lambdas = kernels.lambda_grid()
        if np.any(sigmas <= 0) or np.any(lambdas <= 0):
            raise InputError("grid values must be positive")

        if self.cv == "kfold":
            scores = self._kfold_scores(
                D_nu, D_de, sigmas, lambdas, seed_folds, center_rows
            )
            cv_method = f"kfold-{min(self.n_folds, n_nu, n_de)}"
        elif self.cv == "loocv":
            scores = self._loocv_scores(D_nu, D_de, sigmas, lambdas, center_rows)
            cv_method = "loocv"
        else:
            raise InputError(f"unknown cv method {self.cv!r}")

        si, li = self._select(scores, sigmas, lambdas)
        sigma, lam = float(sigmas[si]), float(lambdas[li])

        Phi_n = _basis(D_nu, sigma)
        Phi_d = _basis(D_de, sigma)
        H = Phi_d.T @ Phi_d / n_de
        h = Phi_n.mean(axis=0)
        theta = _solve_ridge(H, lam, h)

        self.centers_ = C
        self.sigmas_ = sigmas
        self.lambdas_ = lambdas
        self.cv_table_ = scores
        self.cv_method_ = cv_method
        self.sigma_ = sigma
        self.lambda_ = lam
        self.theta_ = theta
        self.n_numerator_ = n_nu
        self.n_denominator_ = n_de
        self.scaling_ = scaling
        self.encoder_ = encoder
        return self

    @staticmethod
    def _select(scores, sigmas, lambdas):
        """Grid cell with the lowest score; ties prefer larger lambda, then
        larger sigma (the smoother model)."""
        best = None
        for si in range(len(sigmas)):
            for li in range(len(lambdas)):
                if not np.isfinite(scores[si, li]):
                    continue
                cand = (scores[si, li], lambdas[li], sigmas[si], si, li)
                if best is None or cand[0] < best[0] or (
                    cand[0] == best[0]
                    and (cand[1], cand[2]) > (best[1], best[2])
                ):
                    best = cand
        if best is None:
            raise NumericError("no finite cross-validation score on the grid")
        return best[3], best[4]

    def _kfold_scores(self, D_nu, D_de, sigmas, lambdas, seed, center_rows):
        """Held-out estimate of the squared-error criterion per grid pair.

        Two safeguards keep the score honest for narrow kernels.  Kernel
        columns whose center is a held-out numerator row are excluded from
        that fold's basis (a bump sitting exactly on a test point would leak
        its location into the fit).  And each fold solution is clipped at
        zero before scoring: the criterion evaluates the non-negative ratio
        model, whose squared term a finite held-out sample can actually see.
        Without the clipping, oscillating narrow-kernel solutions cancel on
        the denominator sample while exploding between its points, and the
        grid search walks into them.
        """
        n_nu, n_de = D_nu.shape[0], D_de.shape[0]
        F = min(self.n_folds, n_nu, n_de)
        if F < 2:
            raise InputError("cross-validation needs at least 2 folds")
        rng = np.random.default_rng(seed)
        folds_nu = np.array_split(rng.permutation(n_nu), F)
        folds_de = np.array_split(rng.permutation(n_de), F)
        n_cols = D_nu.shape[1] + 1
        col_masks = []
        for te_n in folds_nu:
            mask = np.ones(n_cols, dtype=bool)
            if center_rows is not None:
                mask[1:] = ~np.isin(center_rows, te_n)
            col_masks.append(mask)
        scores = np.zeros((len(sigmas), len(lambdas)))
        for si, sigma in enumerate(sigmas):
            Phi_n = _basis(D_nu, sigma)
            Phi_d = _basis(D_de, sigma)
            for te_n, te_d, mask in zip(folds_nu, folds_de, col_masks):
                tr_n = np.setdiff1d(np.arange(n_nu), te_n, assume_unique=True)
                tr_d = np.setdiff1d(np.arange(n_de), te_d, assume_unique=True)
                Pn_tr = Phi_n[np.ix_(tr_n, np.flatnonzero(mask))]
                Pd_tr = Phi_d[np.ix_(tr_d, np.flatnonzero(mask))]
                Pn_te = Phi_n[np.ix_(te_n, np.flatnonzero(mask))]
                Pd_te = Phi_d[np.ix_(te_d, np.flatnonzero(mask))]
                H_tr = Pd_tr.T @ Pd_tr / tr_d.size
                h_tr = Pn_tr.mean(axis=0)
                w, Q = np.linalg.eigh(H_tr)
                hq = Q.T @ h_tr
                # theta(lambda) for all lambdas at once: Q (hq / (w + lam))
                Theta = Q @ (hq[:, None] / (w[:, None] + lambdas[None, :]))
                np.maximum(Theta, 0.0, out=Theta)
                pred_de = Pd_te @ Theta
                pred_nu = Pn_te @ Theta
                scores[si] += 0.5 * np.mean(pred_de**2, axis=0) - np.mean(
                    pred_nu, axis=0
                )
        scores /= F
        return scores

    def _loocv_scores(self, D_nu, D_de, sigmas, lambdas, center_rows):
        """Closed-form leave-one-out score.

        The i-th numerator row and i-th denominator row are held out jointly
        (i up to the smaller sample size).  When the held-out numerator row
        is itself a kernel center, its basis column is removed as well, and
        as in k-fold the leave-one-out solutions are clipped at zero before
        scoring.  Rank-one identities (a Schur downdate for the removed
        column, Sherman-Morrison for the removed denominator row) give every
        leave-one-out parameter vector without refitting; the result matches
        explicit refits to floating point accuracy.
        """
        n_nu, n_de = D_nu.shape[0], D_de.shape[0]
        n_min = min(n_nu, n_de)
        # basis-column index of each held-out numerator row (-1 if none)
        col_of_row = np.full(n_min, -1)
        if center_rows is not None:
            for col, row in enumerate(center_rows, start=1):
                if row < n_min:
                    col_of_row[row] = col
        has_col = col_of_row >= 0
        j_idx = np.where(has_col, col_of_row, 0)
        rows = np.arange(n_min)
        scores = np.zeros((len(sigmas), len(lambdas)))
        for si, sigma in enumerate(sigmas):
            Phi_n = _basis(D_nu, sigma)
            Phi_d = _basis(D_de, sigma)
            H = Phi_d.T @ Phi_d / n_de
            h = Phi_n.mean(axis=0)
            w, Q = np.linalg.eigh(H)
            hq = Q.T @ h
            Pn, Pd = Phi_n[:n_min], Phi_d[:n_min]
            QtPn, QtPd = Q.T @ Pn.T, Q.T @ Pd.T  # (b, n_min)
            Qj = Q[j_idx, :].T  # (b, n_min), column i = Q^T e_{j(i)}
            for li, lam in enumerate(lambdas):
                # G = (n_de (H + lam (n_de-1)/n_de I))^-1 via the eigenbasis
                inv = 1.0 / (n_de * (w + lam * (n_de - 1) / n_de))
                Gh = Q @ (inv * hq)  # (b,)
                GY = Q @ (inv[:, None] * QtPd)  # columns G phi_y_i
                GX = Q @ (inv[:, None] * QtPn)
                Gj = Q @ (inv[:, None] * Qj)  # columns G e_{j(i)}
                g_jj = np.einsum("bi,bi->i", Qj, inv[:, None] * Qj)
                # G applied to h^(i) = (n_nu h - phi_x_i) / (n_nu - 1)
                GHi = (n_nu * Gh[:, None] - GX) / (n_nu - 1)
                # column removal: Gtilde v = G v - G e_j (G v)_j / G_jj
                scale = np.where(has_col, 1.0 / g_jj, 0.0)
                a = GHi - Gj * (GHi[j_idx, rows] * scale)[None, :]
                c = GY - Gj * (GY[j_idx, rows] * scale)[None, :]
                p = np.einsum("ib,bi->i", Pd, c)  # phi_y^T Gtilde phi_y
                g = np.einsum("ib,bi->i", Pd, a) / (1.0 - p)
                Theta = (n_de - 1) * (a + c * g[None, :])
                np.maximum(Theta, 0.0, out=Theta)
                r_de = np.einsum("ib,bi->i", Pd, Theta)
                r_nu = np.einsum("ib,bi->i", Pn, Theta)
                scores[si, li] = np.mean(0.5 * r_de**2 - r_nu)
        return scores

    # ------------------------------------------------------------------
    # prediction and divergence
    # ------------------------------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "theta_"):
            raise InputError("estimator is not fitted")

    def basis(self, X):
        """Design matrix of X against the fitted centers and width."""
        self._check_fitted()
        X = as_matrix(X, "X")
        check_same_columns(X, self.centers_, ("X", "centers"))
        return _basis(kernels.pairwise_sq_distances(X, self.centers_), self.sigma_)

    def predict(self, X, truncate=False):
        """Predicted ratio at each row of X; clamped at zero if ``truncate``."""
        values = self.basis(X) @ self.theta_
        if truncate:
            values = np.maximum(values, 0.0)
        return values

    def predict_ratio(self, X, truncate=False):
        return RatioVector(self.predict(X, truncate=truncate), bool(truncate))

    def pearson_divergence(self, numerator, denominator):
        """Plug-in Pearson divergence estimate.

        mean of r over the numerator sample minus half the mean of r^2 over
        the denominator sample minus one half; predictions are used raw
        (untruncated).  Zero when the fitted ratio is identically one, and
        possibly slightly negative under sampling noise.
        """
        r_nu = self.predict(numerator)
        r_de = self.predict(denominator)
        return float(r_nu.mean() - 0.5 * np.mean(r_de**2) - 0.5)

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_dict(self):
        """Full fit state as a JSON-compatible dict; reload with from_dict."""
        self._check_fitted()
        return {
            "format": "synthratio-ulsif-fit",
            "version": 1,
            "sigma": self.sigma_,
            "lambda": self.lambda_,
            "theta": self.theta_,
            "centers": self.centers_,
            "sigma_grid": self.sigmas_,
            "lambda_grid": self.lambdas_,
            "cv_table": self.cv_table_,
            "cv_method": self.cv_method_,
            "n_numerator": self.n_numerator_,
            "n_denominator": self.n_denominator_,
            "scaling": None
            if self.scaling_ is None
            else {"means": list(self.scaling_[0]), "sds": list(self.scaling_[1])},
            "encoder": None if self.encoder_ is None else self.encoder_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "synthratio-ulsif-fit":
            raise InputError("not a serialized density ratio fit")
        est = cls()
        est.sigma_ = float(d["sigma"])
        est.lambda_ = float(d["lambda"])
        est.theta_ = np.asarray(d["theta"], dtype=np.float64)
        est.centers_ = np.asarray(d["centers"], dtype=np.float64)
        est.sigmas_ = np.asarray(d["sigma_grid"], dtype=np.float64)
        est.lambdas_ = np.asarray(d["lambda_grid"], dtype=np.float64)
        est.cv_table_ = np.asarray(d["cv_table"], dtype=np.float64)
        est.cv_method_ = d["cv_method"]
        est.n_numerator_ = int(d["n_numerator"])
        est.n_denominator_ = int(d["n_denominator"])
        scaling = d.get("scaling")
        est.scaling_ = (
            None
            if scaling is None
            else (tuple(scaling["means"]), tuple(scaling["sds"]))
        )
        enc = d.get("encoder")
        est.encoder_ = None if enc is None else PairEncoder.from_dict(enc)
        return est

    def save_json(self, path):
        _jsonio.dump(self.to_dict(), path)

    @classmethod
    def load_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# ----------------------------------------------------------------------
# functional surface
# ----------------------------------------------------------------------


def fit_ulsif(numerator, denominator, **config):
    """Fit a :class:`UlsifEstimator` with the given configuration."""
    return UlsifEstimator(**config).fit(numerator, denominator)


def predict_ratio(fit, X, truncate=False):
    return fit.predict_ratio(X, truncate=truncate)


def pearson_divergence(fit, numerator, denominator):
    return fit.pearson_divergence(numerator, denominator)
