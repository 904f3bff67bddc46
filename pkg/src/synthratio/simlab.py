"""Simulation studies: data generators, synthesis models, ranking harness.

The univariate generators draw observed data from four mechanisms that share
mean 1 and variance 2 while differing in higher moments; synthetic data
always comes from the moment-matched Gaussian N(1, 2), so the true density
ratio is known in closed form.  The multivariate generator mixes an
equicorrelated Gaussian block with power-transformed tail columns, and three
synthesis models of increasing fidelity (marginals only, full covariance,
correctly specified) give a known quality ordering that utility measures
should recover.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats
from sklearn.base import clone

from .dataset import Dataset, encode_pair
from .errors import InputError, NumericError
from .knn import default_k, kl_divergence_knn, knn_ratio_at
from .pmse import pmse_ratio, stack_samples
from .ulsif import UlsifEstimator

UNIVARIATE_SCENARIOS = ("laplace", "lognormal", "t_ls", "normal")

#: Synthetic-versus-observed mean/variance shared by all univariate scenarios.
UNIVARIATE_MEAN = 1.0
UNIVARIATE_VARIANCE = 2.0

_LOGNORMAL_MU = math.log(1.0 / math.sqrt(3.0))
_LOGNORMAL_SIGMA = math.sqrt(math.log(3.0))
_T_DF = 4.0

MEASURES = ("PE", "KL_1", "KL_sqrt_n", "pMSE_cart", "pMSE_logit")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# ----------------------------------------------------------------------
# univariate scenarios
# ----------------------------------------------------------------------


def gen_univariate(scenario, n, seed):
    """Observed and synthetic samples for one univariate scenario.

    Observed data follows the scenario distribution; synthetic data is drawn
    from N(1, 2) regardless of scenario.  Returns two length-n vectors.
    """
    if scenario not in UNIVARIATE_SCENARIOS:
        raise InputError(f"unknown scenario {scenario!r}; choose from {UNIVARIATE_SCENARIOS}")
    if n < 2:
        raise InputError("need n >= 2")
    rng = _rng(seed)
    if scenario == "laplace":
        observed = rng.laplace(UNIVARIATE_MEAN, 1.0, n)
    elif scenario == "lognormal":
        observed = rng.lognormal(_LOGNORMAL_MU, _LOGNORMAL_SIGMA, n)
    elif scenario == "t_ls":
        observed = UNIVARIATE_MEAN + rng.standard_t(_T_DF, n)
    else:
        observed = rng.normal(UNIVARIATE_MEAN, math.sqrt(UNIVARIATE_VARIANCE), n)
    synthetic = rng.normal(UNIVARIATE_MEAN, math.sqrt(UNIVARIATE_VARIANCE), n)
    return observed, synthetic


def _scenario_distribution(scenario):
    if scenario == "laplace":
        return stats.laplace(loc=UNIVARIATE_MEAN, scale=1.0)
    if scenario == "lognormal":
        return stats.lognorm(s=_LOGNORMAL_SIGMA, scale=math.exp(_LOGNORMAL_MU))
    if scenario == "t_ls":
        return stats.t(df=_T_DF, loc=UNIVARIATE_MEAN, scale=1.0)
    if scenario == "normal":
        return stats.norm(loc=UNIVARIATE_MEAN, scale=math.sqrt(UNIVARIATE_VARIANCE))
    raise InputError(f"unknown scenario {scenario!r}")


def true_ratio(scenario, x):
    """Analytic density ratio of the scenario density over N(1, 2)."""
    x = np.asarray(x, dtype=np.float64)
    numerator = _scenario_distribution(scenario).pdf(x)
    denominator = stats.norm(UNIVARIATE_MEAN, math.sqrt(UNIVARIATE_VARIANCE)).pdf(x)
    return numerator / denominator


# ----------------------------------------------------------------------
# multivariate generator and synthesis models
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class MultivariateConfig:
    """Dimension, sample size and correlation of the simulated tables."""

    D: int
    n: int
    correlation: float = 0.5
    seed: int = 0


def _structure(D):
    """(target, source, exponent) triples of the power-transformed columns."""
    if D == 5:
        return ((4, 0, 2),)
    if D >= 10:
        return tuple((D - 5 + j, j, j + 2) for j in range(5))
    raise InputError(f"D must be 5 or at least 10, got {D}")


def _equicorrelated_chol(dim, rho):
    cov = np.full((dim, dim), rho)
    np.fill_diagonal(cov, 1.0)
    return np.linalg.cholesky(cov)


def gen_multivariate(config, seed=None):
    """Simulate one table: an equicorrelated Gaussian block plus power tails.

    The first block is multivariate normal with unit variances and common
    correlation; each remaining column equals a block column raised to an
    increasing power, plus Gaussian noise whose variance matches the sample
    variance of the transformed column.
    """
    rng = _rng(config.seed if seed is None else seed)
    structure = _structure(config.D)
    n_linear = config.D - len(structure)
    L = _equicorrelated_chol(n_linear, config.correlation)
    X = np.empty((config.n, config.D))
    X[:, :n_linear] = rng.standard_normal((config.n, n_linear)) @ L.T
    for target, source, exponent in structure:
        base = X[:, source] ** exponent
        noise_sd = np.std(base, ddof=1)
        X[:, target] = base + rng.normal(0.0, noise_sd, config.n)
    return Dataset.from_matrix(X)


def synthesize(model_id, data, seed):
    """Generate synthetic data from one of three models of rising fidelity.

    Model 1 matches each column's mean and variance but nothing else;
    model 2 matches the full mean vector and covariance matrix; model 3 is
    correctly specified: a Gaussian fit for the linear block plus, per
    power-transformed column, a least-squares regression on the transformed
    source column with matching noise variance.
    """
    rng = _rng(seed)
    X = np.column_stack([np.asarray(c) for c in data.values])
    n, D = X.shape
    if model_id == 1:
        means = X.mean(axis=0)
        sds = X.std(axis=0, ddof=1)
        S = rng.standard_normal((n, D)) * sds + means
    elif model_id == 2:
        S = _mvn_sample(rng, X, n)
    elif model_id == 3:
        structure = _structure(D)
        n_linear = D - len(structure)
        S = np.empty((n, D))
        S[:, :n_linear] = _mvn_sample(rng, X[:, :n_linear], n)
        for target, source, exponent in structure:
            base_real = X[:, source] ** exponent
            A = np.column_stack([np.ones(n), base_real])
            beta, *_ = np.linalg.lstsq(A, X[:, target], rcond=None)
            residuals = X[:, target] - A @ beta
            sigma = math.sqrt(float(residuals @ residuals) / (n - 2))
            base_syn = S[:, source] ** exponent
            S[:, target] = beta[0] + beta[1] * base_syn + rng.normal(0.0, sigma, n)
    else:
        raise InputError(f"unknown synthesis model {model_id!r}")
    return Dataset.from_matrix(S, names=data.names)


def _mvn_sample(rng, X, n):
    means = X.mean(axis=0)
    cov = np.cov(X, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        warnings.warn("singular estimated covariance; inflating diagonal by 1e-8")
        try:
            L = np.linalg.cholesky(cov + 1e-8 * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericError("estimated covariance not repairable") from exc
    return rng.standard_normal((n, X.shape[1])) @ L.T + means


# ----------------------------------------------------------------------
# ranking experiment (which utility measures recover the model order?)
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentResult:
    """Scores and strict-ordering indicators per replication and measure."""

    config: MultivariateConfig
    measures: tuple
    scores: np.ndarray  # (replications, measures, 3 synthesis models)
    ordering: np.ndarray  # (replications, measures) bool

    def proportions(self):
        """Share of replications per measure with score_1 > score_2 > score_3."""
        return {
            m: float(self.ordering[:, i].mean()) for i, m in enumerate(self.measures)
        }


def _score_pair(measure, fm_obs, fm_syn, fit_seed, cart_resamples):
    if measure == "PE":
        est = UlsifEstimator(random_state=fit_seed)
        return est.fit(fm_obs, fm_syn).pearson_divergence(fm_obs, fm_syn)
    if measure == "KL_1":
        return kl_divergence_knn(fm_obs.data, fm_syn.data, 1)
    if measure == "KL_sqrt_n":
        return kl_divergence_knn(fm_obs.data, fm_syn.data, default_k(fm_obs.n_rows))
    if measure == "pMSE_cart":
        sample = stack_samples(fm_obs.data, fm_syn.data)
        return pmse_ratio(sample, "cart", resamples=cart_resamples, seed=fit_seed).ratio
    if measure == "pMSE_logit":
        sample = stack_samples(fm_obs.data, fm_syn.data)
        return pmse_ratio(sample, "logit").ratio
    raise InputError(f"unknown measure {measure!r}; choose from {MEASURES}")


def run_ranking_experiment(config, measures, replications, seed=None,
                           cart_resamples=100):
    """Score three synthesis models per replication and check their ordering.

    Per replication: simulate a real table, synthesize with models 1..3,
    score every (measure, model) pair, and record whether the measure ranks
    the models strictly in their true quality order (model 1 worst).  Ties
    count as incorrect.  Replication r uses RNG streams derived from
    (seed, r), so results do not depend on evaluation order.
    """
    measures = tuple(measures)
    unknown = set(measures) - set(MEASURES)
    if unknown:
        raise InputError(f"unknown measures {sorted(unknown)}; choose from {MEASURES}")
    if replications < 1:
        raise InputError("need at least one replication")
    base_seed = config.seed if seed is None else seed
    scores = np.empty((replications, len(measures), 3))
    for rep in range(replications):
        streams = [
            np.random.default_rng(s)
            for s in np.random.SeedSequence([base_seed, rep]).spawn(5)
        ]
        real = gen_multivariate(config, seed=streams[0])
        fit_seed = int(streams[4].integers(2**63))
        for m_idx, model_id in enumerate((1, 2, 3)):
            synthetic = synthesize(model_id, real, streams[1 + m_idx])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # separation warnings are routine here
                fm_obs, fm_syn = encode_pair(real, synthetic)
                for j, measure in enumerate(measures):
                    scores[rep, j, m_idx] = _score_pair(
                        measure, fm_obs, fm_syn, fit_seed, cart_resamples
                    )
    ordering = (scores[:, :, 0] > scores[:, :, 1]) & (scores[:, :, 1] > scores[:, :, 2])
    return ExperimentResult(
        config=config, measures=measures, scores=scores, ordering=ordering
    )


# ----------------------------------------------------------------------
# univariate recovery experiment (ratio estimates on a grid)
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class UnivariateExperimentResult:
    """Grid evaluations of the kernel and k-NN ratio estimators."""

    scenario: str
    grid: np.ndarray
    ulsif_grid: np.ndarray  # (replications, grid)
    knn_grid: np.ndarray  # (replications, grid)
    pearson_divergences: np.ndarray
    truth: np.ndarray

    def mean_ulsif(self):
        return self.ulsif_grid.mean(axis=0)

    def mean_knn(self):
        return self.knn_grid.mean(axis=0)


def run_univariate_experiment(scenario, n, replications, seed=0, grid=None,
                              knn_k=15, estimator=None):
    """Replicate one univariate scenario and evaluate estimators on a grid.

    Fits the kernel ratio model per replication (on the raw scale, where the
    analytic truth lives) and evaluates both it and the k-NN estimator at the
    grid points.
    """
    if grid is None:
        grid = np.linspace(-1.0, 3.0, 41)
    grid = np.asarray(grid, dtype=np.float64)
    proto = UlsifEstimator() if estimator is None else estimator
    ulsif_grid = np.empty((replications, grid.size))
    knn_grid = np.empty((replications, grid.size))
    pes = np.empty(replications)
    for rep in range(replications):
        data_stream, fit_stream = np.random.SeedSequence([seed, rep]).spawn(2)
        observed, synthetic = gen_univariate(scenario, n, np.random.default_rng(data_stream))
        est = clone(proto)
        est.set_params(random_state=int(np.random.default_rng(fit_stream).integers(2**63)))
        est.fit(observed[:, None], synthetic[:, None])
        ulsif_grid[rep] = est.predict(grid[:, None])
        knn_grid[rep] = knn_ratio_at(
            grid[:, None], observed[:, None], synthetic[:, None], knn_k
        )
        pes[rep] = est.pearson_divergence(observed[:, None], synthetic[:, None])
    return UnivariateExperimentResult(
        scenario=scenario,
        grid=grid,
        ulsif_grid=ulsif_grid,
        knn_grid=knn_grid,
        pearson_divergences=pes,
        truth=true_ratio(scenario, grid),
    )
