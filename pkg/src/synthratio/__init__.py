"""Synthetic data utility evaluation through direct density ratio estimation.

Estimate the ratio of the observed-data density to the synthetic-data
density without estimating either density, then use it three ways: as a
global utility score (Pearson divergence, with a permutation test), as
per-record local utility, and as importance weights that debias analyses run
on the synthetic data.  Baselines (pMSE-ratio, k-NN KL divergence) and the
simulation harness used to validate the measures are included.
"""

__version__ = "0.1.0"

from .dataset import Dataset, FeatureMatrix, PairEncoder, encode_pair, load_csv
from .inference import PermutationTestResult, permutation_test
from .kernels import (
    gaussian_kernel,
    lambda_grid,
    pairwise_sq_distances,
    sample_centers,
    sigma_grid,
)
from .knn import KnnRatioResult, default_k, kl_divergence_knn, knn_density_ratio
from .pmse import (
    PmseReport,
    StackedSample,
    expected_pmse_logit,
    fit_cart,
    fit_logit,
    pmse,
    pmse_ratio,
    stack_samples,
)
from .reweight import (
    RegressionResult,
    WeightVector,
    importance_weights,
    weighted_least_squares,
)
from .simlab import (
    ExperimentResult,
    MultivariateConfig,
    gen_multivariate,
    gen_univariate,
    run_ranking_experiment,
    run_univariate_experiment,
    synthesize,
    true_ratio,
)
from .ulsif import RatioVector, UlsifEstimator, fit_ulsif, pearson_divergence, predict_ratio

__all__ = [
    "__version__",
    "Dataset",
    "FeatureMatrix",
    "PairEncoder",
    "encode_pair",
    "load_csv",
    "pairwise_sq_distances",
    "gaussian_kernel",
    "sigma_grid",
    "lambda_grid",
    "sample_centers",
    "UlsifEstimator",
    "RatioVector",
    "fit_ulsif",
    "predict_ratio",
    "pearson_divergence",
    "KnnRatioResult",
    "knn_density_ratio",
    "kl_divergence_knn",
    "default_k",
    "StackedSample",
    "stack_samples",
    "fit_logit",
    "fit_cart",
    "pmse",
    "expected_pmse_logit",
    "pmse_ratio",
    "PmseReport",
    "PermutationTestResult",
    "permutation_test",
    "WeightVector",
    "RegressionResult",
    "importance_weights",
    "weighted_least_squares",
    "MultivariateConfig",
    "ExperimentResult",
    "gen_univariate",
    "gen_multivariate",
    "synthesize",
    "true_ratio",
    "run_ranking_experiment",
    "run_univariate_experiment",
]
