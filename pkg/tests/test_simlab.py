"""Simulation generator and harness tests."""

import numpy as np
import pytest
from scipy import stats

from synthratio.errors import InputError
from synthratio.simlab import (
    MultivariateConfig,
    gen_multivariate,
    gen_univariate,
    run_ranking_experiment,
    run_univariate_experiment,
    synthesize,
    true_ratio,
)


class TestUnivariateGenerators:
    @pytest.mark.parametrize("scenario", ["laplace", "lognormal", "t_ls", "normal"])
    def test_moments_match_one_and_two(self, scenario):
        observed, synthetic = gen_univariate(scenario, 10**6, seed=123)
        assert observed.mean() == pytest.approx(1.0, abs=0.01)
        assert observed.var() == pytest.approx(2.0, rel=0.01)
        assert synthetic.mean() == pytest.approx(1.0, abs=0.01)
        assert synthetic.var() == pytest.approx(2.0, rel=0.01)

    def test_lognormal_support_positive(self):
        observed, _ = gen_univariate("lognormal", 5000, seed=1)
        assert observed.min() > 0

    def test_normal_scenario_identical_laws(self):
        observed, synthetic = gen_univariate("normal", 10**4, seed=2)
        stat = stats.ks_2samp(observed, synthetic).statistic
        assert stat < 0.03

    def test_deterministic_per_seed(self):
        a = gen_univariate("laplace", 100, seed=9)
        b = gen_univariate("laplace", 100, seed=9)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_unknown_scenario(self):
        with pytest.raises(InputError):
            gen_univariate("cauchy", 100, seed=0)

    def test_true_ratio_normal_is_one(self):
        x = np.linspace(-3, 5, 30)
        np.testing.assert_allclose(true_ratio("normal", x), 1.0, atol=1e-12)

    def test_true_ratio_integrates_against_denominator(self):
        # r(x) * p_syn(x) must integrate to one (it recovers the observed pdf)
        from scipy import integrate

        # range capped where the Gaussian denominator underflows float64
        for scenario in ("laplace", "lognormal", "t_ls"):
            total, _ = integrate.quad(
                lambda x: true_ratio(scenario, x)
                * stats.norm(1, np.sqrt(2)).pdf(x),
                -20,
                40,
                limit=400,
            )
            assert total == pytest.approx(1.0, abs=1e-4)


class TestMultivariateGenerator:
    def test_pairwise_correlation_half(self):
        config = MultivariateConfig(D=5, n=10**5)
        data = gen_multivariate(config, seed=3)
        X = np.column_stack([np.asarray(c) for c in data.values])
        corr = np.corrcoef(X[:, :4], rowvar=False)
        off = corr[np.triu_indices(4, 1)]
        np.testing.assert_allclose(off, 0.5, atol=0.01)

    def test_nonlinear_column_tracks_square(self):
        config = MultivariateConfig(D=5, n=10**4)
        data = gen_multivariate(config, seed=4)
        X = np.column_stack([np.asarray(c) for c in data.values])
        corr_lin = np.corrcoef(X[:, 4], X[:, 0])[0, 1]
        corr_sq = np.corrcoef(X[:, 4], X[:, 0] ** 2)[0, 1]
        assert abs(corr_lin) < 0.1
        assert corr_sq > 0.5

    def test_wide_table_heavy_tails(self):
        config = MultivariateConfig(D=25, n=10**4)
        data = gen_multivariate(config, seed=5)
        X = np.column_stack([np.asarray(c) for c in data.values])
        assert X.shape == (10**4, 25)
        last = X[:, 24]  # source column raised to the 6th power plus noise
        assert stats.kurtosis(last, fisher=False) > 3

    def test_invalid_dimension(self):
        with pytest.raises(InputError):
            gen_multivariate(MultivariateConfig(D=7, n=100), seed=0)


@pytest.fixture(scope="module")
def real_data():
    return gen_multivariate(MultivariateConfig(D=5, n=10**4), seed=6)


class TestSynthesize:
    def test_model1_kills_correlations(self, real_data):
        syn = synthesize(1, real_data, seed=7)
        X = np.column_stack([np.asarray(c) for c in syn.values])
        corr = np.corrcoef(X[:, :4], rowvar=False)
        np.testing.assert_allclose(corr[np.triu_indices(4, 1)], 0.0, atol=0.05)

    def test_model2_keeps_covariance_drops_nonlinearity(self, real_data):
        syn = synthesize(2, real_data, seed=8)
        X = np.column_stack([np.asarray(c) for c in syn.values])
        assert np.corrcoef(X[:, 0], X[:, 1])[0, 1] == pytest.approx(0.5, abs=0.05)
        corr_sq = np.corrcoef(X[:, 4], X[:, 0] ** 2)[0, 1]
        assert abs(corr_sq) < 0.1

    def test_model3_recovers_nonlinearity(self, real_data):
        syn = synthesize(3, real_data, seed=9)
        X_real = np.column_stack([np.asarray(c) for c in real_data.values])
        X_syn = np.column_stack([np.asarray(c) for c in syn.values])
        real_corr = np.corrcoef(X_real[:, 4], X_real[:, 0] ** 2)[0, 1]
        syn_corr = np.corrcoef(X_syn[:, 4], X_syn[:, 0] ** 2)[0, 1]
        assert syn_corr == pytest.approx(real_corr, abs=0.1)

    def test_matched_moments(self, real_data):
        X_real = np.column_stack([np.asarray(c) for c in real_data.values])
        for model in (1, 2, 3):
            syn = synthesize(model, real_data, seed=10 + model)
            X_syn = np.column_stack([np.asarray(c) for c in syn.values])
            np.testing.assert_allclose(
                X_syn[:, :4].mean(axis=0), X_real[:, :4].mean(axis=0), atol=0.1
            )
            np.testing.assert_allclose(
                X_syn[:, :4].std(axis=0), X_real[:, :4].std(axis=0), rtol=0.05
            )

    def test_same_row_count_and_names(self, real_data):
        syn = synthesize(2, real_data, seed=11)
        assert syn.n_rows == real_data.n_rows
        assert syn.names == real_data.names

    def test_unknown_model(self, real_data):
        with pytest.raises(InputError):
            synthesize(4, real_data, seed=0)


class TestRankingExperiment:
    def test_smoke_and_determinism(self):
        config = MultivariateConfig(D=5, n=80)
        a = run_ranking_experiment(config, ("PE", "KL_1"), 4, seed=13)
        b = run_ranking_experiment(config, ("PE", "KL_1"), 4, seed=13)
        np.testing.assert_array_equal(a.scores, b.scores)
        assert a.scores.shape == (4, 2, 3)
        assert a.ordering.shape == (4, 2)
        props = a.proportions()
        assert set(props) == {"PE", "KL_1"}
        for value in props.values():
            assert 0.0 <= value <= 1.0

    def test_ordering_is_strict(self):
        config = MultivariateConfig(D=5, n=60)
        result = run_ranking_experiment(config, ("KL_1",), 3, seed=14)
        s = result.scores[:, 0, :]
        expected = (s[:, 0] > s[:, 1]) & (s[:, 1] > s[:, 2])
        np.testing.assert_array_equal(result.ordering[:, 0], expected)

    def test_unknown_measure_rejected(self):
        with pytest.raises(InputError):
            run_ranking_experiment(MultivariateConfig(D=5, n=50), ("XYZ",), 2)

    def test_cart_measure_runs(self):
        config = MultivariateConfig(D=5, n=60)
        result = run_ranking_experiment(
            config, ("pMSE_cart",), 2, seed=15, cart_resamples=20
        )
        assert np.all(result.scores > 0)


class TestUnivariateExperiment:
    def test_shapes_and_determinism(self):
        a = run_univariate_experiment("normal", 60, 3, seed=16, knn_k=5)
        b = run_univariate_experiment("normal", 60, 3, seed=16, knn_k=5)
        np.testing.assert_array_equal(a.ulsif_grid, b.ulsif_grid)
        assert a.grid.shape == (41,)
        assert a.ulsif_grid.shape == (3, 41)
        assert a.knn_grid.shape == (3, 41)
        assert a.pearson_divergences.shape == (3,)
        np.testing.assert_allclose(a.truth, 1.0, atol=1e-12)
