import csv

import numpy as np
import pytest

from rpflab.errors import ConfigurationError
from rpflab.experiments import (
    ExperimentConfig,
    average_replicates,
    exp_ess_spacing,
    exp_lnas,
    exp_logistic,
    exp_shifted_prior,
    exp_stationary,
    kalman_reference,
    plateau,
    rmse_trace,
    spacing_ratios,
    write_result,
)
from rpflab.kalman import stationary_closed_form
from rpflab.models import GaussianBelief
from rpflab.smc import FilterTrace, ParticleEnsemble


def fake_trace(means, covs):
    means = np.asarray(means, dtype=float).reshape(len(means), -1)
    d = means.shape[1]
    n = len(means)
    covs = np.asarray(covs, dtype=float).reshape(n, d, d)
    ens = ParticleEnsemble.uniform(np.zeros((2, d)))
    return FilterTrace(
        n_particles=2,
        mean=means,
        cov=covs,
        ess=np.full(n, 2.0),
        resampled=np.zeros(n, dtype=bool),
        alpha=np.zeros(n),
        log_marginal=np.zeros(n),
        degenerate=np.zeros(n, dtype=bool),
        final=ens,
    )


class TestConfig:
    @pytest.mark.parametrize(
        "changes",
        [
            {"model": "nope"},
            {"policy": "sometimes"},
            {"schedule": "magic"},
            {"replicates": 0},
            {"n_particles": 1},
            {"seed": -1},
            {"ess_crit": 1.0},
            {"period": 0},
            {"alpha_h": 1.5},
            {"quench_step": 5},
            {"theta": (1.0, 2.0)},
        ],
    )
    def test_rejects(self, changes):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(**changes)

    def test_replicate_seeds(self):
        assert ExperimentConfig(seed=7, replicates=3).replicate_seeds() == [7, 8, 9]

    def test_theta_is_float_tuple(self):
        assert ExperimentConfig(theta=[1, 2, 3]).theta == (1.0, 2.0, 3.0)


class TestStatistics:
    def test_rmse_with_covariance(self):
        tr = fake_trace([[1.0], [0.0]], [[[3.0]], [[0.0]]])
        np.testing.assert_allclose(rmse_trace(tr, np.zeros(1)), [2.0, 0.0])
        np.testing.assert_allclose(rmse_trace(tr, np.zeros(1), normalizer=2.0), [1.0, 0.0])

    def test_rmse_components(self):
        tr = fake_trace([[3.0, 100.0]], [np.diag([0.0, 5.0])])
        np.testing.assert_allclose(rmse_trace(tr, np.zeros(2), components=(0,)), [3.0])

    def test_rmse_shape_mismatch(self):
        tr = fake_trace([[0.0]], [[[1.0]]])
        with pytest.raises(ValueError):
            rmse_trace(tr, np.zeros(2))

    def test_plateau(self):
        assert plateau(np.arange(10.0)) == pytest.approx(8.5)
        assert plateau([4.0]) == 4.0

    def test_average_two_replicates(self):
        a = fake_trace([[1.0], [1.0]], np.zeros(2))
        b = fake_trace([[3.0], [1.0]], np.zeros(2))
        s = average_replicates([a, b], np.zeros(1))
        np.testing.assert_allclose(s.rmse_mean, [2.0, 1.0])
        np.testing.assert_allclose(s.rmse_std, [1.0, 0.0])
        np.testing.assert_allclose(s.mean_mean[:, 0], [2.0, 1.0])

    def test_average_single_replicate_has_zero_spread(self):
        s = average_replicates([fake_trace([[0.5]], [[[0.0]]])], np.zeros(1))
        np.testing.assert_allclose(s.rmse_std, 0.0)

    def test_average_rejects(self):
        with pytest.raises(ValueError):
            average_replicates([], np.zeros(1))
        with pytest.raises(ValueError):
            average_replicates([fake_trace([[0.0]], [[[0.0]]]), fake_trace([[0.0]] * 2, np.zeros(2))], np.zeros(1))

    def test_spacing_ratios(self):
        np.testing.assert_allclose(spacing_ratios([1, 2, 4, 8]), [2.0, 2.0])
        assert spacing_ratios([1, 5]).size == 0

    def test_kalman_reference_matches_closed_form(self):
        rng = np.random.default_rng(0)
        prior = GaussianBelief(np.array([0.5, -1.0]), np.array([[1.0, 0.3], [0.3, 2.0]]))
        R = np.array([[0.4, 0.1], [0.1, 0.3]])
        ys = rng.standard_normal((50, 2))
        means, covs = kalman_reference(prior, ys, np.repeat(R[None], 50, axis=0))
        for n in (1, 10, 50):
            ref = stationary_closed_form(n, prior, R, ys[:n].mean(axis=0))
            np.testing.assert_allclose(means[n - 1], ref.mean, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(covs[n - 1], ref.cov, rtol=1e-12, atol=1e-12)


class TestStationary:
    def test_shapes_and_labels(self):
        res = exp_stationary(ExperimentConfig(n_particles=100, horizon=30, replicates=2))
        assert set(res.summaries) == {"rpf", "sir", "sis"}
        assert all(len(v) == 2 for v in res.traces.values())
        assert set(res.overlays) == {"kalman_rmse", "kalman_sd", "fixed_point_rmse"}
        assert res.overlays["kalman_rmse"].shape == (30,)

    def test_kalman_overlay_is_exact(self):
        cfg = ExperimentConfig(n_particles=50, horizon=40, replicates=1, policy="never", oracle_mode=True)
        res = exp_stationary(cfg)
        prior = GaussianBelief.scalar(1.0, 1.0)
        for n in (1, 40):
            ref = stationary_closed_form(n, prior, np.array([[0.25]]), np.zeros(1))
            expected = np.sqrt(ref.mean[0] ** 2 + ref.cov[0, 0])
            assert res.overlays["kalman_rmse"][n - 1] == pytest.approx(expected, rel=1e-12)

    def test_variants_share_data(self):
        res = exp_stationary(ExperimentConfig(n_particles=100, horizon=5, replicates=2, policy="never"))
        assert set(res.summaries) == {"rpf", "sis"}
        np.testing.assert_array_equal(res.traces["rpf"][0].mean, res.traces["sis"][0].mean)

    def test_workers_do_not_change_results(self):
        cfg = ExperimentConfig(n_particles=100, horizon=20, replicates=3)
        a = exp_stationary(cfg)
        b = exp_stationary(cfg.replace(workers=2))
        for label in a.traces:
            for ta, tb in zip(a.traces[label], b.traces[label]):
                np.testing.assert_array_equal(ta.mean, tb.mean)

    def test_periodic_band_overlay(self):
        res = exp_stationary(ExperimentConfig(n_particles=100, horizon=10, policy="periodic"))
        assert np.all(res.overlays["band_lower"] < res.overlays["band_upper"])

    def test_plateau_decreases_with_particles(self):
        small = exp_stationary(ExperimentConfig(n_particles=1000, horizon=300, replicates=4, seed=1))
        large = exp_stationary(ExperimentConfig(n_particles=10_000, horizon=300, replicates=4, seed=1))
        assert large.summaries["rpf"].plateau < small.summaries["rpf"].plateau

    def test_wrong_model(self):
        with pytest.raises(ConfigurationError):
            exp_stationary(ExperimentConfig(model="logistic"))


class TestOtherScenarios:
    def test_shifted_prior_report(self):
        res = exp_shifted_prior(ExperimentConfig(n_particles=100, horizon=20, replicates=2, prior_shift=3.0))
        assert set(res.report) == {"rpf", "sir"}
        assert res.report["rpf"]["sd_ratio_final"].shape == (2,)
        assert res.report["rpf"]["collapsed"].dtype == bool

    def test_ess_spacing_target(self):
        rep = exp_ess_spacing(ExperimentConfig(n_particles=200, horizon=200, policy="ess", oracle_mode=True))
        assert rep.target == pytest.approx(7.4641, abs=1e-4)
        assert rep.ratio_matrix(2).shape == (1, 2)
        np.testing.assert_array_equal(rep.times[0], rep.result.traces["rpf"][0].resampling_times)

    def test_ess_spacing_always(self):
        rep = exp_ess_spacing(ExperimentConfig(n_particles=50, horizon=10, policy="always"))
        assert rep.target == 1.0
        np.testing.assert_allclose(rep.ratios[0], 1.0)

    def test_ess_spacing_rejects_other_policies(self):
        with pytest.raises(ConfigurationError):
            exp_ess_spacing(ExperimentConfig(policy="never"))

    def test_logistic_labels(self):
        res = exp_logistic(ExperimentConfig(model="logistic", n_particles=100, horizon=10))
        assert set(res.summaries) == {"always", "ess", "harmonic", "oracle-always", "oracle-ess", "oracle-harmonic"}
        assert res.components == (0,)

    def test_logistic_unknown_variant(self):
        with pytest.raises(ConfigurationError):
            exp_logistic(ExperimentConfig(model="logistic", horizon=5), variants=("bogus",))

    def test_lnas_table(self):
        res = exp_lnas(ExperimentConfig(model="lnas", n_particles=100, horizon=20, snapshot=20))
        assert len(res.table) == 3 * 4 * 2
        assert {row[0] for row in res.table} == {"RUE", "gamma", "mu_a"}

    def test_lnas_snapshot_range(self):
        with pytest.raises(ConfigurationError):
            exp_lnas(ExperimentConfig(model="lnas", horizon=20, snapshot=21))

    def test_lnas_missing_weather_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            exp_lnas(ExperimentConfig(model="lnas", horizon=5, weather=str(tmp_path / "none.csv")))


class TestCsv:
    def test_layout_and_header(self, tmp_path):
        res = exp_stationary(ExperimentConfig(n_particles=50, horizon=6, replicates=2, seed=4))
        paths = write_result(res, tmp_path)
        assert (tmp_path / "rpf" / "r5" / "trace.csv") in paths
        assert (tmp_path / "overlays.csv").exists()
        with open(tmp_path / "rpf" / "r4" / "trace.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["step", "resampled", "ess_norm", "alpha", "rmse", "log_marginal", "mu_1", "sigma_trace"]
        assert len(rows) == 7 and rows[1][0] == "1"
        assert float(rows[-1][4]) == res.summaries["rpf"].rmse[0, -1]

    def test_byte_identical_rerun(self, tmp_path):
        cfg = ExperimentConfig(n_particles=50, horizon=6, replicates=2)
        write_result(exp_stationary(cfg), tmp_path / "a")
        write_result(exp_stationary(cfg), tmp_path / "b")
        for f in (tmp_path / "a").rglob("*.csv"):
            assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()
