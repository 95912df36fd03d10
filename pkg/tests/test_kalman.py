import numpy as np
import pytest

from rpflab import kalman
from rpflab.checks import random_spd
from rpflab.errors import ConfigurationError
from rpflab.models import GaussianBelief
from rpflab.smc import rule_of_thumb_alpha

ALPHA_H = rule_of_thumb_alpha(1000, 1)


class TestPredict:
    def test_identity(self):
        b = GaussianBelief(np.array([1.0, 2.0]), np.array([[2.0, 0.3], [0.3, 1.0]]))
        out = kalman.kalman_predict(b, np.eye(2), np.zeros((2, 2)))
        np.testing.assert_array_equal(out.mean, b.mean)
        np.testing.assert_array_equal(out.cov, b.cov)

    def test_scaling(self):
        b = GaussianBelief.scalar(1.0, 0.5)
        for _ in range(5):
            b = kalman.kalman_predict(b, 1.5, 0.0)
        assert b.cov[0, 0] == pytest.approx(0.5 * 1.5**10)

    def test_monte_carlo(self):
        rng = np.random.default_rng(0)
        cov = random_spd(rng, 2)
        A = np.array([[0.9, 0.2], [-0.1, 1.1]])
        Q = random_spd(rng, 2, 0.3)
        b = GaussianBelief(np.array([0.5, -1.0]), cov)
        out = kalman.kalman_predict(b, A, Q)
        x = rng.multivariate_normal(b.mean, cov, 1_000_000) @ A.T
        x += rng.multivariate_normal(np.zeros(2), Q, 1_000_000)
        np.testing.assert_allclose(np.cov(x.T), out.cov, rtol=0.02, atol=0.01)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            kalman.kalman_predict(GaussianBelief.scalar(0.0, 1.0), np.eye(2), np.eye(2))


class TestUpdate:
    def test_hand_value(self):
        out = kalman.kalman_update(GaussianBelief.scalar(0.0, 1.0), 1.0, 1.0, 1.0)
        np.testing.assert_allclose(out.mean, [0.5])
        np.testing.assert_allclose(out.cov, [[0.5]])

    def test_uninformative(self):
        prior = GaussianBelief(np.array([0.3, -0.2]), np.diag([1.0, 2.0]))
        out = kalman.kalman_update(prior, np.array([5.0, 5.0]), np.eye(2), 1e15 * np.eye(2))
        np.testing.assert_allclose(out.mean, prior.mean, atol=1e-12)
        np.testing.assert_allclose(out.cov, prior.cov, rtol=1e-12)

    def test_zero_observation_matrix(self):
        prior = GaussianBelief(np.array([0.3, -0.2]), np.diag([1.0, 2.0]))
        out = kalman.kalman_update_gain(prior, np.array([5.0, 5.0]), np.zeros((2, 2)), np.eye(2))
        np.testing.assert_allclose(out.mean, prior.mean)
        np.testing.assert_allclose(out.cov, prior.cov)

    def test_forms_agree(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            d = int(rng.integers(1, 5))
            pred = GaussianBelief(rng.standard_normal(d), random_spd(rng, d))
            B = rng.standard_normal((d, d)) + 2 * np.eye(d)
            R = random_spd(rng, d, 0.5)
            y = rng.standard_normal(d)
            a = kalman.kalman_update(pred, y, B, R)
            b = kalman.kalman_update_gain(pred, y, B, R)
            np.testing.assert_allclose(a.mean, b.mean, rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(a.cov, b.cov, rtol=1e-10, atol=1e-10)


class TestKalmanFilter:
    def test_evidence_matches_joint_gaussian(self):
        from scipy.stats import multivariate_normal

        # stationary scalar model: y ~ N(mu0 1, s0 11^T + R I)
        ys = np.array([0.3, -0.1, 0.8, 0.2])
        _, log_ev = kalman.kalman_filter(GaussianBelief.scalar(0.5, 2.0), ys, 1.0, 1.0, 0.0, 0.25)
        joint = multivariate_normal(np.full(4, 0.5), 2.0 * np.ones((4, 4)) + 0.25 * np.eye(4))
        assert log_ev == pytest.approx(joint.logpdf(ys), rel=1e-12)

    def test_scalar_dichotomy(self):
        R = 0.5
        for a, expect_floor in ((1.2, True), (0.8, False)):
            b = GaussianBelief.scalar(0.0, 1.0)
            covs = []
            for _ in range(500):
                b = kalman.kalman_update(kalman.kalman_predict(b, a, 0.0), 0.0, 1.0, R)
                covs.append(b.cov[0, 0])
            if expect_floor:
                assert min(covs) >= (1 - a**-2) * R - 1e-12
            else:
                assert covs[-1] < 1e-6


class TestStationaryClosedForm:
    def test_hand_value(self):
        out = kalman.stationary_closed_form(1, GaussianBelief.scalar(0.0, 1.0), 1.0, 1.0)
        np.testing.assert_allclose(out.cov, [[0.5]])

    def test_zero_steps(self):
        prior = GaussianBelief.scalar(0.2, 1.0)
        assert kalman.stationary_closed_form(0, prior, 1.0, 99.0) is prior

    def test_matches_iteration(self):
        rng = np.random.default_rng(2)
        prior = GaussianBelief(np.array([0.4, -0.3]), random_spd(rng, 2))
        R = random_spd(rng, 2, 0.4)
        ys = rng.standard_normal((300, 2))
        b = prior
        for n in range(1, 301):
            b = kalman.kalman_update(b, ys[n - 1], np.eye(2), R)
            if n in (1, 7, 50, 300):
                c = kalman.stationary_closed_form(n, prior, R, ys[:n].mean(axis=0))
                np.testing.assert_allclose(c.mean, b.mean, rtol=1e-10, atol=1e-12)
                np.testing.assert_allclose(c.cov, b.cov, rtol=1e-10)

    def test_cramer_rao(self):
        out = kalman.stationary_closed_form(10_000, GaussianBelief.scalar(0.0, 1.0), 0.25, 0.0)
        assert 10_000 * out.cov[0, 0] / 0.25 == pytest.approx(1.0, abs=1e-3)


class TestPerturbedRecursion:
    def test_hand_value(self):
        out = kalman.perturbed_recursion_step(GaussianBelief.scalar(0.0, 1.0), 1.0, 1.0, 0.1)
        np.testing.assert_allclose(out.cov, [[0.55]])
        np.testing.assert_allclose(out.mean, [0.5])

    def test_zero_alpha_is_kalman(self):
        prior = GaussianBelief.scalar(0.3, 2.0)
        a = kalman.perturbed_recursion_step(prior, 1.0, 0.5, 0.0)
        b = kalman.kalman_update(prior, 1.0, 1.0, 0.5)
        np.testing.assert_array_equal(a.cov, b.cov)
        np.testing.assert_array_equal(a.mean, b.mean)

    def test_rejects_negative_alpha(self):
        with pytest.raises(ValueError):
            kalman.perturbed_recursion_step(GaussianBelief.scalar(0.0, 1.0), 1.0, 1.0, -0.1)


class TestAlphaSequences:
    def test_values(self):
        np.testing.assert_array_equal(kalman.Zero().values(3), [0, 0, 0])
        np.testing.assert_array_equal(kalman.Constant(0.2).values(2), [0.2, 0.2])
        np.testing.assert_array_equal(kalman.Periodic(0.2, 3).values(6), [0, 0, 0.2, 0, 0, 0.2])
        np.testing.assert_allclose(kalman.Harmonic(0.5).values(2), [0.5 / 1.5, 0.5 / 2.0])
        np.testing.assert_allclose(kalman.ExponentialDecay(0.5).values(1), [0.5 * np.exp(-0.5)])
        np.testing.assert_allclose(kalman.PowerLaw(0.4).values(2), [1.0, 2.0**-0.6])

    def test_call(self):
        assert kalman.Harmonic(0.1)(10) == pytest.approx(0.05)

    def test_explicit_bounds(self):
        seq = kalman.Explicit([0.1, 0.2])
        with pytest.raises(ValueError):
            seq.values(3)
        with pytest.raises(ValueError):
            kalman.Explicit([-0.1])

    def test_periodic_rejects_zero_period(self):
        with pytest.raises(ConfigurationError):
            kalman.Periodic(0.1, 0)


class TestLemmaClosedForm:
    def test_zero_sequence_is_stationary(self):
        prior = GaussianBelief.scalar(0.3, 1.0)
        ys = np.random.default_rng(0).standard_normal(40)
        a = kalman.lemma_closed_form(40, prior, 0.25, ys, kalman.Zero())
        b = kalman.stationary_closed_form(40, prior, 0.25, ys.mean())
        np.testing.assert_allclose(a.mean, b.mean, rtol=1e-12)
        np.testing.assert_allclose(a.cov, b.cov, rtol=1e-12)

    def test_constant_matches_iteration(self):
        prior = GaussianBelief.scalar(1.0, 1.0)
        ys = 0.5 * np.random.default_rng(1).standard_normal(500)
        seq = kalman.Constant(ALPHA_H)
        b = prior
        for n in range(1, 501):
            b = kalman.perturbed_recursion_step(b, ys[n - 1], 0.25, ALPHA_H)
            if n % 50 == 1:
                c = kalman.lemma_closed_form(n, prior, 0.25, ys, seq)
                np.testing.assert_allclose(c.mean, b.mean, rtol=1e-10, atol=1e-12)
                np.testing.assert_allclose(c.cov, b.cov, rtol=1e-10)

    def test_random_sequence(self):
        rng = np.random.default_rng(2)
        alphas = rng.uniform(0, 0.5, 50)
        ys = rng.standard_normal(50)
        prior = GaussianBelief.scalar(-0.4, 0.7)
        b = prior
        for k in range(50):
            b = kalman.perturbed_recursion_step(b, ys[k], 0.3, alphas[k])
        c = kalman.lemma_closed_form(50, prior, 0.3, ys, kalman.Explicit(alphas))
        np.testing.assert_allclose(c.mean, b.mean, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(c.cov, b.cov, rtol=1e-12)

    def test_no_overflow(self):
        # prod (1 + 0.5)^5000 overflows a double
        ys = np.zeros(5000)
        c = kalman.lemma_closed_form(5000, GaussianBelief.scalar(1.0, 1.0), 0.25, ys, kalman.Constant(0.5))
        assert np.all(np.isfinite(c.cov)) and np.all(np.isfinite(c.mean))
        np.testing.assert_allclose(c.cov, [[0.5 * 0.25]], rtol=1e-10)

    def test_needs_enough_observations(self):
        with pytest.raises(ValueError):
            kalman.lemma_closed_form(5, GaussianBelief.scalar(0.0, 1.0), 1.0, np.zeros(3), kalman.Zero())

    def test_covariance_sequence_matches(self):
        seq = kalman.Harmonic(ALPHA_H)
        covs = kalman.covariance_sequence(seq, 200, 1.0, 0.25)
        for n in (1, 10, 200):
            c = kalman.lemma_closed_form(n, GaussianBelief.scalar(0.0, 1.0), 0.25, np.zeros(n), seq)
            assert covs[n - 1] == pytest.approx(c.cov[0, 0], rel=1e-12)


class TestFixedPoints:
    def test_hand_value(self):
        cov, resid = kalman.rpf_fixed_point(ALPHA_H, 0.25)
        assert ALPHA_H == pytest.approx(0.0708, abs=1e-4)
        assert cov[0, 0] == pytest.approx(0.0177, abs=1e-4)
        assert resid[0, 0] == pytest.approx(ALPHA_H * 0.25 / (2 + ALPHA_H))

    def test_vanishing_bandwidth(self):
        cov, resid = kalman.rpf_fixed_point(1e-12, 0.25)
        assert cov[0, 0] < 1e-12 and resid[0, 0] < 1e-12

    def test_convergence(self):
        covs = kalman.covariance_sequence(kalman.Constant(ALPHA_H), int(50 / ALPHA_H), 1.0, 0.25)
        assert abs(covs[-1] / (ALPHA_H * 0.25) - 1) < 1e-6

    def test_exponential_attraction(self):
        covs = kalman.covariance_sequence(kalman.Constant(ALPHA_H), 300, 1.0, 0.25)
        err = np.abs(covs - ALPHA_H * 0.25)
        below = np.flatnonzero(covs < 1.0)
        assert np.all(np.diff(err[below[0] :]) <= 0)
        n = np.arange(100, 300)
        slope = np.polyfit(n, np.log(err[n - 1]), 1)[0]
        assert slope == pytest.approx(-ALPHA_H, rel=0.2)

    def test_periodic_reduces_to_constant(self):
        a, ra = kalman.periodic_fixed_point(ALPHA_H, 1, 0, 0.25)
        b, rb = kalman.rpf_fixed_point(ALPHA_H, 0.25)
        np.testing.assert_allclose(a, b)
        np.testing.assert_allclose(ra, rb)

    def test_periodic_hand_value(self):
        cov, _ = kalman.periodic_fixed_point(ALPHA_H, 2, 0, 0.25)
        assert cov[0, 0] == pytest.approx(0.00885, abs=1e-5)

    def test_periodic_sequence_inside_band(self):
        lo, hi = kalman.periodic_band(ALPHA_H, 2, 0.25)
        covs = kalman.covariance_sequence(kalman.Periodic(ALPHA_H, 2), 4000, 1.0, 0.25)
        tail = covs[-200:]
        assert tail.min() >= lo[0, 0] * (1 - 1e-9) and tail.max() <= hi[0, 0] * (1 + 1e-9)
        np.testing.assert_allclose([tail.min(), tail.max()], [lo[0, 0], hi[0, 0]], rtol=1e-9)

    def test_periodic_phases(self):
        p = 3
        covs = kalman.covariance_sequence(kalman.Periodic(ALPHA_H, p), 3000, 1.0, 0.25)
        for q in range(p):
            cov, _ = kalman.periodic_fixed_point(ALPHA_H, p, q, 0.25)
            n = 3000 - ((3000 - q) % p)  # last n with n mod p == q
            assert covs[n - 1] == pytest.approx(cov[0, 0], rel=1e-9)

    def test_periodic_validation(self):
        with pytest.raises(ValueError):
            kalman.periodic_fixed_point(ALPHA_H, 2, 2, 0.25)

    def test_asymptotic_rmse(self):
        cov, resid = kalman.rpf_fixed_point(ALPHA_H, 0.25)
        assert kalman.asymptotic_rmse(cov, resid) == pytest.approx(np.sqrt(ALPHA_H * 0.25 * (1 + 1 / (2 + ALPHA_H))))


class TestRates:
    def test_harmonic(self):
        r = kalman.optimal_rate_check(kalman.Harmonic(ALPHA_H), 10_000)
        assert r.final == pytest.approx(2.0, rel=0.05)

    def test_exponential_decay_bounded(self):
        r = kalman.optimal_rate_check(kalman.ExponentialDecay(ALPHA_H), 10_000)
        assert r.sup <= 3.0
        # the perturbations stop after a few 1/alpha_h steps and the curve flattens out
        assert abs(r.scaled_cov[-1] - r.scaled_cov[-1000]) < 1e-3

    def test_zero(self):
        r = kalman.optimal_rate_check(kalman.Zero(), 10_000)
        assert r.final == pytest.approx(1.0, abs=1e-3)

    def test_slow_decay_is_suboptimal(self):
        n_max = 10_000
        covs = kalman.covariance_sequence(kalman.PowerLaw(0.4), n_max, 1.0, 0.25)
        n = np.arange(1, n_max + 1)
        scaled = n**0.6 * covs / 0.25
        assert scaled[100:].min() > 0.1
        assert (n * covs / 0.25)[-1] > 10

    def test_needs_long_horizon(self):
        with pytest.raises(ValueError):
            kalman.optimal_rate_check(kalman.Zero(), 50)


class TestEssAsymptotic:
    def test_flat_likelihood(self):
        assert kalman.ess_asymptotic(1, 0.0, 1.0, 1e12, 0.0) == pytest.approx(1.0, abs=1e-9)

    def test_hand_value(self):
        # gamma = R / (n Sigma0) = 1
        assert kalman.ess_asymptotic(1, 0.0, 1.0, 1.0, 0.0) == pytest.approx(np.sqrt(3) / 2)

    def test_shift_lowers_ess(self):
        assert kalman.ess_asymptotic(10, 3.0, 1.0, 0.25, 0.0) < kalman.ess_asymptotic(10, 0.0, 1.0, 0.25, 0.0)


class TestBetaCrit:
    def test_hand_value(self):
        assert kalman.beta_crit(0.5) == pytest.approx(6.4641, abs=1e-4)

    def test_limits(self):
        # spacing ratio 1 + beta -> 1 as the threshold approaches "always"
        assert kalman.beta_crit(1 - 1e-12) < 1e-5
        assert kalman.beta_crit(1e-6) > 1e11
        e = np.linspace(0.01, 0.99, 50)
        assert np.all(np.diff([kalman.beta_crit(x) for x in e]) < 0)

    @pytest.mark.parametrize("e", [0.0, 1.0, -0.5, 1.5])
    def test_endpoints_rejected(self, e):
        with pytest.raises(ConfigurationError):
            kalman.beta_crit(e)

    def test_predicted_spacings(self):
        b = kalman.beta_crit(0.5)
        np.testing.assert_allclose(kalman.predicted_spacings(0.5, 2.0, 3), [2 * b, 2 * b * (1 + b), 2 * b * (1 + b) ** 2])
