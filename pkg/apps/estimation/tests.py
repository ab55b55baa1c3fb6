"""
Tests for the estimation layer.

Tests cover:
- Group prevalence and the binomial log-likelihood
- Likelihood caching
- Finite-difference Hessian, covariance and Wald intervals
- Sub-fits with fixed components, unidentifiable parameters
- Recovery of gamma from noise-free and simulated data (slow)
"""

import math
from unittest.mock import patch

from django.core.cache import cache
from django.test import SimpleTestCase, tag
import numpy as np

from apps.analysis.results import CohortBaseline, Method
from apps.analysis.services import prevalence
from apps.estimation import inference
from apps.estimation import services as estimation
from apps.estimation.cache import loglik_cache_key
from apps.estimation.params import FitConfig, FitResult
from apps.rates.params import GompertzParams, MortalityRatioParams, PositivePartLinear, RateModel
from apps.simulation import services as simulation
from apps.simulation.tables import DEFAULT_AGE_GROUPS, AgeGroupTable, SimConfig
from idmodds.exceptions import (
    ConfigError,
    DomainError,
    PreconditionError,
    SingularHessianError,
)

REFERENCE_M0 = GompertzParams(-10.7, 0.1, math.log(0.998))
TRUE_GAMMA = (0.04, 5.0, 1.0)

TABLE1_N = [9858, 9786, 9597, 9328, 8857, 8040, 6873, 5329, 3706, 2104, 910]
TABLE1_C = [283, 501, 781, 1145, 1228, 1347, 1240, 997, 679, 370, 164]

# Observed-information intervals on Table 1 against the published ones; the
# expected Fisher information gives the same widths
PUBLISHED_WIDTH_RATIO = (1.15, 1.40)


def table1():
    return AgeGroupTable.from_counts(DEFAULT_AGE_GROUPS, TABLE1_N, TABLE1_C, 100.0)


def reference_config(**kwargs):
    return FitConfig(incidence=PositivePartLinear(), m0=REFERENCE_M0, **kwargs)


def reference_model(gamma=TRUE_GAMMA):
    return RateModel(PositivePartLinear(), REFERENCE_M0, MortalityRatioParams(*gamma))


def enlarged_noise_free_table(config, gamma=TRUE_GAMMA, scale=100):
    """Noise-free counts on scaled-up groups, so rounding barely moves the optimum."""
    n = [scale * n_k for n_k in TABLE1_N]
    return estimation.noise_free_table(
        config.model_for(gamma), DEFAULT_AGE_GROUPS, n, 100.0,
        config.group_evaluation, config.quadrature,
    )


class FitConfigTests(SimpleTestCase):
    """Tests for FitConfig validation and FitResult serialization."""

    def test_defaults(self):
        """Test the default fit configuration."""
        config = reference_config()
        self.assertEqual(config.free_indices, (0, 1, 2))
        self.assertEqual(config.bounds[1], (0.0, 50.0))
        self.assertTrue(all(config.contains(p) for p in config.initial_points))

    def test_initial_point_outside_bounds(self):
        """Test that a start outside the bounds is rejected."""
        with self.assertRaises(ConfigError):
            reference_config(initial_points=((2.0, 5.0, 1.0),))

    def test_nonpositive_tolerance(self):
        """Test that a non-positive tolerance is rejected."""
        with self.assertRaises(ConfigError):
            reference_config(xatol=0.0)

    def test_unknown_or_all_fixed_components(self):
        """Test that unknown or all fixed components are rejected."""
        with self.assertRaises(ConfigError):
            reference_config(fixed={"gamma4": 1.0})
        with self.assertRaises(ConfigError):
            reference_config(fixed={"gamma1": 0.0, "gamma2": 5.0, "gamma3": 1.0})

    def test_full_gamma_inserts_fixed_values(self):
        """Test that fixed values are inserted into the full gamma."""
        config = reference_config(fixed={"gamma2": 5.0})
        self.assertEqual(config.free_indices, (0, 2))
        self.assertEqual(config.full_gamma([0.1, 2.0]), (0.1, 5.0, 2.0))

    def test_from_config_merges_bounds(self):
        """Test that configured bounds merge with the defaults."""
        config = FitConfig.from_config(
            {"bounds": {"gamma2": [0, 20]}, "echo_input": True, "initial_points": [[0.01, 2, 1]]},
            reference_model(),
        )
        self.assertEqual(config.bounds, ((0.0, 1.0), (0.0, 20.0), (1e-9, 20.0)))
        self.assertEqual(config.initial_points, ((0.01, 2.0, 1.0),))

    def test_from_config_rejects_unknown_keys(self):
        """Test that unknown keys are rejected."""
        with self.assertRaises(ConfigError):
            FitConfig.from_config({"method": "bfgs"}, reference_model())

    def test_fingerprint_tracks_likelihood_settings(self):
        """Test that the fingerprint changes only with likelihood settings."""
        self.assertEqual(reference_config().fingerprint(), reference_config(xatol=1e-4).fingerprint())
        self.assertNotEqual(
            reference_config().fingerprint(),
            reference_config(group_evaluation="averaged").fingerprint(),
        )

    def test_result_to_dict(self):
        """Test the dictionary form of a fit result."""
        result = FitResult(
            gamma_hat=(0.1, 2.0, 1.0), loglik=-3.0, hessian=np.eye(3), covariance=np.eye(3),
            ci95=((0.0, 1.0),) * 3, converged=True, iterations=5, function_evals=9,
        )
        payload = result.to_dict()
        self.assertEqual(payload["gamma_hat"], [0.1, 2.0, 1.0])
        self.assertEqual(payload["cov"][1], [0.0, 1.0, 0.0])
        self.assertIsNone(payload["gamma_input"])
        np.testing.assert_array_equal(result.standard_errors, [1.0, 1.0, 1.0])


class LikelihoodTests(SimpleTestCase):
    """Tests for group_prevalence and log_likelihood."""

    def setUp(self):
        cache.clear()

    def test_zero_incidence_gives_zero_prevalence_and_loglik(self):
        """Test that zero incidence gives zero prevalence and log-likelihood."""
        config = FitConfig(incidence=PositivePartLinear(onset_age=1000.0), m0=REFERENCE_M0)
        model = config.model_for(TRUE_GAMMA)
        self.assertEqual(estimation.group_prevalence(model, 40.0, 45.0, 100.0), 0.0)
        healthy = AgeGroupTable.from_counts(DEFAULT_AGE_GROUPS, TABLE1_N, [0] * 11, 100.0)
        self.assertEqual(estimation.log_likelihood(TRUE_GAMMA, healthy, config), 0.0)

    def test_impossible_count_is_minus_infinity(self):
        """Test that cases under zero prevalence give minus infinity."""
        config = FitConfig(incidence=PositivePartLinear(onset_age=1000.0), m0=REFERENCE_M0)
        table = AgeGroupTable.from_counts(((40, 45),), [10], [1], 100.0)
        self.assertEqual(estimation.log_likelihood(TRUE_GAMMA, table, config), -np.inf)

    def test_nonpositive_ratio_is_minus_infinity(self):
        """Test that a non-positive ratio gives minus infinity."""
        value = estimation.log_likelihood((-0.1, 5.0, 1.0), table1(), reference_config())
        self.assertEqual(value, -np.inf)

    def test_empty_groups_contribute_nothing(self):
        """Test that empty groups add nothing to the log-likelihood."""
        config = reference_config()
        full = AgeGroupTable.from_counts(((40, 45), (45, 50)), [100, 0], [3, 0], 100.0)
        single = AgeGroupTable.from_counts(((40, 45),), [100], [3], 100.0)
        self.assertEqual(
            estimation.log_likelihood(TRUE_GAMMA, full, config),
            estimation.log_likelihood(TRUE_GAMMA, single, config),
        )

    def test_table1_value_is_finite_and_reproducible(self):
        """Test that the log-likelihood is finite and reproducible."""
        config = reference_config()
        first = estimation.log_likelihood(TRUE_GAMMA, table1(), config)
        cache.clear()
        second = estimation.log_likelihood(TRUE_GAMMA, table1(), config)
        self.assertTrue(np.isfinite(first))
        self.assertLess(first, 0.0)
        self.assertEqual(first, second)

    def test_matches_independent_prevalence_method(self):
        """Test the log-likelihood against Keiding prevalences."""
        config = reference_config()
        model = config.model_for(TRUE_GAMMA)
        value = estimation.log_likelihood(TRUE_GAMMA, table1(), config)
        oracle = 0.0
        for (lo, hi), n_k, c_k in zip(DEFAULT_AGE_GROUPS, TABLE1_N, TABLE1_C):
            p = prevalence(model, CohortBaseline(), 100.0, 0.5 * (lo + hi), Method.KEIDING).prevalence
            oracle += c_k * math.log(p) + (n_k - c_k) * math.log1p(-p)
        self.assertAlmostEqual(value, oracle, delta=1e-3)

    def test_group_midpoint_near_table_ratio(self):
        """Test the group prevalence against the observed ratio."""
        p = estimation.group_prevalence(reference_model(), 60.0, 65.0, 100.0)
        self.assertAlmostEqual(p, 1228 / 8857, delta=0.03)

    def test_midpoint_and_averaged_close(self):
        """Test that midpoint and averaged group prevalence are close."""
        model = reference_model()
        for lo, hi in DEFAULT_AGE_GROUPS:
            midpoint = estimation.group_prevalence(model, lo, hi, 100.0, "midpoint")
            averaged = estimation.group_prevalence(model, lo, hi, 100.0, "averaged")
            self.assertLess(abs(midpoint - averaged), 0.005, (lo, hi))

    def test_unknown_mode(self):
        """Test that an unknown group mode is rejected."""
        with self.assertRaises(DomainError):
            estimation.group_prevalence(reference_model(), 40.0, 45.0, 100.0, "median")

    def test_binomial_coefficient_keeps_argmax(self):
        """Test that the binomial coefficient does not move the maximum."""
        table = table1()
        plain = reference_config(fixed={"gamma1": 0.04, "gamma2": 5.0})
        full = reference_config(fixed={"gamma1": 0.04, "gamma2": 5.0}, include_binomial_coefficient=True)
        grid = [(0.04, 5.0, g3) for g3 in (0.6, 0.8, 1.0, 1.2, 1.5)]
        without = [estimation.log_likelihood(g, table, plain) for g in grid]
        with_coef = [estimation.log_likelihood(g, table, full) for g in grid]
        shifts = np.subtract(with_coef, without)
        self.assertTrue(np.all(shifts > 0))
        np.testing.assert_allclose(shifts, shifts[0], rtol=0, atol=1e-6)
        self.assertEqual(int(np.argmax(without)), int(np.argmax(with_coef)))


class LikelihoodCacheTests(SimpleTestCase):
    """Tests for memoization of likelihood values."""

    def setUp(self):
        cache.clear()

    def test_repeated_gamma_evaluated_once(self):
        """Test that a repeated gamma is evaluated once."""
        with patch("apps.estimation.services._evaluate_log_likelihood", return_value=-12.5) as evaluate:
            for _ in range(3):
                self.assertEqual(estimation.log_likelihood((0.1, 2.0, 1.0), table1(), reference_config()), -12.5)
        evaluate.assert_called_once()

    def test_minus_infinity_is_cached(self):
        """Test that minus infinity is cached."""
        with patch("apps.estimation.services._evaluate_log_likelihood", return_value=-np.inf) as evaluate:
            estimation.log_likelihood((0.1, 2.0, 1.0), table1(), reference_config())
            estimation.log_likelihood((0.1, 2.0, 1.0), table1(), reference_config())
        evaluate.assert_called_once()

    def test_key_depends_on_gamma_bits_table_and_settings(self):
        """Test that the cache key tracks gamma bits, table and settings."""
        table, config = table1(), reference_config()
        key = loglik_cache_key((0.1, 2.0, 1.0), table, config)
        self.assertTrue(key.startswith("loglik:"))
        self.assertNotEqual(key, loglik_cache_key((np.nextafter(0.1, 1.0), 2.0, 1.0), table, config))
        other = AgeGroupTable.from_counts(DEFAULT_AGE_GROUPS, TABLE1_N, [c + 1 for c in TABLE1_C], 100.0)
        self.assertNotEqual(key, loglik_cache_key((0.1, 2.0, 1.0), other, config))
        averaged = reference_config(group_evaluation="averaged")
        self.assertNotEqual(key, loglik_cache_key((0.1, 2.0, 1.0), table, averaged))

    def test_errors_are_not_cached(self):
        """Test that failed evaluations are not cached."""
        with patch("apps.estimation.services._evaluate_log_likelihood", side_effect=ArithmeticError("boom")):
            with self.assertRaises(ArithmeticError):
                estimation.log_likelihood((0.1, 2.0, 1.0), table1(), reference_config())
        self.assertIsNone(cache.get(loglik_cache_key((0.1, 2.0, 1.0), table1(), reference_config())))


class InferenceTests(SimpleTestCase):
    """Tests for the Hessian, covariance and Wald intervals."""

    def test_stencil_centre_stays_inside_bounds(self):
        """The difference stencil is moved inwards at a bound and left alone inside."""
        bounds = ((0.0, 1.0), (0.0, 50.0), (1e-9, 20.0))
        steps = inference.step_sizes([0.0, 5.0, 1.0])
        centre = inference.stencil_centre([0.0, 5.0, 20.0], steps, bounds)
        self.assertAlmostEqual(centre[0], steps[0])
        self.assertEqual(centre[1], 5.0)
        self.assertAlmostEqual(centre[2], 20.0 - steps[2])
        for x, h, (lo, hi) in zip(centre, steps, bounds):
            self.assertTrue(lo - 1e-12 <= x - h and x + h <= hi + 1e-12)

    def test_stencil_centre_of_narrow_box(self):
        """A box narrower than the stencil puts the component in its middle."""
        centre = inference.stencil_centre([0.1], [1.0], ((0.0, 0.5),))
        self.assertEqual(centre[0], 0.25)

    def test_hessian_of_quadratic(self):
        """Test the Hessian of a quadratic form."""
        A = np.array([[4.0, 1.0, 0.5], [1.0, 3.0, 0.0], [0.5, 0.0, 2.0]])
        H = inference.hessian(lambda x: 0.5 * x @ A @ x, np.array([0.3, -1.0, 2.0]), [1e-3] * 3)
        np.testing.assert_allclose(H, A, atol=1e-6)
        np.testing.assert_array_equal(H, H.T)

    def test_step_sizes(self):
        """Test the relative finite difference steps."""
        np.testing.assert_allclose(inference.step_sizes([0.03, 5.0, -2.0]), [1e-4, 5e-4, 2e-4])

    def test_diagonal_hessian_intervals(self):
        """Test intervals from a diagonal Hessian."""
        sigma = np.array([0.02, 4.0, 0.3])
        estimate = (0.05, 3.0, 1.0)
        cov = inference.covariance_from_hessian(np.diag(1.0 / sigma ** 2))
        np.testing.assert_allclose(np.diag(cov), sigma ** 2, rtol=1e-12)
        intervals = inference.wald_intervals(estimate, cov)
        for (lo, hi), g, s in zip(intervals, estimate, sigma):
            self.assertAlmostEqual(lo, g - 1.96 * s, places=12)
            self.assertAlmostEqual(hi, g + 1.96 * s, places=12)

    def test_covariance_is_symmetric(self):
        """Test that the covariance is symmetric positive definite."""
        H = np.array([[5.0, 1.0, 0.2], [1.0, 2.0, 0.3], [0.2, 0.3, 1.0]])
        cov = inference.covariance_from_hessian(H)
        self.assertLessEqual(np.max(np.abs(cov - cov.T)), 1e-10)
        self.assertTrue(np.all(np.linalg.eigvalsh(cov) > 0))

    def test_flat_direction_raises(self):
        """Test that a flat direction raises SingularHessianError."""
        H = np.diag([2.0, 0.0, 1.0])
        with self.assertRaises(SingularHessianError) as caught:
            inference.covariance_from_hessian(H)
        self.assertIn("condition number", str(caught.exception))

    def test_indefinite_hessian_raises(self):
        """Test that an indefinite Hessian raises SingularHessianError."""
        with self.assertRaises(SingularHessianError) as caught:
            inference.covariance_from_hessian(np.diag([2.0, -1.0, 1.0]))
        self.assertAlmostEqual(caught.exception.condition_number, 2.0)

    def test_flat_component_left_out(self):
        """Test that a flat component is left out of the inversion."""
        H = np.diag([2.0, 0.0, 4.0])
        self.assertEqual(inference.flat_components(H), (1,))
        cov = inference.covariance_from_hessian(H, identifiable=[0, 2])
        self.assertAlmostEqual(cov[0, 0], 0.5)
        self.assertAlmostEqual(cov[2, 2], 0.25)
        self.assertTrue(np.isnan(cov[1, 1]))
        lo, hi = inference.wald_intervals((1.0, 1.0, 1.0), cov)[1]
        self.assertTrue(math.isnan(lo) and math.isnan(hi))


class FitTests(SimpleTestCase):
    """Tests for fit with one or two free components."""

    def setUp(self):
        cache.clear()

    def test_noise_free_gamma3_recovered(self):
        """Test recovering gamma3 from noise-free counts."""
        config = reference_config(
            fixed={"gamma1": 0.04, "gamma2": 5.0},
            initial_points=((0.04, 5.0, 0.7),),
        )
        table = enlarged_noise_free_table(config)
        result = estimation.fit(table, config, gamma_input=TRUE_GAMMA)

        self.assertTrue(result.converged)
        self.assertLess(abs(result.gamma_hat[2] - 1.0), 1e-3)
        self.assertEqual(result.gamma_hat[:2], (0.04, 5.0))
        self.assertGreaterEqual(
            result.loglik, estimation.log_likelihood(TRUE_GAMMA, table, config) - 1e-6
        )
        lo, hi = result.ci95[2]
        self.assertLess(lo, 1.0)
        self.assertGreater(hi, 1.0)
        self.assertEqual(result.ci95[0], (0.04, 0.04))
        np.testing.assert_array_equal(result.hessian[0], 0.0)
        np.testing.assert_array_equal(result.covariance[:, 1], 0.0)
        self.assertGreater(result.hessian[2, 2], 0.0)
        self.assertEqual(result.gamma_input, TRUE_GAMMA)
        self.assertEqual(result.diagnostics["free"], ["gamma3"])

    def test_wald_intervals_of_result(self):
        """Test Wald intervals of a fit result."""
        config = reference_config(
            fixed={"gamma1": 0.04, "gamma2": 5.0}, initial_points=((0.04, 5.0, 1.2),), restarts=0
        )
        result = estimation.fit(table1(), config)
        self.assertEqual(estimation.wald_intervals(result), result.ci95)
        se = math.sqrt(result.covariance[2, 2])
        self.assertAlmostEqual(result.ci95[2][1] - result.ci95[2][0], 2 * 1.96 * se, places=10)

    def test_lower_bound_solution_keeps_stencil_in_box(self):
        """An optimum on the gamma1 lower bound gets a finite Hessian and a boundary flag."""
        bounds = ((0.02, 1.0), (0.0, 50.0), (1e-9, 20.0))
        config = reference_config(
            bounds=bounds, fixed={"gamma2": 5.0}, initial_points=((0.05, 5.0, 1.0),), restarts=0,
        )
        table = enlarged_noise_free_table(config, gamma=(0.0, 5.0, 1.0))
        result = estimation.fit(table, config)

        self.assertLess(abs(result.gamma_hat[0] - 0.02), 1e-4)
        self.assertIn("gamma1", result.diagnostics["boundary"])
        self.assertTrue(np.all(np.isfinite(result.hessian)))
        step = inference.step_sizes([result.gamma_hat[0]])[0]
        self.assertGreaterEqual(result.diagnostics["hessian_centre"][0], 0.02 + step - 1e-15)

    def _gamma3_bound_config(self):
        return reference_config(
            bounds=((0.0, 1.0), (0.0, 50.0), (1.2, 20.0)),
            fixed={"gamma1": 0.04, "gamma2": 5.0},
            initial_points=((0.04, 5.0, 1.5),), restarts=0,
        )

    def test_singular_hessian_at_bound_keeps_estimate(self):
        """A boundary solution without covariance returns NaN intervals instead of failing."""
        singular = SingularHessianError("Hessian is singular", math.inf)
        with patch.object(estimation.inference, "covariance_from_hessian", side_effect=singular):
            result = estimation.fit(table1(), self._gamma3_bound_config())

        self.assertEqual(result.diagnostics["boundary"], ["gamma3"])
        self.assertIn("singular", result.diagnostics["hessian_error"])
        self.assertTrue(all(math.isnan(x) for x in result.ci95[2]))
        self.assertEqual(result.ci95[0], (0.04, 0.04))
        with self.assertRaises(SingularHessianError):
            estimation.wald_intervals(result)

    def test_singular_hessian_inside_bounds_raises(self):
        """An interior solution with a singular Hessian is a numerical failure."""
        config = reference_config(
            fixed={"gamma1": 0.04, "gamma2": 5.0}, initial_points=((0.04, 5.0, 1.2),), restarts=0
        )
        singular = SingularHessianError("Hessian is singular", math.inf)
        with patch.object(estimation.inference, "covariance_from_hessian", side_effect=singular):
            with self.assertRaises(SingularHessianError):
                estimation.fit(table1(), config)

    def test_gamma2_unidentifiable_without_duration_effect(self):
        """Test that gamma2 is unidentifiable when gamma1 is zero."""
        config = reference_config(
            fixed={"gamma1": 0.0}, initial_points=((0.0, 5.0, 1.0),), restarts=0
        )
        result = estimation.fit(table1(), config)

        self.assertEqual(result.diagnostics["unidentifiable"], ["gamma2"])
        np.testing.assert_array_equal(result.hessian[1], 0.0)
        self.assertTrue(all(math.isnan(x) for x in result.ci95[1]))
        self.assertTrue(all(math.isfinite(x) for x in result.ci95[2]))
        self.assertGreater(result.covariance[2, 2], 0.0)

    def test_more_cases_never_raise_fitted_mortality(self):
        """Test that more cases never raise the fitted mortality ratio."""
        config = reference_config(
            fixed={"gamma1": 0.0, "gamma2": 5.0}, initial_points=((0.0, 5.0, 1.0),), restarts=0
        )
        base = table1()
        more = AgeGroupTable.from_counts(
            DEFAULT_AGE_GROUPS, TABLE1_N, [c + 40 for c in TABLE1_C], 100.0
        )
        fewer_deaths = estimation.fit(more, config).gamma_hat[2]
        self.assertLessEqual(fewer_deaths, estimation.fit(base, config).gamma_hat[2])

    def test_too_few_informative_groups(self):
        """Test that too few informative groups raise PreconditionError."""
        table = AgeGroupTable.from_counts(((40, 45), (45, 50)), [100, 0], [5, 0], 100.0)
        with self.assertRaises(PreconditionError):
            estimation.fit(table, reference_config(fixed={"gamma1": 0.0}))

    def test_iteration_limit_reported_as_not_converged(self):
        """Test that hitting the iteration limit is reported."""
        config = reference_config(
            fixed={"gamma1": 0.04, "gamma2": 5.0},
            initial_points=((0.04, 5.0, 0.95),), restarts=0, max_iterations=2,
        )
        with self.assertLogs("apps.estimation.services", level="WARNING"):
            result = estimation.fit(table1(), config)
        self.assertFalse(result.converged)


class FullFitTests(SimpleTestCase):
    """Three-parameter fits (slow)."""

    def setUp(self):
        cache.clear()

    @tag("slow")
    def test_noise_free_data_recovers_gamma(self):
        """Test recovering every gamma from noise-free counts."""
        config = reference_config()
        result = estimation.fit(enlarged_noise_free_table(config), config)
        self.assertTrue(result.converged)
        for estimate, truth, tol in zip(result.gamma_hat, TRUE_GAMMA, (1e-3, 1e-1, 1e-3)):
            self.assertLess(abs(estimate - truth), tol)

    @tag("slow")
    def test_table1_reproduces_published_estimates(self):
        """Table 1 gives the published estimates; intervals are wider by a stable factor."""
        result = estimation.fit(table1(), reference_config(), gamma_input=TRUE_GAMMA)
        published = (0.0330, 3.06, 1.01)
        published_ci = ((-0.0127, 0.0787), (-5.70, 11.8), (0.625, 1.39))

        self.assertTrue(result.converged)
        for estimate, value, tol in zip(result.gamma_hat, published, (0.005, 0.5, 0.05)):
            self.assertLess(abs(estimate - value), tol)
        for (lo, hi), (plo, phi), value, truth in zip(
            result.ci95, published_ci, published, TRUE_GAMMA
        ):
            ratio = (hi - lo) / (phi - plo)
            self.assertTrue(
                PUBLISHED_WIDTH_RATIO[0] <= ratio <= PUBLISHED_WIDTH_RATIO[1],
                f"interval width ratio {ratio:.3f}",
            )
            self.assertTrue(lo < value < hi)
            self.assertTrue(lo < truth < hi)
        cov = result.covariance
        self.assertLessEqual(np.max(np.abs(cov - cov.T)), 1e-10)
        self.assertTrue(np.all(np.linalg.eigvalsh(cov) >= 0))

    @tag("slow")
    def test_simulated_replicates_cover_truth(self):
        """Test interval coverage over simulated replicates."""
        model = reference_model()
        config = simulation.calibrate_births(model, SimConfig(rng_seed=1000))
        tables = simulation.replicate_study(model, config, 20)
        fits = [estimation.fit(table, reference_config()) for table in tables]

        estimates = np.array([f.gamma_hat for f in fits])
        for j, truth in enumerate(TRUE_GAMMA):
            covered = sum(lo < truth < hi for lo, hi in (f.ci95[j] for f in fits))
            self.assertGreaterEqual(covered, 15)
            se = estimates[:, j].std(ddof=1) / math.sqrt(len(fits))
            self.assertLess(abs(estimates[:, j].mean() - truth), 3 * se)
