"""
Tests for the analytic layer.

Tests cover:
- Adaptive Gauss-Kronrod quadrature
- Population functions S, C, C* and m1*
- Prevalence odds by pseudo-convolution, Keiding's formula, cohort ratio
  and the convolution special case
- PDE residuals and incidence reconstruction
"""

import math

from django.test import SimpleTestCase, tag
import numpy as np
from scipy import integrate

from apps.analysis import services as analysis
from apps.analysis.quadrature import (
    QuadratureConfig,
    gauss_kronrod,
    gauss_kronrod_full,
    quadpack,
)
from apps.analysis.results import (
    CharacteristicGrid,
    CohortBaseline,
    CrossSection,
    Method,
    PrevalenceResult,
)
from apps.rates import services as rates
from apps.rates.params import (
    ExponentialFirstOrder,
    GompertzParams,
    MortalityRatioParams,
    PositivePartLinear,
    RateModel,
)
from idmodds.exceptions import (
    DomainError,
    NumericalError,
    PreconditionError,
    QuadratureError,
    VariantMismatchError,
)

REFERENCE_M0 = GompertzParams(-10.7, 0.1, math.log(0.998))
TIGHT = QuadratureConfig(rel_tol=1e-12, abs_tol=1e-16, max_subdivisions=400)


def reference_model(gamma=(0.04, 5.0, 1.0), incidence=None):
    return RateModel(incidence or PositivePartLinear(), REFERENCE_M0, MortalityRatioParams(*gamma))


def zero_model():
    return RateModel(
        PositivePartLinear(onset_age=1000.0),
        GompertzParams(-1000.0, 0.1, 0.0),
        MortalityRatioParams(0.0, 5.0, 1.0),
    )


def relative_gap(x, y):
    return abs(x - y) / max(abs(x), abs(y))


class QuadratureTests(SimpleTestCase):
    """Tests for the vectorized Gauss-Kronrod routine."""

    def test_polynomial_is_exact(self):
        """Test that a degree five polynomial integrates exactly."""
        self.assertAlmostEqual(gauss_kronrod(lambda x: x ** 5, 0.0, 2.0), 64.0 / 6.0, places=12)

    def test_kink_breakpoint(self):
        """Test that a declared breakpoint splits the range at the kink."""
        result = gauss_kronrod_full(lambda x: np.maximum(x - 1.3, 0.0), 0.0, 3.0, points=[1.3])
        self.assertAlmostEqual(result.value, 1.7 ** 2 / 2.0, places=13)
        self.assertEqual(result.intervals, 2)

    def test_reversed_limits(self):
        """Test that reversed limits flip the sign of the integral."""
        self.assertAlmostEqual(gauss_kronrod(np.exp, 1.0, 0.0), -(math.e - 1.0), places=12)

    def test_empty_range(self):
        """Test that an empty range integrates to zero."""
        self.assertEqual(gauss_kronrod(np.exp, 2.0, 2.0), 0.0)

    def test_matches_quadpack(self):
        """Test agreement with the QUADPACK integrator on an oscillating integrand."""
        f = lambda x: np.exp(-x) * np.sin(3 * x)
        ours = gauss_kronrod(f, 0.0, 10.0, TIGHT)
        theirs = quadpack(lambda x: float(f(x)), 0.0, 10.0, QuadratureConfig(1e-10, 1e-14))
        self.assertLess(abs(ours - theirs), 1e-9)

    def test_exhausted_budget_raises(self):
        """Test that running out of subdivisions raises QuadratureError."""
        config = QuadratureConfig(rel_tol=1e-14, abs_tol=1e-16, max_subdivisions=3)
        with self.assertRaises(QuadratureError):
            gauss_kronrod(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, config)

    def test_non_finite_integrand_raises(self):
        """Test that a non-finite integrand raises QuadratureError."""
        with self.assertRaises(QuadratureError):
            gauss_kronrod(lambda x: np.where(x > 0.5, np.inf, 1.0), 0.0, 1.0)

    def test_deterministic(self):
        """Test that repeated integrations return identical results."""
        f = lambda x: np.sqrt(x) * np.cos(x)
        first = gauss_kronrod_full(f, 0.0, 7.0)
        second = gauss_kronrod_full(f, 0.0, 7.0)
        self.assertEqual(first, second)


class PopulationFunctionTests(SimpleTestCase):
    """Tests for M, S, C, C* and m1*."""

    def setUp(self):
        self.model = reference_model()
        self.baseline = CohortBaseline()

    def test_survivor_at_birth_is_one(self):
        """Test that the survivor function is one at zero duration."""
        self.assertEqual(float(analysis.survivor_function_M(self.model, None, 100.0, 60.0, 0.0)), 1.0)

    def test_survivor_without_rates_is_one(self):
        """Test that the survivor function stays one when all rates vanish."""
        values = analysis.survivor_function_M(zero_model(), None, 100.0, 60.0, np.linspace(0, 60, 7))
        np.testing.assert_array_equal(values, np.ones(7))

    def test_survivor_reference_value(self):
        """Test the survivor function against direct quadrature."""
        value = float(analysis.survivor_function_M(self.model, None, 100.0, 60.0, 30.0))
        self.assertTrue(0.0 < value < 1.0)
        birth = 40.0
        oracle, _ = integrate.quad(
            lambda y: float(self.model.m0.rate(birth + y, y) + self.model.incidence.rate(birth + y, y)),
            0.0, 30.0, epsabs=1e-14, epsrel=1e-12,
        )
        self.assertAlmostEqual(value, math.exp(-oracle), places=10)

    def test_survivor_ratio_identity(self):
        """Test the survivor ratio identity along a characteristic."""
        rng = np.random.default_rng(11)
        for _ in range(20):
            t, a = rng.uniform(50, 150), rng.uniform(1, 95)
            d = rng.uniform(0, a)
            ratio = (analysis.survivor_function_M(self.model, None, t, a, a - d)
                     / analysis.survivor_function_M(self.model, None, t, a, a))
            exponent = rates.cumulative_m0(self.model, t, a, d) + rates.cumulative_incidence_hazard(
                self.model, t, a, d
            )
            self.assertLess(relative_gap(float(ratio), float(np.exp(exponent))), 1e-10)

    def test_survivor_outside_range(self):
        """Test that a duration beyond the age is rejected."""
        with self.assertRaises(DomainError):
            analysis.survivor_function_M(self.model, None, 100.0, 60.0, 61.0)

    def test_healthy_at_age_zero(self):
        """Test that the healthy count at age zero equals the baseline."""
        baseline = CohortBaseline.constant(250.0)
        self.assertEqual(float(analysis.survival_healthy_S(self.model, baseline, 100.0, 0.0)), 250.0)

    def test_healthy_without_rates(self):
        """Test that without rates the healthy count is the baseline at birth."""
        baseline = CohortBaseline(s0=lambda b: 10.0 + np.asarray(b))
        self.assertEqual(float(analysis.survival_healthy_S(zero_model(), baseline, 100.0, 60.0)), 50.0)

    def test_baseline_must_be_positive(self):
        """Test that a non-positive baseline is rejected."""
        with self.assertRaises(DomainError):
            CohortBaseline.constant(0.0)

    def test_case_density_at_onset(self):
        """Test that the case density at zero duration is incidence times healthy count."""
        c = float(analysis.case_density_C(self.model, self.baseline, 100.0, 60.0, 0.0))
        expected = float(rates.incidence(self.model, 100.0, 60.0)
                         * analysis.survival_healthy_S(self.model, self.baseline, 100.0, 60.0))
        self.assertAlmostEqual(c / expected, 1.0, places=12)

    def test_case_density_at_birth_is_zero(self):
        """Test that the case density vanishes for onset at birth."""
        self.assertEqual(float(analysis.case_density_C(self.model, self.baseline, 100.0, 60.0, 60.0)), 0.0)

    def test_case_density_positive(self):
        """Test that the case density is positive inside the range."""
        self.assertGreater(float(analysis.case_density_C(self.model, self.baseline, 100.0, 60.0, 10.0)), 0.0)

    def test_total_cases_edge_cases(self):
        """Test that total cases vanish at age zero and without rates."""
        self.assertEqual(analysis.total_cases_Cstar(self.model, self.baseline, 100.0, 0.0), 0.0)
        self.assertEqual(analysis.total_cases_Cstar(zero_model(), self.baseline, 100.0, 60.0), 0.0)

    def test_total_cases_matches_odds(self):
        """Test that total cases equal healthy count times prevalence odds."""
        cases = analysis.total_cases_Cstar(self.model, self.baseline, 100.0, 60.0, TIGHT)
        healthy = float(analysis.survival_healthy_S(self.model, self.baseline, 100.0, 60.0))
        odds = analysis.prevalence_odds_pseudo(self.model, self.baseline, 100.0, 60.0, TIGHT).odds
        self.assertLess(relative_gap(cases, healthy * odds), 1e-6)

    def test_m1star_duration_independent(self):
        """Test that a duration independent ratio gives m1* equal to R times m0."""
        model = reference_model(gamma=(0.0, 5.0, 1.6))
        value = analysis.effective_mortality_m1star(model, self.baseline, 100.0, 60.0)
        self.assertEqual(value, float(model.m0.rate(100.0, 60.0) * 1.6))

    def test_m1star_at_age_zero(self):
        """Test that m1* is zero at age zero."""
        self.assertEqual(analysis.effective_mortality_m1star(self.model, self.baseline, 100.0, 0.0), 0.0)

    def test_m1star_between_ratio_bounds(self):
        """Test that m1* lies between the smallest and largest mortality ratio."""
        value = analysis.effective_mortality_m1star(self.model, self.baseline, 100.0, 60.0)
        m0 = float(self.model.m0.rate(100.0, 60.0))
        # R is smallest at d = 5 and largest at d = 60 on [0, 60]
        self.assertTrue(m0 < value < float(self.model.ratio.ratio(60.0)) * m0)


class PrevalenceOddsTests(SimpleTestCase):
    """Tests for the prevalence odds formulas."""

    def setUp(self):
        self.model = reference_model()
        self.baseline = CohortBaseline()

    def test_age_zero(self):
        """Test that every method gives zero prevalence at age zero."""
        for method in Method:
            if method is Method.CONVOLUTION_SPECIAL:
                continue
            result = analysis.prevalence(self.model, self.baseline, 100.0, 0.0, method)
            self.assertEqual(result.odds, 0.0)
            self.assertEqual(result.prevalence, 0.0)

    def test_zero_incidence(self):
        """Test that zero incidence gives zero odds."""
        model = reference_model(incidence=PositivePartLinear(onset_age=1000.0))
        self.assertEqual(analysis.prevalence_odds_keiding(model, None, 100.0, 60.0).odds, 0.0)
        self.assertEqual(analysis.prevalence_odds_pseudo(model, None, 100.0, 60.0).odds, 0.0)

    def test_odds_to_prevalence(self):
        """Test the conversion from odds to prevalence."""
        self.assertEqual(PrevalenceResult.from_odds(0, 0, 0.0, Method.KEIDING).prevalence, 0.0)
        self.assertEqual(PrevalenceResult.from_odds(0, 0, 1.0, Method.KEIDING).prevalence, 0.5)

    def test_constant_incidence_closed_form(self):
        """Constant incidence with R = 1 gives p = 1 - exp(-c a) for every method."""
        methods = (Method.PSEUDO_CONVOLUTION, Method.KEIDING, Method.CONVOLUTION_SPECIAL)
        for c in (0.001, 0.01, 0.05):
            model = RateModel(ExponentialFirstOrder(math.log(c), 0.0, 0.0), REFERENCE_M0,
                              MortalityRatioParams(0.0, 5.0, 1.0))
            for a in (10.0, 50.0, 90.0):
                for method in methods:
                    with self.subTest(c=c, a=a, method=method.value):
                        result = analysis.prevalence(model, None, 100.0, a, method, TIGHT)
                        self.assertLess(abs(result.prevalence + math.expm1(-c * a)), 1e-8)
                        self.assertLess(relative_gap(result.odds, math.expm1(c * a)), 1e-8)

    def test_keiding_near_table_one(self):
        """Test the Keiding odds against the youngest observed age group."""
        odds = analysis.prevalence_odds_keiding(self.model, None, 100.0, 42.5).odds
        self.assertAlmostEqual(odds, 283 / (9858 - 283), delta=0.006)

    def test_prevalence_near_table_one(self):
        """Test the prevalence against the observed age group 60 to 65."""
        p = analysis.prevalence(self.model, None, 100.0, 62.5).prevalence
        self.assertAlmostEqual(p, 1228 / 8857, delta=0.03)

    def test_formula_triangle(self):
        """Test that pseudo-convolution, Keiding and cohort ratio agree."""
        rng = np.random.default_rng(42)
        for _ in range(8):
            t, a = rng.uniform(50, 150), rng.uniform(0.5, 95)
            pseudo = analysis.prevalence_odds_pseudo(self.model, None, t, a).odds
            keiding = analysis.prevalence_odds_keiding(self.model, None, t, a).odds
            cohort = analysis.prevalence_odds_cohort(self.model, None, t, a).odds
            for x, y in ((pseudo, keiding), (pseudo, cohort), (keiding, cohort)):
                self.assertLessEqual(abs(x - y), max(1e-6 * max(x, y), 1e-10))

    @tag("slow")
    def test_formula_triangle_dense(self):
        """Test the three prevalence formulas at many random points."""
        rng = np.random.default_rng(2023)
        for _ in range(200):
            t, a = rng.uniform(50, 150), rng.uniform(0, 95)
            pseudo = analysis.prevalence_odds_pseudo(self.model, None, t, a).odds
            keiding = analysis.prevalence_odds_keiding(self.model, None, t, a).odds
            cohort = analysis.prevalence_odds_cohort(self.model, None, t, a).odds
            for x, y in ((pseudo, keiding), (pseudo, cohort), (keiding, cohort)):
                self.assertLessEqual(abs(x - y), max(1e-6 * max(x, y), 1e-10))

    def test_baseline_invariance(self):
        """Test that the odds do not depend on the birth baseline."""
        scaled = CohortBaseline.constant(37.0)
        for method in (Method.PSEUDO_CONVOLUTION, Method.KEIDING):
            self.assertEqual(
                analysis.prevalence(self.model, None, 100.0, 70.0, method).odds,
                analysis.prevalence(self.model, scaled, 100.0, 70.0, method).odds,
            )
        self.assertAlmostEqual(
            analysis.prevalence_odds_cohort(self.model, None, 100.0, 70.0).odds,
            analysis.prevalence_odds_cohort(self.model, scaled, 100.0, 70.0).odds,
            places=13,
        )

    def test_damping_decreasing(self):
        """Test that the damping factor decreases with duration."""
        model = reference_model(gamma=(0.0, 5.0, 20.0))
        deltas = np.linspace(0.0, 60.0, 121)
        y = analysis.damping_Y(model, 100.0, 60.0, deltas)
        self.assertTrue(np.all(np.diff(y) < 0))

    def test_reference_curve_peaks_in_old_age(self):
        """The odds rise from zero at onset to a maximum between 70 and 90, then level off."""
        ages = np.arange(30.0, 101.0, 5.0)
        curve = analysis.prevalence_curve(self.model, None, 100.0, ages)[Method.PSEUDO_CONVOLUTION]
        odds = np.array([r.odds for r in curve])
        peak = int(np.argmax(odds))

        self.assertEqual(odds[0], 0.0)
        self.assertTrue(70.0 <= ages[peak] <= 90.0)
        self.assertTrue(np.all(np.diff(odds[: peak + 1]) > 0))
        self.assertTrue(0.20 < odds[ages == 80.0][0] < 0.27)
        self.assertTrue(0.19 < odds[ages == 90.0][0] < odds[peak])
        self.assertLess(odds[-1], odds[peak])

    def test_curve_keeps_age_order(self):
        """Test that the curve keeps the requested age order."""
        ages = [80.0, 40.0, 60.0]
        curves = analysis.prevalence_curve(
            self.model, None, 100.0, ages, (Method.PSEUDO_CONVOLUTION, Method.COHORT_RATIO)
        )
        self.assertEqual(set(curves), {Method.PSEUDO_CONVOLUTION, Method.COHORT_RATIO})
        for results in curves.values():
            self.assertEqual([r.a for r in results], ages)

    def test_unknown_method(self):
        """Test that an unknown method is rejected."""
        with self.assertRaises(DomainError):
            analysis.prevalence(self.model, None, 100.0, 50.0, "bogus")

    def test_negative_age(self):
        """Test that a negative age is rejected."""
        with self.assertRaises(DomainError):
            analysis.prevalence_odds_pseudo(self.model, None, 100.0, -1.0)


class ConvolutionSpecialTests(SimpleTestCase):
    """Tests for the exponential incidence convolution."""

    def test_requires_exponential_incidence(self):
        """Test that special convolution rejects other incidence variants."""
        with self.assertRaises(VariantMismatchError):
            analysis.prevalence_odds_convolution_special(reference_model(), None, 100.0, 50.0)

    def test_constant_incidence_reduces_to_pseudo(self):
        """Test that constant incidence gives the pseudo-convolution odds."""
        model = reference_model(incidence=ExponentialFirstOrder(math.log(0.004), 0.0, 0.0))
        special = analysis.prevalence_odds_convolution_special(model, None, 100.0, 70.0, TIGHT)
        pseudo = analysis.prevalence_odds_pseudo(model, None, 100.0, 70.0, TIGHT)
        self.assertLess(relative_gap(special.odds, pseudo.odds), 1e-10)

    def test_random_parameters_match_pseudo(self):
        """Test special convolution against pseudo-convolution for random parameters."""
        rng = np.random.default_rng(4)
        for _ in range(10):
            variant = ExponentialFirstOrder(
                rng.uniform(-9, -7), rng.uniform(0, 0.05), rng.uniform(-0.02, 0.02)
            )
            model = reference_model(incidence=variant)
            t, a = rng.uniform(50, 150), rng.uniform(1, 95)
            special = analysis.prevalence_odds_convolution_special(model, None, t, a, TIGHT).odds
            pseudo = analysis.prevalence_odds_pseudo(model, None, t, a, TIGHT).odds
            self.assertLess(relative_gap(special, pseudo), 1e-10)

    def test_factorization_identity(self):
        """Test the exponential factorization identity of the incidence."""
        rng = np.random.default_rng(5)
        for _ in range(20):
            variant = ExponentialFirstOrder(*rng.uniform(-0.1, 0.1, size=3))
            model = reference_model(incidence=variant)
            t, a = rng.uniform(50, 150), rng.uniform(1, 95)
            d = rng.uniform(0, a)
            i_star, exp_factor = analysis.convolution_factors(model, t, a, d)
            self.assertAlmostEqual(float(i_star * exp_factor / variant.rate(t - d, a - d)), 1.0, places=12)
            time_part, age_part = analysis.separable_factors(model, t, a)
            self.assertAlmostEqual(float(time_part * age_part / i_star), 1.0, places=12)


class PdeResidualTests(SimpleTestCase):
    """Tests for the PDE consistency checks."""

    def test_zero_rates_give_zero_residual(self):
        """Test that zero rates give zero PDE residuals."""
        model = zero_model()
        self.assertEqual(analysis.pde_residual_prevalence(model, None, 100.0, 60.0, 0.1), 0.0)
        self.assertEqual(analysis.pde_residual_odds(model, None, 100.0, 60.0, 0.1), 0.0)

    def test_zero_incidence_odds_residual(self):
        """Test that zero incidence gives a zero odds residual."""
        model = reference_model(gamma=(0.0, 5.0, 2.0), incidence=PositivePartLinear(onset_age=1000.0))
        self.assertEqual(analysis.pde_residual_odds(model, None, 100.0, 60.0, 0.1), 0.0)

    def test_prevalence_residual_second_order(self):
        """Test that the prevalence residual converges at second order."""
        coarse, fine, ratio = analysis.richardson_ratio(
            analysis.pde_residual_prevalence, reference_model(), None, 100.0, 60.0, 0.1
        )
        self.assertLess(abs(fine), abs(coarse))
        self.assertTrue(3.5 <= ratio <= 4.5, ratio)

    def test_duration_independent_residual_second_order(self):
        """Test second order convergence under a duration independent ratio."""
        _, _, ratio = analysis.richardson_ratio(
            analysis.pde_residual_prevalence, reference_model(gamma=(0.0, 5.0, 2.0)),
            None, 100.0, 60.0, 0.1,
        )
        self.assertTrue(3.5 <= ratio <= 4.5, ratio)

    def test_general_mortality_form_second_order(self):
        """Test second order convergence of the general mortality form."""
        _, _, ratio = analysis.richardson_ratio(
            analysis.pde_residual_prevalence_general, reference_model(), None, 100.0, 60.0, 0.1
        )
        self.assertTrue(3.5 <= ratio <= 4.5, ratio)

    def test_odds_residual_second_order(self):
        """Test that the odds residual converges at second order."""
        _, _, ratio = analysis.richardson_ratio(
            analysis.pde_residual_odds, reference_model(gamma=(0.0, 5.0, 2.0)), None, 100.0, 60.0, 0.1
        )
        self.assertTrue(3.5 <= ratio <= 4.5, ratio)

    def test_second_order_at_sampled_points(self):
        """Both PDE residuals shrink fourfold when h halves, across the Lexis plane."""
        rng = np.random.default_rng(17)
        cases = (
            (analysis.pde_residual_prevalence, reference_model()),
            (analysis.pde_residual_odds, reference_model(gamma=(0.0, 5.0, 2.0))),
        )
        for t, a in zip(rng.uniform(60.0, 140.0, 10), rng.uniform(40.0, 90.0, 10)):
            for residual, model in cases:
                with self.subTest(t=t, a=a, residual=residual.__name__):
                    _, _, ratio = analysis.richardson_ratio(residual, model, None, t, a, 0.1)
                    self.assertTrue(3.5 <= ratio <= 4.5, ratio)

    def test_odds_residual_needs_duration_independence(self):
        """Test that the odds residual requires a duration independent ratio."""
        with self.assertRaises(PreconditionError):
            analysis.pde_residual_odds(reference_model(), None, 100.0, 60.0, 0.1)

    def test_step_must_fit_age(self):
        """Test that a step larger than the age is rejected."""
        with self.assertRaises(DomainError):
            analysis.pde_residual_prevalence(reference_model(), None, 100.0, 0.05, 0.1)

    def test_general_and_relative_mortality(self):
        """Test the general and relative mortality at a point."""
        model = reference_model(gamma=(0.0, 5.0, 2.0))
        p = analysis.prevalence(model, None, 100.0, 60.0).prevalence
        m0 = float(model.m0.rate(100.0, 60.0))
        self.assertAlmostEqual(analysis.relative_mortality(model, None, 100.0, 60.0), 2.0, places=12)
        self.assertAlmostEqual(
            analysis.general_mortality(model, None, 100.0, 60.0) / (m0 * (1.0 + p)), 1.0, places=6
        )


class ReconstructionTests(SimpleTestCase):
    """Tests for incidence from two cross-sections."""

    def test_zero_prevalence_gives_zero_incidence(self):
        """Test that zero prevalence reconstructs zero incidence."""
        ages = np.arange(40.0, 61.0)
        before = CrossSection(100.0, ages, np.zeros_like(ages))
        after = CrossSection(101.0, ages, np.zeros_like(ages))
        result = analysis.reconstruct_incidence(before, after, lambda t, a: 0.0, lambda t, a: 0.0)
        np.testing.assert_array_equal(result.values, np.zeros(20))
        self.assertEqual(result.time, 100.5)
        np.testing.assert_array_equal(result.ages, ages[:-1] + 0.5)

    def test_recovers_reference_incidence(self):
        """Test that reconstruction recovers the reference incidence."""
        ages = np.arange(40.0, 90.5, 0.5)
        result = analysis.reconstruct_from_model(reference_model(), None, 100.0, 0.5, ages)
        expected = (result.ages - 30.0) / 3000.0
        self.assertLess(np.max(np.abs(result.values / expected - 1.0)), 0.02)

    def test_cross_section_grid_matches_pointwise(self):
        """Test that a cross-section grid matches pointwise prevalence."""
        model = reference_model()
        ages = [50.0, 70.0]
        section = analysis.cross_section_grid(model, None, 100.0, ages)
        self.assertEqual(section.time, 100.0)
        for age, value in zip(ages, section.values):
            self.assertAlmostEqual(
                value, analysis.prevalence_odds_pseudo(model, None, 100.0, age).prevalence, places=10
            )

    def test_mismatched_ages(self):
        """Test that cross-sections on different ages are rejected."""
        before = CrossSection(100.0, np.array([40.0, 41.0]), np.zeros(2))
        after = CrossSection(101.0, np.array([40.0, 42.0]), np.zeros(2))
        with self.assertRaises(DomainError):
            analysis.pair_characteristics(before, after)

    def test_time_must_advance(self):
        """Test that the second cross-section must be later."""
        section = CrossSection(100.0, np.array([40.0, 41.0]), np.zeros(2))
        with self.assertRaises(DomainError):
            analysis.pair_characteristics(section, section)

    def test_full_prevalence_rejected(self):
        """Test that a prevalence of one raises NumericalError."""
        ages = np.array([40.0, 41.0])
        before = CrossSection(100.0, ages, np.array([0.5, 1.0]))
        after = CrossSection(101.0, ages, np.array([1.0, 1.0]))
        with self.assertRaises(NumericalError):
            analysis.reconstruct_incidence(before, after, lambda t, a: 0.0, lambda t, a: 0.0)

    def test_characteristic_grid_validation(self):
        """Test validation and times of a characteristic grid."""
        with self.assertRaises(DomainError):
            CharacteristicGrid(10.0, (40.0, 39.0), (0.1, 0.2))
        grid = CharacteristicGrid(10.0, (40.0, 42.0), (0.1, 0.2))
        self.assertEqual(grid.times, (50.0, 52.0))
        self.assertAlmostEqual(float(grid.slope()[0]), 0.05, places=15)
