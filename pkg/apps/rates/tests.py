"""
Tests for the rate model.

Tests cover:
- Incidence variants (positive part, exponential, tabulated grid)
- Gompertz mortality and the mortality rate ratio
- Closed-form cumulative hazards against QUADPACK
- Configuration parsing
"""

import math

from django.test import SimpleTestCase
import numpy as np
from scipy import integrate

from apps.rates import services as rates
from apps.rates.params import (
    ExponentialFirstOrder,
    GompertzParams,
    MortalityRatioParams,
    PositivePartLinear,
    RateModel,
    TabulatedGrid,
)
from idmodds.exceptions import ConfigError, DomainError


def reference_model(gamma=(0.04, 5.0, 1.0), incidence=None):
    return RateModel(
        incidence=incidence or PositivePartLinear(),
        m0=GompertzParams(-10.7, 0.1, math.log(0.998)),
        ratio=MortalityRatioParams(*gamma),
    )


def along(rate, t, a, delta):
    """QUADPACK integral of rate(t, a) over the last delta years of the characteristic."""
    kink = delta - (a - 30.0)
    value, _ = integrate.quad(
        lambda tau: float(rate(t - delta + tau, a - delta + tau)),
        0.0, delta, epsabs=1e-14, epsrel=1e-13, limit=200,
        points=[kink] if 0 < kink < delta else None,
    )
    return value


class IncidenceTests(SimpleTestCase):
    """Tests for the incidence variants."""

    def setUp(self):
        self.model = reference_model()

    def test_positive_part_at_kink_is_zero(self):
        """Test that incidence is zero at the onset age."""
        self.assertEqual(rates.incidence(self.model, 17.0, 30.0), 0.0)

    def test_positive_part_above_kink(self):
        """Test incidence above the onset age."""
        self.assertAlmostEqual(rates.incidence(self.model, 100.0, 42.5), 12.5 / 3000.0, places=15)

    def test_positive_part_below_kink(self):
        """Test that incidence is zero below the onset age."""
        self.assertEqual(rates.incidence(self.model, 100.0, 20.0), 0.0)

    def test_negative_age_rejected(self):
        """Test that a negative age is rejected."""
        with self.assertRaises(DomainError):
            rates.incidence(self.model, 100.0, -1.0)

    def test_exponential_variant(self):
        """Test the exponential incidence variant."""
        model = reference_model(incidence=ExponentialFirstOrder(-6.0, 0.03, -0.01))
        self.assertAlmostEqual(
            rates.incidence(model, 80.0, 50.0), math.exp(-6.0 + 1.5 - 0.8), places=14
        )

    def test_tabulated_bilinear_interpolation(self):
        """Test bilinear interpolation of tabulated incidence."""
        grid = TabulatedGrid(times=(0.0, 100.0), ages=(0.0, 100.0),
                             rates=((0.0, 0.02), (0.01, 0.03)))
        model = reference_model(incidence=grid)
        self.assertAlmostEqual(float(rates.incidence(model, 50.0, 50.0)), 0.015, places=12)

    def test_tabulated_clamps_outside_grid(self):
        """Test that tabulated incidence clamps outside the grid."""
        grid = TabulatedGrid(times=(0.0, 100.0), ages=(0.0, 100.0),
                             rates=((0.0, 0.02), (0.01, 0.03)))
        model = reference_model(incidence=grid)
        self.assertAlmostEqual(float(rates.incidence(model, 150.0, 120.0)), 0.03, places=12)

    def test_tabulated_error_mode_raises(self):
        """Test that the error mode raises outside the grid."""
        grid = TabulatedGrid(times=(0.0, 100.0), ages=(0.0, 100.0),
                             rates=((0.0, 0.02), (0.01, 0.03)), extrapolation="error")
        with self.assertRaises(DomainError):
            rates.incidence(reference_model(incidence=grid), 150.0, 50.0)

    def test_tabulated_rejects_bad_shape(self):
        """Test that a grid of the wrong shape is rejected."""
        with self.assertRaises(ConfigError):
            TabulatedGrid(times=(0.0, 100.0), ages=(0.0, 50.0, 100.0), rates=((0.0, 0.1),))

    def test_denominator_must_be_positive(self):
        """Test that a non-positive denominator is rejected."""
        with self.assertRaises(ConfigError):
            PositivePartLinear(denominator=0.0)


class MortalityTests(SimpleTestCase):
    """Tests for m0, R(d) and m1."""

    def setUp(self):
        self.model = reference_model()

    def test_zero_exponent_is_one(self):
        """Test that a zero exponent gives a rate of one."""
        self.assertEqual(float(GompertzParams(0.0, 0.1, 0.0).rate(0.0, 0.0)), 1.0)

    def test_gompertz_reference_value(self):
        """Test the Gompertz mortality at a reference point."""
        expected = math.exp(-6.45) * 0.998 ** 100
        self.assertAlmostEqual(
            float(rates.mortality_healthy(self.model, 100.0, 42.5)) / expected, 1.0, places=12
        )
        self.assertAlmostEqual(expected, 1.294e-3, places=6)

    def test_gompertz_age_step(self):
        """Test the Gompertz growth over one year of age."""
        m = rates.mortality_healthy(self.model, 100.0, 50.0)
        m_next = rates.mortality_healthy(self.model, 100.0, 51.0)
        self.assertAlmostEqual(float(m_next / m), math.exp(0.1), places=12)

    def test_gompertz_slope_zero_rejected(self):
        """Test that a zero Gompertz slope is rejected."""
        with self.assertRaises(ConfigError):
            GompertzParams(-10.0, 0.1, -0.1)

    def test_ratio_values(self):
        """Test mortality ratio values."""
        self.assertEqual(float(rates.mortality_ratio(self.model, 5.0)), 1.0)
        self.assertAlmostEqual(float(rates.mortality_ratio(self.model, 0.0)), 2.0, places=14)
        flat = reference_model(gamma=(0.0, 5.0, 1.7))
        for d in (0.0, 3.0, 40.0):
            self.assertEqual(float(rates.mortality_ratio(flat, d)), 1.7)

    def test_ratio_must_stay_positive(self):
        """Test that a non-positive ratio is rejected."""
        with self.assertRaises(DomainError):
            MortalityRatioParams(-0.01, 5.0, 0.1)
        with self.assertRaises(DomainError):
            rates.mortality_ratio(self.model, -1.0)

    def test_mortality_diseased_factorizes(self):
        """Test that m1 factorizes into m0 times the ratio."""
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = rng.uniform(0, 100)
            t = rng.uniform(50, 150)
            d = rng.uniform(0, a)
            m1 = rates.mortality_diseased(self.model, t, a, d)
            m0 = rates.mortality_healthy(self.model, t, a)
            self.assertAlmostEqual(float(m1 / m0), float(rates.mortality_ratio(self.model, d)),
                                   places=12)

    def test_mortality_diseased_reference_value(self):
        """Test m1 at zero duration."""
        value = rates.mortality_diseased(self.model, 100.0, 42.5, 0.0)
        self.assertAlmostEqual(
            float(value / (2.0 * rates.mortality_healthy(self.model, 100.0, 42.5))), 1.0, places=12
        )

    def test_mortality_diseased_at_vertex(self):
        """Test that m1 equals m0 at the ratio vertex."""
        value = rates.mortality_diseased(self.model, 100.0, 42.5, 5.0)
        self.assertAlmostEqual(float(value), float(rates.mortality_healthy(self.model, 100.0, 42.5)),
                               places=15)

    def test_unit_ratio_equals_healthy(self):
        """Test that a unit ratio gives healthy mortality."""
        model = reference_model(gamma=(0.0, 5.0, 1.0))
        self.assertEqual(
            float(rates.mortality_diseased(model, 90.0, 60.0, 12.0)),
            float(rates.mortality_healthy(model, 90.0, 60.0)),
        )

    def test_duration_beyond_age_rejected(self):
        """Test that a duration beyond the age is rejected."""
        with self.assertRaises(DomainError):
            rates.mortality_diseased(self.model, 100.0, 40.0, 41.0)


class CumulativeHazardTests(SimpleTestCase):
    """Tests for the closed-form cumulative hazards."""

    def setUp(self):
        self.model = reference_model()

    def test_empty_characteristic(self):
        """Test that an empty characteristic has zero hazard."""
        self.assertEqual(float(rates.cumulative_m0(self.model, 100.0, 42.5, 0.0)), 0.0)
        self.assertEqual(float(rates.cumulative_incidence_hazard(self.model, 100.0, 42.5, 0.0)), 0.0)
        self.assertEqual(float(rates.cumulative_m1(self.model, 100.0, 42.5, 0.0)), 0.0)

    def test_m0_matches_quadrature(self):
        """Test the cumulative m0 against quadrature."""
        closed = float(rates.cumulative_m0(self.model, 100.0, 42.5, 5.0))
        oracle = along(self.model.m0.rate, 100.0, 42.5, 5.0)
        self.assertLess(abs(closed - oracle) / oracle, 1e-10)

    def test_m0_additivity(self):
        """Test that the cumulative m0 is additive along a characteristic."""
        whole = rates.cumulative_m0(self.model, 100.0, 60.0, 25.0)
        split = rates.cumulative_m0(self.model, 100.0, 60.0, 10.0) + rates.cumulative_m0(
            self.model, 90.0, 50.0, 15.0
        )
        self.assertAlmostEqual(float(whole / split), 1.0, places=13)

    def test_incidence_hazard_above_kink(self):
        """Test the cumulative incidence above the onset age."""
        a, d = 60.0, 20.0
        expected = (d * (a - d - 30.0) + d ** 2 / 2.0) / 3000.0
        self.assertAlmostEqual(
            float(rates.cumulative_incidence_hazard(self.model, 100.0, a, d)), expected, places=15
        )

    def test_incidence_hazard_below_kink(self):
        """Test the cumulative incidence below the onset age."""
        self.assertEqual(float(rates.cumulative_incidence_hazard(self.model, 100.0, 29.0, 20.0)), 0.0)

    def test_incidence_hazard_straddling_kink(self):
        """Test the cumulative incidence across the onset age."""
        closed = float(rates.cumulative_incidence_hazard(self.model, 100.0, 45.0, 40.0))
        self.assertAlmostEqual(closed, 15.0 ** 2 / 6000.0, places=15)

    def test_random_triples_match_quadrature(self):
        """Test cumulative hazards against quadrature at random points."""
        rng = np.random.default_rng(2014)
        for _ in range(100):
            t = rng.uniform(50, 150)
            a = rng.uniform(0.5, 95)
            d = rng.uniform(0, a)
            for closed, rate in (
                (rates.cumulative_m0(self.model, t, a, d), self.model.m0.rate),
                (rates.cumulative_incidence_hazard(self.model, t, a, d),
                 self.model.incidence.rate),
            ):
                oracle = along(rate, t, a, d)
                self.assertLessEqual(abs(float(closed) - oracle), 1e-9 * oracle + 1e-13)

    def test_m1_matches_quadrature(self):
        """Test the cumulative m1 against quadrature."""
        t, a, d = 100.0, 70.0, 25.0
        closed = float(rates.cumulative_m1(self.model, t, a, d))
        oracle, _ = integrate.quad(
            lambda tau: float(self.model.m0.rate(t - d + tau, a - d + tau)
                              * self.model.ratio.ratio(tau)),
            0.0, d, epsabs=1e-14, epsrel=1e-13,
        )
        self.assertLess(abs(closed - oracle) / oracle, 1e-10)

    def test_m1_duration_independent_shortcut(self):
        """Test the cumulative m1 under a duration independent ratio."""
        model = reference_model(gamma=(0.0, 5.0, 2.0))
        self.assertAlmostEqual(
            float(rates.cumulative_m1(model, 100.0, 60.0, 10.0)),
            2.0 * float(rates.cumulative_m0(model, 100.0, 60.0, 10.0)),
            places=15,
        )

    def test_exponential_incidence_hazard(self):
        """Test the cumulative exponential incidence."""
        model = reference_model(incidence=ExponentialFirstOrder(-7.0, 0.05, -0.01))
        closed = float(rates.cumulative_incidence_hazard(model, 100.0, 60.0, 30.0))
        oracle = along(model.incidence.rate, 100.0, 60.0, 30.0)
        self.assertLess(abs(closed - oracle) / oracle, 1e-10)

    def test_tabulated_hazard_uses_quadrature(self):
        """Test the cumulative tabulated incidence."""
        grid = TabulatedGrid(times=(0.0, 200.0), ages=(0.0, 100.0),
                             rates=((0.0, 0.02), (0.0, 0.02)))
        model = reference_model(incidence=grid)
        # rate is 0.0002 * age, exact on the grid
        expected = 0.0002 * (60.0 ** 2 - 40.0 ** 2) / 2.0
        self.assertAlmostEqual(
            float(rates.cumulative_incidence_hazard(model, 100.0, 60.0, 20.0)), expected, places=10
        )

    def test_delta_beyond_age_rejected(self):
        """Test that a span beyond the age is rejected."""
        with self.assertRaises(DomainError):
            rates.cumulative_m0(self.model, 100.0, 10.0, 11.0)


class RateConfigTests(SimpleTestCase):
    """Tests for building rate models from configuration sections."""

    def test_reference_sections(self):
        """Test building the reference rate model."""
        model = rates.rate_model_from_config({
            "incidence": {"variant": "positive_part_linear"},
            "m0": {"xi1": -10.7, "xi2": 0.1, "xi3": math.log(0.998)},
            "ratio": {"gamma1": 0.04, "gamma2": 5, "gamma3": 1},
        })
        self.assertEqual(model.ratio.gamma, (0.04, 5, 1))
        self.assertEqual(model.incidence, PositivePartLinear(30.0, 3000.0))

    def test_non_positive_ratio_is_config_error(self):
        """Test that a non-positive ratio is a configuration error."""
        with self.assertRaises(ConfigError):
            rates.rate_model_from_config({
                "incidence": {"variant": "positive_part_linear"},
                "m0": {"xi1": -10.7, "xi2": 0.1, "xi3": 0.0},
                "ratio": {"gamma1": -1.0, "gamma2": 5, "gamma3": 1},
            })

    def test_incidence_round_trip(self):
        """Test that an incidence variant survives a config round trip."""
        variant = ExponentialFirstOrder(-6.0, 0.02, 0.0)
        self.assertEqual(rates.incidence_from_config(rates.incidence_to_config(variant)), variant)

    def test_with_gamma_keeps_other_rates(self):
        """Test that replacing gamma keeps the other rates."""
        model = reference_model().with_gamma((0.0, 1.0, 3.0))
        self.assertTrue(model.ratio.duration_independent)
        self.assertEqual(model.incidence, PositivePartLinear())
