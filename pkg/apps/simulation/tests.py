"""
Tests for the microsimulation.

Tests cover:
- Configuration and table invariants
- Exactness of the inversion sampler (KS tests against closed forms)
- Determinism across seeds and thread counts
- Cross-sections, replicates and birth calibration
"""

import math

from django.test import SimpleTestCase, override_settings, tag
import numpy as np
from numpy.random import default_rng
from scipy import integrate, stats

from apps.analysis.results import CohortBaseline
from apps.analysis.services import survival_healthy_S, total_cases_Cstar
from apps.rates.params import (
    GompertzParams,
    MortalityRatioParams,
    PositivePartLinear,
    RateModel,
    TabulatedGrid,
)
from apps.simulation import sampler
from apps.simulation import services as simulation
from apps.simulation.tables import (
    AgeGroupRow,
    AgeGroupTable,
    LifeRecord,
    PopulationLedger,
    SimConfig,
)
from idmodds.exceptions import ConfigError, DomainError

REFERENCE_M0 = GompertzParams(-10.7, 0.1, math.log(0.998))


def reference_model(gamma=(0.04, 5.0, 1.0), incidence=None):
    return RateModel(incidence or PositivePartLinear(), REFERENCE_M0, MortalityRatioParams(*gamma))


class SimConfigTests(SimpleTestCase):
    """Tests for SimConfig validation."""

    def test_defaults_cover_study_ages(self):
        """Test that the default groups cover ages 40 to 95."""
        config = SimConfig()
        self.assertEqual(len(config.age_groups), 11)
        self.assertEqual(config.age_groups[0], (40.0, 45.0))
        self.assertEqual(config.age_groups[-1], (90.0, 95.0))
        self.assertEqual(config.n_years, 65)

    def test_births_must_be_positive(self):
        """Test that zero births are rejected."""
        with self.assertRaises(ConfigError):
            SimConfig(births_per_year=0)

    def test_overlapping_groups_rejected(self):
        """Test that overlapping groups are rejected."""
        with self.assertRaises(ConfigError):
            SimConfig(age_groups=((40, 46), (45, 50)))

    def test_window_must_populate_groups(self):
        """Test that the birth window must reach every group."""
        with self.assertRaises(ConfigError):
            SimConfig(birth_window=(10, 65))

    def test_from_config_ignores_cli_keys(self):
        """Test that command line keys are ignored."""
        config = SimConfig.from_config({"births_per_year": 7, "calibrate_to": 100, "dump_ledger": True})
        self.assertEqual(config.births_per_year, 7)

    def test_from_config_rejects_unknown_keys(self):
        """Test that unknown keys are rejected."""
        with self.assertRaises(ConfigError):
            SimConfig.from_config({"migration": 1})


class TableTests(SimpleTestCase):
    """Tests for LifeRecord and AgeGroupTable invariants."""

    def test_life_record_ordering(self):
        """Test that life records keep birth, onset and death in order."""
        with self.assertRaises(DomainError):
            LifeRecord(10.0, onset_time=5.0)
        with self.assertRaises(DomainError):
            LifeRecord(10.0, onset_time=20.0, death_time=15.0)
        LifeRecord(10.0, None, 12.0)

    def test_row_counts(self):
        """Test that a row with more cases than people is rejected."""
        with self.assertRaises(DomainError):
            AgeGroupRow(1, 40.0, 45.0, n=3, c=4)

    def test_totals(self):
        """Test table totals and group numbering."""
        table = AgeGroupTable.from_counts(((40, 45), (45, 50)), [10, 20], [1, 5])
        self.assertEqual(table.totals, (30, 6))
        self.assertEqual([row.k for row in table.rows], [1, 2])
        self.assertEqual(table.rows[1].midpoint, 47.5)


class SamplerTests(SimpleTestCase):
    """Tests for inversion sampling of life courses."""

    def test_zero_rates_censor_everyone(self):
        """Test that zero rates censor every life."""
        model = RateModel(
            PositivePartLinear(onset_age=1000.0),
            GompertzParams(-1000.0, 0.1, 0.0),
            MortalityRatioParams(0.0, 5.0, 1.0),
        )
        record = sampler.sample_life(model, 10.0, default_rng(1))
        self.assertEqual(record, LifeRecord(birth_time=10.0))
        self.assertIsNone(record.onset_time)
        self.assertIsNone(record.death_time)

    def test_sample_life_record_fields(self):
        """A sampled life carries its birth time and events in birth, onset, death order."""
        model = reference_model()
        records = [sampler.sample_life(model, 5.0, default_rng(seed)) for seed in range(200)]
        self.assertTrue(all(isinstance(r, LifeRecord) and r.birth_time == 5.0 for r in records))
        with_onset = [r for r in records if r.onset_time is not None]
        self.assertTrue(with_onset)
        for record in with_onset:
            self.assertGreater(record.onset_time, record.birth_time)
            if record.death_time is not None:
                self.assertLess(record.onset_time, record.death_time)
        onset, death = sampler.sample_lives(model, [5.0], default_rng(3))
        again = sampler.sample_life(model, 5.0, default_rng(3))
        self.assertEqual(again.death_time, None if np.isnan(death[0]) else float(death[0]))

    def test_gompertz_death_without_incidence(self):
        """Test that deaths follow the Gompertz law without incidence."""
        model = reference_model(incidence=PositivePartLinear(onset_age=1000.0))
        birth = 20.0
        onset, death = sampler.sample_lives(model, np.full(100_000, birth), default_rng(123))
        self.assertTrue(np.all(np.isnan(onset)))
        # a handful survive to max_age and are censored
        ages = death[~np.isnan(death)] - birth
        self.assertGreater(ages.size, 99_900)
        at_max = -np.expm1(-model.m0.cumulative(birth + 110.0, 110.0, 110.0))

        def cdf(x):
            x = np.asarray(x, dtype=float)
            return -np.expm1(-model.m0.cumulative(birth + x, x, x)) / at_max

        self.assertGreater(stats.kstest(ages, cdf).pvalue, 0.01)

    def test_residual_life_follows_m1_hazard(self):
        """Test that residual life follows the m1 hazard."""
        model = reference_model()
        t0, a0 = 60.0, 50.0
        exposure = default_rng(9).standard_exponential(100_000)
        n = exposure.size
        life = sampler.invert_cumulative(
            lambda u, m: model.ratio.weighted_exponential_integral(
                model.m0.slope, model.m0.rate(t0, a0), model.m0.rate(t0 + u, a0 + u), u
            ),
            lambda u, m: model.m0.rate(t0 + u, a0 + u) * model.ratio.ratio(u),
            exposure,
            np.full(n, 60.0),
        )

        def cdf(u):
            u = np.asarray(u, dtype=float)
            cumulative = model.ratio.weighted_exponential_integral(
                model.m0.slope, model.m0.rate(t0, a0), model.m0.rate(t0 + u, a0 + u), u
            )
            return -np.expm1(-cumulative)

        self.assertGreater(stats.kstest(life, cdf).pvalue, 0.01)

    def test_onset_fraction_matches_cumulative_incidence(self):
        """Test the onset fraction against cumulative incidence."""
        model = reference_model()
        birth, n = 30.0, 20_000
        onset, death = sampler.sample_lives(model, np.full(n, birth), default_rng(77))

        def density(x):
            t = birth + x
            exit_hazard = model.m0.cumulative(t, x, x) + model.incidence.cumulative(t, x, x)
            return float(model.incidence.rate(t, x) * np.exp(-exit_hazard))

        expected, _ = integrate.quad(density, 0.0, 110.0, points=[30.0], limit=200)
        observed = np.count_nonzero(~np.isnan(onset)) / n
        self.assertGreater(observed, 0.0)
        self.assertLess(abs(observed - expected), 4.0 * math.sqrt(expected * (1 - expected) / n))

    def test_life_records_are_ordered(self):
        """Test that simulated records are ordered."""
        config = SimConfig(births_per_year=40, rng_seed=5)
        ledger = simulation.run_simulation(reference_model(), config)
        records = list(ledger.records())
        self.assertEqual(len(records), 40 * 65)
        self.assertTrue(all(r.onset_time is None or r.onset_time > r.birth_time for r in records))

    def test_inversion_hits_target(self):
        """Test that inversion hits the target hazard."""
        target = np.array([0.5, 1.0, 2.0])
        x = sampler.invert_cumulative(lambda x, m: x ** 2, lambda x, m: 2 * x, target, 10.0)
        np.testing.assert_allclose(x, np.sqrt(target), rtol=0, atol=1e-9)

    @tag("slow")
    def test_tabulated_incidence_matches_thinning(self):
        """Test inversion against thinning for tabulated incidence."""
        grid = TabulatedGrid(times=(0.0, 200.0), ages=(0.0, 30.0, 60.0, 110.0),
                             rates=((0.0, 0.0, 0.01, 0.03), (0.0, 0.0, 0.01, 0.03)))
        model = reference_model(incidence=grid)
        births = np.full(2000, 10.0)
        onset, death = sampler.sample_lives(model, births, default_rng(1))
        first = np.where(np.isnan(onset), death, onset) - births
        thinned, is_onset = sampler.thinning_first_event(model, births, default_rng(2))
        pvalue = stats.ks_2samp(first[~np.isnan(first)], thinned[~np.isnan(thinned)]).pvalue
        self.assertGreater(pvalue, 0.01)
        gap = np.count_nonzero(~np.isnan(onset)) / 2000 - is_onset.mean()
        self.assertLess(abs(gap), 0.05)


class SimulationServiceTests(SimpleTestCase):
    """Tests for run_simulation, cross_section and replicate_study."""

    def setUp(self):
        self.model = reference_model()
        self.config = SimConfig(births_per_year=60, rng_seed=11)

    def test_single_birth(self):
        """Test a simulation with a single birth."""
        config = SimConfig(births_per_year=1, birth_window=(59, 60), age_groups=((40, 41),))
        self.assertEqual(len(simulation.run_simulation(self.model, config)), 1)

    def test_same_seed_same_ledger(self):
        """Test that the same seed gives the same ledger."""
        first = simulation.run_simulation(self.model, self.config)
        second = simulation.run_simulation(self.model, self.config)
        self.assertTrue(first.equals(second))

    def test_thread_count_does_not_change_results(self):
        """Test that the thread count does not change results."""
        with override_settings(IDM_ODDS_THREADS=1):
            serial = simulation.run_simulation(self.model, self.config)
        with override_settings(IDM_ODDS_THREADS=4):
            threaded = simulation.run_simulation(self.model, self.config)
        self.assertTrue(serial.equals(threaded))

    def test_empty_ledger_gives_zero_table(self):
        """Test that an empty ledger gives a zero table."""
        table = simulation.cross_section(PopulationLedger.empty(), self.config)
        self.assertEqual(len(table.rows), 11)
        self.assertEqual(table.totals, (0, 0))

    def test_single_diseased_person(self):
        """Test a cross-section with one diseased person."""
        ledger = PopulationLedger.from_arrays([59.0], [90.0], [np.nan])
        table = simulation.cross_section(ledger, self.config)
        self.assertEqual((table.rows[0].n, table.rows[0].c), (1, 1))
        self.assertEqual(table.totals, (1, 1))

    def test_dead_and_future_cases_not_counted(self):
        """Test that the dead and future cases are not counted."""
        ledger = PopulationLedger.from_arrays(
            [50.0, 50.0, 50.0], [np.nan, 99.0, 101.0], [99.5, np.nan, np.nan]
        )
        table = simulation.cross_section(ledger, self.config)
        self.assertEqual((table.rows[2].n, table.rows[2].c), (2, 1))

    def test_groups_are_disjoint(self):
        """Test that nobody is counted twice."""
        ledger = simulation.run_simulation(self.model, self.config)
        table = simulation.cross_section(ledger, self.config)
        self.assertLessEqual(table.totals[0], len(ledger))
        self.assertTrue(all(0 <= row.c <= row.n for row in table.rows))

    def test_single_replicate_matches_run(self):
        """Test that one replicate matches a direct run."""
        (table,) = simulation.replicate_study(self.model, self.config, 1)
        direct = simulation.cross_section(simulation.run_simulation(self.model, self.config), self.config)
        self.assertEqual(table, direct)

    def test_replicates_differ(self):
        """Test that replicates use different seeds."""
        first, second = simulation.replicate_study(self.model, self.config, 2)
        self.assertNotEqual(first, second)

    def test_replicates_need_positive_count(self):
        """Test that zero replicates are rejected."""
        with self.assertRaises(ConfigError):
            simulation.replicate_study(self.model, self.config, 0)

    def test_calibration_scales_with_target(self):
        """Test that calibration scales births to the target."""
        expected = simulation.expected_alive_per_birth(self.model, self.config)
        self.assertGreater(expected, 0.0)
        calibrated = simulation.calibrate_births(self.model, self.config, target=1000 * expected)
        self.assertEqual(calibrated.births_per_year, 1000)
        self.assertEqual(calibrated.rng_seed, self.config.rng_seed)

    def test_rate_ratio_recovers_constant_ratio(self):
        """Test that the person-time ratio recovers a constant ratio."""
        model = reference_model(gamma=(0.0, 5.0, 2.0))
        config = SimConfig(births_per_year=300, rng_seed=3)
        ledger = simulation.run_simulation(model, config)
        estimate = simulation.person_time_rate_ratio(model, ledger, config)
        self.assertLess(abs(math.log(estimate.ratio) - math.log(2.0)), 3.0 * estimate.se_log)
        self.assertAlmostEqual(estimate.deaths_healthy / estimate.expected_healthy, 1.0, delta=0.05)


class PublishedScaleSimulationTests(SimpleTestCase):
    """Full-size runs under the published rates."""

    @tag("slow")
    def test_calibrated_population_matches_counts_and_prevalence(self):
        """Test population size and group prevalence of a full-size run."""
        model = reference_model()
        config = simulation.calibrate_births(model, SimConfig(rng_seed=2014))
        table = simulation.cross_section(simulation.run_simulation(model, config), config)

        alive, _ = table.totals
        self.assertLess(abs(alive - 74388), 3.0 * math.sqrt(74388))

        baseline = CohortBaseline()
        z = stats.norm.ppf(1.0 - 0.01 / (2 * len(table.rows)))
        for row in table.rows:
            cases, _ = integrate.quad(
                lambda a: total_cases_Cstar(model, baseline, 100.0, a), row.age_lo, row.age_hi
            )
            healthy, _ = integrate.quad(
                lambda a: float(survival_healthy_S(model, baseline, 100.0, a)), row.age_lo, row.age_hi
            )
            p = cases / (cases + healthy)
            band = z * math.sqrt(p * (1.0 - p) / row.n)
            self.assertLess(abs(row.c / row.n - p), band, f"group {row.k}")
