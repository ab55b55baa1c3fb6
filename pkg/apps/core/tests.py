"""
Tests for the core application.

Tests cover:
- Run configuration validation, overrides and hashing
- Exit codes of the management commands
- End-to-end runs of evaluate, simulate, fit and crosscheck
"""

import json
from pathlib import Path
import tempfile
from unittest.mock import patch

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, tag
from jsonschema import ValidationError
import pandas as pd

from apps.core.config import load_run_config, validate_document
from apps.core.parallel import ordered_map, worker_count
from idmodds.error_handlers import EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_NUMERICAL, exit_code_for
from idmodds.exceptions import (
    ConfigError,
    DomainError,
    InputDataError,
    QuadratureError,
    SingularHessianError,
)


def reference_document():
    return json.loads(Path(settings.REFERENCE_CONFIG_PATH).read_text())


def zero_rate_document():
    document = reference_document()
    document["incidence"] = {"variant": "positive_part_linear", "onset_age": 1000}
    document["m0"] = {"xi1": -1000, "xi2": 0.1, "xi3": 0}
    document["ratio"] = {"gamma1": 0, "gamma2": 5, "gamma3": 1}
    return document


class RunConfigTests(SimpleTestCase):
    """Tests for loading and validating run configurations."""

    def test_published_config_loads(self):
        """Test loading the bundled configuration."""
        config = load_run_config()
        self.assertEqual(config.rate_model().ratio.gamma, (0.04, 5.0, 1.0))
        self.assertEqual(config.sim_config().age_groups[0], (40.0, 45.0))
        self.assertEqual(config.calibration_target, 74388)
        self.assertTrue(config.echo_input)

    def test_unknown_key_rejected(self):
        """Test that an unknown key is rejected."""
        document = reference_document()
        document["simulation"]["migration_rate"] = 0.1
        with self.assertRaises(ConfigError) as caught:
            validate_document(document)
        self.assertIn("simulation", str(caught.exception))

    def test_unknown_section_rejected(self):
        """Test that an unknown section is rejected."""
        document = reference_document()
        document["plots"] = {}
        with self.assertRaises(ConfigError):
            validate_document(document)

    def test_missing_rates_rejected(self):
        """Test that a missing rate section is rejected."""
        document = reference_document()
        del document["m0"]
        with self.assertRaises(ConfigError):
            validate_document(document)

    def test_bad_json_reports_line(self):
        """Test that malformed JSON reports its line."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.json"
            path.write_text('{\n  "incidence": ,\n}')
            with self.assertRaises(ConfigError) as caught:
                load_run_config(path)
        self.assertIn("line 2", str(caught.exception))

    def test_override_revalidates(self):
        """Test that a command line override is validated."""
        config = load_run_config()
        self.assertEqual(config.with_override("simulation", "rng_seed", 7).sim_config().rng_seed, 7)
        self.assertIs(config.with_override("simulation", "rng_seed", None), config)
        with self.assertRaises(ConfigError):
            config.with_override("simulation", "rng_seed", -1)

    def test_hash_is_stable_and_content_based(self):
        """Test that the config hash depends only on content."""
        first, second = load_run_config(), load_run_config()
        self.assertEqual(first.config_hash, second.config_hash)
        self.assertNotEqual(first.config_hash, first.with_override("simulation", "rng_seed", 1).config_hash)

    def test_fit_quadrature_never_looser_than_default(self):
        """Test that fits use tight quadrature and four starts."""
        fit_config = load_run_config().fit_config()
        self.assertLessEqual(fit_config.quadrature.rel_tol, 1e-12)
        self.assertEqual(len(fit_config.initial_points), 4)


class ExitCodeTests(SimpleTestCase):
    """Tests for the exception to exit code mapping."""

    def test_mapping(self):
        """Test the mapping from exceptions to exit codes."""
        self.assertEqual(exit_code_for(ConfigError("x")), EXIT_INPUT)
        self.assertEqual(exit_code_for(InputDataError("x", 3)), EXIT_INPUT)
        self.assertEqual(exit_code_for(DomainError("x")), EXIT_INPUT)
        self.assertEqual(exit_code_for(ValidationError("x")), EXIT_INPUT)
        self.assertEqual(exit_code_for(QuadratureError("x")), EXIT_NUMERICAL)
        self.assertEqual(exit_code_for(SingularHessianError("x", 1e20)), EXIT_NUMERICAL)


class OrderedMapTests(SimpleTestCase):
    """Tests for the thread pool helper."""

    def test_order_independent_of_threads(self):
        """Test that results keep input order for any thread count."""
        items = list(range(50))
        with self.settings(IDM_ODDS_THREADS=1):
            serial = ordered_map(lambda x: x * x, items)
        with self.settings(IDM_ODDS_THREADS=8):
            self.assertEqual(worker_count(), 8)
            threaded = ordered_map(lambda x: x * x, items)
        self.assertEqual(serial, threaded)
        self.assertEqual(serial[7], 49)

    def test_empty(self):
        """Test mapping over an empty sequence."""
        self.assertEqual(ordered_map(abs, []), [])


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def config_file(self, document, name="run.json"):
        path = self.tmp / name
        path.write_text(json.dumps(document))
        return str(path)

    def run_command(self, name, *args, **options):
        options.setdefault("output_dir", str(self.tmp / "out"))
        return call_command(name, *args, **options)


class EvaluateCommandTests(CommandTestCase):
    """Tests for the evaluate command."""

    def test_zero_incidence_gives_zero_column(self):
        """Test that zero incidence writes a zero odds column."""
        self.run_command("evaluate", config=self.config_file(zero_rate_document()),
                         age_min=30, age_max=50, step=5)
        curve = pd.read_csv(self.tmp / "out" / "curve.csv")
        self.assertEqual(list(curve["age"]), [30, 35, 40, 45, 50])
        self.assertTrue((curve["odds_analytic"] == 0).all())
        self.assertTrue((self.tmp / "out" / "evaluate_manifest.json").exists())

    def test_default_grid_is_quarter_years_from_30_to_100(self):
        """Without grid flags the curve covers ages 30 to 100 in steps of 0.25."""
        self.run_command("evaluate", config=self.config_file(zero_rate_document()))
        ages = pd.read_csv(self.tmp / "out" / "curve.csv")["age"]
        self.assertEqual(len(ages), 281)
        self.assertEqual((ages.iloc[0], ages.iloc[1], ages.iloc[-1]), (30.0, 30.25, 100.0))

    def test_all_methods_agree(self):
        """Test that all methods write agreeing columns."""
        self.run_command("evaluate", age_min=40, age_max=80, step=20, method="all")
        curve = pd.read_csv(self.tmp / "out" / "curve.csv")
        self.assertEqual(list(curve.columns), ["age", "odds_analytic", "odds_keiding", "odds_cohort"])
        for column in ("odds_keiding", "odds_cohort"):
            gap = ((curve[column] - curve["odds_analytic"]).abs() / curve["odds_analytic"]).max()
            self.assertLess(gap, 1e-6)
        self.assertTrue(curve["odds_analytic"].is_monotonic_increasing)

    def test_missing_config_exits_2(self):
        """Test that a missing config file exits with code 2."""
        with self.assertRaises(CommandError) as caught:
            self.run_command("evaluate", config=str(self.tmp / "absent.json"))
        self.assertEqual(caught.exception.returncode, EXIT_INPUT)

    def test_invalid_config_exits_2(self):
        """Test that an invalid config exits with code 2."""
        document = reference_document()
        document["ratio"]["gamma4"] = 1
        with self.assertRaises(CommandError) as caught:
            self.run_command("evaluate", config=self.config_file(document))
        self.assertEqual(caught.exception.returncode, EXIT_INPUT)

    def test_quadrature_failure_exits_3(self):
        """Test that a quadrature failure exits with code 3."""
        with patch("apps.core.management.commands.evaluate.prevalence_curve",
                   side_effect=QuadratureError("no convergence")):
            with self.assertRaises(CommandError) as caught:
                self.run_command("evaluate")
        self.assertEqual(caught.exception.returncode, EXIT_NUMERICAL)

    def test_unexpected_error_exits_3(self):
        """Failures outside the toolkit hierarchy still leave with the numerical exit code."""
        with patch("apps.core.management.commands.evaluate.prevalence_curve",
                   side_effect=KeyError("lost column")):
            with self.assertLogs("idmodds.error_handlers", level="ERROR"):
                with self.assertRaises(CommandError) as caught:
                    self.run_command("evaluate")
        self.assertEqual(caught.exception.returncode, EXIT_NUMERICAL)
        self.assertIn("internal error", str(caught.exception))


class SimulateCommandTests(CommandTestCase):
    """Tests for the simulate command."""

    def tiny_document(self):
        document = reference_document()
        document["simulation"].pop("calibrate_to")
        document["simulation"]["births_per_year"] = 10
        return document

    def test_same_seed_gives_identical_bytes(self):
        """Test that the same seed writes identical files."""
        config = self.config_file(self.tiny_document())
        self.run_command("simulate", config=config, seed=42, output_dir=str(self.tmp / "a"))
        self.run_command("simulate", config=config, seed=42, output_dir=str(self.tmp / "b"))
        first = (self.tmp / "a" / "table_seed42.csv").read_bytes()
        self.assertEqual(first, (self.tmp / "b" / "table_seed42.csv").read_bytes())

        table = pd.read_csv(self.tmp / "a" / "table_seed42.csv")
        self.assertEqual(len(table), 12)
        self.assertEqual(table["k"].iloc[-1], "total")
        manifest = json.loads((self.tmp / "a" / "simulate_manifest.json").read_text())
        self.assertEqual(manifest["rng_seed"], 42)

    def test_replicates_and_ledger(self):
        """Test writing replicate tables and ledgers."""
        document = self.tiny_document()
        document["simulation"]["dump_ledger"] = True
        self.run_command("simulate", config=self.config_file(document), seed=5, replicates=2)
        out = self.tmp / "out"
        for seed in (5, 6):
            self.assertTrue((out / f"table_seed{seed}.csv").exists())
            ledger = pd.read_csv(out / f"ledger_seed{seed}.csv")
            self.assertEqual(len(ledger), 10 * 65)

    def test_zero_replicates_exits_2(self):
        """Test that zero replicates exits with code 2."""
        with self.assertRaises(CommandError) as caught:
            self.run_command("simulate", replicates=0, births=10)
        self.assertEqual(caught.exception.returncode, EXIT_INPUT)

    @tag("slow")
    def test_calibrated_total_near_published(self):
        """Test that calibration reaches the observed population size."""
        self.run_command("simulate", seed=3)
        table = pd.read_csv(self.tmp / "out" / "table_seed3.csv")
        total = int(table["n"].iloc[-1])
        self.assertLess(abs(total - 74388), 3 * 74388 ** 0.5)


class FitCommandTests(CommandTestCase):
    """Tests for the fit command."""

    def quick_document(self, **fit):
        document = reference_document()
        document["fit"] = {
            "fixed": {"gamma1": 0.04, "gamma2": 5},
            "initial_points": [[0.04, 5, 0.95]],
            "restarts": 0,
            "echo_input": True,
            **fit,
        }
        return document

    def test_writes_result_and_table2(self):
        """Test that fit writes the result and the estimates table."""
        self.run_command("fit", config=self.config_file(self.quick_document()))
        out = self.tmp / "out"
        payload = json.loads((out / "fit.json").read_text())
        self.assertTrue(payload["converged"])
        self.assertEqual(payload["gamma_input"], [0.04, 5.0, 1.0])
        table2 = pd.read_csv(out / "table2.csv")
        self.assertEqual(list(table2["param"]), ["gamma1", "gamma2", "gamma3"])
        self.assertEqual(list(table2["input"]), [0.04, 5.0, 1.0])
        self.assertTrue((out / "fit_manifest.json").exists())

    def test_non_convergence_exits_4_and_keeps_files(self):
        """Test that non-convergence exits with code 4 and keeps outputs."""
        with self.assertRaises(CommandError) as caught:
            self.run_command("fit", config=self.config_file(self.quick_document(max_iterations=2)))
        self.assertEqual(caught.exception.returncode, EXIT_NOT_CONVERGED)
        payload = json.loads((self.tmp / "out" / "fit.json").read_text())
        self.assertFalse(payload["converged"])

    def test_malformed_data_exits_2_with_line(self):
        """Test that malformed data exits with code 2 naming the line."""
        data = self.tmp / "data.csv"
        data.write_text("k,age_lo,age_hi,n,c\n1,40,45,100,5\n2,45,50,100,oops\n")
        with self.assertRaises(CommandError) as caught:
            self.run_command("fit", config=self.config_file(self.quick_document()), data=str(data))
        self.assertEqual(caught.exception.returncode, EXIT_INPUT)
        self.assertIn("line 3", str(caught.exception))

    def test_json_only_format(self):
        """Test that the json format alone skips the CSV table."""
        document = self.quick_document()
        document["output"]["formats"] = ["json"]
        self.run_command("fit", config=self.config_file(document))
        self.assertTrue((self.tmp / "out" / "fit.json").exists())
        self.assertFalse((self.tmp / "out" / "table2.csv").exists())

    @tag("slow")
    def test_bundled_table_reproduces_published_estimates(self):
        """Test that the bundled table reproduces the published estimates."""
        self.run_command("fit")
        table2 = pd.read_csv(self.tmp / "out" / "table2.csv").set_index("param")
        self.assertAlmostEqual(table2.loc["gamma1", "estimate"], 0.0330, delta=0.005)
        self.assertAlmostEqual(table2.loc["gamma2", "estimate"], 3.06, delta=0.5)
        self.assertAlmostEqual(table2.loc["gamma3", "estimate"], 1.01, delta=0.05)
        for param in table2.index:
            row = table2.loc[param]
            self.assertTrue(row["ci_lo"] < row["input"] < row["ci_hi"])


class CrosscheckCommandTests(CommandTestCase):
    """Tests for the crosscheck command."""

    def test_zero_rates_give_zero_residuals(self):
        """Test that zero rates give zero residuals in every check."""
        self.run_command("crosscheck", config=self.config_file(zero_rate_document()))
        report = json.loads((self.tmp / "out" / "crosscheck.json").read_text())
        self.assertEqual(report["formula_triangle"]["max_relative_deviation"], 0.0)
        for check in ("prevalence", "prevalence_general", "odds"):
            self.assertEqual(report["pde"][check]["residual_h"], 0.0)
            self.assertEqual(report["pde"][check]["residual_h_half"], 0.0)
        self.assertEqual(report["reconstruction"]["max_relative_error"], 0.0)
        self.assertIn("skipped", report["convolution_special"])

    @tag("slow")
    def test_published_config_passes_checks(self):
        """Test that the bundled configuration passes every check."""
        self.run_command("crosscheck")
        report = json.loads((self.tmp / "out" / "crosscheck.json").read_text())
        self.assertLess(report["formula_triangle"]["max_relative_deviation"], 1e-6)
        for check in ("prevalence", "prevalence_general"):
            ratio = report["pde"][check]["richardson_ratio"]
            self.assertTrue(3.5 <= ratio <= 4.5, (check, ratio))
        self.assertIn("gamma1", report["pde"]["odds"]["skipped"])
        self.assertLess(report["reconstruction"]["max_relative_error"], 0.02)
