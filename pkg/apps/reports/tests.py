"""
Tests for the reports application.

Tests cover:
- Reading age-group tables, with line numbers on malformed input
- The bundled published table
- CSV and JSON writers and atomic replacement
- The run manifest receiver
"""

import json
import math
import os
from pathlib import Path
import tempfile
from unittest.mock import patch

from django.test import SimpleTestCase
import numpy as np

from apps.analysis.results import Method, PrevalenceResult
from apps.core.signals import command_completed
from apps.estimation.params import FitResult
from apps.reports import services as reports
from apps.reports.services.writers import jsonable
from apps.simulation.tables import AgeGroupTable, PopulationLedger
from idmodds.exceptions import InputDataError

HEADER = "k,age_lo,age_hi,n,c\n"


class TempDirMixin:
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, name, text):
        path = self.tmp / name
        path.write_text(text, encoding="utf-8")
        return path


class TableReaderTests(TempDirMixin, SimpleTestCase):
    """Tests for read_age_group_table."""

    def test_bundled_table_matches_published_counts(self):
        """Test the bundled table counts."""
        table = reports.read_bundled_table()
        self.assertEqual(len(table.rows), 11)
        self.assertEqual(table.totals, (74388, 8735))
        self.assertEqual((table.rows[0].n, table.rows[0].c), (9858, 283))
        self.assertEqual((table.rows[-1].n, table.rows[-1].c), (910, 164))
        self.assertEqual(table.age_groups[4], (60.0, 65.0))
        self.assertEqual(table.cross_section_time, 100.0)

    def test_without_totals_row(self):
        """Test reading a table without a totals row."""
        path = self.write("t.csv", HEADER + "1,40,45,10,2\n2,45,50,8,3\n")
        self.assertEqual(reports.read_age_group_table(path).totals, (18, 5))

    def test_non_numeric_count_reports_line(self):
        """Test that a non-numeric count reports its line."""
        path = self.write("t.csv", HEADER + "1,40,45,10,2\n2,45,50,eight,3\n")
        with self.assertRaises(InputDataError) as caught:
            reports.read_age_group_table(path)
        self.assertEqual(caught.exception.line, 3)
        self.assertIn("line 3", str(caught.exception))

    def test_extra_field_reports_line(self):
        """Test that an extra field reports its line."""
        path = self.write("t.csv", HEADER + "1,40,45,10,2\n2,45,50,8,3,9\n")
        with self.assertRaises(InputDataError) as caught:
            reports.read_age_group_table(path)
        self.assertEqual(caught.exception.line, 3)

    def test_cases_exceeding_population(self):
        """Test that more cases than people are rejected."""
        path = self.write("t.csv", HEADER + "1,40,45,10,12\n")
        with self.assertRaises(InputDataError) as caught:
            reports.read_age_group_table(path)
        self.assertEqual(caught.exception.line, 2)

    def test_totals_must_add_up(self):
        """Test that a wrong totals row is rejected."""
        path = self.write("t.csv", HEADER + "1,40,45,10,2\n2,45,50,8,3\ntotal,,,19,5\n")
        with self.assertRaises(InputDataError) as caught:
            reports.read_age_group_table(path)
        self.assertEqual(caught.exception.line, 4)

    def test_overlapping_groups(self):
        """Test that overlapping groups are rejected."""
        path = self.write("t.csv", HEADER + "1,40,45,10,2\n2,44,50,8,3\n")
        with self.assertRaises(InputDataError) as caught:
            reports.read_age_group_table(path)
        self.assertEqual(caught.exception.line, 3)

    def test_blank_line_keeps_numbering(self):
        """Test that blank lines keep the line numbering."""
        path = self.write("t.csv", HEADER + "1,40,45,10,2\n\n2,45,50,8,x\n")
        with self.assertRaises(InputDataError) as caught:
            reports.read_age_group_table(path)
        self.assertEqual(caught.exception.line, 4)

    def test_wrong_header(self):
        """Test that a wrong header is rejected."""
        path = self.write("t.csv", "group,lo,hi,n,c\n1,40,45,10,2\n")
        with self.assertRaises(InputDataError) as caught:
            reports.read_age_group_table(path)
        self.assertEqual(caught.exception.line, 1)

    def test_empty_file(self):
        """Test that an empty file is rejected."""
        with self.assertRaises(InputDataError):
            reports.read_age_group_table(self.write("t.csv", ""))

    def test_missing_file(self):
        """Test that a missing file raises FileNotFoundError."""
        with self.assertRaises(FileNotFoundError):
            reports.read_age_group_table(self.tmp / "absent.csv")


class WriterTests(TempDirMixin, SimpleTestCase):
    """Tests for the CSV and JSON writers."""

    def test_table_written_in_bundled_layout(self):
        """Test writing a table in the bundled layout."""
        table = AgeGroupTable.from_counts(((40, 45), (45, 50)), [10, 8], [2, 3], 100.0)
        path = reports.write_table_csv(self.tmp / "table.csv", table)
        self.assertEqual(
            path.read_text(),
            HEADER + "1,40,45,10,2\n2,45,50,8,3\ntotal,,,18,5\n",
        )
        again = reports.read_age_group_table(path)
        self.assertEqual(again.fingerprint(), table.fingerprint())

    def test_curve_columns(self):
        """Test the columns of the curve file."""
        ages = [30.0, 40.0]
        curves = {
            Method.PSEUDO_CONVOLUTION: [PrevalenceResult.from_odds(100.0, a, 0.1 * a, Method.PSEUDO_CONVOLUTION) for a in ages],
            Method.KEIDING: [PrevalenceResult.from_odds(100.0, a, 0.1 * a, Method.KEIDING) for a in ages],
        }
        lines = reports.write_curve_csv(self.tmp / "curve.csv", ages, curves).read_text().splitlines()
        self.assertEqual(lines[0], "age,odds_analytic,odds_keiding")
        self.assertEqual(lines[2], "40,4,4")

    def test_ledger_leaves_absent_events_empty(self):
        """Test that absent events are written as empty fields."""
        ledger = PopulationLedger.from_arrays([1.5], [np.nan], [80.25])
        lines = reports.write_ledger_csv(self.tmp / "ledger.csv", ledger).read_text().splitlines()
        self.assertEqual(lines, ["birth,onset,death", "1.5,,80.25"])

    def _result(self, gamma_input=None):
        cov = np.diag([1e-4, 4.0, np.nan])
        return FitResult(
            gamma_hat=(0.03, 3.0, 1.0), loglik=-100.0, hessian=np.eye(3), covariance=cov,
            ci95=((0.01, 0.05), (-1.0, 7.0), (math.nan, math.nan)), converged=True,
            iterations=10, function_evals=20, gamma_input=gamma_input,
        )

    def test_table2_layout(self):
        """Test the layout of the estimates table."""
        lines = reports.write_table2_csv(self.tmp / "t2.csv", self._result((0.04, 5.0, 1.0))).read_text().splitlines()
        self.assertEqual(lines[0], "param,input,estimate,ci_lo,ci_hi")
        self.assertEqual(lines[1], "gamma1,0.04,0.03,0.01,0.05")
        self.assertEqual(lines[3], "gamma3,1,1,,")

    def test_table2_without_input(self):
        """Test the estimates table without input values."""
        lines = reports.write_table2_csv(self.tmp / "t2.csv", self._result()).read_text().splitlines()
        self.assertEqual(lines[2], "gamma2,,3,-1,7")

    def test_fit_json_is_strict_json(self):
        """Test that the fit result is strict JSON."""
        path = reports.write_fit_json(self.tmp / "fit.json", self._result())
        payload = json.loads(path.read_text())
        self.assertEqual(payload["gamma_hat"], [0.03, 3.0, 1.0])
        self.assertIsNone(payload["cov"][2][2])
        self.assertEqual(payload["ci95"][2], [None, None])
        self.assertTrue(payload["converged"])

    def test_jsonable(self):
        """Test converting numpy values and paths to JSON."""
        self.assertEqual(
            jsonable({"a": np.float64(np.inf), "b": (np.int64(3), np.bool_(True)), "c": Path("x")}),
            {"a": None, "b": [3, True], "c": "x"},
        )

    def test_atomic_write_replaces_and_cleans_up(self):
        """Test that atomic writes replace the file and leave no temporaries."""
        path = self.tmp / "out" / "file.txt"
        reports.atomic_write(path, "one")
        reports.atomic_write(path, "two")
        self.assertEqual(path.read_text(), "two")
        self.assertEqual(os.listdir(path.parent), ["file.txt"])

    def test_failed_write_keeps_old_file(self):
        """Test that a failed write keeps the old file."""
        path = reports.atomic_write(self.tmp / "file.txt", "old")
        with patch("apps.reports.services.writers.os.replace", side_effect=OSError("disk full")):
            with self.assertRaises(OSError):
                reports.atomic_write(path, "new")
        self.assertEqual(path.read_text(), "old")
        self.assertEqual(os.listdir(self.tmp), ["file.txt"])


class ManifestTests(TempDirMixin, SimpleTestCase):
    """Tests for the run manifest receiver."""

    def test_manifest_written_on_completion(self):
        """Test that a manifest is written when a command completes."""
        command_completed.send(
            sender=self.__class__, command="simulate", config_hash="abc", rng_seed=42,
            started_at="2024-01-01T00:00:00+00:00", finished_at="2024-01-01T00:00:05+00:00",
            outputs=[self.tmp / "table_seed42.csv"], output_dir=self.tmp,
        )
        manifest = json.loads((self.tmp / "simulate_manifest.json").read_text())
        self.assertEqual(manifest["rng_seed"], 42)
        self.assertEqual(manifest["config_hash"], "abc")
        self.assertEqual(manifest["outputs"], [str(self.tmp / "table_seed42.csv")])
        self.assertIn("toolkit_version", manifest)
