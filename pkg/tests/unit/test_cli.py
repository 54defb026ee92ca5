#!/usr/bin/env python3
# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.

"""Unit tests for the decoration command line."""

import csv
import io
import json
import math
import re
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from cli import CURVE_HEADER, OutputFormat, RunConfig, build_parser, run
from oracle import IdentityCheck
from spincore import ValidationError

SPEC_DIR = Path(__file__).parents[2] / "specs"
CURVE_ARGV = ["critical-curve", "--spin", "2", "--k-step", "0.5"]


class TestRunConfig(unittest.TestCase):
    """Unit tests for flag validation."""

    def _config(self, argv):
        return RunConfig.from_namespace(build_parser().parse_args(argv))

    def test_defaults(self) -> None:
        config = self._config(["vandermonde", "--spin", "3"])
        self.assertEqual(config.command, "vandermonde")
        self.assertIs(config.output_format, OutputFormat.Csv)
        self.assertIsNone(config.output)
        self.assertEqual(config.options["convention"], "physical")
        self.assertFalse(config.options["inverse"])

    def test_invalid_flags(self) -> None:
        """Test range checks that argparse cannot express."""
        for argv in (
            ["vandermonde", "--spin", "0"],
            ["critical-curve", "--spin", "2", "--k-min", "2", "--k-max", "1", "--k-step", "0.5"],
            ["critical-curve", "--spin", "2", "--k-min", "1", "--k-max", "2", "--k-step", "0"],
            ["critical-curve", "--spin", "2", "--k-min", "1", "--k-max", "2", "--k-step", "1"]
            + ["--workers", "0"],
            ["critical-coupling", "--spin", "2", "--d-values", "1", "--tol", "-1"],
        ):
            with self.assertRaises(ValidationError, msg=" ".join(argv)):
                self._config(argv)

    def test_usage_errors_raise(self) -> None:
        with self.assertRaises(ValidationError):
            build_parser().parse_args(["vandermonde"])
        with self.assertRaises(ValidationError):
            build_parser().parse_args(["unknown"])


@patch("sys.stdout", new_callable=io.StringIO)
class TestCommands(unittest.TestCase):
    """Unit tests for each subcommand, run end to end."""

    def test_vandermonde_inverse(self, stdout) -> None:
        self.assertEqual(run(["vandermonde", "--spin", "4", "--inverse"]), 0)
        rows = stdout.getvalue().splitlines()
        self.assertEqual(len(rows), 5)
        self.assertEqual(rows[2], "-1/24,2/3,-5/4,2/3,-1/24")

    def test_vandermonde_json(self, stdout) -> None:
        argv = ["vandermonde", "--spin", "3", "--convention", "normalized", "--format", "json"]
        self.assertEqual(run(argv), 0)
        document = json.loads(stdout.getvalue())
        self.assertEqual(document["spin"], "3/2")
        self.assertEqual(document["convention"], "normalized")
        self.assertEqual(document["rows"][0], ["1", "-1", "1", "-1"])

    def test_transform(self, stdout) -> None:
        self.assertEqual(run(["transform", "--cell", str(SPEC_DIR / "cell_two_leg.json")]), 0)
        rows = list(csv.reader(io.StringIO(stdout.getvalue())))
        self.assertEqual(rows[0], ["index", "value"])
        values = dict(rows[1:])
        self.assertAlmostEqual(float(values["1 1"]), 0.5 * math.log(math.cosh(2)), places=12)
        self.assertAlmostEqual(
            float(values["0 0"]), math.log(2) + 0.5 * math.log(math.cosh(2)), places=12
        )

    def test_transform_json(self, stdout) -> None:
        argv = ["transform", "--cell", str(SPEC_DIR / "cell_spin1_star.json"), "--format", "json"]
        self.assertEqual(run(argv), 0)
        document = json.loads(stdout.getvalue())
        self.assertEqual(document["legs"], [2, 2, 2])
        self.assertEqual(len(document["couplings"]), 27)
        self.assertEqual(document["constant"], document["couplings"][0]["value"])

    def test_alpha(self, stdout) -> None:
        argv = ["alpha", "--cell", str(SPEC_DIR / "cell_two_leg.json"), "--format", "json"]
        self.assertEqual(run(argv), 0)
        document = json.loads(stdout.getvalue())
        self.assertNotIn("constant", document)
        values = {tuple(term["index"]): term["value"] for term in document["couplings"]}
        self.assertAlmostEqual(values[(1, 0)], values[(0, 1)], places=14)
        self.assertAlmostEqual(values[(0, 0)], 0.0, places=14)

    def test_conditional_alpha(self, stdout) -> None:
        argv = ["alpha", "--cell", str(SPEC_DIR / "cell_two_leg.json"), "--conditional"]
        self.assertEqual(run(argv), 0)
        self.assertEqual(stdout.getvalue().splitlines()[0], "index,value")

    def test_critical_curve(self, stdout) -> None:
        argv = CURVE_ARGV + ["--k-min", "1", "--k-max", "2"]
        self.assertEqual(run(argv), 0)
        rows = list(csv.reader(io.StringIO(stdout.getvalue())))
        self.assertEqual(tuple(rows[0]), CURVE_HEADER)
        self.assertEqual([float(row[0]) for row in rows[1:]], [1.0, 1.5, 2.0])
        d_c = [float(row[1]) for row in rows[1:]]
        self.assertEqual(d_c, sorted(d_c, reverse=True))

    def test_critical_curve_missing_rows(self, stdout) -> None:
        """Test that K values below the Ising coupling are listed with empty fields."""
        argv = CURVE_ARGV + ["--k-min", "0", "--k-max", "1"]
        self.assertEqual(run(argv + ["--include-missing"]), 0)
        rows = list(csv.reader(io.StringIO(stdout.getvalue())))
        self.assertEqual(len(rows), 4)
        self.assertEqual(float(rows[1][0]), 1.0)
        self.assertEqual(rows[2], ["0"] + [""] * 6)
        self.assertEqual(rows[3], ["0.5"] + [""] * 6)

    def test_critical_curve_drops_missing_by_default(self, stdout) -> None:
        argv = CURVE_ARGV + ["--k-min", "0", "--k-max", "1"]
        self.assertEqual(run(argv), 0)
        self.assertEqual(len(stdout.getvalue().splitlines()), 2)

    def test_critical_coupling_missing_json(self, stdout) -> None:
        argv = ["critical-coupling", "--spin", "2", "--d-values", "20", "-60", "--format", "json"]
        self.assertEqual(run(argv + ["--include-missing"]), 0)
        solved, missing = json.loads(stdout.getvalue())
        self.assertEqual(solved["D_c"], 20.0)
        self.assertEqual(missing["D_c"], -60.0)
        self.assertIsNone(missing["K_c"])

    def test_critical_coupling_json(self, stdout) -> None:
        argv = ["critical-coupling", "--spin", "2", "--d-values", "20", "--format", "json"]
        self.assertEqual(run(argv), 0)
        (point,) = json.loads(stdout.getvalue())
        self.assertAlmostEqual(point["K_c"], math.log(1 + math.sqrt(2)), places=5)
        self.assertEqual(point["D_c"], 20.0)

    def test_verify(self, stdout) -> None:
        self.assertEqual(run(["verify", "--spec", str(SPEC_DIR / "spin1_pair.json")]), 0)
        rows = list(csv.reader(io.StringIO(stdout.getvalue())))
        self.assertEqual(rows[0], ["verdict", "identity", "residual", "tolerance"])
        self.assertEqual(len(rows), 1 + 1 + 2 * 2 + 1)
        self.assertTrue(all(row[0] == "PASS" for row in rows[1:]))

    def test_output_file(self, stdout) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / "v.csv"
            self.assertEqual(run(["vandermonde", "--spin", "2", "--output", str(target)]), 0)
            self.assertEqual(target.read_text().splitlines()[0], "1,-1,1")
        self.assertEqual(stdout.getvalue(), "")


class TestExitCodes(unittest.TestCase):
    """Unit tests for the exit codes of run()."""

    def test_help(self) -> None:
        with patch("sys.stdout", new_callable=io.StringIO):
            self.assertEqual(run(["--help"]), 0)

    def test_invalid_input(self) -> None:
        self.assertEqual(run(["vandermonde", "--spin", "0"]), 1)
        self.assertEqual(run(["transform", "--cell", "/nonexistent/cell.json"]), 1)
        self.assertEqual(run(["frobnicate"]), 1)

    def test_malformed_numbers(self) -> None:
        """Test that non-numeric fields in input files exit with 1."""
        lattice = {"builder": "mixed_torus", "S": 2, "K": "abc", "D": 0.0}
        cell = {"central": 1, "legs": [1], "couplings": [], "s0_self_energy": 5}
        with tempfile.TemporaryDirectory() as tmp:
            spec_path, cell_path = Path(tmp) / "spec.json", Path(tmp) / "cell.json"
            spec_path.write_text(json.dumps(lattice))
            cell_path.write_text(json.dumps(cell))
            self.assertEqual(run(["verify", "--spec", str(spec_path)]), 1)
            self.assertEqual(run(["transform", "--cell", str(cell_path)]), 1)

    def test_computation_failure(self) -> None:
        """Test that an overflowing correlation vector exits with 2."""
        cell = {
            "central": 1,
            "legs": [1],
            "convention": "normalized",
            "couplings": [{"index": [1], "value": 2000.0}],
        }
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "cell.json"
            path.write_text(json.dumps(cell))
            self.assertEqual(run(["alpha", "--cell", str(path)]), 2)

    def test_failed_identity(self) -> None:
        """Test that a failing identity exits with 2."""
        with patch("cli.verify_spec") as verify, patch("sys.stdout", new_callable=io.StringIO):
            verify.return_value = [IdentityCheck("partition", 1.0, 1e-8, False)]
            argv = ["verify", "--spec", str(SPEC_DIR / "spin1_pair.json")]
            self.assertEqual(run(argv), 2)


class TestReadme(unittest.TestCase):
    """Unit tests for the usage documentation."""

    def test_local_links_resolve(self) -> None:
        """Test that every relative link in the README names a file in the repository."""
        repo = SPEC_DIR.parent
        links = re.findall(r"\]\(\./([^)#]+)\)", (repo / "README.md").read_text())
        self.assertIn("LICENSE", links)
        for link in links:
            self.assertTrue((repo / link).is_file(), msg=link)


if __name__ == "__main__":
    unittest.main()
