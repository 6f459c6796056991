import csv
import io
import json
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.conf import settings
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase
from hypothesis import given, strategies as st

from oracle.metrics import ABSOLUTE, METRICS

from . import suites
from .utils import gen_binade, gen_matrix, gen_pair, gen_powers2, gen_spread, splitmix64


def run(command, **options):
    out = io.StringIO()
    call_command(command, stdout=out, **options)
    return out.getvalue()


def run_json(command, **options):
    return json.loads(run(command, **options))


def run_csv(command, **options):
    return list(csv.DictReader(io.StringIO(run(command, **options))))


class SettingsTests(SimpleTestCase):

    def test_numeric_defaults_are_cast(self):
        for name in ("OZ_DEFAULT_KBLOCK", "OZ_DEFAULT_SEED", "OZ_WORKERS", "OZ_VERIFY_TRIALS"):
            with self.subTest(name=name):
                self.assertIsInstance(getattr(settings, name), int)
        self.assertIsInstance(settings.DEBUG, bool)


class GeneratorTests(SimpleTestCase):

    def test_splitmix64_reference_output(self):
        self.assertEqual(int(splitmix64(0, 1)[0]), 0xE220A8397B1DCDAF)

    def test_deterministic(self):
        self.assertEqual(gen_matrix(2, 2, 42, 1, 10).tobytes(), gen_matrix(2, 2, 42, 1, 10).tobytes())
        self.assertNotEqual(gen_matrix(2, 2, 42).tobytes(), gen_matrix(2, 2, 43).tobytes())
        self.assertNotEqual(gen_matrix(2, 3, 42).tobytes()[:32], gen_matrix(3, 2, 42).tobytes()[:32])

    @given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2 ** 64 - 1))
    def test_open_interval(self, rows, cols, seed):
        M = gen_matrix(rows, cols, seed, 1.0, 10.0)
        self.assertTrue(np.all((M > 1.0) & (M < 10.0)))

    def test_mean(self):
        self.assertTrue(5.0 < gen_matrix(64, 64, 7, 1, 10).mean() < 6.0)

    def test_bad_interval(self):
        with self.assertRaises(ValueError):
            gen_matrix(2, 2, 1, 3.0, 3.0)

    def test_other_inits(self):
        P = gen_powers2(16, 16, 1)
        mant, exp = np.frexp(P)
        self.assertTrue(np.all(mant == 0.5))
        self.assertTrue(np.all((exp >= -7) & (exp <= 9)))
        X = gen_binade(16, 16, 1)
        self.assertTrue(np.all((X >= 1.0) & (X < 2.0)))
        S = gen_spread(16, 16, 1, spread=10)
        self.assertTrue(np.all((np.abs(S) >= 2.0 ** -10) & (np.abs(S) < 2.0 ** 11)))
        A, B = gen_pair("identity", 3, 4, 5, 1)
        np.testing.assert_array_equal(A, np.eye(3, 5))
        np.testing.assert_array_equal(B, np.eye(5, 4))
        A, B = gen_pair("uniform", 4, 4, 4, 1)
        self.assertNotEqual(A.tobytes(), B.tobytes())
        with self.assertRaises(ValueError):
            gen_pair("normal", 2, 2, 2, 1)


class SlicesTableTests(SimpleTestCase):

    def cell(self, rows, type2, type3, k):
        matches = [r["gemm_count"] for r in rows if (r["type2"], r["type3"], r["k"]) == (type2, type3, str(k))]
        self.assertEqual(len(matches), 1)
        return matches[0]

    def test_documented_cells(self):
        rows = run_csv("slices_table")
        self.assertEqual(len(rows), 96)
        self.assertEqual(self.cell(rows, "fp16", "fp32", 32768), "121")
        self.assertEqual(self.cell(rows, "fp6e3m2", "fp32", 8), "196")
        self.assertEqual(self.cell(rows, "fp8e4m3", "fp16", 1024), "2809")
        self.assertEqual(self.cell(rows, "fp16", "fp16", 4096), "--")

    def test_all_formats(self):
        rows = run_csv("slices_table", all_formats=True)
        self.assertEqual(len(rows), 192)
        self.assertEqual(self.cell(rows, "fp8e5m2", "fp32", 8), self.cell(rows, "fp6e3m2", "fp32", 8))
        self.assertEqual(self.cell(rows, "fp6e2m3", "fp32", 8), "--")


class GemmCommandTests(SimpleTestCase):

    def test_identity(self):
        with tempfile.TemporaryDirectory() as tmp:
            dump = str(Path(tmp) / "c.npy")
            report = run_json("gemm", m=16, n=16, k=16, type2="fp16", type3="fp32", init="identity", dump=dump)
            np.testing.assert_array_equal(np.load(dump), np.eye(16))
        self.assertEqual(report["stats"]["gemm_count"], 1)
        self.assertEqual(report["matrix_path"], dump)
        self.assertEqual(report["command"], "gemm")
        self.assertEqual(report["schema_version"], 1)
        self.assertIsNone(report["accuracy"])

    def test_deterministic_apart_from_timings(self):
        first = run_json("gemm", m=8, n=8, k=32, type2="fp8e4m3", seed=3)
        second = run_json("gemm", m=8, n=8, k=32, type2="fp8e4m3", seed=3)
        first.pop("timings")
        second.pop("timings")
        self.assertEqual(first, second)

    def test_out_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "report.json"
            self.assertEqual(run("gemm", m=4, n=4, k=4, out=str(out)), "")
            self.assertEqual(json.loads(out.read_text(encoding="utf-8"))["config"]["m"], 4)

    def test_invalid_options(self):
        with self.assertRaisesMessage(CommandError, "type2"):
            run("gemm", m=4, n=4, k=4, type2="fp7")
        with self.assertRaises(CommandError):
            run("gemm", m=0, n=4, k=4)
        with self.assertRaises(CommandError):
            run("gemm", m=4, n=4, k=4, lo=5.0, hi=2.0)

    def test_numerical_error_has_context(self):
        with self.assertRaisesMessage(CommandError, "SlicingInfeasible"):
            run("gemm", m=1, n=1, k=4096, type2="fp16", type3="fp16")


class AccuracyCommandTests(SimpleTestCase):

    def test_dominance(self):
        report = run_json("accuracy", m=64, n=64, k=64, type2="fp8e4m3", type3="fp32", seed=1)
        accuracy = report["accuracy"]
        self.assertEqual(accuracy["size"], [64, 64, 64])
        self.assertLessEqual(accuracy["err_oz"], accuracy["err_naive"])
        self.assertTrue(accuracy["dominates"])
        self.assertIn("reference", report["timings"])
        self.assertEqual(accuracy["metric"], "relative")

    def test_identity_falls_back_to_absolute_error(self):
        accuracy = run_json("accuracy", m=16, n=16, k=16, init="identity")["accuracy"]
        self.assertEqual(accuracy["metric"], "absolute")
        self.assertEqual(accuracy["err_oz"], 0.0)
        self.assertEqual(accuracy["err_naive"], 0.0)
        self.assertTrue(accuracy["dominates"])

    def test_abs_error_flag(self):
        report = run_json("accuracy", m=8, n=8, k=8, abs_error=True)
        self.assertEqual(report["accuracy"]["metric"], "absolute")
        self.assertTrue(report["config"]["abs_error"])

    def test_zero_division_becomes_command_error(self):
        failing = mock.Mock(side_effect=ZeroDivisionError("reference entry (0, 1) is zero"))
        with mock.patch.dict(METRICS, {ABSOLUTE: failing}):
            with self.assertRaisesMessage(CommandError, "ZeroDivisionError"):
                run("accuracy", m=4, n=4, k=4, abs_error=True)


class VerifyCommandTests(SimpleTestCase):

    def test_suites_pass(self):
        report = run_json("verify", suite="all", trials=200, seed=5)
        self.assertEqual([c["suite"] for c in report["checks"]], ["reconstruction", "errorfree", "fp64emu"])
        for check in report["checks"]:
            self.assertTrue(check["passed"], msg=check)
            self.assertGreater(check["trials"], 0)

    def test_failure_exits_nonzero(self):
        failing = mock.Mock(return_value=suites.SuiteResult("fp64emu", trials=10, failures=1))
        with mock.patch.dict(suites.RUNNERS, {"fp64emu": failing}):
            with self.assertRaisesMessage(CommandError, "fp64emu"):
                run("verify", suite="fp64emu", trials=10)

    def test_unknown_suite(self):
        with self.assertRaises(CommandError):
            run("verify", suite="everything", trials=10)


class SweepCommandTests(SimpleTestCase):

    def test_rows(self):
        rows = run_csv("kblock_sweep", m=8, n=8, k=64, kblocks="16,64,0", init="binade")
        self.assertEqual([r["k_block"] for r in rows], ["16", "64", "0"])
        self.assertEqual([r["blocks"] for r in rows], ["4", "1", "1"])
        for row in rows:
            self.assertEqual(row["gemms"], row["predicted_gemms"])
            self.assertEqual(row["error_metric"], "relative")
            self.assertLess(float(row["max_error"]), 1e-15)

    def test_identity_rows(self):
        rows = run_csv("kblock_sweep", m=8, n=8, k=8, kblocks="4,0", init="identity")
        self.assertEqual({r["error_metric"] for r in rows}, {"absolute"})
        self.assertEqual({float(r["max_error"]) for r in rows}, {0.0})

    def test_kernel_and_slice_cap(self):
        rows = run_csv("kblock_sweep", m=4, n=4, k=16, kblocks="8,0", init="binade", kernel="sequential", max_slices=1)
        self.assertEqual([r["gemms"] for r in rows], ["2", "1"])
        self.assertEqual([r["predicted_gemms"] for r in rows], ["2", "1"])
        with self.assertRaisesMessage(CommandError, "kernel"):
            run("kblock_sweep", m=4, n=4, k=8, kblocks="0", kernel="tiled")

    def test_block_larger_than_k(self):
        with self.assertRaises(CommandError):
            run("kblock_sweep", m=4, n=4, k=8, kblocks="16")
