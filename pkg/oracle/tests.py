from fractions import Fraction

import mpmath
import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, strategies as st

from helpers.exceptions import DimensionError

from .accumulator import ExactAccumulator, rational_dot, ref_dot
from .metrics import ABSOLUTE, RELATIVE, AccuracyReport, max_abs_error, max_rel_error, pick_metric
from .reference import chunk_bits, naive_gemm_fp64, ref_gemm

finite = st.floats(min_value=-1e150, max_value=1e150, allow_nan=False, allow_infinity=False)

CANCELLING = (np.array([[1e16, 1.0, -1e16]]), np.ones((3, 1)))


def spread_matrix(rng, shape, binades=40):
    return rng.uniform(1.0, 2.0, size=shape) * np.ldexp(1.0, rng.integers(-binades, binades + 1, size=shape)) \
        * rng.choice([-1.0, 1.0], size=shape)


class AccumulatorTests(SimpleTestCase):

    def test_cancellation(self):
        self.assertEqual(ref_dot([1e16, 1.0, -1e16], [1.0, 1.0, 1.0]), 1.0)
        self.assertEqual(rational_dot([1e16, 1.0, -1e16], [1.0, 1.0, 1.0]), 1.0)

    def test_subnormal_products_are_kept(self):
        tiny = 2.0 ** -1074
        acc = ExactAccumulator().add_product(tiny, tiny).add_product(tiny, tiny)
        self.assertEqual(acc.value(), Fraction(2, 2 ** 2148))
        self.assertEqual(acc.round(), 0.0)
        acc.add(1.0)
        self.assertEqual(acc.round(), 1.0)
        acc.reset()
        self.assertEqual(acc.register, 0)

    def test_overflow(self):
        acc = ExactAccumulator().add(1.7e308).add(1.7e308)
        with self.assertRaises(OverflowError):
            acc.round()

    def test_rejects_nan(self):
        with self.assertRaises(ValueError):
            ExactAccumulator().add(float("nan"))

    @given(st.lists(st.tuples(finite, finite), min_size=1, max_size=12))
    def test_matches_rational_dot(self, pairs):
        x, y = zip(*pairs)
        self.assertEqual(ref_dot(x, y), rational_dot(x, y))


class RefGemmTests(SimpleTestCase):

    def test_cancellation(self):
        A, B = CANCELLING
        self.assertEqual(ref_gemm(A, B)[0, 0], 1.0)

    def test_identity(self):
        rng = np.random.default_rng(1)
        M = spread_matrix(rng, (8, 8))
        np.testing.assert_array_equal(ref_gemm(np.eye(8), M), M)
        np.testing.assert_array_equal(ref_gemm(M, np.eye(8)), M)

    def test_against_rational_dot(self):
        rng = np.random.default_rng(2)
        A = spread_matrix(rng, (32, 32))
        B = spread_matrix(rng, (32, 32))
        C = ref_gemm(A, B)
        for i in range(32):
            for j in range(32):
                self.assertEqual(C[i, j], rational_dot(A[i], B[:, j]), msg=f"({i}, {j})")

    def test_against_mpmath(self):
        rng = np.random.default_rng(3)
        A = spread_matrix(rng, (3, 50), binades=300)
        B = spread_matrix(rng, (50, 2), binades=300)
        C = ref_gemm(A, B)
        with mpmath.workprec(4400):
            for i in range(3):
                for j in range(2):
                    exact = mpmath.fsum(mpmath.mpf(a) * mpmath.mpf(b) for a, b in zip(A[i], B[:, j]))
                    self.assertEqual(C[i, j], float(exact))

    def test_permutation_invariant(self):
        rng = np.random.default_rng(4)
        A = spread_matrix(rng, (6, 40))
        B = spread_matrix(rng, (40, 5))
        perm = rng.permutation(40)
        np.testing.assert_array_equal(ref_gemm(A[:, perm], B[perm, :]), ref_gemm(A, B))

    def test_subnormal_result(self):
        C = ref_gemm([[2.0 ** -600, 2.0 ** -1000]], [[2.0 ** -460], [2.0 ** -74]])
        self.assertEqual(C[0, 0], 2.0 ** -1060 + 2.0 ** -1074)

    def test_overflow(self):
        with self.assertRaises(OverflowError):
            ref_gemm([[1e308, 1e308]], [[10.0], [10.0]])

    def test_non_finite(self):
        with self.assertRaises(ValueError):
            ref_gemm([[np.inf]], [[1.0]])

    def test_shapes(self):
        with self.assertRaises(DimensionError):
            ref_gemm(np.ones((2, 3)), np.ones((2, 3)))
        np.testing.assert_array_equal(ref_gemm(np.ones((2, 0)), np.ones((0, 3))), np.zeros((2, 3)))

    def test_chunk_bits(self):
        self.assertEqual(chunk_bits(1), 26)
        self.assertEqual(chunk_bits(512), 22)
        for k in (1, 3, 64, 1000, 1 << 20):
            self.assertLessEqual(k * 2 ** (2 * chunk_bits(k)), 2 ** 53)


class NaiveGemmTests(SimpleTestCase):

    def test_absorption(self):
        A, B = CANCELLING
        self.assertEqual(naive_gemm_fp64(A, B)[0, 0], 0.0)

    def test_single_product(self):
        self.assertEqual(naive_gemm_fp64([[0.1]], [[0.3]])[0, 0], 0.1 * 0.3)

    def test_identity(self):
        M = np.random.default_rng(5).uniform(1, 10, size=(6, 6))
        np.testing.assert_array_equal(naive_gemm_fp64(np.eye(6), M), M)

    def test_blocked_order(self):
        a = np.array([[1e16, 1.0, 1.0, -1e16]])
        b = np.ones((4, 1))
        self.assertEqual(naive_gemm_fp64(a, b)[0, 0], 0.0)
        # blocks (1e16 + 1) and (1 - 1e16) each absorb their 1
        self.assertEqual(naive_gemm_fp64(a, b, k_block=2)[0, 0], 0.0)
        self.assertEqual(naive_gemm_fp64(a, b, k_block=1)[0, 0], 0.0)
        a = np.array([[1e16, -1e16, 1.0, 1.0]])
        self.assertEqual(naive_gemm_fp64(a, b, k_block=2)[0, 0], 2.0)

    def test_error_envelope(self):
        rng = np.random.default_rng(6)
        for n in (16, 64):
            A = rng.uniform(1, 10, size=(n, n))
            B = rng.uniform(1, 10, size=(n, n))
            self.assertLessEqual(max_rel_error(naive_gemm_fp64(A, B), ref_gemm(A, B)), 2 * n * 2.0 ** -53)


class MetricTests(SimpleTestCase):

    def test_zero_error(self):
        C = np.random.default_rng(7).uniform(1, 10, size=(4, 4))
        self.assertEqual(max_rel_error(C, C), 0.0)
        self.assertEqual(max_abs_error(C, C), 0.0)

    def test_one_ulp(self):
        self.assertEqual(max_rel_error([[1.0 + 2.0 ** -52, 2.0]], [[1.0, 2.0]]), 2.0 ** -52)

    def test_zero_reference(self):
        with self.assertRaises(ZeroDivisionError):
            max_rel_error([[1.0, 0.0]], [[1.0, 0.0]])
        self.assertEqual(max_abs_error([[1.0, 0.5]], [[1.0, 0.0]]), 0.5)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            max_rel_error(np.ones((2, 2)), np.ones((2, 3)))

    def test_report(self):
        report = AccuracyReport((64, 64, 64), "fp16", "fp32", 0, 1e-16, 2e-16)
        self.assertTrue(report.dominates)
        self.assertEqual(report.as_dict()["size"], [64, 64, 64])
        self.assertTrue(report.as_dict()["dominates"])
        self.assertEqual(report.as_dict()["metric"], RELATIVE)
        with self.assertRaises(ValueError):
            AccuracyReport((1, 1, 1), "fp16", "fp32", 0, 0.0, 0.0, metric="ulps")

    def test_pick_metric(self):
        self.assertEqual(pick_metric([[1.0, 2.0]]), RELATIVE)
        self.assertEqual(pick_metric([[1.0, 2.0]], absolute=True), ABSOLUTE)
        self.assertEqual(pick_metric(np.eye(2)), ABSOLUTE)
