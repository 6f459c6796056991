from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase, tag

from helpers.exceptions import DimensionError, RepresentabilityError, SlicingInfeasible
from lpformat.formats import BF16, FP6_E3M2, FP8_E4M3, FP16, FP32, representable_mask
from slicing.params import check_feasible, params_for
from slicing.slicer import COLUMNS, ROWS, slice_matrix

from .kernels import (
    AUTO,
    SEQUENTIAL,
    LpMatrix,
    exact_gemm,
    lp_gemm,
    lsb_exponent,
    matches_exact,
    sequential_gemm,
)

FEASIBLE_PAIRS = [
    (FP16, FP32), (FP16, FP16), (FP8_E4M3, FP32), (FP8_E4M3, FP16),
    (FP6_E3M2, FP32), (FP6_E3M2, FP16), (BF16, FP32),
]


def slice_pairs(rng, m, n, k, type2, type3):
    """All (p, q) slice operand pairs of two random uniform(1, 10) matrices."""
    params = params_for(type2, type3, k)
    check_feasible(params, type2, type3)
    A = rng.uniform(1.0, 10.0, size=(m, k))
    B = rng.uniform(1.0, 10.0, size=(k, n))
    sa = slice_matrix(A, ROWS, type2, params)
    sb = slice_matrix(B, COLUMNS, type2, params)
    for x in sa.coeff:
        for y in sb.coeff:
            yield LpMatrix(x, type2), LpMatrix(y, type2)


class LpMatrixTests(SimpleTestCase):

    def test_rejects_unrepresentable_entries(self):
        with self.assertRaises(RepresentabilityError):
            LpMatrix([[1.0, 2049.0]], FP16)
        with self.assertRaises(RepresentabilityError):
            LpMatrix([[3.3]], FP8_E4M3)

    def test_shape(self):
        a = LpMatrix(np.ones((2, 3)), "fp16")
        self.assertEqual((a.rows, a.cols), (2, 3))
        self.assertIs(a.fmt, FP16)
        with self.assertRaises(DimensionError):
            LpMatrix(np.ones(3), FP16)

    def test_lsb_exponent(self):
        self.assertEqual(lsb_exponent([3.0, 0.5]), -1)
        self.assertEqual(lsb_exponent([6.0, 12.0]), 1)
        self.assertEqual(lsb_exponent([2.0 ** -1074]), -1074)
        self.assertIsNone(lsb_exponent([0.0, -0.0]))


class LpGemmTests(SimpleTestCase):

    def test_small_integers(self):
        A = LpMatrix([[1.0, 2.0, 3.0]], FP16)
        B = LpMatrix([[4.0], [5.0], [6.0]], FP16)
        for kernel in (AUTO, SEQUENTIAL):
            np.testing.assert_array_equal(lp_gemm(A, B, FP32, kernel=kernel), [[32.0]])
        self.assertEqual(exact_gemm(A, B)[0, 0], 32)

    def test_addition_absorbed_at_24_bits(self):
        A = LpMatrix([[2.0 ** 24, 1.0]], FP32)
        B = LpMatrix([[1.0], [1.0]], FP16)
        for kernel in (AUTO, SEQUENTIAL):
            np.testing.assert_array_equal(lp_gemm(A, B, FP32, kernel=kernel), [[2.0 ** 24]])
        self.assertEqual(exact_gemm(A, B)[0, 0], 2 ** 24 + 1)

    def test_empty_inner_dimension(self):
        A = LpMatrix(np.zeros((2, 0)), FP16)
        B = LpMatrix(np.zeros((0, 3)), FP16)
        np.testing.assert_array_equal(lp_gemm(A, B, FP32), np.zeros((2, 3)))
        self.assertTrue(all(v == 0 for v in exact_gemm(A, B).flat))

    def test_oracle_detects_rounding(self):
        A = LpMatrix([[2.0 ** 12, 1.0]], FP16)
        B = LpMatrix([[1.0], [1.0]], FP16)
        C = lp_gemm(A, B, FP16)
        self.assertEqual(C[0, 0], 4096.0)
        self.assertFalse(matches_exact(C, exact_gemm(A, B)).all())

    def test_output_is_type3(self):
        rng = np.random.default_rng(1)
        A = LpMatrix(rng.integers(-40, 41, size=(6, 40)).astype(float), FP16)
        B = LpMatrix(rng.integers(-40, 41, size=(40, 5)).astype(float), FP16)
        C = lp_gemm(A, B, FP16, kernel=SEQUENTIAL)
        self.assertTrue(representable_mask(C, FP16).all())

    def test_non_conforming(self):
        with self.assertRaises(DimensionError):
            lp_gemm(LpMatrix(np.ones((2, 3)), FP16), LpMatrix(np.ones((2, 3)), FP16), FP32)

    def test_unknown_kernel(self):
        with self.assertRaises(ValueError):
            lp_gemm(LpMatrix(np.ones((1, 1)), FP16), LpMatrix(np.ones((1, 1)), FP16), FP32, kernel="tiled")

    def test_overflow_surfaces(self):
        A = LpMatrix([[60000.0, 60000.0]], FP16)
        B = LpMatrix([[1.0], [1.0]], FP16)
        with self.assertRaises(OverflowError):
            lp_gemm(A, B, FP16)

    def test_kernels_agree_when_rounding_happens(self):
        rng = np.random.default_rng(2)
        A = LpMatrix(rng.integers(-40, 41, size=(5, 30)).astype(float), FP16)
        B = LpMatrix(rng.integers(-40, 41, size=(30, 4)).astype(float), FP16)
        np.testing.assert_array_equal(lp_gemm(A, B, FP16, AUTO), sequential_gemm(A, B, FP16))
        np.testing.assert_array_equal(lp_gemm(A, B, FP32, AUTO), sequential_gemm(A, B, FP32))


class ErrorFreeTests(SimpleTestCase):
    """Slice pairs accumulate in Type3 without any rounding."""

    def check(self, ks, instances, seed, m=3, n=2):
        rng = np.random.default_rng(seed)
        for type2, type3 in FEASIBLE_PAIRS:
            for k in ks:
                try:
                    check_feasible(params_for(type2, type3, k), type2, type3)
                except SlicingInfeasible:
                    continue
                for _ in range(instances):
                    for x, y in slice_pairs(rng, m, n, k, type2, type3):
                        C = lp_gemm(x, y, type3, kernel=SEQUENTIAL)
                        self.assertTrue(
                            matches_exact(C, exact_gemm(x, y)).all(),
                            msg=f"{type2.name}/{type3.name} k={k}",
                        )
                        np.testing.assert_array_equal(lp_gemm(x, y, type3, kernel=AUTO), C)

    def test_slice_pairs_are_exact(self):
        self.check((8, 16, 256), instances=2, seed=3)

    @tag("slow")
    def test_slice_pairs_are_exact_large(self):
        self.check((8, 256, 1024, 4096), instances=100, seed=4, m=1, n=1)

    def test_order_does_not_matter(self):
        rng = np.random.default_rng(5)
        k = 64
        perm = rng.permutation(k)
        for x, y in slice_pairs(rng, 4, 4, k, FP8_E4M3, FP32):
            shuffled = lp_gemm(LpMatrix(x.data[:, perm], x.fmt), LpMatrix(y.data[perm, :], y.fmt), FP32, SEQUENTIAL)
            np.testing.assert_array_equal(shuffled, lp_gemm(x, y, FP32, SEQUENTIAL))

    def test_exact_gemm_against_fractions(self):
        rng = np.random.default_rng(6)
        x, y = next(slice_pairs(rng, 2, 2, 8, FP16, FP32))
        expected = [
            [sum(Fraction(float(a)) * Fraction(float(b)) for a, b in zip(row, col)) for col in y.data.T]
            for row in x.data
        ]
        self.assertEqual(exact_gemm(x, y).tolist(), expected)
