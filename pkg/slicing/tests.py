from fractions import Fraction
from math import ceil, log2

import numpy as np
from django.test import SimpleTestCase, tag
from hypothesis import given, strategies as st

from fp64emu.backends import HARDWARE
from helpers.exceptions import SlicingInfeasible
from lpformat.formats import FP6_E2M3, FP6_E3M2, FP8_E4M3, FP16, FP32, representable_mask

from .params import (
    check_feasible,
    compute_params,
    params_for,
    predict_gemm_count,
    predict_slice_count,
)
from .slicer import COLUMNS, ROWS, slice_matrix, slice_step, slice_vector

TABLE_K = [2 ** e for e in range(3, 19)]
# (type2, type3) -> minimum GEMM counts for k = 8 ... 262144; None marks "--".
TABLE_3 = {
    ("fp16", "fp32"): [25, 25, 36, 36, 36, 36, 49, 49, 64, 64, 81, 81, 121, 121, 196, 196],
    ("fp16", "fp16"): [121, 196, 196, 324, 324, 729, 729, 2809, 2809] + [None] * 7,
    ("fp8e4m3", "fp32"): [121] * 14 + [196, 196],
    ("fp8e4m3", "fp16"): [121, 196, 196, 324, 324, 729, 729, 2809, 2809] + [None] * 7,
    ("fp6e3m2", "fp32"): [196] * 16,
    ("fp6e3m2", "fp16"): [196, 196, 196, 324, 324, 729, 729, 2809, 2809] + [None] * 7,
}
MANT = {"fp16": 11, "fp32": 24, "fp8e4m3": 4, "fp6e3m2": 3}


def binade_matrix(rng, rows, cols):
    """Entries in [1, 2) with all 52 fraction bits random."""
    frac = rng.integers(0, 1 << 52, size=(rows, cols), dtype=np.uint64)
    return (np.uint64(1023 << 52) | frac).view(np.float64)


def spread_matrix(rng, rows, cols, spread):
    mant = rng.uniform(1.0, 2.0, size=(rows, cols))
    signs = rng.choice([-1.0, 1.0], size=(rows, cols))
    return signs * np.ldexp(mant, rng.integers(-spread, spread + 1, size=(rows, cols)))


class ParamsTests(SimpleTestCase):

    def test_documented_params(self):
        p = compute_params(53, 11, 24, 1024)
        self.assertEqual((p.gamma, p.xi, p.rho), (46, 42, 46))
        p = compute_params(53, 4, 24, 16)
        self.assertEqual((p.gamma, p.xi, p.rho), (43, 49, 49))
        p = compute_params(53, 11, 11, 4096)
        self.assertEqual((p.gamma, p.rho, p.slice_width), (54, 54, -1))
        self.assertFalse(p.feasible)

    def test_gamma_uses_real_log(self):
        # log2(1000) and log2(1024) share a ceiling; log2(257) rounds up past log2(256).
        self.assertEqual(compute_params(53, 11, 24, 1000).gamma, compute_params(53, 11, 24, 1024).gamma)
        self.assertEqual(compute_params(53, 11, 24, 257).gamma, 46)
        self.assertEqual(compute_params(53, 11, 24, 256).gamma, 45)
        self.assertEqual(compute_params(53, 11, 24, 1).gamma, 41)

    @given(st.integers(1, 1 << 20), st.integers(2, 24), st.integers(8, 53))
    def test_gamma_against_float_log(self, k, m2, m3):
        p = compute_params(53, m2, m3, k)
        exact = 53 - (m3 - log2(k)) / 2
        if abs(exact - round(exact)) > 1e-9:
            self.assertEqual(p.gamma, ceil(exact))

    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            compute_params(53, 11, 24, 0)
        with self.assertRaises(ValueError):
            compute_params(53, 0, 24, 8)

    def test_predictor_examples(self):
        self.assertEqual(predict_gemm_count(53, 11, 24, 8), 25)
        self.assertEqual(predict_gemm_count(53, 4, 24, 2048), 121)
        self.assertEqual(predict_gemm_count(53, 11, 24, 131072), 196)
        self.assertIsNone(predict_gemm_count(53, 11, 11, 4096))

    def test_reproduces_every_table_cell(self):
        for (type2, type3), counts in TABLE_3.items():
            for k, expected in zip(TABLE_K, counts):
                with self.subTest(type2=type2, type3=type3, k=k):
                    self.assertEqual(predict_gemm_count(53, MANT[type2], MANT[type3], k), expected)

    def test_slice_count_is_square_root(self):
        self.assertEqual(predict_slice_count(53, 11, 24, 16384), 9)

    def test_feasibility_checks(self):
        check_feasible(params_for(FP16, FP32, 1024), FP16, FP32)
        with self.assertRaises(SlicingInfeasible):
            check_feasible(params_for(FP16, FP16, 4096), FP16)
        # E2M3's quantum 2**-4 lies below its smallest subnormal 2**-3 at small k.
        with self.assertRaises(SlicingInfeasible):
            check_feasible(params_for(FP6_E2M3, FP32, 8), FP6_E2M3)
        check_feasible(params_for(FP6_E3M2, FP32, 8), FP6_E3M2, FP32)


class SliceVectorTests(SimpleTestCase):

    def setUp(self):
        self.params = params_for(FP16, FP32, 1)

    def test_zero_vector_has_no_slices(self):
        self.assertEqual(slice_vector([0.0, 0.0, 0.0], FP16, self.params), ([], []))

    def test_one(self):
        self.assertEqual(self.params.rho, 42)
        coeff, expo = slice_vector([1.0], FP16, self.params)
        self.assertEqual(expo, [0])
        np.testing.assert_array_equal(coeff, [[1.0]])

    def test_two_slices(self):
        # ceil(log2(1 + 2**-40)) is 1, so the leading slice carries 0.5 at exponent 1.
        coeff, expo = slice_vector([1.0 + 2.0 ** -40], FP16, self.params)
        self.assertEqual(expo, [1, -40])
        np.testing.assert_array_equal(coeff, [[0.5], [1.0]])

    def test_emulated_mode(self):
        self.assertEqual(
            slice_vector([1.0 + 2.0 ** -40], FP16, self.params, arith=True),
            slice_vector([1.0 + 2.0 ** -40], FP16, self.params, arith=False),
        )

    def test_rejects_matrix(self):
        with self.assertRaises(ValueError):
            slice_vector(np.ones((2, 2)), FP16, self.params)


class SliceMatrixTests(SimpleTestCase):

    def test_identity(self):
        sliced = slice_matrix(np.eye(2), ROWS, FP16, params_for(FP16, FP32, 2))
        self.assertEqual(sliced.s, 1)
        np.testing.assert_array_equal(sliced.coeff[0], np.eye(2))
        np.testing.assert_array_equal(sliced.expo[0], [0, 0])

    def test_uniform_64_matches_predictor(self):
        rng = np.random.default_rng(64)
        A = rng.uniform(1.0, 10.0, size=(64, 64))
        params = params_for(FP16, FP32, 64)
        sliced = slice_matrix(A, ROWS, FP16, params)
        self.assertEqual(sliced.s ** 2, predict_gemm_count(53, 11, 24, 64))

    def test_powers_of_two_need_one_slice(self):
        x = np.ldexp(1.0, -np.arange(16) % 9)[None, :]
        sliced = slice_matrix(x, ROWS, FP16, params_for(FP16, FP32, 16))
        self.assertEqual(sliced.s, 1)
        np.testing.assert_array_equal(sliced.reconstruct(), x)

    def test_columns_keep_layout(self):
        rng = np.random.default_rng(2)
        B = rng.uniform(1.0, 10.0, size=(32, 5))
        sliced = slice_matrix(B, COLUMNS, FP8_E4M3, params_for(FP8_E4M3, FP32, 32))
        self.assertEqual(sliced.coeff[0].shape, (32, 5))
        self.assertEqual(sliced.expo[0].shape, (5,))
        np.testing.assert_array_equal(sliced.reconstruct(), B)
        self.assertFalse(sliced.reconstruction_mismatches(B).any())

    def test_coefficients_are_type2_values(self):
        rng = np.random.default_rng(3)
        A = spread_matrix(rng, 8, 64, 20)
        for type2 in (FP16, FP8_E4M3, FP6_E3M2):
            sliced = slice_matrix(A, ROWS, type2, params_for(type2, FP32, 64))
            for coeff in sliced.coeff:
                self.assertTrue(representable_mask(coeff, type2).all())

    def test_exponents_strictly_decrease(self):
        rng = np.random.default_rng(4)
        A = spread_matrix(rng, 16, 32, 10)
        sliced = slice_matrix(A, ROWS, FP8_E4M3, params_for(FP8_E4M3, FP32, 32))
        counts = sliced.row_counts()
        expo = np.stack(sliced.expo)
        for row, count in enumerate(counts):
            self.assertTrue(np.all(np.diff(expo[:count, row]) < 0))
            self.assertTrue(np.all(expo[count:, row] == 0))
            self.assertTrue(all((c[row] == 0).all() for c in sliced.coeff[count:]))
        self.assertEqual(counts.max(), sliced.s)

    def test_zero_rows_are_padded(self):
        A = np.array([[0.0, 0.0], [1.0 + 2.0 ** -30, 3.0]])
        sliced = slice_matrix(A, ROWS, FP16, params_for(FP16, FP32, 2))
        np.testing.assert_array_equal(sliced.row_counts(), [0, sliced.s])
        for coeff, expo in zip(sliced.coeff, sliced.expo):
            self.assertEqual(expo[0], 0)
            np.testing.assert_array_equal(coeff[0], [0.0, 0.0])

    def test_residual_is_exact(self):
        rng = np.random.default_rng(5)
        x = spread_matrix(rng, 4, 16, 30)
        rho = params_for(FP16, FP32, 16).rho
        while np.any(x != 0):
            step = slice_step(HARDWARE, x, rho)
            for xi, vi, ri in zip(x.flat, step.v.flat, step.residual.flat):
                self.assertEqual(Fraction(xi) - Fraction(vi), Fraction(ri))
            x = step.residual

    def test_sigma_is_three_quarters_power_of_two(self):
        x = np.array([[3.0, 1.0], [0.0, 0.0]])
        step = slice_step(HARDWARE, x, 42)
        np.testing.assert_array_equal(step.c, [2, 0])
        np.testing.assert_array_equal(step.sigma, [0.75 * 2.0 ** 44, 0.75 * 2.0 ** 42])

    def test_modes_agree_bitwise(self):
        rng = np.random.default_rng(6)
        A = spread_matrix(rng, 12, 40, 30)
        for type2 in (FP16, FP8_E4M3):
            params = params_for(type2, FP32, 40)
            hw = slice_matrix(A, ROWS, type2, params, arith=False)
            emu = slice_matrix(A, ROWS, type2, params, arith=True)
            self.assertEqual(hw.s, emu.s)
            for a, b in zip(hw.coeff, emu.coeff):
                np.testing.assert_array_equal(a.view(np.uint64), b.view(np.uint64))
            for a, b in zip(hw.expo, emu.expo):
                np.testing.assert_array_equal(a, b)

    def test_infeasible_raises(self):
        with self.assertRaises(SlicingInfeasible):
            slice_matrix(np.ones((2, 4096)), ROWS, FP16, params_for(FP16, FP16, 4096))

    def test_slice_cap(self):
        rng = np.random.default_rng(7)
        A = binade_matrix(rng, 4, 16)
        sliced = slice_matrix(A, ROWS, FP16, params_for(FP16, FP32, 16), max_slices=2)
        self.assertEqual(sliced.s, 2)
        self.assertTrue(sliced.truncated)
        self.assertTrue(sliced.reconstruction_mismatches(A).all())


class ReconstructionTests(SimpleTestCase):

    def check(self, rows, k, type2, spread, seed):
        rng = np.random.default_rng(seed)
        params = params_for(type2, FP32, k)
        for A in (rng.uniform(1.0, 10.0, size=(rows, k)), spread_matrix(rng, rows, k, spread)):
            sliced = slice_matrix(A, ROWS, type2, params)
            self.assertFalse(sliced.reconstruction_mismatches(A).any())
            np.testing.assert_array_equal(sliced.reconstruct().view(np.uint64), A.view(np.uint64))

    def test_random_vectors(self):
        for k in (8, 1024):
            for type2 in (FP16, FP8_E4M3):
                self.check(200, k, type2, 30, seed=k)

    @tag("slow")
    def test_ten_thousand_vectors(self):
        # About 2**20 entries per batch keeps the slice stacks small.
        for k, vectors in ((8, 10_000), (1024, 10_000), (16384, 1_000)):
            rows = max(1, min(vectors, (1 << 20) // k))
            for type2 in (FP16, FP8_E4M3):
                params = params_for(type2, FP32, k)
                for start in range(0, vectors, rows):
                    rng = np.random.default_rng(k + start)
                    for A in (rng.uniform(1.0, 10.0, size=(rows, k)), spread_matrix(rng, rows, k, 30)):
                        sliced = slice_matrix(A, ROWS, type2, params)
                        self.assertFalse(sliced.reconstruction_mismatches(A).any())

    def test_mismatch_is_detected(self):
        A = np.array([[1.0 + 2.0 ** -40, 3.0]])
        sliced = slice_matrix(A, ROWS, FP16, params_for(FP16, FP32, 2))
        sliced.coeff[-1] = sliced.coeff[-1] * 2
        self.assertTrue(sliced.reconstruction_mismatches(A).all())


class PredictorAgreementTests(SimpleTestCase):
    """Fully filled single-binade inputs use exactly the predicted number of slices."""

    def test_binade_inputs(self):
        rng = np.random.default_rng(8)
        cases = [
            (FP16, FP32, (8, 64, 512, 2048, 16384)),
            (FP8_E4M3, FP32, (8, 1024, 16384)),
            (FP6_E3M2, FP32, (8, 4096)),
            (FP16, FP16, (8, 64, 256)),
            (FP8_E4M3, FP16, (16, 128)),
        ]
        for type2, type3, ks in cases:
            for k in ks:
                with self.subTest(type2=type2.name, type3=type3.name, k=k):
                    A = binade_matrix(rng, 4, k)
                    sliced = slice_matrix(A, ROWS, type2, params_for(type2, type3, k))
                    expected = predict_slice_count(53, type2.mant_bits, type3.mant_bits, k)
                    self.assertEqual(sliced.s, expected)
