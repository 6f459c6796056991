import numpy as np
from django.test import SimpleTestCase, tag
from hypothesis import given, strategies as st

from helpers.exceptions import DimensionError, RangeError, SlicingInfeasible
from lpformat.formats import FP6_E3M2, FP8_E4M3, FP16, FP32
from lpgemm.kernels import SEQUENTIAL
from oracle.metrics import max_rel_error
from oracle.reference import naive_gemm_fp64, ref_gemm

from .pipeline import (
    GemmConfig,
    block_widths,
    dgemm,
    oz_gemm,
    oz_gemm_count,
    pair_order,
    transpose,
)

ACCURACY_PAIRS = [(FP16, FP32), (FP8_E4M3, FP32)]


def uniform(seed, m, k, n):
    rng = np.random.default_rng(seed)
    return rng.uniform(1.0, 10.0, size=(m, k)), rng.uniform(1.0, 10.0, size=(k, n))


def binade_matrix(rng, rows, cols):
    frac = rng.integers(0, 1 << 52, size=(rows, cols), dtype=np.uint64)
    return (np.uint64(1023 << 52) | frac).view(np.float64)


class TransposeTests(SimpleTestCase):

    def test_small(self):
        np.testing.assert_array_equal(transpose([[7.0]]), [[7.0]])
        M = np.arange(6.0).reshape(2, 3)
        T = transpose(M)
        self.assertEqual(T.shape, (3, 2))
        for i in range(2):
            for j in range(3):
                self.assertEqual(T[j, i], M[i, j])
        self.assertTrue(T.flags.c_contiguous)

    def test_involution(self):
        M = np.random.default_rng(1).standard_normal((64, 64))
        self.assertEqual(transpose(transpose(M)).tobytes(), M.tobytes())

    def test_rejects_vectors(self):
        with self.assertRaises(DimensionError):
            transpose(np.ones(3))


class ConfigTests(SimpleTestCase):

    def test_defaults(self):
        cfg = GemmConfig()
        self.assertIs(cfg.type2, FP16)
        self.assertIs(cfg.type3, FP32)
        self.assertEqual(GemmConfig("fp8e4m3", "fp16").type2, FP8_E4M3)

    def test_validation(self):
        for bad in ({"kernel": "tiled"}, {"workers": 0}, {"k_block": -1},
                    {"max_slices": 0}, {"accumulation_order": "ascending"}):
            with self.subTest(**bad), self.assertRaises(ValueError):
                GemmConfig(**bad)

    def test_block_widths(self):
        self.assertEqual(block_widths(10, 0), [10])
        self.assertEqual(block_widths(10, 4), [4, 4, 2])
        self.assertEqual(block_widths(0, 0), [])
        with self.assertRaises(ValueError):
            block_widths(10, 11)

    def test_pair_order(self):
        self.assertEqual(
            pair_order(2, 3),
            [(1, 2), (0, 2), (1, 1), (0, 1), (1, 0), (0, 0)],
        )


class GemmCountTests(SimpleTestCase):

    def test_blocked_counts(self):
        for k_block, total in ((1024, 784), (4096, 256), (16384, 81), (0, 81)):
            with self.subTest(k_block=k_block):
                self.assertEqual(oz_gemm_count(64, 64, 16384, GemmConfig(FP16, FP32, k_block=k_block)), total)

    def test_unblocked_counts(self):
        self.assertEqual(oz_gemm_count(1, 1, 16, GemmConfig(FP8_E4M3, FP32)), 121)
        self.assertEqual(oz_gemm_count(1, 1, 8, GemmConfig(FP6_E3M2, FP32)), 196)

    def test_uneven_last_block(self):
        cfg = GemmConfig(FP16, FP32, k_block=1024)
        self.assertEqual(oz_gemm_count(1, 1, 1024 + 8, cfg), 49 + 25)

    def test_slice_cap(self):
        self.assertEqual(oz_gemm_count(1, 1, 16384, GemmConfig(FP16, FP32, max_slices=4)), 16)

    def test_infeasible(self):
        with self.assertRaises(SlicingInfeasible):
            oz_gemm_count(1, 1, 4096, GemmConfig(FP16, FP16))

    def test_measured_count_matches_prediction(self):
        rng = np.random.default_rng(2)
        for type2, k in ((FP16, 64), (FP8_E4M3, 16), (FP16, 1024)):
            with self.subTest(type2=type2.name, k=k):
                cfg = GemmConfig(type2, FP32)
                A, B = binade_matrix(rng, 8, k), binade_matrix(rng, k, 8)
                result = oz_gemm(A, B, cfg)
                self.assertEqual(result.stats.gemm_count, oz_gemm_count(8, 8, k, cfg))


class OzGemmTests(SimpleTestCase):

    def test_identity(self):
        result = oz_gemm(np.eye(8), np.eye(8), GemmConfig(FP16, FP32))
        self.assertEqual(result.C.tobytes(), np.eye(8).tobytes())
        self.assertEqual(result.stats.gemm_count, 1)

    def test_run_is_logged(self):
        with self.assertLogs("ozgemm.pipeline", "INFO") as logs:
            oz_gemm(np.eye(8), np.eye(8), GemmConfig(FP16, FP32))
        self.assertEqual(logs.output, ["INFO:ozgemm.pipeline:8x8x8 fp16/fp32 on hardware FP64: 1 block(s), 1 GEMMs"])

    def test_short_mantissas(self):
        for type2, type3 in ((FP16, FP32), (FP8_E4M3, FP32), (FP6_E3M2, FP16), (FP16, FP16)):
            for emulate in (False, True):
                with self.subTest(type2=type2.name, type3=type3.name, emulate=emulate):
                    result = oz_gemm([[1.5]], [[2.5]], GemmConfig(type2, type3, fp64_emulation=emulate))
                    self.assertEqual(result.C[0, 0], 3.75)
                    self.assertEqual(result.stats.gemm_count, 1)

    def test_exact_for_representable_products(self):
        rng = np.random.default_rng(3)
        A = rng.integers(-1000, 1001, size=(5, 7)).astype(float)
        B = rng.integers(-1000, 1001, size=(7, 4)).astype(float)
        np.testing.assert_array_equal(dgemm(A, B), A @ B)

    def test_signs_and_zeros(self):
        A = np.array([[1.0, -2.0, 0.0], [0.0, 0.0, 0.0]])
        B = np.array([[3.0, 0.0], [-0.5, 0.0], [7.0, 0.0]])
        np.testing.assert_array_equal(dgemm(A, B), [[4.0, 0.0], [0.0, 0.0]])

    def test_stats(self):
        A, B = uniform(4, 16, 32, 8)
        stats = oz_gemm(A, B, GemmConfig(FP16, FP32, k_block=16)).stats
        self.assertEqual(len(stats.blocks), 2)
        self.assertEqual(stats.gemm_count, sum(b.s_x * b.s_y for b in stats.blocks))
        for block in stats.blocks:
            self.assertLessEqual(block.rows_a[0], block.rows_a[1])
            self.assertEqual(block.rows_a[1], block.s_x)
            self.assertEqual(block.cols_b[1], block.s_y)
        self.assertGreater(stats.ops["gemm"], 0)
        report = stats.as_dict()
        self.assertEqual(report["gemm_count"], stats.gemm_count)
        self.assertEqual(set(report["ops"]), {"slicing", "gemm", "accumulation"})

    def test_empty_inner_dimension(self):
        result = oz_gemm(np.zeros((3, 0)), np.zeros((0, 2)))
        np.testing.assert_array_equal(result.C, np.zeros((3, 2)))
        self.assertEqual(result.stats.gemm_count, 0)

    def test_errors(self):
        with self.assertRaises(DimensionError):
            oz_gemm(np.ones((2, 3)), np.ones((2, 3)))
        with self.assertRaises(SlicingInfeasible):
            oz_gemm(np.ones((1, 4096)), np.ones((4096, 1)), GemmConfig(FP16, FP16))
        with self.assertRaises(ValueError):
            oz_gemm(np.ones((1, 4)), np.ones((4, 1)), GemmConfig(k_block=8))
        for emulate in (False, True):
            with self.assertRaises(RangeError):
                oz_gemm([[1e-310, 1.0]], [[1.0], [1.0]], GemmConfig(fp64_emulation=emulate))

    def test_slice_cap(self):
        A, B = uniform(5, 4, 16, 4)
        result = oz_gemm(A, B, GemmConfig(FP16, FP32, max_slices=2))
        self.assertTrue(result.stats.blocks[0].truncated)
        self.assertEqual(result.stats.gemm_count, 4)
        self.assertLess(max_rel_error(result.C, ref_gemm(A, B)), 2.0 ** -15)

    def test_kernels_agree(self):
        A, B = uniform(6, 6, 24, 5)
        for type2, type3 in ((FP16, FP16), (FP8_E4M3, FP32)):
            auto = oz_gemm(A, B, GemmConfig(type2, type3)).C
            seq = oz_gemm(A, B, GemmConfig(type2, type3, kernel=SEQUENTIAL)).C
            self.assertEqual(auto.tobytes(), seq.tobytes())

    def test_worker_count_does_not_change_bits(self):
        A, B = uniform(7, 24, 48, 24)
        one = oz_gemm(A, B, GemmConfig(FP8_E4M3, FP32)).C
        four = oz_gemm(A, B, GemmConfig(FP8_E4M3, FP32, workers=4)).C
        self.assertEqual(one.tobytes(), four.tobytes())

    @given(st.integers(1, 6), st.integers(1, 20), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
    def test_close_to_reference(self, m, k, n, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((m, k)) * 2.0 ** rng.integers(-20, 21, size=(m, k))
        B = rng.standard_normal((k, n))
        C = dgemm(A, B)
        ref = ref_gemm(A, B)
        bound = (4 * k + 64) * 2.0 ** -53 * (np.abs(A) @ np.abs(B))
        self.assertTrue(np.all(np.abs(C - ref) <= bound))


class EmulationEquivalenceTests(SimpleTestCase):
    """Hardware and emulated FP64 give the same bits."""

    def check(self, size, seed=1, **options):
        A, B = uniform(seed, size, size, size)
        for type2, type3 in ACCURACY_PAIRS:
            with self.subTest(size=size, type2=type2.name, **options):
                hw = oz_gemm(A, B, GemmConfig(type2, type3, **options))
                emu = oz_gemm(A, B, GemmConfig(type2, type3, fp64_emulation=True, **options))
                self.assertEqual(hw.C.tobytes(), emu.C.tobytes())
                self.assertEqual(hw.stats.gemm_count, emu.stats.gemm_count)

    def test_16(self):
        self.check(16)
        self.check(16, k_block=4)

    @tag("slow")
    def test_64_and_256(self):
        self.check(64)
        self.check(256)
        self.check(256, k_block=64)


class AccuracyTests(SimpleTestCase):
    """Unblocked error never exceeds the FP64 triple loop's; blocked stays within 4x."""

    def dominance(self, size, seed):
        A, B = uniform(seed, size, size, size)
        ref = ref_gemm(A, B)
        err_naive = max_rel_error(naive_gemm_fp64(A, B), ref)
        for type2, type3 in ACCURACY_PAIRS:
            with self.subTest(size=size, seed=seed, type2=type2.name):
                self.assertLessEqual(max_rel_error(dgemm(A, B, GemmConfig(type2, type3)), ref), err_naive)

    def blocked(self, size, k_block, seed=1):
        A, B = uniform(seed, size, size, size)
        ref = ref_gemm(A, B)
        err_naive = max_rel_error(naive_gemm_fp64(A, B, k_block=k_block), ref)
        for type2, type3 in ACCURACY_PAIRS:
            with self.subTest(size=size, k_block=k_block, type2=type2.name):
                err = max_rel_error(dgemm(A, B, GemmConfig(type2, type3, k_block=k_block)), ref)
                self.assertLessEqual(err, 4 * err_naive)

    def test_dominance_64(self):
        self.dominance(64, seed=1)

    def test_blocked_64(self):
        self.blocked(64, k_block=16)

    @tag("slow")
    def test_dominance(self):
        for size in (64, 256, 512):
            for seed in (1, 2, 3):
                self.dominance(size, seed)

    @tag("slow")
    def test_blocked_256(self):
        for k_block in (64, 256):
            self.blocked(256, k_block)
