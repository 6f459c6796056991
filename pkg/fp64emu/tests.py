import mpmath
import numpy as np
from django.test import SimpleTestCase, tag
from hypothesis import given, strategies as st

from helpers.bits import as_bits, as_floats
from helpers.exceptions import RangeError

from . import kernels
from .backends import EMULATED, HARDWARE, get_backend
from .ops import (
    emu_add,
    emu_ceil_log2abs,
    emu_lt,
    emu_max,
    emu_mul,
    emu_scale2,
    emu_sub,
    mul_mantissa,
)
from .words import F64Word, Mant128

normal_floats = st.floats(
    min_value=-1e300, max_value=1e300, allow_nan=False, allow_infinity=False, allow_subnormal=False,
).filter(lambda x: x == 0 or abs(x) >= 1e-300)


def random_words(rng, size, exp_lo=300, exp_hi=1700):
    """sign x biased exponent in [exp_lo, exp_hi] x uniform 52-bit fraction."""
    sign = rng.integers(0, 2, size=size, dtype=np.uint64)
    exp = rng.integers(exp_lo, exp_hi + 1, size=size, dtype=np.uint64)
    frac = rng.integers(0, 1 << 52, size=size, dtype=np.uint64)
    return (sign << np.uint64(63)) | (exp << np.uint64(52)) | frac


def bits_of(x):
    return as_bits(x)


def assert_same_bits(test, got_words, expected_floats):
    expected = as_bits(expected_floats)
    mismatched = np.flatnonzero(np.asarray(got_words) != expected)
    test.assertEqual(
        mismatched.size, 0,
        msg=f"{mismatched.size} mismatches, first at {mismatched[:1]}",
    )


def word(x):
    return F64Word.from_float(x)


class WordTests(SimpleTestCase):

    def test_encode_decode_round_trip(self):
        w = F64Word.encode(1, 1030, 12345)
        self.assertEqual(w.decode(), (1, 1030, 12345))
        self.assertEqual(F64Word.from_float(-1.5).decode(), (1, 1023, 1 << 51))
        self.assertEqual(float(F64Word.from_float(3.75)), 3.75)

    def test_word_range_is_checked(self):
        with self.assertRaises(ValueError):
            F64Word(1 << 64)
        with self.assertRaises(ValueError):
            Mant128((1, 2, 3))

    @given(st.integers(0, (1 << 64) - 1), st.integers(0, (1 << 64) - 1))
    def test_mul_mantissa_is_exact(self, a, b):
        product = mul_mantissa(a, b)
        self.assertEqual(product.value, a * b)
        self.assertEqual(product.hi, (a * b) >> 64)
        self.assertEqual(product.lo, (a * b) & ((1 << 64) - 1))


class ScalarExampleTests(SimpleTestCase):

    def test_mul_examples(self):
        self.assertEqual(emu_mul(1.5, 2.0), word(3.0))
        one_ulp = 1.0 + 2.0 ** -52
        self.assertEqual(emu_mul(one_ulp, one_ulp), word(1.0 + 2.0 ** -51))
        self.assertEqual(emu_mul(-0.0, 5.0), word(-0.0))

    def test_add_examples(self):
        self.assertEqual(emu_add(1.0, 2.0 ** -53), word(1.0))
        self.assertEqual(emu_add(1.0, -1.0), word(0.0))
        self.assertEqual(emu_add(-0.0, -0.0), word(-0.0))
        self.assertEqual(emu_add(0.0, -0.0), word(0.0))
        self.assertEqual(emu_sub(1.0, 2.0 ** -54), word(1.0))
        self.assertEqual(emu_sub(3.0, 3.0), word(0.0))

    def test_compare_examples(self):
        self.assertTrue(emu_lt(-1.0, 0.5))
        self.assertFalse(emu_lt(3.0, 3.0))
        self.assertFalse(emu_lt(0.0, -0.0))
        self.assertFalse(emu_lt(-0.0, 0.0))
        self.assertEqual(emu_max(2.0 ** -1000, 2.0 ** -1001), word(2.0 ** -1000))
        self.assertEqual(emu_max(-3.0, -4.0), word(-3.0))

    def test_ceil_log2abs_examples(self):
        self.assertEqual(emu_ceil_log2abs(8.0), 3)
        self.assertEqual(emu_ceil_log2abs(10.0), 4)
        self.assertEqual(emu_ceil_log2abs(0.75), 0)
        self.assertEqual(emu_ceil_log2abs(-0.5), -1)

    def test_scale2_examples(self):
        self.assertEqual(emu_scale2(1.5, 4), word(24.0))
        self.assertEqual(emu_scale2(3.0, -1), word(1.5))
        self.assertEqual(emu_scale2(-0.0, 12), word(-0.0))

    def test_accepts_words(self):
        self.assertEqual(emu_add(word(1.0), word(2.0)), word(3.0))


class RangeTests(SimpleTestCase):

    def test_non_normal_operands_rejected(self):
        for bad in (float("nan"), float("inf"), -float("inf"), 5e-324, 2.0 ** -1030):
            with self.assertRaises(RangeError):
                emu_add(bad, 1.0)
            with self.assertRaises(RangeError):
                emu_mul(1.0, bad)
            with self.assertRaises(RangeError):
                emu_lt(bad, 1.0)

    def test_out_of_range_results_rejected(self):
        with self.assertRaises(RangeError):
            emu_mul(1e200, 1e200)
        with self.assertRaises(RangeError):
            emu_mul(1e-200, 1e-200)
        with self.assertRaises(RangeError):
            emu_add(1.7e308, 1.7e308)
        with self.assertRaises(RangeError):
            emu_sub(2.0 ** -1022 * 1.5, 2.0 ** -1022)
        with self.assertRaises(RangeError):
            emu_scale2(1.0, 1024)
        with self.assertRaises(RangeError):
            emu_scale2(1.0, -1023)

    def test_ceil_log2_of_zero_rejected(self):
        with self.assertRaises(RangeError):
            emu_ceil_log2abs(0.0)

    def test_range_error_is_arithmetic_error(self):
        with self.assertRaises(ArithmeticError):
            emu_mul(1e200, 1e200)


class OracleEquivalenceTests(SimpleTestCase):
    """Kernels against numpy float64 arithmetic on the same bit patterns."""

    trials = 20000

    def check_binary_ops(self, trials, seed):
        rng = np.random.default_rng(seed)
        a, b = random_words(rng, trials), random_words(rng, trials)
        fa, fb = as_floats(a), as_floats(b)
        assert_same_bits(self, kernels.add(a, b), fa + fb)
        assert_same_bits(self, kernels.sub(a, b), fa - fb)
        np.testing.assert_array_equal(kernels.lt(a, b), fa < fb)
        assert_same_bits(self, kernels.maximum(a, b), np.where(fa < fb, fb, fa))

        ma = random_words(rng, trials, 600, 1400)
        mb = random_words(rng, trials, 600, 1400)
        assert_same_bits(self, kernels.mul(ma, mb), as_floats(ma) * as_floats(mb))

        near = random_words(rng, trials, 1000, 1040)
        shifted = random_words(rng, trials, 1000, 1040)
        diff = rng.integers(0, 61, size=trials)
        shifted = kernels.scale2(shifted, -diff)
        assert_same_bits(self, kernels.add(near, shifted), as_floats(near) + as_floats(shifted))
        assert_same_bits(self, kernels.sub(near, shifted), as_floats(near) - as_floats(shifted))

    def test_random_pairs(self):
        self.check_binary_ops(self.trials, seed=20240601)

    @tag("slow")
    def test_million_random_pairs(self):
        self.check_binary_ops(1_000_000, seed=7)

    def test_close_operands_cancel_exactly(self):
        rng = np.random.default_rng(3)
        a = random_words(rng, self.trials, 1000, 1010)
        b = a ^ np.uint64(rng.integers(0, 1 << 8))
        assert_same_bits(self, kernels.sub(a, b), as_floats(a) - as_floats(b))

    def test_mul_ties(self):
        # Products of odd significands sitting exactly half an ulp apart.
        a = np.array([1.0 + 2.0 ** -52, 1.5 + 2.0 ** -52, 3.0, 1.0 + 2.0 ** -26])
        b = np.array([1.0 + 2.0 ** -52, 1.0 + 2.0 ** -52, 1.0 + 2.0 ** -52, 1.0 + 2.0 ** -27])
        assert_same_bits(self, kernels.mul(bits_of(a), bits_of(b)), a * b)

    @given(normal_floats, normal_floats)
    def test_commutative(self, x, y):
        try:
            total = emu_add(x, y)
        except RangeError:
            with self.assertRaises(RangeError):
                emu_add(y, x)
            return
        self.assertEqual(total, emu_add(y, x))
        self.assertEqual(total, word(x + y))
        if abs(x) < 1e150 and abs(y) < 1e150 and (x == 0 or abs(x) > 1e-150) and (y == 0 or abs(y) > 1e-150):
            self.assertEqual(emu_mul(x, y), emu_mul(y, x))
            self.assertEqual(emu_mul(x, y), word(x * y))

    @given(normal_floats, st.integers(-100, 100))
    def test_scale2_matches_native_and_inverts(self, x, t):
        try:
            scaled = emu_scale2(x, t)
        except RangeError:
            return
        self.assertEqual(scaled, word(x * 2.0 ** t))
        self.assertEqual(emu_scale2(scaled, -t), word(x))

    @given(normal_floats.filter(lambda x: x != 0))
    def test_ceil_log2abs_brackets_value(self, x):
        c = emu_ceil_log2abs(x)
        with mpmath.workprec(2200):
            magnitude = mpmath.mpf(abs(x))
            self.assertLess(mpmath.mpf(2) ** (c - 1), magnitude)
            self.assertLessEqual(magnitude, mpmath.mpf(2) ** c)

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        a, b = random_words(rng, 1000), random_words(rng, 1000)
        np.testing.assert_array_equal(kernels.add(a, b), kernels.add(a, b))


class BackendTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(5)
        self.x = as_floats(random_words(rng, (16, 33), 1000, 1040))
        self.y = as_floats(random_words(rng, (16, 33), 1000, 1040))
        self.x[3, 5] = 0.0
        self.x[4] = 0.0

    def run_both(self, op, *args):
        hw = getattr(HARDWARE, op)(*[HARDWARE.to_words(a) for a in args])
        emu = getattr(EMULATED, op)(*[EMULATED.to_words(a) for a in args])
        return HARDWARE.to_floats(hw), EMULATED.to_floats(emu)

    def test_add_and_sub_agree(self):
        for op in ("add", "sub"):
            hw, emu = self.run_both(op, self.x, self.y)
            np.testing.assert_array_equal(as_bits(hw), as_bits(emu))

    def test_max_abs_agrees(self):
        hw = HARDWARE.max_abs(self.x)
        emu = EMULATED.to_floats(EMULATED.max_abs(EMULATED.to_words(self.x)))
        np.testing.assert_array_equal(hw, emu)
        self.assertEqual(hw[4], 0.0)
        np.testing.assert_array_equal(hw, np.max(np.abs(self.x), axis=1))

    def test_ceil_log2abs_agrees(self):
        values = np.array([8.0, 10.0, 0.75, -0.5, 2.0 ** -1000, 1.7e308, 3.0])
        np.testing.assert_array_equal(
            HARDWARE.ceil_log2abs(values),
            EMULATED.ceil_log2abs(EMULATED.to_words(values)),
        )

    def test_scale2_and_sigma_agree(self):
        t = np.arange(-40, 40).reshape(1, -1)[:, :33] * np.ones((16, 1), dtype=np.int64)
        hw = HARDWARE.scale2(self.x, t)
        emu = EMULATED.to_floats(EMULATED.scale2(EMULATED.to_words(self.x), t))
        np.testing.assert_array_equal(as_bits(hw), as_bits(emu))
        exps = np.array([-1000, -3, 0, 5, 1000])
        np.testing.assert_array_equal(
            as_bits(HARDWARE.sigma(exps)), EMULATED.sigma(exps),
        )
        np.testing.assert_array_equal(HARDWARE.sigma(exps), 0.75 * 2.0 ** exps.astype(float))

    def test_errors_agree(self):
        for backend in (HARDWARE, EMULATED):
            with self.assertRaises(RangeError):
                backend.add(backend.to_words([1.7e308]), backend.to_words([1.7e308]))
            with self.assertRaises(RangeError):
                backend.scale2(backend.to_words([1.0]), [-1023])
            with self.assertRaises(RangeError):
                backend.sigma([1030])
            with self.assertRaises(RangeError):
                backend.validate(backend.to_words([5e-324]))
            with self.assertRaises(RangeError):
                backend.ceil_log2abs(backend.to_words([0.0, 1.0]))

    def test_get_backend(self):
        self.assertIs(get_backend(True), EMULATED)
        self.assertIs(get_backend(False), HARDWARE)
