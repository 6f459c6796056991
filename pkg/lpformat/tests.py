import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, strategies as st

from .formats import (
    BF16,
    FORMATS,
    FP6_E2M3,
    FP6_E3M2,
    FP8_E4M3,
    FP8_E5M2,
    FP16,
    FP32,
    FP64,
    FormatSpec,
    cvt,
    cvt_array,
    get_format,
    is_representable,
    mant_bits,
    representable_mask,
    unit_roundoff,
)


def minifloat_table(exp_bits, stored_bits, encoding):
    """Every finite non-negative value of a small format, with its code's parity."""
    bias = (1 << (exp_bits - 1)) - 1
    top = (1 << exp_bits) - 1
    table = {}
    for code in range(1 << (exp_bits + stored_bits)):
        e, m = code >> stored_bits, code & ((1 << stored_bits) - 1)
        if encoding == "ieee" and e == top:
            continue
        if encoding == "fn" and e == top and m == (1 << stored_bits) - 1:
            continue
        if e == 0:
            value = math.ldexp(m, 1 - bias - stored_bits)
        else:
            value = math.ldexp((1 << stored_bits) + m, e - bias - stored_bits)
        table[value] = code & 1
    return sorted(table.items())


def nearest_even(x, table):
    """Reference RNE for x >= 0 by scanning the enumerated values."""
    best, best_parity = None, None
    for value, parity in table:
        if best is None or abs(value - x) < abs(best - x):
            best, best_parity = value, parity
        elif abs(value - x) == abs(best - x) and parity == 0 and best_parity == 1:
            best, best_parity = value, parity
    return best


E4M3_TABLE = minifloat_table(4, 3, "fn")
E5M2_TABLE = minifloat_table(5, 2, "ieee")
E3M2_TABLE = minifloat_table(3, 2, "none")
E2M3_TABLE = minifloat_table(2, 3, "none")


class CatalogTests(SimpleTestCase):

    def test_catalog_significand_bits(self):
        expected = {
            "fp16": 11, "bf16": 8, "fp8e4m3": 4, "fp8e5m2": 3,
            "fp6e3m2": 3, "fp6e2m3": 4, "fp32": 24, "fp64": 53,
        }
        self.assertEqual({name: fmt.mant_bits for name, fmt in FORMATS.items()}, expected)

    def test_unit_roundoff_matches_mant_bits(self):
        for fmt in FORMATS.values():
            self.assertEqual(-math.log2(unit_roundoff(fmt)), mant_bits(fmt))
        self.assertEqual(unit_roundoff(FP32), 2.0 ** -24)

    def test_largest_finite_values(self):
        self.assertEqual(FP8_E4M3.max_finite, 448.0)
        self.assertEqual(FP8_E5M2.max_finite, 57344.0)
        self.assertEqual(FP6_E3M2.max_finite, 28.0)
        self.assertEqual(FP6_E2M3.max_finite, 7.5)
        self.assertEqual(FP16.max_finite, 65504.0)
        self.assertEqual(FP64.max_finite, np.finfo(np.float64).max)

    def test_enumerated_tables_agree_with_metadata(self):
        for table, fmt in ((E4M3_TABLE, FP8_E4M3), (E5M2_TABLE, FP8_E5M2),
                           (E3M2_TABLE, FP6_E3M2), (E2M3_TABLE, FP6_E2M3)):
            values = [v for v, _ in table]
            self.assertEqual(values[-1], fmt.max_finite)
            self.assertEqual(values[1], fmt.min_subnormal)

    def test_finite_only_flag(self):
        self.assertTrue(FP8_E4M3.finite_only)
        self.assertFalse(FP16.finite_only)

    def test_get_format(self):
        self.assertIs(get_format("FP16"), FP16)
        self.assertIs(get_format(BF16), BF16)
        with self.assertRaises(ValueError):
            get_format("fp4e2m1")

    def test_rejects_degenerate_formats(self):
        with self.assertRaises(ValueError):
            FormatSpec("tiny", exp_bits=1, mant_bits=3)
        with self.assertRaises(ValueError):
            FormatSpec("flat", exp_bits=4, mant_bits=0)


class CvtTests(SimpleTestCase):

    def test_documented_examples(self):
        self.assertEqual(cvt(1.0, FP8_E4M3), 1.0)
        self.assertEqual(cvt(3.3, FP8_E4M3), 3.25)
        self.assertEqual(cvt(0.1, FP16), 0.0999755859375)

    def test_exhaustive_round_trip_small_formats(self):
        for table, fmt in ((E4M3_TABLE, FP8_E4M3), (E5M2_TABLE, FP8_E5M2),
                           (E3M2_TABLE, FP6_E3M2), (E2M3_TABLE, FP6_E2M3)):
            values = np.array([v for v, _ in table])
            for signed in (values, -values):
                np.testing.assert_array_equal(cvt_array(signed, fmt), signed)
                self.assertTrue(representable_mask(signed, fmt).all())

    def test_midpoints_round_to_even_code(self):
        for table, fmt in ((E4M3_TABLE, FP8_E4M3), (E3M2_TABLE, FP6_E3M2),
                           (E2M3_TABLE, FP6_E2M3), (E5M2_TABLE, FP8_E5M2)):
            for (lo, lo_parity), (hi, _) in zip(table, table[1:]):
                mid = (lo + hi) / 2
                expected = lo if lo_parity == 0 else hi
                self.assertEqual(cvt(mid, fmt), expected, msg=f"{fmt.name} midpoint {mid}")
                self.assertEqual(cvt(-mid, fmt), -expected)

    @given(st.floats(min_value=0.0, max_value=448.0))
    def test_e4m3_matches_enumeration(self, x):
        self.assertEqual(cvt(x, FP8_E4M3), nearest_even(x, E4M3_TABLE))

    @given(st.floats(min_value=-65504.0, max_value=65504.0))
    def test_fp16_matches_numpy(self, x):
        self.assertEqual(cvt(x, FP16), float(np.float16(x)))

    @given(st.floats(min_value=-1e38, max_value=1e38))
    def test_fp32_matches_numpy(self, x):
        self.assertEqual(cvt(x, FP32), float(np.float32(x)))

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_fp64_is_identity(self, x):
        self.assertEqual(np.float64(cvt(x, FP64)).view(np.uint64), np.float64(x).view(np.uint64))

    @given(st.floats(min_value=-400, max_value=400), st.floats(min_value=-400, max_value=400))
    def test_monotone(self, a, b):
        a, b = min(a, b), max(a, b)
        for fmt in (FP8_E4M3, FP16, BF16):
            self.assertLessEqual(cvt(a, fmt), cvt(b, fmt))

    def test_fp16_pattern_sweep(self):
        halves = np.arange(1 << 16, dtype=np.uint16).view(np.float16)
        halves = halves[np.isfinite(halves)].astype(np.float64)
        np.testing.assert_array_equal(cvt_array(halves, FP16), halves)

    def test_overflow_raises(self):
        with self.assertRaises(OverflowError):
            cvt(470.0, FP8_E4M3)
        with self.assertRaises(OverflowError):
            cvt(70000.0, FP16)
        self.assertEqual(cvt(463.0, FP8_E4M3), 448.0)
        self.assertEqual(cvt(464.0, FP8_E4M3), 448.0)

    def test_nan_rejected(self):
        with self.assertRaises(ValueError):
            cvt(float("nan"), FP16)
        with self.assertRaises(ValueError):
            is_representable(float("nan"), FP16)

    def test_subnormals_are_kept(self):
        self.assertEqual(cvt(2.0 ** -9, FP8_E4M3), 2.0 ** -9)
        self.assertEqual(cvt(2.0 ** -11, FP8_E4M3), 0.0)
        self.assertEqual(cvt(3 * 2.0 ** -11, FP8_E4M3), 2.0 ** -9)

    def test_hint_breaks_exact_midpoints_only(self):
        mid = 1.0 + 2.0 ** -24
        self.assertEqual(cvt_array(np.float64(mid), FP32), 1.0)
        self.assertEqual(cvt_array(np.float64(mid), FP32, hint=1.0), 1.0 + 2.0 ** -23)
        self.assertEqual(cvt_array(np.float64(-mid), FP32, hint=-1.0), -(1.0 + 2.0 ** -23))
        self.assertEqual(cvt_array(np.float64(-mid), FP32, hint=1.0), -1.0)
        self.assertEqual(cvt_array(np.float64(1.25), FP32, hint=-1.0), 1.25)


class RepresentabilityTests(SimpleTestCase):

    def test_documented_examples(self):
        self.assertTrue(is_representable(2048.0, FP16))
        self.assertFalse(is_representable(2049.0, FP16))
        self.assertTrue(is_representable(0.0, FP8_E4M3))
        self.assertTrue(is_representable(-0.0, FP8_E4M3))

    def test_out_of_range_is_not_representable(self):
        self.assertFalse(is_representable(512.0, FP8_E4M3))
        self.assertFalse(is_representable(float("inf"), FP16))

    @given(st.floats(allow_nan=False, allow_infinity=False, width=32))
    def test_float32_values_are_fp32(self, x):
        self.assertTrue(is_representable(x, FP32))
