"""
Simulated low-precision floating-point formats.

Values of every format are carried in float64 containers. Conversion rounds
with round-to-nearest-even straight from the FP64 bit pattern, so the
exact input value is rounded once (no double rounding through an
intermediate format).
"""
import math

import attrs
import numpy as np

from helpers.bits import (
    BIAS,
    EXP_FIELD_MAX,
    FRAC_MASK,
    HIDDEN,
    ONE,
    ZERO,
    as_bits,
    as_floats,
    bit_length,
    decode,
    encode,
    low_mask,
    round_half_even,
)

IEEE = "ieee"
# OCP FP8 "fn" encoding: no infinities, only S.1111.111 is NaN.
FINITE_NAN_ONLY = "fn"
# FP6 variants reserve no codes at all.
NO_SPECIALS = "none"

ENCODINGS = (IEEE, FINITE_NAN_ONLY, NO_SPECIALS)


def _between(low, high):
    def check(instance, attribute, value):
        if not low <= value <= high:
            raise ValueError(f"{attribute.name} must lie in [{low}, {high}], got {value}")
    return check


@attrs.frozen
class FormatSpec:
    """A binary floating-point format; mant_bits counts the hidden bit."""

    name: str
    exp_bits: int = attrs.field(validator=_between(2, 11))
    mant_bits: int = attrs.field(validator=_between(1, 53))
    encoding: str = attrs.field(default=IEEE, validator=attrs.validators.in_(ENCODINGS))

    @property
    def bias(self):
        return (1 << (self.exp_bits - 1)) - 1

    @property
    def finite_only(self):
        return self.encoding != IEEE

    @property
    def exp_max(self):
        top_field = (1 << self.exp_bits) - 1
        if self.encoding == IEEE:
            top_field -= 1
        return top_field - self.bias

    @property
    def exp_min(self):
        return 1 - self.bias

    @property
    def max_finite(self):
        spare = 2 if self.encoding == FINITE_NAN_ONLY else 1
        significand = 2.0 - math.ldexp(1.0, spare - self.mant_bits)
        return math.ldexp(significand, self.exp_max)

    @property
    def min_subnormal_exp(self):
        return self.exp_min - (self.mant_bits - 1)

    @property
    def min_subnormal(self):
        return math.ldexp(1.0, self.min_subnormal_exp)

    @property
    def unit_roundoff(self):
        return math.ldexp(1.0, -self.mant_bits)

    def __str__(self):
        return self.name


FP64 = FormatSpec("fp64", exp_bits=11, mant_bits=53)
FP32 = FormatSpec("fp32", exp_bits=8, mant_bits=24)
FP16 = FormatSpec("fp16", exp_bits=5, mant_bits=11)
BF16 = FormatSpec("bf16", exp_bits=8, mant_bits=8)
FP8_E4M3 = FormatSpec("fp8e4m3", exp_bits=4, mant_bits=4, encoding=FINITE_NAN_ONLY)
FP8_E5M2 = FormatSpec("fp8e5m2", exp_bits=5, mant_bits=3)
FP6_E3M2 = FormatSpec("fp6e3m2", exp_bits=3, mant_bits=3, encoding=NO_SPECIALS)
FP6_E2M3 = FormatSpec("fp6e2m3", exp_bits=2, mant_bits=4, encoding=NO_SPECIALS)

FORMATS = {
    fmt.name: fmt
    for fmt in (FP16, BF16, FP8_E4M3, FP8_E5M2, FP6_E3M2, FP6_E2M3, FP32, FP64)
}


def get_format(name):
    if isinstance(name, FormatSpec):
        return name
    try:
        return FORMATS[str(name).strip().lower()]
    except KeyError:
        raise ValueError(
            f"Unknown format {name!r}; expected one of {', '.join(FORMATS)}"
        ) from None


def mant_bits(fmt):
    return get_format(fmt).mant_bits


def unit_roundoff(fmt):
    return get_format(fmt).unit_roundoff


def _pack(sign, sig, exp):
    """Encode sign * sig * 2**exp (sig <= 2**53) as FP64 words."""
    length = bit_length(sig)
    biased = exp + length - 1 + BIAS
    up = np.clip(53 - length, 0, 63).astype(np.uint64)
    down = np.clip(length - 53, 0, 63).astype(np.uint64)
    frac = np.where(length <= 53, sig << up, sig >> down)
    subnormal = biased < 1
    sub_shift = np.clip(exp + BIAS + 51, 0, 52).astype(np.uint64)
    frac = np.where(subnormal, sig << sub_shift, frac & FRAC_MASK)
    biased = np.where(subnormal | (sig == ZERO), 0, biased)
    return encode(sign, biased, frac)


def round_words(words, fmt, hint=None):
    """
    Round FP64 words to the nearest value of fmt (ties to even), returned as FP64 words.

    hint, when given, is the sign of a residual that was lost before the call
    (value = x + residual exactly). It only matters when x sits exactly on a
    rounding midpoint.
    """
    sign, exp, frac = decode(words)
    if np.any(exp == EXP_FIELD_MAX):
        raise ValueError(f"cannot convert NaN or infinity to {fmt.name}")

    normal = exp > 0
    sig = np.where(normal, frac | HIDDEN, frac)
    lsb = np.where(normal, exp, 1) - (BIAS + 52)
    lead = lsb + bit_length(sig) - 1
    quantum = np.maximum(lead, fmt.exp_min) - (fmt.mant_bits - 1)
    drop = quantum - lsb

    shift = np.clip(drop, 1, 60).astype(np.uint64)
    kept = sig >> shift
    guard = ((sig >> (shift - ONE)) & ONE) != ZERO
    sticky = (sig & low_mask(shift - ONE)) != ZERO

    if hint is None:
        up = round_half_even(kept, guard, sticky)
    else:
        direction = np.sign(np.broadcast_to(np.asarray(hint, dtype=np.float64), sig.shape))
        negative = sign == ONE
        away = ((direction > 0) & ~negative) | ((direction < 0) & negative)
        toward = (direction != 0) & ~away
        up = guard & (sticky | away | (~toward & ((kept & ONE) != ZERO)))

    rounded = _pack(sign, kept + up.astype(np.uint64), quantum)
    return np.where((drop <= 0) | (sig == ZERO), words, rounded)


def cvt_array(x, fmt, hint=None):
    """Elementwise cvt over an array; the result keeps x's shape."""
    fmt = get_format(fmt)
    words = as_bits(x)
    out = as_floats(round_words(words, fmt, hint))
    too_big = np.abs(out) > fmt.max_finite
    if np.any(too_big):
        worst = float(np.max(np.abs(np.asarray(x, dtype=np.float64)[too_big])))
        raise OverflowError(
            f"{worst!r} rounds beyond the largest finite {fmt.name} value {fmt.max_finite!r}"
        )
    return out


def cvt(value, fmt):
    """Round one finite value to fmt (RNE), returned as a Python float."""
    return float(cvt_array(np.float64(value), fmt))


def representable_mask(x, fmt):
    fmt = get_format(fmt)
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(x)):
        raise ValueError("NaN has no representation in a simulated format")
    words = as_bits(x)
    finite = np.isfinite(x)
    safe = np.where(finite, words, ZERO)
    same = round_words(safe, fmt) == safe
    return same & finite & (np.abs(np.where(finite, x, 0.0)) <= fmt.max_finite)


def is_representable(value, fmt):
    return bool(representable_mask(np.float64(value), fmt))
