"""
Elementwise FP64 arithmetic on uint64 words using integer operations only.

Operands must be normal or zero. Subnormals, infinities, NaNs and any result
whose biased exponent leaves [1, 2046] raise RangeError instead of
producing wrong bits.
"""
import logging

import numpy as np

from helpers.bits import (
    BIAS,
    EXP_FIELD_MAX,
    HIDDEN,
    LOW32,
    MAG_MASK,
    ONE,
    SIGN,
    U64,
    ZERO,
    as_floats,
    bit_length,
    decode,
    encode,
    is_zero,
    low_mask,
    round_half_even,
    shift_right_jam,
    u64,
)
from helpers.exceptions import RangeError

logger = logging.getLogger(__name__)

# Working significands for addition carry 9 bits below the 53-bit mantissa.
ADD_GUARD_BITS = 9
ADD_TOP = 52 + ADD_GUARD_BITS + 1


def _first(words, mask):
    bad = np.broadcast_to(u64(words), np.shape(mask))[mask]
    return float(as_floats(bad.flat[0]))


def check_operands(words, what="operand"):
    words = u64(words)
    _, exp, frac = decode(words)
    bad = (exp == EXP_FIELD_MAX) | ((exp == 0) & (frac != ZERO))
    if np.any(bad):
        raise RangeError(f"{what} {_first(words, bad)!r} is not a normal FP64 value")
    return words


def _finish(sign, exp, frac, what):
    """Encode a finite nonzero result, rejecting exponents outside the normal range."""
    bad = (exp < 1) | (exp > EXP_FIELD_MAX - 1)
    if np.any(bad):
        worst = int(np.asarray(exp)[bad].flat[0]) - BIAS
        raise RangeError(f"{what} leaves the normal FP64 range (exponent 2**{worst})")
    return encode(sign, exp, frac)


def mul_wide(a, b):
    """
    Full 128-bit product of two 64-bit words as (hi, lo).

    Each operand is split into 32-bit halves; the four partial products are
    summed column by column with the carries of the middle column folded
    into the high word.
    """
    a, b = u64(a), u64(b)
    a0, a1 = a & LOW32, a >> U64(32)
    b0, b1 = b & LOW32, b >> U64(32)
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    p11 = a1 * b1
    mid = (p00 >> U64(32)) + (p01 & LOW32) + (p10 & LOW32)
    lo = (mid << U64(32)) | (p00 & LOW32)
    hi = p11 + (p01 >> U64(32)) + (p10 >> U64(32)) + (mid >> U64(32))
    return hi, lo


def mul(a, b):
    a = check_operands(a)
    b = check_operands(b)
    a, b = np.broadcast_arrays(a, b)
    sa, ea, fa = decode(a)
    sb, eb, fb = decode(b)

    hi, lo = mul_wide(fa | HIDDEN, fb | HIDDEN)
    # The product of two 53-bit significands has 105 or 106 bits.
    top = (hi >> U64(41)) & ONE
    shift = U64(52) + top
    sig = (hi << (U64(64) - shift)) | (lo >> shift)
    guard = ((lo >> (shift - ONE)) & ONE) != ZERO
    sticky = (lo & low_mask(shift - ONE)) != ZERO
    sig = sig + round_half_even(sig, guard, sticky).astype(np.uint64)
    carry = sig >> U64(53)
    sig = sig >> carry

    sign = sa ^ sb
    zero = is_zero(a) | is_zero(b)
    exp = ea + eb - BIAS + top.astype(np.int64) + carry.astype(np.int64)
    exp = np.where(zero, BIAS, exp)
    out = _finish(sign, exp, sig, "product")
    return np.where(zero, sign << U64(63), out)


def add(a, b):
    a = check_operands(a)
    b = check_operands(b)
    a, b = np.broadcast_arrays(a, b)
    a_zero, b_zero = is_zero(a), is_zero(b)

    a_bigger = (a & MAG_MASK) >= (b & MAG_MASK)
    big = np.where(a_bigger, a, b)
    small = np.where(a_bigger, b, a)
    s_big, e_big, f_big = decode(big)
    s_small, e_small, f_small = decode(small)

    m_big = (f_big | HIDDEN) << U64(ADD_GUARD_BITS)
    m_small = shift_right_jam((f_small | HIDDEN) << U64(ADD_GUARD_BITS), e_big - e_small)
    same = s_big == s_small
    total = np.where(same, m_big + m_small, m_big - m_small)

    length = bit_length(total)
    excess = length - 53
    right = np.clip(excess, 1, 63).astype(np.uint64)
    left = np.clip(-excess, 0, 63).astype(np.uint64)
    rounded = total >> right
    guard = ((total >> (right - ONE)) & ONE) != ZERO
    sticky = (total & low_mask(right - ONE)) != ZERO
    rounded = rounded + round_half_even(rounded, guard, sticky).astype(np.uint64)
    sig = np.where(excess > 0, rounded, total << left)
    carry = sig >> U64(53)
    sig = sig >> carry

    exp = e_big + length - ADD_TOP + carry.astype(np.int64)
    cancelled = total == ZERO
    special = a_zero | b_zero | cancelled
    exp = np.where(special, BIAS, exp)
    out = _finish(s_big, exp, sig, "sum")

    out = np.where(cancelled, ZERO, out)
    out = np.where(b_zero, a, out)
    out = np.where(a_zero, b, out)
    # +0 + -0 is +0; -0 + -0 is -0.
    return np.where(a_zero & b_zero, a & b, out)


def sub(a, b):
    return add(a, check_operands(b) ^ SIGN)


def _order_key(words):
    """Map words to uint64 keys whose unsigned order is the floating-point order."""
    words = u64(words)
    negative = (words & SIGN) != ZERO
    key = np.where(negative, ~words, words | SIGN)
    return np.where(is_zero(words), SIGN, key)


def lt(a, b):
    a = check_operands(a)
    b = check_operands(b)
    return _order_key(a) < _order_key(b)


def maximum(a, b):
    """b where a < b, else a (the comparison-select form of max)."""
    a = check_operands(a)
    b = check_operands(b)
    return np.where(_order_key(a) < _order_key(b), b, a)


def max_abs(words):
    """Largest magnitude along the last axis, as a tree of pairwise maxima."""
    mags = check_operands(words) & MAG_MASK
    if mags.shape[-1] == 0:
        return np.zeros(mags.shape[:-1], dtype=np.uint64)
    while mags.shape[-1] > 1:
        half = mags.shape[-1] // 2
        merged = maximum(mags[..., :half], mags[..., half:2 * half])
        if mags.shape[-1] % 2:
            merged = np.concatenate([merged, mags[..., -1:]], axis=-1)
        mags = merged
    return mags[..., 0]


def ceil_log2abs(words):
    words = check_operands(words)
    if np.any(is_zero(words)):
        raise RangeError("ceil(log2|x|) is undefined for zero")
    _, exp, frac = decode(words)
    return exp - BIAS + (frac != ZERO).astype(np.int64)


def scale2(words, t):
    """Exact multiplication by 2**t through the exponent field; zeros stay zero."""
    words = check_operands(words)
    t = np.asarray(t, dtype=np.int64)
    words, t = np.broadcast_arrays(words, t)
    sign, exp, frac = decode(words)
    zero = is_zero(words)
    exp = np.where(zero, BIAS, exp + t)
    out = _finish(sign, exp, frac, "scaled value")
    return np.where(zero, words, out)


def sigma(exponents):
    """Words of 0.75 * 2**e: fraction 0.5 at biased exponent e - 1."""
    exponents = np.asarray(exponents, dtype=np.int64)
    exp = exponents - 1 + BIAS
    frac = np.full(exponents.shape, 1 << 51, dtype=np.uint64)
    return _finish(np.zeros(exponents.shape, dtype=np.uint64), exp, frac, "slicing shift constant")
