"""
IEEE-754 binary64 bit-pattern helpers on numpy uint64 arrays.

Everything here is integer arithmetic on words; shift counts and masks are
kept as uint64 so numpy never promotes a word to float or to int64.
"""
import numpy as np

U64 = np.uint64

ZERO = U64(0)
ONE = U64(1)
SIGN = U64(1 << 63)
MAG_MASK = U64((1 << 63) - 1)
EXP_MASK = U64(0x7FF << 52)
FRAC_MASK = U64((1 << 52) - 1)
HIDDEN = U64(1 << 52)
LOW32 = U64(0xFFFFFFFF)

BIAS = 1023
EXP_FIELD_MAX = 0x7FF


def as_bits(x):
    """Reinterpret float64 data as uint64 words (always a fresh array)."""
    return np.array(x, dtype=np.float64, copy=True).view(np.uint64)


def as_floats(words):
    return np.array(words, dtype=np.uint64, copy=True).view(np.float64)


def u64(x):
    return np.asarray(x, dtype=np.uint64)


def decode(words):
    """Split words into (sign, biased exponent, fraction); exponent is int64."""
    words = u64(words)
    sign = words >> U64(63)
    exp = ((words & EXP_MASK) >> U64(52)).astype(np.int64)
    frac = words & FRAC_MASK
    return sign, exp, frac


def encode(sign, exp, frac):
    """Pack fields back into words; exp must already be validated to [0, 2047]."""
    exp = np.asarray(exp).astype(np.uint64)
    return (u64(sign) << U64(63)) | (exp << U64(52)) | (u64(frac) & FRAC_MASK)


def is_zero(words):
    return (u64(words) & MAG_MASK) == ZERO


def bit_length(x):
    """Vectorised int.bit_length for uint64 arrays, returned as int64."""
    x = u64(x).copy()
    n = np.zeros(x.shape, dtype=np.int64)
    for s in (32, 16, 8, 4, 2, 1):
        big = x >= (ONE << U64(s))
        n += np.where(big, s, 0)
        x = np.where(big, x >> U64(s), x)
    return n + (x > ZERO)


def low_mask(n):
    """2**n - 1 for shift counts 0 <= n <= 63."""
    return (ONE << u64(n)) - ONE


def shift_right_jam(x, dist):
    """Logical right shift that ORs every bit shifted out into bit 0."""
    x = u64(x)
    dist = np.asarray(dist, dtype=np.int64)
    clipped = np.clip(dist, 0, 63).astype(np.uint64)
    shifted = x >> clipped
    lost = (x & low_mask(clipped)) != ZERO
    jammed = shifted | lost.astype(np.uint64)
    return np.where(dist >= 64, (x != ZERO).astype(np.uint64), jammed)


def round_half_even(sig, guard, sticky):
    """Round-to-nearest-even increment decision from guard and sticky flags."""
    odd = (u64(sig) & ONE) != ZERO
    return np.asarray(guard, dtype=bool) & (np.asarray(sticky, dtype=bool) | odd)
