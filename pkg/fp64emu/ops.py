"""
Scalar FP64 operations on F64Word values.

Thin wrappers over the elementwise kernels; floats are accepted wherever
an F64Word is.
"""
import numpy as np

from helpers.bits import LOW32, U64

from . import kernels
from .words import F64Word, Mant128


def _word(x):
    if isinstance(x, F64Word):
        return U64(x.bits)
    return U64(F64Word.from_float(x).bits)


def _wrap(words):
    return F64Word(int(np.asarray(words)))


def emu_add(a, b):
    return _wrap(kernels.add(_word(a), _word(b)))


def emu_sub(a, b):
    return _wrap(kernels.sub(_word(a), _word(b)))


def emu_mul(a, b):
    return _wrap(kernels.mul(_word(a), _word(b)))


def emu_lt(a, b):
    return bool(kernels.lt(_word(a), _word(b)))


def emu_max(a, b):
    return _wrap(kernels.maximum(_word(a), _word(b)))


def emu_ceil_log2abs(a):
    return int(kernels.ceil_log2abs(_word(a)))


def emu_scale2(a, t):
    return _wrap(kernels.scale2(_word(a), int(t)))


def mul_mantissa(a, b):
    """Exact 128-bit product of two unsigned 64-bit integers."""
    hi, lo = kernels.mul_wide(U64(a), U64(b))
    return Mant128(tuple(int(w) for w in (lo & LOW32, lo >> U64(32), hi & LOW32, hi >> U64(32))))
