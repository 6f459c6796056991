"""
FP64 arithmetic backends used by slicing and accumulation.

HardwareFp64 works on float64 arrays with numpy; EmulatedFp64 works on the
same values as uint64 words through the integer kernels. Both raise
RangeError in exactly the same situations, so a pipeline produces the same
bits (or the same error) whichever one it runs on.
"""
import logging

import numpy as np

from helpers.bits import as_bits, as_floats, is_zero
from helpers.exceptions import RangeError

from . import kernels

logger = logging.getLogger(__name__)

TINY = np.finfo(np.float64).tiny


class HardwareFp64:
    name = "hardware"

    def to_words(self, x):
        return np.array(x, dtype=np.float64, copy=True)

    def to_floats(self, words):
        return np.asarray(words, dtype=np.float64)

    def validate(self, x, what="operand"):
        x = np.asarray(x, dtype=np.float64)
        bad = ~np.isfinite(x) | ((x != 0) & (np.abs(x) < TINY))
        if np.any(bad):
            raise RangeError(f"{what} {float(x[bad].flat[0])!r} is not a normal FP64 value")
        return x

    def _result(self, out, inputs_nonzero, what):
        lost = ~np.isfinite(out) | ((out != 0) & (np.abs(out) < TINY)) | (inputs_nonzero & (out == 0))
        if np.any(lost):
            raise RangeError(f"{what} leaves the normal FP64 range")
        return out

    def add(self, a, b):
        with np.errstate(over="ignore"):
            out = self.validate(a) + self.validate(b)
        return self._result(out, False, "sum")

    def sub(self, a, b):
        with np.errstate(over="ignore"):
            out = self.validate(a) - self.validate(b)
        return self._result(out, False, "sum")

    def max_abs(self, x):
        x = self.validate(x)
        if x.shape[-1] == 0:
            return np.zeros(x.shape[:-1])
        return np.max(np.abs(x), axis=-1)

    def is_zero(self, x):
        return np.asarray(x) == 0

    def ceil_log2abs(self, x):
        x = self.validate(x)
        if np.any(x == 0):
            raise RangeError("ceil(log2|x|) is undefined for zero")
        mant, exp = np.frexp(x)
        return np.where(np.abs(mant) == 0.5, exp - 1, exp).astype(np.int64)

    def scale2(self, x, t):
        x = self.validate(x, "scaled value")
        with np.errstate(over="ignore", under="ignore"):
            out = np.ldexp(x, np.asarray(t, dtype=np.int64))
        return self._result(out, x != 0, "scaled value")

    def sigma(self, exponents):
        out = np.ldexp(0.75, np.asarray(exponents, dtype=np.int64))
        return self._result(out, True, "slicing shift constant")


class EmulatedFp64:
    name = "emulated"

    def to_words(self, x):
        return as_bits(x)

    def to_floats(self, words):
        return as_floats(words)

    def validate(self, words, what="operand"):
        return kernels.check_operands(words, what)

    def add(self, a, b):
        return kernels.add(a, b)

    def sub(self, a, b):
        return kernels.sub(a, b)

    def max_abs(self, words):
        return kernels.max_abs(words)

    def is_zero(self, words):
        return is_zero(words)

    def ceil_log2abs(self, words):
        return kernels.ceil_log2abs(words)

    def scale2(self, words, t):
        return kernels.scale2(words, t)

    def sigma(self, exponents):
        return kernels.sigma(exponents)


HARDWARE = HardwareFp64()
EMULATED = EmulatedFp64()


def get_backend(fp64_emulation):
    """Backend for a flag; backend instances pass through unchanged."""
    if isinstance(fp64_emulation, (HardwareFp64, EmulatedFp64)):
        return fp64_emulation
    backend = EMULATED if fp64_emulation else HARDWARE
    logger.debug(f"FP64 arithmetic backend: {backend.name}")
    return backend
