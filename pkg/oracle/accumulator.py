from fractions import Fraction

import numpy as np


class ExactAccumulator:
    """
    Long fixed-point accumulator for FP64 sums and products.

    The register is a Python integer counting units of 2**-2148, the weight of
    the product of two smallest subnormals, so every finite FP64 value and every
    FP64 x FP64 product lands on it exactly.
    """

    LSB_EXP = -2148
    SCALE = 1 << -LSB_EXP

    def __init__(self):
        self.register = 0

    @staticmethod
    def _ratio(x):
        x = float(x)
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueError(f"cannot accumulate {x!r}")
        return x.as_integer_ratio()

    def add(self, x):
        n, d = self._ratio(x)
        self.register += n * (self.SCALE // d)
        return self

    def add_product(self, a, b):
        na, da = self._ratio(a)
        nb, db = self._ratio(b)
        self.register += na * nb * (self.SCALE // (da * db))
        return self

    def value(self):
        return Fraction(self.register, self.SCALE)

    def round(self):
        """The sum rounded once to FP64 (ties to even); OverflowError past the finite range."""
        if self.register == 0:
            return 0.0
        return self.register / self.SCALE

    def reset(self):
        self.register = 0


def ref_dot(x, y):
    acc = ExactAccumulator()
    for a, b in zip(np.asarray(x, dtype=np.float64).tolist(), np.asarray(y, dtype=np.float64).tolist()):
        acc.add_product(a, b)
    return acc.round()


def rational_dot(x, y):
    """Independent exact dot product with Fraction arithmetic, rounded once."""
    total = sum(
        (Fraction(a) * Fraction(b) for a, b in zip(np.asarray(x, dtype=np.float64).tolist(),
                                                     np.asarray(y, dtype=np.float64).tolist())),
        Fraction(0),
    )
    return float(total)
