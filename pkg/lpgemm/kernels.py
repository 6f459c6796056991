"""
Simulated low-precision GEMM.

Operands hold Type2 values in float64 containers; every product is exact in
FP64 and the running sum is rounded to Type3 after each addition, in
ascending k order.
"""
import logging
from fractions import Fraction

import attrs
import numpy as np

from helpers.exceptions import DimensionError, OzakiError, RepresentabilityError
from lpformat.formats import FP64, cvt_array, get_format, representable_mask

logger = logging.getLogger(__name__)

AUTO = "auto"
SEQUENTIAL = "sequential"
KERNELS = [
    (AUTO, "Exact matmul when no partial sum can round, else sequential"),
    (SEQUENTIAL, "Per-step rounding to Type3 in ascending k"),
]


@attrs.define
class LpMatrix:
    data: np.ndarray = attrs.field(converter=lambda d: np.asarray(d, dtype=np.float64))
    fmt: object = attrs.field(converter=get_format)

    def __attrs_post_init__(self):
        if self.data.ndim != 2:
            raise DimensionError(f"expected a matrix, got shape {self.data.shape}")
        ok = representable_mask(self.data, self.fmt)
        if not ok.all():
            i, j = np.argwhere(~ok)[0]
            raise RepresentabilityError(
                f"entry ({i}, {j}) = {self.data[i, j]!r} is not a {self.fmt.name} value"
            )

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]


def _check_operands(A, B):
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.rows}x{A.cols} by {B.rows}x{B.cols}")
    if A.fmt.mant_bits + B.fmt.mant_bits > FP64.mant_bits:
        raise OzakiError(
            f"{A.fmt.name} x {B.fmt.name} products are not exact in FP64"
        )


def lsb_exponent(x):
    """Smallest exponent e with every entry of x a multiple of 2**e (None if x is all zero)."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    x = x[x != 0]
    if x.size == 0:
        return None
    mant, exp = np.frexp(x)
    digits = np.ldexp(mant, 53).astype(np.int64)
    lowest = digits & -digits
    return int((exp - 53 + np.frexp(lowest.astype(np.float64))[1] - 1).min())


def _certified_exact(A, B, type3):
    """True when every partial sum, in any order, is a Type3 value."""
    if type3.mant_bits > FP64.mant_bits - 2:
        return False
    qa, qb = lsb_exponent(A.data), lsb_exponent(B.data)
    if qa is None or qb is None:
        return True
    quantum = qa + qb
    if quantum < type3.min_subnormal_exp:
        return False
    bound = np.ldexp(1.0, quantum + type3.mant_bits)
    if bound > type3.max_finite:
        return False
    return bool(np.all(np.abs(A.data) @ np.abs(B.data) < bound))


def sequential_gemm(A, B, type3):
    type3 = get_format(type3)
    acc = np.zeros((A.rows, B.cols))
    for t in range(A.cols):
        prod = np.outer(A.data[:, t], B.data[t, :])
        total = acc + prod
        # TwoSum error: total + err is the exact sum.
        back = total - prod
        err = (acc - back) + (prod - (total - back))
        acc = cvt_array(total, type3, hint=err)
    return acc


def lp_gemm(A, B, type3, kernel=AUTO):
    type3 = get_format(type3)
    _check_operands(A, B)
    if A.cols == 0:
        return np.zeros((A.rows, B.cols))
    if kernel == AUTO:
        if _certified_exact(A, B, type3):
            return np.matmul(A.data, B.data)
        logger.debug(
            f"{A.rows}x{B.cols}x{A.cols} {A.fmt.name}/{type3.name} GEMM not certified exact, simulating step by step"
        )
    elif kernel != SEQUENTIAL:
        raise ValueError(f"unknown lp_gemm kernel {kernel!r}")
    return sequential_gemm(A, B, type3)


def _scaled_integers(x, exp):
    scaled = np.ldexp(np.asarray(x, dtype=np.float64), -exp)
    return np.array([int(v) for v in scaled.flat], dtype=object).reshape(scaled.shape)


def exact_gemm(A, B):
    """Exact products as an object array of Fractions (integer accumulation on a common quantum)."""
    _check_operands(A, B)
    qa, qb = lsb_exponent(A.data), lsb_exponent(B.data)
    if qa is None or qb is None or A.cols == 0:
        return np.full((A.rows, B.cols), Fraction(0), dtype=object)
    sums = _scaled_integers(A.data, qa).dot(_scaled_integers(B.data, qb))
    scale = Fraction(2) ** (qa + qb)
    return np.array([Fraction(int(v)) * scale for v in sums.flat], dtype=object).reshape(sums.shape)


def matches_exact(C, exact):
    """Elementwise C == exact, comparing each float's exact value."""
    C = np.asarray(C, dtype=np.float64)
    flags = [Fraction(float(c)) == e for c, e in zip(C.flat, exact.flat)]
    return np.array(flags, dtype=bool).reshape(C.shape)
