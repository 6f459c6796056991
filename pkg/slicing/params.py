"""
Slicing constants and the closed-form slice-count predictor.

gamma is the exponent headroom that keeps k accumulated slice products
exact in Type3, xi keeps each slice inside Type2's significand, and
rho = max(gamma, xi). Every slice then carries m1 - rho bits plus one
more won back by rounding to nearest against the 0.75 shift constant.
"""
import math

import attrs

from helpers.exceptions import SlicingInfeasible
from lpformat.formats import FP64, get_format


@attrs.frozen
class SlicingParams:
    m1: int
    m2: int
    m3: int
    k: int
    gamma: int
    xi: int
    rho: int

    @property
    def slice_width(self):
        return self.m1 - self.rho

    @property
    def feasible(self):
        return self.slice_width >= 0

    @property
    def quantum_exp(self):
        """Exponent of the coefficient quantum: every slice entry is a multiple of 2**quantum_exp."""
        return self.rho - self.m1


def _ceil_half(n):
    return -(-n // 2)


def compute_params(m1, m2, m3, k):
    if k < 1:
        raise ValueError(f"inner dimension must be at least 1, got {k}")
    if min(m1, m2, m3) < 1:
        raise ValueError(f"significand bit counts must be positive, got {(m1, m2, m3)}")
    # ceil(m1 - (m3 - log2 k) / 2) with log2 k taken exactly: replacing log2 k
    # by ceil(log2 k) leaves the outer ceiling unchanged.
    log2_k_ceil = (k - 1).bit_length()
    gamma = _ceil_half(2 * m1 - m3 + log2_k_ceil)
    xi = m1 - m2
    return SlicingParams(m1=m1, m2=m2, m3=m3, k=k, gamma=gamma, xi=xi, rho=max(gamma, xi))


def params_for(type2, type3, k):
    return compute_params(FP64.mant_bits, get_format(type2).mant_bits, get_format(type3).mant_bits, k)


def predict_slice_count(m1, m2, m3, k):
    """Slices needed for fully filled m1-bit significands, or None when infeasible."""
    params = compute_params(m1, m2, m3, k)
    if not params.feasible:
        return None
    return math.ceil(m1 / (params.slice_width + 1))


def predict_gemm_count(m1, m2, m3, k):
    s = predict_slice_count(m1, m2, m3, k)
    return None if s is None else s * s


def check_feasible(params, type2, type3=None):
    """
    Raise SlicingInfeasible unless the formats can carry these slices.

    Beyond a non-negative slice width, the coefficient quantum has to exist in
    Type2 (not below its smallest subnormal) and, when Type3 is given, the
    products' quantum and a k-term sum bounded by k must fit Type3's range.
    """
    type2 = get_format(type2)
    if not params.feasible:
        raise SlicingInfeasible(
            f"{type2.name} slices are infeasible at k={params.k}: "
            f"rho={params.rho} exceeds m1={params.m1}"
        )
    if params.quantum_exp < type2.min_subnormal_exp:
        raise SlicingInfeasible(
            f"slice quantum 2**{params.quantum_exp} is below the smallest "
            f"{type2.name} subnormal 2**{type2.min_subnormal_exp} (k={params.k})"
        )
    if type3 is not None:
        type3 = get_format(type3)
        if 2 * params.quantum_exp < type3.min_subnormal_exp or params.k > type3.max_finite:
            raise SlicingInfeasible(
                f"{type3.name} cannot hold exact sums of {params.k} slice products"
            )
    return params
