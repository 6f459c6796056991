"""
Reference GEMMs: correctly rounded, and the plain FP64 triple loop.

ref_gemm writes every entry of A (per row) and B (per column) as an integer
times a power of two, cuts the integers into signed chunks small enough that
a k-term dot product of chunks is exact in float64, multiplies the chunk
matrices with BLAS, recombines the partial products as Python integers and
rounds each element once.
"""
import logging

import numpy as np

from helpers.exceptions import DimensionError

logger = logging.getLogger(__name__)


def _conform(A, B):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply shapes {A.shape} and {B.shape}")
    return A, B


def chunk_bits(k):
    """Chunk width b with k * 2**(2b) <= 2**53."""
    return (53 - (k - 1).bit_length()) // 2


def _fixed_point(M):
    """Per-row integer significands, shifts and base exponents: M[i, j] = sign * (digits << shift) * 2**base[i]."""
    if not np.all(np.isfinite(M)):
        raise ValueError("reference GEMM needs finite inputs")
    mant, exp = np.frexp(np.abs(M))
    digits = np.ldexp(mant, 53).astype(np.uint64)
    lsb = (exp - 53).astype(np.int64)
    nonzero = M != 0
    big = np.iinfo(np.int64).max
    base = np.where(nonzero, lsb, big).min(axis=1)
    base = np.where(base == big, 0, base)
    shift = np.where(nonzero, lsb - base[:, None], 0)
    sign = np.where(M < 0, -1.0, 1.0)
    return sign, digits, shift, base


def _chunk(sign, digits, shift, index, width):
    """Signed chunk `index` (width bits) of the integers digits << shift, as float64."""
    offset = index * width - shift
    right = np.clip(offset, 0, 63).astype(np.uint64)
    left = np.clip(-offset, 0, 63).astype(np.uint64)
    raw = np.where(offset >= 0, digits >> right, digits << left)
    return sign * (raw & np.uint64((1 << width) - 1)).astype(np.float64)


def _round_scaled(n, e):
    n, e = int(n), int(e)
    if n == 0:
        return 0.0
    if e >= 0:
        return float(n << e)
    return n / (1 << -e)


def ref_gemm(A, B):
    """Correctly rounded A @ B; OverflowError when an exact entry exceeds FP64."""
    A, B = _conform(A, B)
    m, k = A.shape
    n = B.shape[1]
    if k == 0 or m == 0 or n == 0:
        return np.zeros((m, n))

    width = chunk_bits(k)
    sa, da, sha, base_a = _fixed_point(A)
    sb, db, shb, base_b = _fixed_point(np.ascontiguousarray(B.T))
    chunks_a = -(-(int(sha.max()) + 53) // width)
    chunks_b = -(-(int(shb.max()) + 53) // width)
    logger.debug(f"ref_gemm {m}x{n}x{k}: {chunks_a} x {chunks_b} chunks of {width} bits")

    pieces_a = [_chunk(sa, da, sha, t, width) for t in range(chunks_a)]
    pieces_b = [np.ascontiguousarray(_chunk(sb, db, shb, u, width).T) for u in range(chunks_b)]

    total = np.zeros((m, n), dtype=object)
    for t, pa in enumerate(pieces_a):
        for u, pb in enumerate(pieces_b):
            part = (pa @ pb).astype(np.int64).astype(object)
            total += part * (1 << ((t + u) * width))

    scale = base_a[:, None] + base_b[None, :]
    rounded = np.frompyfunc(_round_scaled, 2, 1)(total, scale)
    return rounded.astype(np.float64)


def naive_gemm_fp64(A, B, k_block=0):
    """
    Triple-loop FP64 GEMM: each C[i, j] sums fl(a*b) in ascending k.

    With k_block > 0 the sum restarts per block of k_block indices and the
    block results are added into C in ascending block order.
    """
    A, B = _conform(A, B)
    m, k = A.shape
    C = np.zeros((m, B.shape[1]))
    step = k_block if k_block and k_block > 0 else max(k, 1)
    for start in range(0, k, step):
        block = np.zeros_like(C)
        for t in range(start, min(start + step, k)):
            block += np.multiply.outer(A[:, t], B[t, :])
        C = block if start == 0 else C + block
    return C
