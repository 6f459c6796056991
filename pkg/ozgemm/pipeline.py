"""
Ozaki-scheme DGEMM.

C = A @ B is computed as, per inner-product block,

    sum over (p, q) of 2**(cA[p][i] + cB[q][j]) * lp_gemm(A_p, B_q)[i, j]

where A_p / B_q are the Type2 slices of A's rows and B's columns. The scaled
terms are summed in FP64 (hardware or emulated) from the smallest slice
degree to the largest, and block results are added in ascending block order.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor

import attrs
import numpy as np

from fp64emu.backends import get_backend
from helpers.exceptions import DimensionError, SlicingInfeasible
from lpformat.formats import FP16, FP32, FP64, get_format
from lpgemm.kernels import AUTO, KERNELS, LpMatrix, lp_gemm
from slicing.params import check_feasible, params_for, predict_slice_count
from slicing.slicer import ROWS, slice_matrix

logger = logging.getLogger(__name__)

DESCENDING_DEGREE = "descending-degree"
ACCUMULATION_ORDERS = [
    (DESCENDING_DEGREE, "Descending p+q, ties by (p, q)"),
]

PHASES = ("slicing", "gemm", "accumulation")

# element operations per entry and extraction step: max-abs, two shift adds, residual, scale
SLICE_STEP_OPS = 5


def _choice(choices):
    return attrs.validators.in_([value for value, _ in choices])


def _positive_or_none(instance, attribute, value):
    if value is not None and value < 1:
        raise ValueError(f"{attribute.name} must be at least 1, got {value}")


@attrs.frozen
class GemmConfig:
    type2: object = attrs.field(default=FP16, converter=get_format)
    type3: object = attrs.field(default=FP32, converter=get_format)
    k_block: int = attrs.field(default=0, validator=attrs.validators.ge(0))
    fp64_emulation: bool = False
    max_slices: int = attrs.field(default=None, validator=_positive_or_none)
    accumulation_order: str = attrs.field(default=DESCENDING_DEGREE, validator=_choice(ACCUMULATION_ORDERS))
    seed: int = 1
    kernel: str = attrs.field(default=AUTO, validator=_choice(KERNELS))
    workers: int = attrs.field(default=1, validator=attrs.validators.ge(1))


@attrs.frozen
class BlockStats:
    start: int
    width: int
    s_x: int
    s_y: int
    rows_a: tuple
    cols_b: tuple
    truncated: bool = False

    @property
    def gemm_count(self):
        return self.s_x * self.s_y


@attrs.define
class GemmStats:
    blocks: list = attrs.Factory(list)
    ops: dict = attrs.Factory(lambda: dict.fromkeys(PHASES, 0))
    seconds: dict = attrs.Factory(lambda: dict.fromkeys(PHASES, 0.0))

    @property
    def gemm_count(self):
        return sum(block.gemm_count for block in self.blocks)

    def as_dict(self):
        return {
            "blocks": [
                {**attrs.asdict(block), "rows_a": list(block.rows_a), "cols_b": list(block.cols_b)}
                for block in self.blocks
            ],
            "gemm_count": self.gemm_count,
            "ops": dict(self.ops),
            "seconds": dict(self.seconds),
        }


@attrs.define
class OzResult:
    C: np.ndarray
    stats: GemmStats


def transpose(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {M.shape}")
    return np.ascontiguousarray(M.T)


def _conform(A, B):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2:
        raise DimensionError(f"expected matrices, got shapes {A.shape} and {B.shape}")
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape[0]}x{A.shape[1]} by {B.shape[0]}x{B.shape[1]}")
    return A, B


def block_widths(k, k_block):
    if k_block and k_block > k:
        raise ValueError(f"k_block={k_block} exceeds the inner dimension k={k}")
    step = k_block or k
    return [min(step, k - start) for start in range(0, k, step)] if k else []


def pair_order(s_x, s_y, policy=DESCENDING_DEGREE):
    """Slice pairs (p, q) in accumulation order."""
    if policy != DESCENDING_DEGREE:
        raise ValueError(f"unknown accumulation order {policy!r}")
    return sorted(((p, q) for p in range(s_x) for q in range(s_y)), key=lambda pq: (-(pq[0] + pq[1]), pq[0], pq[1]))


def _extent(counts):
    return (int(counts.min()), int(counts.max())) if counts.size else (0, 0)


def _block(backend, A, Bt, cfg, stats, start):
    m, width = A.shape
    n = Bt.shape[0]
    params = check_feasible(params_for(cfg.type2, cfg.type3, width), cfg.type2, cfg.type3)

    tic = time.perf_counter()
    sa = slice_matrix(A, ROWS, cfg.type2, params, backend, cfg.max_slices)
    sb = slice_matrix(Bt, ROWS, cfg.type2, params, backend, cfg.max_slices)
    stats.seconds["slicing"] += time.perf_counter() - tic
    stats.ops["slicing"] += SLICE_STEP_OPS * (sa.s * A.size + sb.s * Bt.size)

    block = BlockStats(
        start=start, width=width, s_x=sa.s, s_y=sb.s,
        rows_a=_extent(sa.row_counts()), cols_b=_extent(sb.row_counts()),
        truncated=sa.truncated or sb.truncated,
    )
    stats.blocks.append(block)
    logger.debug(f"Block at k={start} (width {width}): rho={params.rho}, s_x={sa.s}, s_y={sb.s}")
    if block.truncated:
        logger.info(f"Slices capped at {cfg.max_slices} in block at k={start}, the product is not exact")

    order = pair_order(sa.s, sb.s, cfg.accumulation_order)
    left = [LpMatrix(c, cfg.type2) for c in sa.coeff]
    right = [LpMatrix(c.T, cfg.type2) for c in sb.coeff]

    def run(pair):
        p, q = pair
        return lp_gemm(left[p], right[q], cfg.type3, kernel=cfg.kernel)

    tic = time.perf_counter()
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            products = list(pool.map(run, order))
    else:
        products = [run(pair) for pair in order]
    stats.seconds["gemm"] += time.perf_counter() - tic
    stats.ops["gemm"] += 2 * m * n * width * len(order)

    tic = time.perf_counter()
    acc = backend.to_words(np.zeros((m, n)))
    for (p, q), G in zip(order, products):
        shift = sa.expo[p][:, None] + sb.expo[q][None, :]
        acc = backend.add(acc, backend.scale2(backend.to_words(G), shift))
    stats.seconds["accumulation"] += time.perf_counter() - tic
    stats.ops["accumulation"] += 2 * m * n * len(order)
    return acc


def oz_gemm(A, B, cfg=None):
    cfg = cfg or GemmConfig()
    A, B = _conform(A, B)
    m, k = A.shape
    n = B.shape[1]
    backend = get_backend(cfg.fp64_emulation)
    stats = GemmStats()
    widths = block_widths(k, cfg.k_block)
    if not widths:
        return OzResult(np.zeros((m, n)), stats)

    Bt = transpose(B)
    C = None
    start = 0
    for width in widths:
        acc = _block(backend, A[:, start:start + width], Bt[:, start:start + width], cfg, stats, start)
        if C is None:
            C = acc
        else:
            tic = time.perf_counter()
            C = backend.add(C, acc)
            stats.seconds["accumulation"] += time.perf_counter() - tic
            stats.ops["accumulation"] += m * n
        start += width

    logger.info(
        f"{m}x{n}x{k} {cfg.type2.name}/{cfg.type3.name} on {backend.name} FP64: "
        f"{len(widths)} block(s), {stats.gemm_count} GEMMs"
    )
    return OzResult(np.array(backend.to_floats(C), dtype=np.float64), stats)


def oz_gemm_count(m, n, k, cfg=None):
    """Predicted GEMM invocations for fully filled significands."""
    cfg = cfg or GemmConfig()
    if min(m, n, k) < 0:
        raise DimensionError(f"negative dimension in {(m, n, k)}")
    total = 0
    for width in block_widths(k, cfg.k_block):
        check_feasible(params_for(cfg.type2, cfg.type3, width), cfg.type2, cfg.type3)
        s = predict_slice_count(FP64.mant_bits, cfg.type2.mant_bits, cfg.type3.mant_bits, width)
        if s is None:
            raise SlicingInfeasible(f"{cfg.type2.name}/{cfg.type3.name} is infeasible at k={width}")
        if cfg.max_slices is not None:
            s = min(s, cfg.max_slices)
        total += s * s
    return total


def dgemm(A, B, cfg=None):
    return oz_gemm(A, B, cfg).C
