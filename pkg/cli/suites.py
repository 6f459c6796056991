"""
Invariant suites behind the `verify` command.

Each suite draws its own random instances from the seed and counts the ones
that break the property it checks.
"""
import logging
import sys

import attrs
import numpy as np
from tqdm import tqdm

from fp64emu import kernels
from helpers.bits import as_bits, as_floats
from helpers.exceptions import SlicingInfeasible
from lpformat.formats import BF16, FP6_E3M2, FP8_E4M3, FP16, FP32
from lpgemm.kernels import LpMatrix, exact_gemm, lp_gemm, matches_exact
from slicing.params import check_feasible, params_for
from slicing.slicer import ROWS, slice_matrix

from .utils import gen_matrix, gen_spread, stream_seed

logger = logging.getLogger(__name__)

RECONSTRUCTION = "reconstruction"
ERRORFREE = "errorfree"
FP64EMU = "fp64emu"
ALL = "all"
SUITES = [
    (RECONSTRUCTION, "Slices sum back to the input exactly"),
    (ERRORFREE, "Slice-pair GEMMs accumulate without rounding"),
    (FP64EMU, "Integer FP64 kernels match native FP64 bit for bit"),
    (ALL, "Every suite"),
]

RECONSTRUCTION_KS = (8, 1024, 16384)
ERRORFREE_KS = (8, 256, 4096)
ERRORFREE_PAIRS = [
    (FP16, FP32), (FP16, FP16), (FP8_E4M3, FP32), (FP8_E4M3, FP16),
    (FP6_E3M2, FP32), (FP6_E3M2, FP16), (BF16, FP32),
]
# Elements sliced per batch in the reconstruction suite.
BATCH_ELEMENTS = 1 << 20


@attrs.define
class SuiteResult:
    name: str
    trials: int = 0
    failures: int = 0

    @property
    def passed(self):
        return self.failures == 0

    def as_dict(self):
        return {"suite": self.name, "trials": self.trials, "failures": self.failures, "passed": self.passed}


def _progress(total, desc):
    return tqdm(total=total, desc=desc, file=sys.stderr, leave=False)


def run_reconstruction(trials, seed):
    """trials // 10 vectors per (Type2, k, input kind)."""
    result = SuiteResult(RECONSTRUCTION)
    vectors = max(1, trials // 10)
    configs = [(t2, k, kind) for t2 in (FP16, FP8_E4M3) for k in RECONSTRUCTION_KS for kind in ("uniform", "spread")]
    with _progress(len(configs) * vectors, RECONSTRUCTION) as bar:
        for type2, k, kind in configs:
            params = params_for(type2, FP32, k)
            rows = max(1, BATCH_ELEMENTS // k)
            for start in range(0, vectors, rows):
                batch = min(rows, vectors - start)
                batch_seed = stream_seed(seed, start, k) ^ type2.mant_bits
                if kind == "uniform":
                    X = gen_matrix(batch, k, batch_seed)
                else:
                    X = gen_spread(batch, k, batch_seed, spread=30)
                sliced = slice_matrix(X, ROWS, type2, params)
                failed = int(sliced.reconstruction_mismatches(X).sum())
                if failed:
                    logger.warning(f"{failed} {kind} vectors of length {k} do not reconstruct from {type2.name} slices")
                result.trials += batch
                result.failures += failed
                bar.update(batch)
    return result


def run_errorfree(trials, seed):
    """trials // 1000 inner products per feasible (Type2, Type3, k)."""
    result = SuiteResult(ERRORFREE)
    instances = max(1, trials // 1000)
    cases = []
    for type2, type3 in ERRORFREE_PAIRS:
        for k in ERRORFREE_KS:
            try:
                cases.append((type2, type3, k, check_feasible(params_for(type2, type3, k), type2, type3)))
            except SlicingInfeasible:
                logger.debug(f"Skipping infeasible {type2.name}/{type3.name} at k={k}")
    with _progress(len(cases) * instances, ERRORFREE) as bar:
        for type2, type3, k, params in cases:
            for i in range(instances):
                x = gen_matrix(1, k, stream_seed(seed, i, k) ^ type2.mant_bits)
                y = gen_matrix(k, 1, stream_seed(seed + 1, i, k) ^ type3.mant_bits)
                sx = slice_matrix(x, ROWS, type2, params)
                sy = slice_matrix(y.T, ROWS, type2, params)
                for a in sx.coeff:
                    for b in sy.coeff:
                        A, B = LpMatrix(a, type2), LpMatrix(b.T, type2)
                        C = lp_gemm(A, B, type3)
                        result.trials += 1
                        if not matches_exact(C, exact_gemm(A, B)).all():
                            result.failures += 1
                            logger.warning(f"{type2.name}/{type3.name} slice product rounded at k={k}")
                bar.update(1)
    return result


def _random_words(rng, size, exp_lo, exp_hi):
    sign = rng.integers(0, 2, size=size, dtype=np.uint64)
    exp = rng.integers(exp_lo, exp_hi + 1, size=size, dtype=np.uint64)
    frac = rng.integers(0, 1 << 52, size=size, dtype=np.uint64)
    return (sign << np.uint64(63)) | (exp << np.uint64(52)) | frac


def run_fp64emu(trials, seed):
    """trials operand pairs for each of add, sub, mul, lt and max."""
    result = SuiteResult(FP64EMU)
    rng = np.random.default_rng(seed)
    checks = [
        ("add", kernels.add, np.add, 300, 1700),
        ("sub", kernels.sub, np.subtract, 300, 1700),
        ("mul", kernels.mul, np.multiply, 600, 1400),
        ("lt", kernels.lt, np.less, 1, 2046),
        ("max", kernels.maximum, np.maximum, 1, 2046),
    ]
    with _progress(len(checks) * trials, FP64EMU) as bar:
        for name, emulated, native, exp_lo, exp_hi in checks:
            for start in range(0, trials, BATCH_ELEMENTS):
                size = min(BATCH_ELEMENTS, trials - start)
                a = _random_words(rng, size, exp_lo, exp_hi)
                b = _random_words(rng, size, exp_lo, exp_hi)
                got = emulated(a, b)
                expected = native(as_floats(a), as_floats(b))
                if expected.dtype == np.bool_:
                    wrong = int(np.count_nonzero(got != expected))
                else:
                    wrong = int(np.count_nonzero(got != as_bits(expected)))
                if wrong:
                    logger.warning(f"emulated {name} differs from native FP64 on {wrong} operand pairs")
                result.trials += size
                result.failures += wrong
                bar.update(size)
    return result


RUNNERS = {
    RECONSTRUCTION: run_reconstruction,
    ERRORFREE: run_errorfree,
    FP64EMU: run_fp64emu,
}


def run_suites(suite, trials, seed):
    names = list(RUNNERS) if suite == ALL else [suite]
    return [RUNNERS[name](trials, seed) for name in names]
