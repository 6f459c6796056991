import logging

import attrs
import numpy as np

from fp64emu.backends import get_backend
from helpers.exceptions import DimensionError
from lpformat.formats import cvt_array, get_format

from .params import check_feasible

logger = logging.getLogger(__name__)

ROWS = "rows"
COLUMNS = "columns"


@attrs.define
class SliceStepState:
    """One extraction step over a stack of vectors (one entry per vector where noted)."""

    c: np.ndarray         # per vector
    sigma: np.ndarray     # per vector, backend words
    v: np.ndarray         # backend words
    residual: np.ndarray  # backend words
    scaled: np.ndarray    # 2**-c * v, backend words


def slice_step(backend, x, rho):
    maxabs = backend.max_abs(x)
    live = ~np.asarray(backend.is_zero(maxabs))
    c = np.zeros(maxabs.shape, dtype=np.int64)
    if live.any():
        c[live] = backend.ceil_log2abs(maxabs[live])

    sigma = backend.sigma(rho + c)
    shift = sigma[:, None]
    v = backend.sub(backend.add(x, shift), shift)
    residual = backend.sub(x, v)
    scaled = backend.scale2(v, -c[:, None])
    return SliceStepState(c=c, sigma=sigma, v=v, residual=residual, scaled=scaled)


@attrs.define
class SliceSet:
    orientation: str
    coeff: list
    expo: list
    params: object
    type2: object
    truncated: bool = False

    @property
    def s(self):
        return len(self.coeff)

    @property
    def vector_axis(self):
        """Axis of coeff[p] that runs along one sliced vector."""
        return 1 if self.orientation == ROWS else 0

    def _broadcast_expo(self, p):
        expo = self.expo[p]
        return expo[:, None] if self.orientation == ROWS else expo[None, :]

    def _scale(self, p):
        with np.errstate(under="ignore", over="ignore"):
            return np.ldexp(self.coeff[p], self._broadcast_expo(p))

    def _sum_terms(self):
        """Smallest-first sum of the scaled slices with an elementwise exactness flag."""
        shape = self.coeff[0].shape if self.coeff else (0, 0)
        total = np.zeros(shape)
        inexact = np.zeros(shape, dtype=bool)
        for p in reversed(range(self.s)):
            term = self._scale(p)
            inexact |= np.ldexp(term, -self._broadcast_expo(p)) != self.coeff[p]
            new = total + term
            # TwoSum: err is the exact rounding error of total + term.
            back = new - term
            err = (total - back) + (term - (new - back))
            inexact |= err != 0
            total = new
        return total, inexact

    def reconstruct(self):
        return self._sum_terms()[0]

    def reconstruction_mismatches(self, original):
        """Per-vector flags: True where the exact slice sum differs from original."""
        original = np.asarray(original, dtype=np.float64)
        if self.s == 0:
            wrong = original != 0
        else:
            total, inexact = self._sum_terms()
            wrong = inexact | (total.view(np.uint64) != np.where(original == 0, 0.0, original).view(np.uint64))
        return wrong.any(axis=self.vector_axis)

    def row_counts(self):
        """Number of leading non-zero slices for each sliced vector."""
        if self.s == 0:
            return np.zeros(0, dtype=np.int64)
        live = np.stack([(c != 0).any(axis=self.vector_axis) for c in self.coeff])
        return live.sum(axis=0)


def slice_matrix(M, orientation, type2, params, arith=False, max_slices=None):
    """
    Slice M along its inner-product direction.

    Rows of M are sliced for the left operand, columns for the right one; the
    coefficient matrices keep M's layout so slice pairs multiply directly.
    Finished vectors get all-zero coefficients with exponent 0 in later slices.
    """
    type2 = get_format(type2)
    backend = get_backend(arith)
    check_feasible(params, type2)

    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {M.shape}")
    if orientation not in (ROWS, COLUMNS):
        raise ValueError(f"unknown orientation {orientation!r}")
    vectors = M if orientation == ROWS else np.ascontiguousarray(M.T)

    x = backend.validate(backend.to_words(vectors), "matrix entry")
    coeff, expo = [], []
    while not np.all(backend.is_zero(x)):
        if max_slices is not None and len(coeff) >= max_slices:
            logger.debug(f"Slice cap {max_slices} reached with non-zero residual")
            return SliceSet(orientation, coeff, expo, params, type2, truncated=True)
        step = slice_step(backend, x, params.rho)
        slice_ = cvt_array(backend.to_floats(step.scaled), type2)
        coeff.append(slice_ if orientation == ROWS else np.ascontiguousarray(slice_.T))
        expo.append(step.c)
        x = step.residual
        logger.debug(
            f"Slice {len(coeff)} of {orientation}: exponents in [{int(step.c.min())}, {int(step.c.max())}]"
        )
    return SliceSet(orientation, coeff, expo, params, type2)


def slice_vector(x, type2, params, arith=False, max_slices=None):
    """Slice one vector; returns (coefficient vectors, exponents)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {x.shape}")
    sliced = slice_matrix(x[None, :], ROWS, type2, params, arith, max_slices)
    return [c[0] for c in sliced.coeff], [int(e[0]) for e in sliced.expo]
