import attrs
import numpy as np

from helpers.exceptions import DimensionError


def _pair(C, Cref):
    C = np.asarray(C, dtype=np.float64)
    Cref = np.asarray(Cref, dtype=np.float64)
    if C.shape != Cref.shape:
        raise DimensionError(f"cannot compare shapes {C.shape} and {Cref.shape}")
    return C, Cref


def max_rel_error(C, Cref):
    """max |C - Cref| / |Cref| over all entries, in FP64."""
    C, Cref = _pair(C, Cref)
    if C.size == 0:
        return 0.0
    if np.any(Cref == 0):
        i = tuple(int(v) for v in np.argwhere(Cref == 0)[0])
        raise ZeroDivisionError(f"reference entry {i} is zero; use max_abs_error")
    return float(np.max(np.abs(C - Cref) / np.abs(Cref)))


def max_abs_error(C, Cref):
    C, Cref = _pair(C, Cref)
    if C.size == 0:
        return 0.0
    return float(np.max(np.abs(C - Cref)))


RELATIVE = "relative"
ABSOLUTE = "absolute"
METRICS = {RELATIVE: max_rel_error, ABSOLUTE: max_abs_error}


def pick_metric(Cref, absolute=False):
    """Relative error unless asked otherwise or some reference entry is zero."""
    if absolute or np.any(np.asarray(Cref) == 0):
        return ABSOLUTE
    return RELATIVE


@attrs.frozen
class AccuracyReport:
    size: tuple
    type2: str
    type3: str
    kblock: int
    err_oz: float
    err_naive: float
    metric: str = attrs.field(default=RELATIVE, validator=attrs.validators.in_(METRICS))

    @property
    def dominates(self):
        return self.err_oz <= self.err_naive

    def as_dict(self):
        data = attrs.asdict(self)
        data["size"] = list(self.size)
        data["dominates"] = self.dominates
        return data
