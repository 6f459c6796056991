"""Deterministic input matrices for the commands."""
import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1

UNIFORM = "uniform"
IDENTITY = "identity"
POWERS2 = "powers2"
SPREAD = "spread"
BINADE = "binade"
INITS = [
    (UNIFORM, "Uniform in the open interval (lo, hi)"),
    (IDENTITY, "Identity matrices"),
    (POWERS2, "Random powers of two in [2**-8, 2**8]"),
    (SPREAD, "Uniform mantissas over +-spread binades, random signs"),
    (BINADE, "Fully filled significands in [1, 2)"),
]


def _mix(z):
    """SplitMix64 output function on Python ints."""
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def stream_seed(seed, rows, cols):
    return _mix(_mix(_mix(seed & MASK64) ^ rows) ^ cols)


def splitmix64(seed, count):
    """The first `count` outputs of SplitMix64 started at `seed`, as uint64."""
    steps = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + steps * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniform53(seed, count):
    """53-bit uniforms in [0, 1)."""
    return np.ldexp((splitmix64(seed, count) >> np.uint64(11)).astype(np.float64), -53)


def gen_matrix(rows, cols, seed, lo=1.0, hi=10.0):
    """rows x cols entries lo + u*(hi - lo), kept inside the open interval (lo, hi)."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")
    u = uniform53(stream_seed(seed, rows, cols), rows * cols).reshape(rows, cols)
    M = lo + u * (hi - lo)
    M = np.where(M <= lo, np.nextafter(lo, hi), M)
    return np.where(M >= hi, np.nextafter(hi, lo), M)


def gen_binade(rows, cols, seed):
    words = splitmix64(stream_seed(seed, rows, cols), rows * cols) >> np.uint64(12)
    return (words | np.uint64(1023 << 52)).view(np.float64).reshape(rows, cols)


def gen_powers2(rows, cols, seed):
    u = uniform53(stream_seed(seed, rows, cols), rows * cols)
    return np.ldexp(1.0, np.floor(u * 17).astype(np.int64) - 8).reshape(rows, cols)


def gen_spread(rows, cols, seed, spread):
    u = uniform53(stream_seed(seed, rows, cols), 3 * rows * cols).reshape(3, rows, cols)
    exps = np.floor(u[1] * (2 * spread + 1)).astype(np.int64) - spread
    signs = np.where(u[2] < 0.5, -1.0, 1.0)
    return signs * np.ldexp(1.0 + u[0], exps)


def gen_pair(init, m, n, k, seed, lo=1.0, hi=10.0, spread=8):
    """(A, B) for an m x k by k x n product; B draws from seed + 1."""
    if init == IDENTITY:
        return np.eye(m, k), np.eye(k, n)
    if init == UNIFORM:
        return gen_matrix(m, k, seed, lo, hi), gen_matrix(k, n, seed + 1, lo, hi)
    if init == POWERS2:
        return gen_powers2(m, k, seed), gen_powers2(k, n, seed + 1)
    if init == SPREAD:
        return gen_spread(m, k, seed, spread), gen_spread(k, n, seed + 1, spread)
    if init == BINADE:
        return gen_binade(m, k, seed), gen_binade(k, n, seed + 1)
    raise ValueError(f"unknown init {init!r}")
