"""Pure-numpy fallback for the pair-sampling kernel.

Produces bit-identical edge sets to the compiled kernel: the same
counter-based splitmix64 stream, the same double-precision probability
expression, evaluated blockwise over the pair matrix instead of pair by pair.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53

# default row-block size; bounds peak memory at ~block*n doubles
_BLOCK_ROWS = 256


def _mix64(z):
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    z = z ^ (z >> np.uint64(31))
    return z


def pair_uniforms(seed, counters):
    """Uniforms in [0,1) for the given stream counters (test hook)."""
    s = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    k = np.ascontiguousarray(counters, dtype=np.uint64)
    z = s + (k + np.uint64(1)) * _GOLDEN
    return (_mix64(z) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def sample_pair_edges(labels, alpha, b, seed):
    """Sample edges over all unordered pairs; returns (u, v) int64 arrays with u < v."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    n, c = labels.shape
    yf = labels.astype(np.float64)
    comp = 1.0 - yf
    out_u = []
    out_v = []
    cols = np.arange(n, dtype=np.int64)
    for start in range(0, n, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        rows = np.arange(start, stop, dtype=np.int64)
        # differing-position counts for the block against all nodes
        diff = yf[start:stop] @ comp.T + comp[start:stop] @ yf.T
        d = np.rint(diff) / float(c)
        p = 1.0 / (1.0 + (d / b) ** alpha)
        counters = (rows[:, None].astype(np.uint64) * np.uint64(n)
                    + cols[None, :].astype(np.uint64))
        u = pair_uniforms(seed, counters.ravel()).reshape(d.shape)
        keep = (u < p) & (cols[None, :] > rows[:, None])
        bi, bj = np.nonzero(keep)
        out_u.append(rows[bi])
        out_v.append(cols[bj])
    if not out_u:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    return np.concatenate(out_u), np.concatenate(out_v)
