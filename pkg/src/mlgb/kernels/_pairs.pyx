# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pair-sampling kernel for the distance-attachment graph generator.

Walks every unordered node pair (i, j), computes the normalized Hamming
distance between the two label rows and keeps the pair as an edge with
probability 1 / (1 + (d/b)^alpha).  The per-pair uniform comes from a
counter-based hash stream keyed on (seed, i*n + j), so the edge set is a pure
function of (seed, labels, alpha, b) and identical to the numpy fallback
bit for bit.
"""

from libc.math cimport pow as cpow
from libc.stdint cimport uint64_t

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z ^= z >> 30
    z = z * <uint64_t>0xBF58476D1CE4E5B9
    z ^= z >> 27
    z = z * <uint64_t>0x94D049BB133111EB
    z ^= z >> 31
    return z


cdef inline double _pair_uniform(uint64_t seed, uint64_t counter) noexcept nogil:
    # splitmix64 output for stream position `counter`, mapped to [0, 1)
    cdef uint64_t z = seed + (counter + 1) * <uint64_t>0x9E3779B97F4A7C15
    return <double>(_mix64(z) >> 11) * (1.0 / 9007199254740992.0)


def pair_uniforms(seed, counters):
    """Uniforms in [0,1) for the given stream counters (test hook)."""
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] ks = np.ascontiguousarray(
        counters, dtype=np.uint64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(ks.shape[0], dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(ks.shape[0]):
        out[i] = _pair_uniform(s, ks[i])
    return out


def sample_pair_edges(cnp.uint8_t[:, ::1] labels, double alpha, double b, seed):
    """Sample edges over all unordered pairs; returns (u, v) int64 arrays with u < v."""
    cdef Py_ssize_t n = labels.shape[0]
    cdef Py_ssize_t c = labels.shape[1]
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t cap = 1024
    cdef cnp.ndarray[cnp.int64_t, ndim=1] us = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] vs = np.empty(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] uv = us
    cdef cnp.int64_t[::1] vv = vs
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t i, j, l
    cdef long diff
    cdef double d, p, u
    cdef uint64_t base

    for i in range(n):
        base = <uint64_t>i * <uint64_t>n
        for j in range(i + 1, n):
            diff = 0
            for l in range(c):
                if labels[i, l] != labels[j, l]:
                    diff += 1
            d = <double>diff / <double>c
            p = 1.0 / (1.0 + cpow(d / b, alpha))
            u = _pair_uniform(s, base + <uint64_t>j)
            if u < p:
                if count == cap:
                    cap = cap * 2
                    us = np.resize(us, cap)
                    vs = np.resize(vs, cap)
                    uv = us
                    vv = vs
                uv[count] = i
                vv[count] = j
                count += 1
    return us[:count].copy(), vs[:count].copy()
