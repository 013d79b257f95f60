# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch nDCG kernel.

Semantics mirror ``escirank._kernels.fallback.ndcg_segments`` exactly,
term order included, so the two backends produce bit-identical doubles.
The descending sort is insertion sort: segments are per-query ranked lists,
small by construction.
"""

from libc.math cimport log2
from libc.stdlib cimport free, malloc

import numpy as np


def ndcg_segments(object gains_obj, object offsets_obj, Py_ssize_t k=0):
    """Per-segment nDCG over concatenated ranked gain lists.

    ``offsets`` has one more entry than there are segments; segment ``j``
    is ``gains[offsets[j]:offsets[j + 1]]`` in ranked order. ``k <= 0``
    means score the full segment. Returns ``(scores, skipped)`` where a
    segment with zero ideal gain scores -1.0 and counts as skipped.
    """
    gains_arr = np.ascontiguousarray(gains_obj, dtype=np.float64)
    offsets_arr = np.ascontiguousarray(offsets_obj, dtype=np.intp)
    cdef double[::1] gains = gains_arr
    cdef Py_ssize_t[::1] offsets = offsets_arr
    cdef Py_ssize_t m = offsets.shape[0] - 1
    cdef Py_ssize_t total = gains.shape[0]
    if m < 0:
        raise ValueError("offsets must contain at least one boundary")
    if m == 0:
        return np.empty(0, dtype=np.float64), 0
    if offsets[0] != 0 or offsets[m] != total:
        raise ValueError("offsets must start at 0 and end at len(gains)")

    cdef Py_ssize_t j, i, p, start, end, n, limit
    cdef Py_ssize_t maxlen = 0
    for j in range(m):
        n = offsets[j + 1] - offsets[j]
        if n <= 0:
            raise ValueError("segments must be non-empty and offsets increasing")
        if n > maxlen:
            maxlen = n

    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* scratch = <double*> malloc(maxlen * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    cdef Py_ssize_t skipped = 0
    cdef double dcg, idcg, key
    try:
        with nogil:
            for j in range(m):
                start = offsets[j]
                end = offsets[j + 1]
                n = end - start
                limit = n if (k <= 0 or k > n) else k
                dcg = 0.0
                for i in range(limit):
                    dcg += gains[start + i] / log2(<double> (i + 2))
                for i in range(n):
                    scratch[i] = gains[start + i]
                for i in range(1, n):
                    key = scratch[i]
                    p = i - 1
                    while p >= 0 and scratch[p] < key:
                        scratch[p + 1] = scratch[p]
                        p -= 1
                    scratch[p + 1] = key
                idcg = 0.0
                for i in range(limit):
                    idcg += scratch[i] / log2(<double> (i + 2))
                if idcg == 0.0:
                    out[j] = -1.0
                    skipped += 1
                else:
                    out[j] = dcg / idcg
    finally:
        free(scratch)
    return out_arr, skipped
