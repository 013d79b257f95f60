"""Pure-Python batch nDCG kernel; the reference for the compiled extension.

Both backends must stay operation-for-operation identical (sequential sums,
division by log2 of the position, full descending sort before truncation) so
that reports are byte-reproducible regardless of which backend is active.
"""

from __future__ import annotations

import math

import numpy as np

_LOG2_TABLE: list[float] = []


def _log2_table(size: int) -> list[float]:
    while len(_LOG2_TABLE) < size:
        _LOG2_TABLE.append(math.log2(len(_LOG2_TABLE) + 2))
    return _LOG2_TABLE


def ndcg_segments(gains, offsets, k: int = 0) -> tuple[np.ndarray, int]:
    """Per-segment nDCG over concatenated ranked gain lists.

    ``offsets`` has one more entry than there are segments; segment ``j``
    is ``gains[offsets[j]:offsets[j + 1]]`` in ranked order. ``k <= 0``
    means score the full segment. Returns ``(scores, skipped)`` where a
    segment with zero ideal gain scores -1.0 and counts as skipped.
    """
    gains_list = [float(g) for g in np.ascontiguousarray(gains, dtype=np.float64)]
    offs = [int(o) for o in np.ascontiguousarray(offsets, dtype=np.intp)]
    m = len(offs) - 1
    if m < 0:
        raise ValueError("offsets must contain at least one boundary")
    if m == 0:
        return np.empty(0, dtype=np.float64), 0
    if offs[0] != 0 or offs[-1] != len(gains_list):
        raise ValueError("offsets must start at 0 and end at len(gains)")
    maxlen = 0
    for j in range(m):
        n = offs[j + 1] - offs[j]
        if n <= 0:
            raise ValueError("segments must be non-empty and offsets increasing")
        maxlen = max(maxlen, n)
    logs = _log2_table(maxlen)

    out = np.empty(m, dtype=np.float64)
    skipped = 0
    for j in range(m):
        segment = gains_list[offs[j] : offs[j + 1]]
        n = len(segment)
        limit = n if (k <= 0 or k > n) else k
        dcg = 0.0
        for i in range(limit):
            dcg += segment[i] / logs[i]
        ideal = sorted(segment, reverse=True)
        idcg = 0.0
        for i in range(limit):
            idcg += ideal[i] / logs[i]
        if idcg == 0.0:
            out[j] = -1.0
            skipped += 1
        else:
            out[j] = dcg / idcg
    return out, skipped
