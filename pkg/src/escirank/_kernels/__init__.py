"""Backend selection for the batch nDCG kernel.

The compiled extension is used when it was built; otherwise the pure-Python
fallback takes over transparently. Set ``ESCIRANK_PURE_PYTHON=1`` to force
the fallback (used by the benchmark and the parity tests). Both backends
are bit-identical in output; only speed differs.
"""

from __future__ import annotations

import os

from . import fallback

if os.environ.get("ESCIRANK_PURE_PYTHON"):
    ndcg_segments = fallback.ndcg_segments
    BACKEND = "python"
else:
    try:
        from ._ndcg import ndcg_segments

        BACKEND = "compiled"
    except ImportError:
        ndcg_segments = fallback.ndcg_segments
        BACKEND = "python"

__all__ = ["ndcg_segments", "BACKEND", "fallback"]
