"""Ranking quality metrics: position-discounted gain (DCG/nDCG) and
aggregation of per-query scores across independent runs.

Positions are 1-indexed and discounted by log2(position + 1), gains come
from a configurable per-label scheme, and a query whose ideal gain is zero
cannot discriminate rankers: it is skipped (scored ``None``) and counted,
never scored 0 or 1. All arithmetic is 64-bit; the batched entry point
routes through the compiled kernel when available.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import DataError
from .models import EsciLabel, Judgment, LABEL_ORDER

KERNEL_BACKEND = _kernels.BACKEND


@dataclass(frozen=True)
class GainScheme:
    """Gain assigned to each relevance label when scoring a ranking."""

    gains: Mapping[EsciLabel, float]

    def __post_init__(self) -> None:
        values = [float(self.gains.get(label, 0.0)) for label in LABEL_ORDER]
        if any(v < 0 for v in values):
            raise DataError("gains must be non-negative")
        if any(a < b for a, b in zip(values, values[1:])):
            raise DataError("gains must be non-increasing over E, S, C, I")
        if not any(v > 0 for v in values):
            raise DataError("at least one gain must be positive")

    @classmethod
    def default(cls) -> "GainScheme":
        return cls.from_values((1.0, 0.1, 0.01, 0.0))

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "GainScheme":
        if len(values) != 4:
            raise DataError("gain scheme needs exactly four values, ordered E, S, C, I")
        return cls(dict(zip(LABEL_ORDER, (float(v) for v in values))))

    def gain(self, label: EsciLabel) -> float:
        return float(self.gains.get(label, 0.0))

    def as_values(self) -> tuple[float, float, float, float]:
        return tuple(self.gain(label) for label in LABEL_ORDER)  # type: ignore[return-value]


@dataclass(frozen=True)
class Ranking:
    """Products ordered best-first with their scores.

    Ordering must be non-increasing in score; equal scores break ties by
    ascending product_id so identical score vectors rank identically on
    every platform.
    """

    query_id: str
    items: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        seen = set()
        previous: tuple[float, str] | None = None
        for product_id, score in self.items:
            if math.isnan(score):
                raise DataError(f"ranking for {self.query_id!r}: NaN score for {product_id!r}")
            if product_id in seen:
                raise DataError(f"ranking for {self.query_id!r}: duplicate product {product_id!r}")
            seen.add(product_id)
            key = (-score, product_id)
            if previous is not None and key < previous:
                raise DataError(
                    f"ranking for {self.query_id!r} is not sorted by descending score"
                )
            previous = key

    @classmethod
    def from_scores(cls, query_id: str, scores: Mapping[str, float]) -> "Ranking":
        """Sort by score descending, ties by ascending product_id."""
        items = tuple(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])))
        return cls(query_id, tuple((pid, float(s)) for pid, s in items))

    @property
    def product_ids(self) -> tuple[str, ...]:
        return tuple(pid for pid, _ in self.items)

    def __len__(self) -> int:
        return len(self.items)

    def to_bytes(self) -> bytes:
        """Canonical bytes; equal rankings serialize identically."""
        record = {"query_id": self.query_id, "items": [[pid, repr(s)] for pid, s in self.items]}
        return json.dumps(record, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def dcg(ordered_gains: Sequence[float], k: int | None = None) -> float:
    """Discounted cumulative gain of a ranked gain sequence, truncated at k."""
    if not ordered_gains:
        raise DataError("dcg of an empty gain list is undefined")
    if k is None:
        k = len(ordered_gains)
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    total = 0.0
    for i, gain in enumerate(ordered_gains[:k]):
        total += gain / math.log2(i + 2)
    return total


def idcg(gains: Sequence[float], k: int | None = None) -> float:
    """DCG of the ideal (descending) ordering of the same gains."""
    return dcg(sorted(gains, reverse=True), k)


def ndcg_from_gains(ordered_gains: Sequence[float], k: int | None = None) -> float | None:
    """nDCG of a ranked gain sequence; ``None`` when the ideal gain is zero."""
    ideal = idcg(ordered_gains, k)
    if ideal == 0.0:
        return None
    return dcg(ordered_gains, k) / ideal


def ndcg(
    ranking: Ranking,
    judgments: Iterable[Judgment],
    gain_scheme: GainScheme | None = None,
    k: int | None = None,
) -> float | None:
    """Score a ranking against the query's judgments.

    Every ranked product must be judged; a missing judgment is a pipeline
    bug, not a scoring outcome. k defaults to the full ranking length.
    """
    scheme = gain_scheme or GainScheme.default()
    by_product = {j.product_id: j.label for j in judgments}
    ordered = []
    for product_id in ranking.product_ids:
        if product_id not in by_product:
            raise DataError(
                f"ranked product {product_id!r} has no judgment for query {ranking.query_id!r}"
            )
        ordered.append(scheme.gain(by_product[product_id]))
    return ndcg_from_gains(ordered, k)


def ndcg_many(gain_lists: Sequence[Sequence[float]], k: int | None = None) -> list[float | None]:
    """Batched nDCG over many ranked gain lists via the active kernel backend."""
    if not gain_lists:
        return []
    offsets = np.zeros(len(gain_lists) + 1, dtype=np.intp)
    for j, gains in enumerate(gain_lists):
        if len(gains) == 0:
            raise DataError("dcg of an empty gain list is undefined")
        offsets[j + 1] = offsets[j] + len(gains)
    flat = np.fromiter(
        (g for gains in gain_lists for g in gains), dtype=np.float64, count=int(offsets[-1])
    )
    scores, _ = _kernels.ndcg_segments(flat, offsets, 0 if k is None else k)
    return [None if s < 0 else float(s) for s in scores]


@dataclass(frozen=True)
class EvalSummary:
    """Central/min/max dataset nDCG across runs, plus bookkeeping counts."""

    mean: float
    min: float
    max: float
    runs: int
    skipped: int
    central: str = "mean"

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise DataError("EvalSummary requires at least one run")
        if not (self.min - 1e-12 <= self.mean <= self.max + 1e-12):
            raise DataError("EvalSummary invariant violated: min <= mean <= max")

    def as_record(self) -> dict:
        return {
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
            "runs": self.runs,
            "skipped": self.skipped,
            "central": self.central,
        }


def run_score(
    per_query: Mapping[str, float | None],
    weights: Mapping[str, float] | None = None,
) -> tuple[float, int]:
    """Dataset score for one run: mean over non-skipped queries, plus skips.

    The mean is unweighted by default; pass per-query weights (e.g. example
    counts) to weight it instead.
    """
    scored = [(qid, s) for qid, s in per_query.items() if s is not None]
    skipped = len(per_query) - len(scored)
    if not scored:
        raise DataError("every query was skipped; nothing to average")
    if weights is None:
        return sum(s for _, s in scored) / len(scored), skipped
    total_weight = sum(weights[qid] for qid, _ in scored)
    if total_weight <= 0:
        raise DataError("query weights must sum to a positive value")
    return sum(s * weights[qid] for qid, s in scored) / total_weight, skipped


def aggregate_runs(
    per_run_per_query: Sequence[Mapping[str, float | None]],
    central: str = "mean",
    weights: Mapping[str, float] | None = None,
) -> EvalSummary:
    """Aggregate per-query nDCG over runs covering the same query set.

    Each run reduces to its per-query mean over non-skipped queries; the
    summary reports min/max across runs and either the mean (default) or
    the median of the run scores as the central value.
    """
    if not per_run_per_query:
        raise DataError("aggregate_runs requires at least one run")
    if central not in ("mean", "median"):
        raise DataError(f"unknown central mode {central!r}")
    reference = set(per_run_per_query[0])
    for run in per_run_per_query[1:]:
        if set(run) != reference:
            raise DataError("runs cover different query sets")
    scores = []
    skipped = 0
    for run in per_run_per_query:
        score, run_skipped = run_score(run, weights)
        scores.append(score)
        skipped = max(skipped, run_skipped)
    center = statistics.median(scores) if central == "median" else sum(scores) / len(scores)
    return EvalSummary(
        mean=center,
        min=min(scores),
        max=max(scores),
        runs=len(scores),
        skipped=skipped,
        central=central,
    )
