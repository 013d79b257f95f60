"""Dataset construction: popularity filtering and irrelevant-item padding.

Padding appends uniformly sampled catalog items to each under-filled query,
labeled irrelevant, until the query carries at least ``pad_size`` examples.
Each query draws from its own seed-derived PCG64 substream, so results are
independent of query iteration order and reproduce bit-for-bit per seed.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

from .errors import DataError
from .models import Catalog, Dataset, EsciLabel, Judgment, JudgmentSet, LABEL_ORDER, QuerySet
from .seeding import rng_for

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PadConfig:
    """Target minimum example count per query, plus the sampling seed."""

    pad_size: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pad_size < 0:
            raise DataError(f"pad_size must be non-negative, got {self.pad_size}")


@dataclass(frozen=True)
class LabelStats:
    """Per-label counts/percentages plus the examples-per-query ratio."""

    counts: dict[str, int]
    percentages: dict[str, float]
    total_examples: int
    total_queries: int
    eq_ratio: float

    def as_record(self) -> dict:
        return {
            "counts": dict(self.counts),
            "percentages": {k: round(v, 4) for k, v in self.percentages.items()},
            "total_examples": self.total_examples,
            "total_queries": self.total_queries,
            "eq_ratio": round(self.eq_ratio, 4),
        }

    def as_table(self) -> str:
        lines = [f"{'label':<8}{'count':>10}{'share':>9}"]
        for label in LABEL_ORDER:
            key = label.value
            lines.append(f"{key:<8}{self.counts[key]:>10}{self.percentages[key]:>8.1f}%")
        lines.append(f"{'total':<8}{self.total_examples:>10}")
        lines.append(f"queries {self.total_queries:>10}")
        lines.append(f"E/Q     {self.eq_ratio:>10.1f}")
        return "\n".join(lines)


def filter_by_popularity(dataset: Dataset, min_occurrences: int) -> Dataset:
    """Keep products judged for at least ``min_occurrences`` distinct queries.

    Judgments of dropped products are removed first; queries left with no
    examples are then eliminated. Idempotent for a fixed threshold.
    """
    if min_occurrences < 1:
        raise DataError(f"min_occurrences must be >= 1, got {min_occurrences}")
    occurrences = Counter(j.product_id for j in dataset.judgments)
    kept_products = {pid for pid, n in occurrences.items() if n >= min_occurrences}
    if not kept_products:
        raise DataError(
            f"filtering at min_occurrences={min_occurrences} leaves no products to evaluate"
        )
    kept_judgments = [j for j in dataset.judgments if j.product_id in kept_products]
    kept_query_ids = {j.query_id for j in kept_judgments}
    catalog = Catalog(p for p in dataset.catalog if p.product_id in kept_products)
    queries = QuerySet(q for q in dataset.queries if q.query_id in kept_query_ids)
    dropped = len(dataset.queries) - len(queries)
    if dropped:
        logger.info("popularity filter dropped %d queries with no examples left", dropped)
    processed = {qid: pq for qid, pq in dataset.processed_queries.items() if qid in kept_query_ids}
    return Dataset(catalog, queries, JudgmentSet(kept_judgments), processed)


def pad_with_irrelevant(
    dataset: Dataset,
    config: PadConfig,
    source_catalog: Catalog | None = None,
) -> Dataset:
    """Fill every query up to ``config.pad_size`` examples with sampled items.

    Sampling is uniform without replacement over the source catalog (the
    dataset's own catalog by default) excluding the query's existing example
    products. Added judgments are labeled irrelevant, marked padded, and
    inherit the query's split. Sampling stops early, with a warning, when
    the catalog is exhausted.
    """
    source = source_catalog if source_catalog is not None else dataset.catalog
    source_ids = source.ids()
    new_judgments: list[Judgment] = list(dataset.judgments)
    sampled_outside: set[str] = set()
    for query_id in dataset.queries.ids():
        existing = dataset.judgments.for_query(query_id)
        need = config.pad_size - len(existing)
        if need <= 0:
            continue
        taken = {j.product_id for j in existing}
        eligible = [pid for pid in source_ids if pid not in taken]
        if len(eligible) < need:
            logger.warning(
                "query %s: catalog exhausted, padded %d of %d requested items",
                query_id,
                len(eligible),
                need,
            )
            need = len(eligible)
        if need == 0:
            continue
        rng = rng_for(config.seed, "pad", query_id)
        picks = rng.choice(len(eligible), size=need, replace=False)
        split = dataset.query_split(query_id)
        for index in sorted(int(i) for i in picks):
            pid = eligible[index]
            if pid not in dataset.catalog:
                sampled_outside.add(pid)
            new_judgments.append(
                Judgment(
                    query_id=query_id,
                    product_id=pid,
                    label=EsciLabel.IRRELEVANT,
                    split=split,
                    origin="padded",
                )
            )
    catalog = dataset.catalog
    if sampled_outside:
        catalog = Catalog(list(dataset.catalog) + [source[pid] for pid in sorted(sampled_outside)])
    return Dataset(catalog, dataset.queries, JudgmentSet(new_judgments), dataset.processed_queries)


def compute_label_stats(dataset: Dataset) -> LabelStats:
    """Label distribution over all judgments, and the examples/query ratio."""
    total = len(dataset.judgments)
    if total == 0 or len(dataset.queries) == 0:
        raise DataError("cannot compute label stats on an empty dataset")
    counts = Counter(j.label.value for j in dataset.judgments)
    full_counts = {label.value: counts.get(label.value, 0) for label in LABEL_ORDER}
    percentages = {k: 100.0 * v / total for k, v in full_counts.items()}
    return LabelStats(
        counts=full_counts,
        percentages=percentages,
        total_examples=total,
        total_queries=len(dataset.queries),
        eq_ratio=total / len(dataset.queries),
    )
