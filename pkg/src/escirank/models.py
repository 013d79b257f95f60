"""Domain types: products, queries, relevance judgments, and datasets.

Records are frozen dataclasses; the containers (:class:`Catalog`,
:class:`QuerySet`, :class:`JudgmentSet`, :class:`Dataset`) are built once
and treated as immutable afterwards, so they are safe to share across
threads. Dataset-producing operations always return new objects.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from .errors import DataError
from .seeding import stable_fraction

logger = logging.getLogger(__name__)

SPLITS = ("train", "test")


class EsciLabel(enum.Enum):
    """Four-way relevance grade for a (query, product) pair."""

    EXACT = "E"
    SUBSTITUTE = "S"
    COMPLEMENT = "C"
    IRRELEVANT = "I"

    @classmethod
    def parse(cls, token: str) -> "EsciLabel":
        """Parse a label token, case-insensitively. Rejects anything else."""
        try:
            return cls(token.strip().upper())
        except (ValueError, AttributeError):
            raise DataError(f"unknown relevance label {token!r}; expected one of E, S, C, I")

    def __str__(self) -> str:
        return self.value


LABEL_ORDER = (EsciLabel.EXACT, EsciLabel.SUBSTITUTE, EsciLabel.COMPLEMENT, EsciLabel.IRRELEVANT)


@dataclass(frozen=True)
class Provenance:
    """Where a generated field came from: enough to reproduce or invalidate it."""

    provider_id: str
    model_id: str
    prompt_hash: str


@dataclass(frozen=True)
class Product:
    """One catalog item. Optional text fields normalize to empty strings."""

    product_id: str
    title: str
    description: str = ""
    bullet_points: str = ""
    brand: str = ""
    color: str = ""
    image_ref: str | None = None
    generated_caption: str | None = None
    generated_tags: tuple[str, ...] | None = None
    caption_provenance: Provenance | None = None
    tags_provenance: Provenance | None = None

    def __post_init__(self) -> None:
        if not self.product_id:
            raise DataError("product_id must be non-empty")
        if self.generated_caption is not None and self.caption_provenance is None:
            raise DataError(f"product {self.product_id!r}: generated caption lacks provenance")
        if self.generated_tags is not None and self.tags_provenance is None:
            raise DataError(f"product {self.product_id!r}: generated tags lack provenance")

    def with_caption(self, caption: str, provenance: Provenance) -> "Product":
        return replace(self, generated_caption=caption, caption_provenance=provenance)

    def with_tags(self, tags: tuple[str, ...], provenance: Provenance) -> "Product":
        return replace(self, generated_tags=tags, tags_provenance=provenance)


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str

    def __post_init__(self) -> None:
        if not self.query_id:
            raise DataError("query_id must be non-empty")
        if not self.text:
            raise DataError(f"query {self.query_id!r} has empty text")


@dataclass(frozen=True)
class ProcessedQuery:
    """A query after provider-side keyword expansion.

    ``joined`` is what downstream rankers consume. ``fallback`` marks queries
    where the provider failed or returned nothing and the original text was
    kept as the single keyword.
    """

    query_id: str
    original_text: str
    keywords: tuple[str, ...]
    provenance: Provenance | None = None
    fallback: bool = False

    def __post_init__(self) -> None:
        if not self.keywords:
            raise DataError(f"processed query {self.query_id!r} has no keywords")

    @property
    def joined(self) -> str:
        return ", ".join(self.keywords)


@dataclass(frozen=True)
class Judgment:
    """Ground-truth relevance of one product for one query."""

    query_id: str
    product_id: str
    label: EsciLabel
    split: str = "train"
    origin: str = "original"

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise DataError(f"judgment split must be one of {SPLITS}, got {self.split!r}")
        if self.origin not in ("original", "padded"):
            raise DataError(f"judgment origin must be 'original' or 'padded', got {self.origin!r}")
        if self.origin == "padded" and self.label is not EsciLabel.IRRELEVANT:
            raise DataError("padded judgments must carry label I")


class Catalog:
    """Products keyed by product_id."""

    def __init__(self, products: Iterable[Product]):
        self._products: dict[str, Product] = {}
        for product in products:
            if product.product_id in self._products:
                raise DataError(f"duplicate product_id {product.product_id!r}")
            self._products[product.product_id] = product

    def __len__(self) -> int:
        return len(self._products)

    def __contains__(self, product_id: str) -> bool:
        return product_id in self._products

    def __getitem__(self, product_id: str) -> Product:
        return self._products[product_id]

    def __iter__(self) -> Iterator[Product]:
        return iter(self._products.values())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Catalog) and self._products == other._products

    def ids(self) -> list[str]:
        """Product ids in ascending order (the canonical iteration order)."""
        return sorted(self._products)


class QuerySet:
    """Queries keyed by query_id."""

    def __init__(self, queries: Iterable[Query]):
        self._queries: dict[str, Query] = {}
        for query in queries:
            if query.query_id in self._queries:
                raise DataError(f"duplicate query_id {query.query_id!r}")
            self._queries[query.query_id] = query

    def __len__(self) -> int:
        return len(self._queries)

    def __contains__(self, query_id: str) -> bool:
        return query_id in self._queries

    def __getitem__(self, query_id: str) -> Query:
        return self._queries[query_id]

    def __iter__(self) -> Iterator[Query]:
        return iter(self._queries.values())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, QuerySet) and self._queries == other._queries

    def ids(self) -> list[str]:
        return sorted(self._queries)


class JudgmentSet:
    """Judgments unique per (query_id, product_id), indexed by query."""

    def __init__(self, judgments: Iterable[Judgment]):
        self._by_pair: dict[tuple[str, str], Judgment] = {}
        self._by_query: dict[str, list[Judgment]] = {}
        for judgment in judgments:
            pair = (judgment.query_id, judgment.product_id)
            if pair in self._by_pair:
                raise DataError(f"duplicate judgment for query={pair[0]!r} product={pair[1]!r}")
            self._by_pair[pair] = judgment
            self._by_query.setdefault(judgment.query_id, []).append(judgment)

    def __len__(self) -> int:
        return len(self._by_pair)

    def __iter__(self) -> Iterator[Judgment]:
        return iter(self._by_pair.values())

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return pair in self._by_pair

    def __eq__(self, other: object) -> bool:
        return isinstance(other, JudgmentSet) and set(self._by_pair) == set(other._by_pair) and all(
            self._by_pair[k] == other._by_pair[k] for k in self._by_pair
        )

    def get(self, query_id: str, product_id: str) -> Judgment | None:
        return self._by_pair.get((query_id, product_id))

    def for_query(self, query_id: str) -> list[Judgment]:
        return list(self._by_query.get(query_id, ()))

    def query_ids(self) -> list[str]:
        return sorted(self._by_query)


@dataclass(frozen=True)
class ValidationReport:
    """Cross-reference findings between catalog, queries, and judgments."""

    dangling_query_ids: tuple[str, ...] = ()
    dangling_product_ids: tuple[str, ...] = ()
    dropped_empty_queries: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.dangling_query_ids and not self.dangling_product_ids

    def describe(self) -> str:
        if self.ok and not self.dropped_empty_queries:
            return "dataset consistent"
        parts = []
        if self.dangling_query_ids:
            parts.append(f"judgments reference unknown queries: {', '.join(self.dangling_query_ids)}")
        if self.dangling_product_ids:
            parts.append(f"judgments reference unknown products: {', '.join(self.dangling_product_ids)}")
        if self.dropped_empty_queries:
            parts.append(f"dropped {len(self.dropped_empty_queries)} queries with no judgments")
        return "; ".join(parts)


def validate_dataset(catalog: Catalog, queries: QuerySet, judgments: JudgmentSet) -> ValidationReport:
    """Report dangling references and zero-judgment queries without failing."""
    dangling_q = sorted({j.query_id for j in judgments if j.query_id not in queries})
    dangling_p = sorted({j.product_id for j in judgments if j.product_id not in catalog})
    judged = {j.query_id for j in judgments}
    empty = tuple(qid for qid in queries.ids() if qid not in judged)
    return ValidationReport(tuple(dangling_q), tuple(dangling_p), empty)


@dataclass(frozen=True)
class Dataset:
    """An evaluable bundle: catalog + queries + judgments, referentially intact."""

    catalog: Catalog
    queries: QuerySet
    judgments: JudgmentSet
    processed_queries: dict[str, ProcessedQuery] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        catalog: Catalog,
        queries: QuerySet,
        judgments: JudgmentSet,
        processed_queries: dict[str, ProcessedQuery] | None = None,
    ) -> "Dataset":
        """Validate and assemble: dangling references fail, empty queries drop."""
        report = validate_dataset(catalog, queries, judgments)
        if not report.ok:
            raise DataError(f"dataset construction failed: {report.describe()}")
        if report.dropped_empty_queries:
            logger.warning(
                "dropping %d queries with no judgments", len(report.dropped_empty_queries)
            )
            dropped = set(report.dropped_empty_queries)
            queries = QuerySet(q for q in queries if q.query_id not in dropped)
        return cls(catalog, queries, judgments, processed_queries or {})

    def query_judgments(self, query_id: str) -> list[Judgment]:
        return self.judgments.for_query(query_id)

    def test_query_ids(self, split: str = "test") -> list[str]:
        """Queries with at least one judgment in the given split, ascending."""
        ids = {j.query_id for j in self.judgments if j.split == split}
        return sorted(ids)

    def query_split(self, query_id: str) -> str:
        """'test' if the query has any test judgment, else 'train'."""
        for judgment in self.judgments.for_query(query_id):
            if judgment.split == "test":
                return "test"
        return "train"


def assign_hash_split(
    judgments: Iterable[Judgment], train_ratio: float = 0.8, salt: int = 0
) -> JudgmentSet:
    """Deterministic per-query split for judgment files without split tags.

    Every judgment of a query lands on the same side, decided by a stable
    hash of (salt, query_id) against the train ratio.
    """
    if not 0.0 < train_ratio < 1.0:
        raise DataError(f"train_ratio must be in (0, 1), got {train_ratio}")
    out = []
    for judgment in judgments:
        split = "train" if stable_fraction("split", salt, judgment.query_id) < train_ratio else "test"
        out.append(replace(judgment, split=split))
    return JudgmentSet(out)
