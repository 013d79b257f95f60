"""Loading and saving of product, query, and judgment files.

Canonical interchange is line-delimited JSON (one object per line, UTF-8);
CSV with a header row is accepted as well. Serialization is canonical:
rows sorted by id with a fixed key order, so equal datasets produce equal
bytes and byte equality certifies dataset equality.
"""

from __future__ import annotations

import csv
import io as _io
import json
import logging
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError
from .models import (
    Catalog,
    Dataset,
    EsciLabel,
    Judgment,
    JudgmentSet,
    ProcessedQuery,
    Product,
    Provenance,
    Query,
    QuerySet,
    validate_dataset,
)
from .seeding import stable_fraction

logger = logging.getLogger(__name__)

FORMATS = ("jsonl", "csv")


def _iter_records(path: str | Path, fmt: str) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) pairs; line numbers are 1-based."""
    if fmt not in FORMATS:
        raise DataError(f"unsupported format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if fmt == "jsonl":
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: expected an object, got {type(record).__name__}")
            yield lineno, record
    else:
        reader = csv.DictReader(_io.StringIO(text))
        for lineno, row in enumerate(reader, start=2):  # line 1 is the header
            yield lineno, {k: v for k, v in row.items() if k is not None}


def _require(record: dict, key: str, path: str | Path, lineno: int) -> str:
    value = record.get(key)
    if value is None or value == "":
        raise DataError(f"{path}:{lineno}: missing required field {key!r}")
    return str(value)


def _opt(record: dict, key: str) -> str:
    value = record.get(key)
    return "" if value is None else str(value)


def load_products(path: str | Path, fmt: str = "jsonl") -> Catalog:
    """Load a product catalog; duplicate product_id is an error citing both lines."""
    products: list[Product] = []
    seen: dict[str, int] = {}
    for lineno, record in _iter_records(path, fmt):
        product_id = _require(record, "product_id", path, lineno)
        if product_id in seen:
            raise DataError(
                f"{path}: duplicate product_id {product_id!r} on lines {seen[product_id]} and {lineno}"
            )
        seen[product_id] = lineno
        tags = record.get("generated_tags")
        caption_prov = record.get("caption_provenance")
        tags_prov = record.get("tags_provenance")
        try:
            products.append(
                Product(
                    product_id=product_id,
                    title=_require(record, "title", path, lineno),
                    description=_opt(record, "description"),
                    bullet_points=_opt(record, "bullet_points"),
                    brand=_opt(record, "brand"),
                    color=_opt(record, "color"),
                    image_ref=record.get("image_ref") or None,
                    generated_caption=record.get("generated_caption"),
                    generated_tags=tuple(tags) if tags is not None else None,
                    caption_provenance=Provenance(**caption_prov) if caption_prov else None,
                    tags_provenance=Provenance(**tags_prov) if tags_prov else None,
                )
            )
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not products:
        logger.warning("%s: no product records found", path)
    return Catalog(products)


def load_queries(path: str | Path, fmt: str = "jsonl") -> QuerySet:
    queries: list[Query] = []
    seen: dict[str, int] = {}
    for lineno, record in _iter_records(path, fmt):
        query_id = _require(record, "query_id", path, lineno)
        if query_id in seen:
            raise DataError(
                f"{path}: duplicate query_id {query_id!r} on lines {seen[query_id]} and {lineno}"
            )
        seen[query_id] = lineno
        queries.append(Query(query_id=query_id, text=_require(record, "text", path, lineno)))
    if not queries:
        logger.warning("%s: no query records found", path)
    return QuerySet(queries)


def load_judgments(
    path: str | Path,
    fmt: str = "jsonl",
    train_ratio: float = 0.8,
    split_salt: int = 0,
) -> JudgmentSet:
    """Load relevance judgments.

    Records without a split tag get a deterministic per-query hash split
    (train with probability ``train_ratio``). An explicit origin field is
    honored so padded datasets survive a save/load round trip; plain
    exports default to origin=original.
    """
    judgments: list[Judgment] = []
    for lineno, record in _iter_records(path, fmt):
        query_id = _require(record, "query_id", path, lineno)
        product_id = _require(record, "product_id", path, lineno)
        token = _require(record, "label", path, lineno)
        try:
            label = EsciLabel.parse(token)
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        split = record.get("split") or None
        if split is None:
            split = "train" if stable_fraction("split", split_salt, query_id) < train_ratio else "test"
        elif split not in ("train", "test"):
            raise DataError(f"{path}:{lineno}: unknown split tag {split!r}")
        origin = record.get("origin") or "original"
        try:
            judgments.append(
                Judgment(query_id=query_id, product_id=product_id, label=label, split=split, origin=origin)
            )
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not judgments:
        logger.warning("%s: no judgment records found", path)
    try:
        return JudgmentSet(judgments)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _product_record(product: Product) -> dict:
    record: dict = {
        "product_id": product.product_id,
        "title": product.title,
        "description": product.description,
        "bullet_points": product.bullet_points,
        "brand": product.brand,
        "color": product.color,
        "image_ref": product.image_ref,
    }
    if product.generated_caption is not None:
        record["generated_caption"] = product.generated_caption
    if product.generated_tags is not None:
        record["generated_tags"] = list(product.generated_tags)
    for key, provenance in (
        ("caption_provenance", product.caption_provenance),
        ("tags_provenance", product.tags_provenance),
    ):
        if provenance is not None:
            record[key] = {
                "provider_id": provenance.provider_id,
                "model_id": provenance.model_id,
                "prompt_hash": provenance.prompt_hash,
            }
    return record


def _query_record(query: Query) -> dict:
    return {"query_id": query.query_id, "text": query.text}


def _judgment_record(judgment: Judgment) -> dict:
    return {
        "query_id": judgment.query_id,
        "product_id": judgment.product_id,
        "label": judgment.label.value,
        "split": judgment.split,
        "origin": judgment.origin,
    }


def _processed_record(pq: ProcessedQuery) -> dict:
    record: dict = {
        "query_id": pq.query_id,
        "original_text": pq.original_text,
        "keywords": list(pq.keywords),
        "fallback": pq.fallback,
    }
    if pq.provenance is not None:
        record["provenance"] = {
            "provider_id": pq.provenance.provider_id,
            "model_id": pq.provenance.model_id,
            "prompt_hash": pq.provenance.prompt_hash,
        }
    return record


def _dump_lines(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


def dataset_bytes(dataset: Dataset) -> bytes:
    """Canonical byte serialization; equal datasets yield equal bytes."""
    parts = [
        _dump_lines(_product_record(dataset.catalog[pid]) for pid in dataset.catalog.ids()),
        _dump_lines(_query_record(dataset.queries[qid]) for qid in dataset.queries.ids()),
        _dump_lines(
            _judgment_record(j)
            for j in sorted(dataset.judgments, key=lambda j: (j.query_id, j.product_id))
        ),
        _dump_lines(_processed_record(dataset.processed_queries[qid]) for qid in sorted(dataset.processed_queries)),
    ]
    return "".join(parts).encode("utf-8")


def save_dataset(dataset: Dataset, out_dir: str | Path) -> None:
    """Write the dataset directory: products/queries/judgments (+ processed queries)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "products.jsonl").write_text(
        _dump_lines(_product_record(dataset.catalog[pid]) for pid in dataset.catalog.ids()),
        encoding="utf-8",
    )
    (out / "queries.jsonl").write_text(
        _dump_lines(_query_record(dataset.queries[qid]) for qid in dataset.queries.ids()),
        encoding="utf-8",
    )
    (out / "judgments.jsonl").write_text(
        _dump_lines(
            _judgment_record(j)
            for j in sorted(dataset.judgments, key=lambda j: (j.query_id, j.product_id))
        ),
        encoding="utf-8",
    )
    if dataset.processed_queries:
        (out / "processed_queries.jsonl").write_text(
            _dump_lines(
                _processed_record(dataset.processed_queries[qid])
                for qid in sorted(dataset.processed_queries)
            ),
            encoding="utf-8",
        )


def load_processed_queries(path: str | Path) -> dict[str, ProcessedQuery]:
    processed: dict[str, ProcessedQuery] = {}
    for lineno, record in _iter_records(path, "jsonl"):
        query_id = _require(record, "query_id", path, lineno)
        provenance = record.get("provenance")
        processed[query_id] = ProcessedQuery(
            query_id=query_id,
            original_text=_opt(record, "original_text"),
            keywords=tuple(record.get("keywords") or ()),
            provenance=Provenance(**provenance) if provenance else None,
            fallback=bool(record.get("fallback", False)),
        )
    return processed


def load_dataset(
    dataset_dir: str | Path,
    train_ratio: float = 0.8,
    split_salt: int = 0,
    strict: bool = True,
) -> Dataset:
    """Load a dataset directory written by :func:`save_dataset` (or hand-built)."""
    d = Path(dataset_dir)
    catalog = load_products(d / "products.jsonl")
    queries = load_queries(d / "queries.jsonl")
    judgments = load_judgments(d / "judgments.jsonl", train_ratio=train_ratio, split_salt=split_salt)
    processed = {}
    if (d / "processed_queries.jsonl").exists():
        processed = load_processed_queries(d / "processed_queries.jsonl")
    if strict:
        return Dataset.build(catalog, queries, judgments, processed)
    report = validate_dataset(catalog, queries, judgments)
    if not report.ok:
        logger.warning("%s: %s", dataset_dir, report.describe())
    return Dataset(catalog, queries, judgments, processed)
