"""Experiment orchestration: drives ingest, dataset construction, ranking,
and scoring across the (approach x pad size x run) grid and assembles a
self-describing report.

Reproducibility contract: every stochastic step keys its PCG64 substream
off the base seed plus its grid coordinates, dataset construction seeds are
shared across approaches (comparisons see identical padded datasets), and
reports carry the exact config snapshot that regenerates them byte-for-byte
under stub providers.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from . import io
from .dataset_ops import (
    LabelStats,
    PadConfig,
    compute_label_stats,
    filter_by_popularity,
    pad_with_irrelevant,
)
from .enrichment import (
    DEFAULT_DOC_CHAR_CAP,
    DEFAULT_TAG_VOCABULARY,
    CompositionMode,
    EnrichmentCache,
    PromptSet,
    compose_document,
    content_hash,
    enrich_catalog,
    preprocess_queries,
)
from .errors import ConfigError, DataError
from .metrics import EvalSummary, GainScheme, Ranking, aggregate_runs, ndcg_many
from .models import Dataset
from .providers import HttpProvider, ProviderEndpoint, RetryPolicy, StubConfig, StubProvider
from .rankers import (
    EmbeddingVector,
    PopularityModel,
    fit_popularity,
    rank_by_cross_scores,
    rank_by_similarity,
    rank_most_popular,
    rank_random,
)
from .seeding import derive_seed

logger = logging.getLogger(__name__)

APPROACHES = (
    "random",
    "most_popular",
    "text",
    "img_gen",
    "text_plus_img_gen",
    "img_direct",
    "bi_encoder",
    "cross_encoder",
)

_APPROACH_COMPOSITION = {
    "text": CompositionMode.TEXT,
    "img_gen": CompositionMode.IMG_GEN,
    "text_plus_img_gen": CompositionMode.TEXT_PLUS_IMG_GEN,
}

# Published full-corpus reference results (padded ESCI evaluation); carried
# in comparison reports as annotations, never as fixture-scale targets.
SIMILARITY_BACKEND_REFERENCE = {
    0: {"bi_encoder": 0.782, "cross_encoder": 0.781},
    5: {"bi_encoder": 0.775, "cross_encoder": 0.773},
    10: {"bi_encoder": 0.759, "cross_encoder": 0.764},
    20: {"bi_encoder": 0.740, "cross_encoder": 0.750},
}
PREPROCESSING_REFERENCE = {
    0: {"raw": 0.780, "preprocessed": 0.782},
    5: {"raw": 0.767, "preprocessed": 0.774},
    10: {"raw": 0.756, "preprocessed": 0.762},
    20: {"raw": 0.734, "preprocessed": 0.745},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; every field except the dataset paths has a default."""

    products_path: str
    queries_path: str
    judgments_path: str
    file_format: str = "jsonl"
    out_dir: str = "out"
    cache_dir: str = "cache"
    approaches: tuple[str, ...] = ("random", "most_popular", "text")
    pad_sizes: tuple[int, ...] = (0, 5, 10, 20)
    runs: int = 4
    seed: int = 0
    random_orderings: int = 5
    min_occurrences: int = 1
    gains: tuple[float, float, float, float] = (1.0, 0.1, 0.01, 0.0)
    k: int = 0  # 0 = score the full ranking
    popularity_scoring: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    query_weighting: str = "uniform"  # or "examples": weight the mean by example count
    preprocessing: bool = False
    composition: str = "TEXT"  # document regime for bi_encoder / cross_encoder
    eval_split: str = "test"
    train_ratio: float = 0.8
    resample_padding: bool = True
    pad_catalog_path: str | None = None
    providers: Mapping[str, Mapping] = field(default_factory=dict)
    stub_dim: int = 64
    tag_vocabulary: tuple[str, ...] = DEFAULT_TAG_VOCABULARY
    tag_top_k: int = 5
    max_doc_chars: int = DEFAULT_DOC_CHAR_CAP
    failure_threshold: float = 0.05
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if len(set(self.pad_sizes)) != len(self.pad_sizes):
            raise ConfigError("pad_sizes must be distinct")
        if any(p < 0 for p in self.pad_sizes):
            raise ConfigError("pad_sizes must be non-negative")
        for approach in self.approaches:
            if approach not in APPROACHES:
                raise ConfigError(f"unknown approach {approach!r}; expected one of {APPROACHES}")
        if not self.approaches:
            raise ConfigError("at least one approach is required")
        if self.composition not in ("TEXT", "IMG_GEN", "TEXT_PLUS_IMG_GEN"):
            raise ConfigError(f"composition must be a textual regime, got {self.composition!r}")
        if self.eval_split not in ("train", "test"):
            raise ConfigError(f"eval_split must be train or test, got {self.eval_split!r}")
        if self.random_orderings < 1:
            raise ConfigError("random_orderings must be >= 1")
        if self.query_weighting not in ("uniform", "examples"):
            raise ConfigError(
                f"query_weighting must be uniform or examples, got {self.query_weighting!r}"
            )
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ExperimentConfig":
        known = {f: raw[f] for f in cls.__dataclass_fields__ if f in raw}
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for path_key in ("products_path", "queries_path", "judgments_path"):
            if path_key not in known:
                raise ConfigError(f"config is missing required key {path_key!r}")
        for tuple_key in ("approaches", "pad_sizes", "gains", "popularity_scoring", "tag_vocabulary"):
            if tuple_key in known:
                known[tuple_key] = tuple(known[tuple_key])
        if "providers" in known:
            known["providers"] = {k: dict(v) for k, v in known["providers"].items()}
        return cls(**known)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "products_path": self.products_path,
            "queries_path": self.queries_path,
            "judgments_path": self.judgments_path,
            "file_format": self.file_format,
            "out_dir": self.out_dir,
            "cache_dir": self.cache_dir,
            "approaches": list(self.approaches),
            "pad_sizes": list(self.pad_sizes),
            "runs": self.runs,
            "seed": self.seed,
            "random_orderings": self.random_orderings,
            "min_occurrences": self.min_occurrences,
            "gains": list(self.gains),
            "k": self.k,
            "popularity_scoring": list(self.popularity_scoring),
            "query_weighting": self.query_weighting,
            "preprocessing": self.preprocessing,
            "composition": self.composition,
            "eval_split": self.eval_split,
            "train_ratio": self.train_ratio,
            "resample_padding": self.resample_padding,
            "pad_catalog_path": self.pad_catalog_path,
            "providers": {k: dict(v) for k, v in sorted(self.providers.items())},
            "stub_dim": self.stub_dim,
            "tag_vocabulary": list(self.tag_vocabulary),
            "tag_top_k": self.tag_top_k,
            "max_doc_chars": self.max_doc_chars,
            "failure_threshold": self.failure_threshold,
            "jobs": self.jobs,
        }


def build_provider(spec: Mapping | None, stub_dim: int):
    """Instantiate a provider from its config record (default: stub)."""
    if not spec or spec.get("kind", "stub") == "stub":
        return StubProvider(StubConfig(dim=int(spec.get("dim", stub_dim)) if spec else stub_dim))
    if spec.get("kind") != "http":
        raise ConfigError(f"unknown provider kind {spec.get('kind')!r}")
    retry = spec.get("retry", {})
    endpoint = ProviderEndpoint(
        base_url=spec["base_url"],
        provider_id=spec.get("provider_id", "http"),
        model_id=spec.get("model_id", "default"),
        timeout=float(spec.get("timeout", 30.0)),
        retry=RetryPolicy(
            max_attempts=int(retry.get("max_attempts", 3)),
            backoff_initial=float(retry.get("backoff_initial", 0.5)),
            backoff_multiplier=float(retry.get("backoff_multiplier", 2.0)),
        ),
        auth_env=spec.get("auth_env"),
    )
    return HttpProvider(endpoint)


def build_providers(config: ExperimentConfig) -> dict[str, object]:
    """One provider per capability; a single stub instance serves stub slots."""
    shared_stub = StubProvider(StubConfig(dim=config.stub_dim))
    providers: dict[str, object] = {}
    for capability in ("embed_text", "embed_image", "caption", "tag", "cross_score", "preprocess"):
        spec = config.providers.get(capability)
        if not spec or spec.get("kind", "stub") == "stub":
            providers[capability] = shared_stub
        else:
            providers[capability] = build_provider(spec, config.stub_dim)
    return providers


def _embed_texts_cached(provider, cache: EnrichmentCache, texts: Sequence[str]) -> list[EmbeddingVector]:
    """Embed texts through the persistent cache; misses go out in batches."""
    model_id = provider.model_id("embed_text")
    vectors: dict[str, EmbeddingVector] = {}
    misses: list[str] = []
    for text in dict.fromkeys(texts):
        cached = cache.get(provider.provider_id, model_id, "embed_text", content_hash(text))
        if cached is not None:
            vectors[text] = EmbeddingVector.from_array(cached, model_id)
        else:
            misses.append(text)
    for start in range(0, len(misses), 64):
        batch = misses[start : start + 64]
        for text, vector in zip(batch, provider.embed_texts(batch)):
            cache.put(provider.provider_id, model_id, "embed_text", content_hash(text), list(vector.values))
            vectors[text] = vector
    return [vectors[text] for text in texts]


def _embed_image_cached(provider, cache: EnrichmentCache, image_ref: str) -> EmbeddingVector:
    model_id = provider.model_id("embed_image")
    cached = cache.get(provider.provider_id, model_id, "embed_image", content_hash(image_ref))
    if cached is not None:
        return EmbeddingVector.from_array(cached, model_id)
    vector = provider.embed_image(image_ref)
    cache.put(provider.provider_id, model_id, "embed_image", content_hash(image_ref), list(vector.values))
    return vector


class ApproachContext:
    """Precomputed per-run-invariant state: models, documents, vectors."""

    def __init__(
        self,
        config: ExperimentConfig,
        dataset: Dataset,
        providers: Mapping[str, object],
        cache: EnrichmentCache,
    ):
        self.config = config
        self.dataset = dataset
        self.providers = providers
        self.cache = cache
        self.documents: dict[CompositionMode, dict[str, str]] = {}
        self.doc_vectors: dict[CompositionMode, dict[str, EmbeddingVector]] = {}
        self.image_vectors: dict[str, EmbeddingVector] = {}
        self.query_vectors: dict[str, EmbeddingVector] = {}
        self.popularity: PopularityModel | None = None

    def query_text(self, query_id: str) -> str:
        if self.config.preprocessing:
            processed = self.dataset.processed_queries.get(query_id)
            if processed is None:
                raise DataError(f"query {query_id!r} was not preprocessed but preprocessing is on")
            return processed.joined
        return self.dataset.queries[query_id].text

    def _composition_for(self, approach: str) -> CompositionMode:
        if approach in _APPROACH_COMPOSITION:
            return _APPROACH_COMPOSITION[approach]
        return CompositionMode[self.config.composition]

    def documents_for(self, mode: CompositionMode) -> dict[str, str]:
        if mode not in self.documents:
            docs = {}
            for product in self.dataset.catalog:
                text = compose_document(product, mode, self.config.max_doc_chars)
                if not text:
                    raise DataError(
                        f"product {product.product_id!r} composes to an empty {mode.value} document"
                    )
                docs[product.product_id] = text
            self.documents[mode] = docs
        return self.documents[mode]

    def prepare(self, approaches: Sequence[str]) -> None:
        """Resolve every input the requested approaches need, before any ranking."""
        needed_modes = set()
        need_query_vectors = False
        for approach in approaches:
            if approach in ("text", "img_gen", "text_plus_img_gen", "bi_encoder"):
                needed_modes.add(self._composition_for(approach))
                need_query_vectors = True
            elif approach == "cross_encoder":
                self.documents_for(self._composition_for(approach))
            elif approach == "img_direct":
                need_query_vectors = True
                missing = [p.product_id for p in self.dataset.catalog if not p.image_ref]
                if missing:
                    raise DataError(
                        f"img_direct requires an image_ref on every product; missing for "
                        f"{len(missing)} products (e.g. {missing[:3]})"
                    )
                provider = self.providers["embed_image"]
                for pid in self.dataset.catalog.ids():
                    self.image_vectors[pid] = _embed_image_cached(
                        provider, self.cache, self.dataset.catalog[pid].image_ref or ""
                    )
            elif approach == "most_popular":
                train = [
                    j for j in self.dataset.judgments if j.split == "train" and j.origin == "original"
                ]
                if not train:
                    raise DataError("most_popular requires a non-empty training split")
                self.popularity = fit_popularity(train, self.config.popularity_scoring)
        provider = self.providers["embed_text"]
        for mode in needed_modes:
            docs = self.documents_for(mode)
            ids = sorted(docs)
            embedded = _embed_texts_cached(provider, self.cache, [docs[pid] for pid in ids])
            self.doc_vectors[mode] = dict(zip(ids, embedded))
        if need_query_vectors:
            query_ids = self.dataset.test_query_ids(self.config.eval_split)
            texts = [self.query_text(qid) for qid in query_ids]
            embedded = _embed_texts_cached(provider, self.cache, texts)
            self.query_vectors = dict(zip(query_ids, embedded))

    def rank(self, approach: str, query_id: str, example_ids: Sequence[str], seed: int) -> Ranking:
        if approach == "random":
            return rank_random(query_id, example_ids, seed)
        if approach == "most_popular":
            assert self.popularity is not None
            return rank_most_popular(self.popularity, query_id, example_ids)
        if approach == "img_direct":
            vectors = {pid: self.image_vectors[pid] for pid in example_ids}
            return rank_by_similarity(self.query_vectors[query_id], vectors, query_id)
        if approach == "cross_encoder":
            docs = self.documents_for(self._composition_for(approach))
            example_docs = {pid: docs[pid] for pid in example_ids}
            scorer = self.providers["cross_score"].cross_score  # type: ignore[union-attr]
            return rank_by_cross_scores(self.query_text(query_id), example_docs, scorer, query_id)
        mode = self._composition_for(approach)
        vectors = {pid: self.doc_vectors[mode][pid] for pid in example_ids}
        return rank_by_similarity(self.query_vectors[query_id], vectors, query_id)


@dataclass
class ExperimentReport:
    """Evaluation grid plus everything needed to interpret and reproduce it."""

    grid: dict[tuple[str, int, bool], EvalSummary]
    label_stats: dict[int, LabelStats]
    config: dict
    provenance: dict
    reference: dict | None = None

    def as_record(self) -> dict:
        cells = [
            {
                "approach": approach,
                "pad_size": pad_size,
                "preprocessed": preprocessed,
                **summary.as_record(),
            }
            for (approach, pad_size, preprocessed), summary in sorted(self.grid.items())
        ]
        record = {
            "cells": cells,
            "label_stats": {str(ps): stats.as_record() for ps, stats in sorted(self.label_stats.items())},
            "config": self.config,
            "provenance": self.provenance,
        }
        if self.reference is not None:
            record["reference"] = self.reference
        return record

    def summary(self, approach: str, pad_size: int, preprocessed: bool | None = None) -> EvalSummary:
        if preprocessed is None:
            preprocessed = bool(self.config.get("preprocessing", False))
        return self.grid[(approach, pad_size, preprocessed)]

    def to_json(self) -> str:
        return json.dumps(self.as_record(), ensure_ascii=False, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        raw = json.loads(text)
        grid = {}
        for cell in raw["cells"]:
            key = (cell["approach"], int(cell["pad_size"]), bool(cell["preprocessed"]))
            grid[key] = EvalSummary(
                mean=cell["mean"],
                min=cell["min"],
                max=cell["max"],
                runs=cell["runs"],
                skipped=cell["skipped"],
                central=cell["central"],
            )
        label_stats = {
            int(ps): LabelStats(
                counts=dict(stats["counts"]),
                percentages=dict(stats["percentages"]),
                total_examples=stats["total_examples"],
                total_queries=stats["total_queries"],
                eq_ratio=stats["eq_ratio"],
            )
            for ps, stats in raw["label_stats"].items()
        }
        return cls(
            grid=grid,
            label_stats=label_stats,
            config=raw["config"],
            provenance=raw["provenance"],
            reference=raw.get("reference"),
        )


def load_input_dataset(config: ExperimentConfig) -> Dataset:
    """Ingest the three input files and apply the popularity filter."""
    catalog = io.load_products(config.products_path, config.file_format)
    queries = io.load_queries(config.queries_path, config.file_format)
    judgments = io.load_judgments(
        config.judgments_path,
        config.file_format,
        train_ratio=config.train_ratio,
        split_salt=config.seed,
    )
    dataset = Dataset.build(catalog, queries, judgments)
    if config.min_occurrences > 1:
        dataset = filter_by_popularity(dataset, config.min_occurrences)
    return dataset


def _needs_generated_text(config: ExperimentConfig) -> bool:
    return any(a in ("img_gen", "text_plus_img_gen") for a in config.approaches) or (
        any(a in ("bi_encoder", "cross_encoder") for a in config.approaches)
        and config.composition in ("IMG_GEN", "TEXT_PLUS_IMG_GEN")
    )


def preflight(config: ExperimentConfig, dataset: Dataset, pad_source=None) -> None:
    """Fail before any ranking if an approach's required inputs cannot resolve.

    Padding can pull in any catalog product, so image-dependent approaches
    need every product (dataset and pad source alike) resolvable.
    """
    products = list(dataset.catalog) + (list(pad_source) if pad_source is not None else [])
    if "img_direct" in config.approaches:
        missing = [p.product_id for p in products if not p.image_ref]
        if missing:
            raise DataError(
                f"img_direct requires an image_ref on every product; missing for "
                f"{len(missing)} products (e.g. {missing[:3]})"
            )
    if _needs_generated_text(config):
        missing = [
            p.product_id
            for p in products
            if (p.generated_caption is None or p.generated_tags is None) and not p.image_ref
        ]
        if missing:
            raise DataError(
                f"generated-text approaches need enrichment, but {len(missing)} products "
                f"have no image_ref (e.g. {missing[:3]})"
            )
    if "most_popular" in config.approaches:
        if not any(j.split == "train" and j.origin == "original" for j in dataset.judgments):
            raise DataError("most_popular requires a non-empty training split")


def _ensure_enriched(
    config: ExperimentConfig, catalog, providers: Mapping[str, object], cache: EnrichmentCache
):
    """Enrich whatever products still lack generated text; all-or-nothing."""
    pending = [p for p in catalog if p.generated_caption is None or p.generated_tags is None]
    if not pending:
        return catalog
    result = enrich_catalog(
        catalog,
        providers["caption"],
        providers["tag"],
        PromptSet(),
        cache,
        tag_vocabulary=config.tag_vocabulary,
        tag_top_k=config.tag_top_k,
        failure_threshold=config.failure_threshold,
    )
    if result.failures:
        raise DataError(f"enrichment left {len(result.failures)} products without generated text")
    return result.catalog


def prepare_dataset(
    config: ExperimentConfig, dataset: Dataset, providers: Mapping[str, object], cache: EnrichmentCache
) -> Dataset:
    """Run catalog enrichment and query preprocessing where approaches need them."""
    if _needs_generated_text(config):
        dataset = replace(dataset, catalog=_ensure_enriched(config, dataset.catalog, providers, cache))
    if config.preprocessing:
        pending_queries = [q for q in dataset.queries if q.query_id not in dataset.processed_queries]
        if pending_queries:
            processed = dict(dataset.processed_queries)
            processed.update(
                preprocess_queries(
                    pending_queries,
                    providers["preprocess"],
                    cache,
                    PromptSet(),
                    failure_threshold=config.failure_threshold,
                )
            )
            dataset = replace(dataset, processed_queries=processed)
    return dataset


def _pad_seed(config: ExperimentConfig, pad_size: int, run: int) -> int:
    if config.resample_padding:
        return derive_seed(config.seed, "pad", pad_size, run)
    return derive_seed(config.seed, "pad", pad_size)


def _padded(config: ExperimentConfig, dataset: Dataset, pad_size: int, run: int, source) -> Dataset:
    if pad_size == 0:
        return dataset
    return pad_with_irrelevant(dataset, PadConfig(pad_size, _pad_seed(config, pad_size, run)), source)


def _eval_queries(dataset: Dataset, eval_split: str) -> dict[str, list]:
    """Eval-split judgments per query, for queries that have any."""
    out: dict[str, list] = {}
    for query_id in dataset.test_query_ids(eval_split):
        judgments = [j for j in dataset.query_judgments(query_id) if j.split == eval_split]
        if judgments:
            out[query_id] = judgments
    if not out:
        raise DataError(f"no queries with judgments in the {eval_split!r} split")
    return out


def _score_rankings(
    rankings: Mapping[str, Ranking],
    judgments_by_query: Mapping[str, list],
    scheme: GainScheme,
    k: int,
) -> dict[str, float | None]:
    """Batched nDCG keyed by query, skipped queries as None."""
    query_ids = sorted(rankings)
    gain_lists = []
    for query_id in query_ids:
        labels = {j.product_id: j.label for j in judgments_by_query[query_id]}
        ordered = []
        for product_id in rankings[query_id].product_ids:
            if product_id not in labels:
                raise DataError(
                    f"ranked product {product_id!r} has no judgment for query {query_id!r}"
                )
            ordered.append(scheme.gain(labels[product_id]))
        gain_lists.append(ordered)
    scores = ndcg_many(gain_lists, k if k > 0 else None)
    return dict(zip(query_ids, scores))


def _rank_all(
    context: ApproachContext,
    approach: str,
    judgments_by_query: Mapping[str, list],
    seed: int,
    jobs: int,
) -> dict[str, Ranking]:
    query_ids = sorted(judgments_by_query)

    def one(query_id: str) -> Ranking:
        example_ids = sorted(j.product_id for j in judgments_by_query[query_id])
        return context.rank(approach, query_id, example_ids, seed)

    if jobs <= 1:
        return {qid: one(qid) for qid in query_ids}
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        rankings = list(pool.map(one, query_ids))
    return dict(zip(query_ids, rankings))


def rank_dataset(
    config: ExperimentConfig,
    dataset: Dataset,
    approach: str,
    seed: int,
    providers: Mapping[str, object] | None = None,
    cache: EnrichmentCache | None = None,
) -> dict[str, Ranking]:
    """Rank every eval query of an already-constructed dataset (CLI building block)."""
    providers = providers or build_providers(config)
    cache = cache or EnrichmentCache(config.cache_dir)
    context = ApproachContext(config, dataset, providers, cache)
    context.prepare([approach])
    judgments_by_query = _eval_queries(dataset, config.eval_split)
    return _rank_all(context, approach, judgments_by_query, seed, config.jobs)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Execute the full grid and assemble the report.

    Per pad size and run, the padded dataset is constructed from a shared
    seed so every approach ranks identical data; the random baseline reduces
    its orderings to a median before runs aggregate into mean/min/max.
    """
    providers = build_providers(config)
    cache = EnrichmentCache(config.cache_dir)
    base = load_input_dataset(config)
    pad_source = (
        io.load_products(config.pad_catalog_path, config.file_format)
        if config.pad_catalog_path
        else None
    )
    preflight(config, base, pad_source)
    base = prepare_dataset(config, base, providers, cache)
    if pad_source is not None and _needs_generated_text(config):
        pad_source = _ensure_enriched(config, pad_source, providers, cache)

    grid: dict[tuple[str, int, bool], EvalSummary] = {}
    label_stats: dict[int, LabelStats] = {}
    scheme = GainScheme.from_values(config.gains)

    for pad_size in config.pad_sizes:
        padded_per_run = [
            _padded(config, base, pad_size, run, pad_source) for run in range(config.runs)
        ]
        label_stats[pad_size] = compute_label_stats(padded_per_run[0])
        contexts = []
        for padded in padded_per_run:
            context = ApproachContext(config, padded, providers, cache)
            context.prepare(config.approaches)
            contexts.append(context)
        for approach in config.approaches:
            per_run_queries: list[dict[str, float | None]] = []
            run_scores: list[float] = []
            skipped = 0
            weights: dict[str, float] | None = None
            for run in range(config.runs):
                context = contexts[run]
                judgments_by_query = _eval_queries(context.dataset, config.eval_split)
                if config.query_weighting == "examples" and weights is None:
                    # example counts per query are pad-target-determined, so
                    # any run's counts serve for every run of this pad size
                    weights = {qid: float(len(js)) for qid, js in judgments_by_query.items()}
                if approach == "random":
                    ordering_scores: list[dict[str, float | None]] = []
                    for ordering in range(config.random_orderings):
                        seed = derive_seed(config.seed, approach, pad_size, run, ordering)
                        rankings = _rank_all(context, approach, judgments_by_query, seed, config.jobs)
                        ordering_scores.append(
                            _score_rankings(rankings, judgments_by_query, scheme, config.k)
                        )
                    ordering_summary = aggregate_runs(ordering_scores, central="median", weights=weights)
                    run_scores.append(ordering_summary.mean)
                    skipped = max(skipped, ordering_summary.skipped)
                else:
                    seed = derive_seed(config.seed, approach, pad_size, run)
                    rankings = _rank_all(context, approach, judgments_by_query, seed, config.jobs)
                    per_query = _score_rankings(rankings, judgments_by_query, scheme, config.k)
                    per_run_queries.append(per_query)
            if approach == "random":
                summary = EvalSummary(
                    mean=sum(run_scores) / len(run_scores),
                    min=min(run_scores),
                    max=max(run_scores),
                    runs=len(run_scores),
                    skipped=skipped,
                    central="mean",
                )
            else:
                summary = aggregate_runs(per_run_queries, central="mean", weights=weights)
            grid[(approach, pad_size, config.preprocessing)] = summary
            logger.info(
                "cell approach=%s pad=%d: mean=%.4f min=%.4f max=%.4f skipped=%d",
                approach,
                pad_size,
                summary.mean,
                summary.min,
                summary.max,
                summary.skipped,
            )

    provenance = {
        "seed": config.seed,
        "gain_scheme": list(config.gains),
        "k_policy": "full ranking length" if config.k <= 0 else f"top-{config.k}",
        "providers": {
            capability: {
                "provider_id": provider.provider_id,  # type: ignore[union-attr]
                "model_id": provider.model_id(capability),  # type: ignore[union-attr]
            }
            for capability, provider in sorted(providers.items())
        },
        "prompt_set_hash": PromptSet().hash(),
    }
    return ExperimentReport(
        grid=grid,
        label_stats=label_stats,
        config=config.to_dict(),
        provenance=provenance,
    )


def compare_similarity_backends(config: ExperimentConfig) -> ExperimentReport:
    """Bi-encoder vs cross-encoder over the same grid, composition held fixed."""
    comparison = replace(config, approaches=("bi_encoder", "cross_encoder"))
    report = run_experiment(comparison)
    report.reference = {
        "full_corpus_similarity_backends": {
            str(ps): dict(values) for ps, values in SIMILARITY_BACKEND_REFERENCE.items()
        }
    }
    return report


def compare_preprocessing(config: ExperimentConfig, approach: str | None = None) -> ExperimentReport:
    """The same approach with raw vs provider-expanded queries, side by side."""
    target = approach or ("text" if "text" in config.approaches else config.approaches[0])
    raw_report = run_experiment(replace(config, approaches=(target,), preprocessing=False))
    processed_report = run_experiment(replace(config, approaches=(target,), preprocessing=True))
    grid = dict(raw_report.grid)
    grid.update(processed_report.grid)
    return ExperimentReport(
        grid=grid,
        label_stats=raw_report.label_stats,
        config=config.to_dict(),
        provenance=raw_report.provenance,
        reference={
            "full_corpus_preprocessing": {
                str(ps): dict(values) for ps, values in PREPROCESSING_REFERENCE.items()
            }
        },
    )


def render_table(report: ExperimentReport) -> str:
    """Aligned text table: one row per (approach, preprocessing), one column per pad size."""
    pad_sizes = sorted({key[1] for key in report.grid})
    rows = sorted({(key[0], key[2]) for key in report.grid})
    label_width = max(len(_row_label(a, p)) for a, p in rows) + 2
    header = "".join(f"pad={ps:<21}" for ps in pad_sizes)
    lines = [f"{'approach':<{label_width}}{header}".rstrip()]
    for approach, preprocessed in rows:
        cells = []
        for pad_size in pad_sizes:
            summary = report.grid.get((approach, pad_size, preprocessed))
            if summary is None:
                cells.append(f"{'-':<25}")
            else:
                cells.append(f"{summary.mean:.4f} [{summary.min:.4f},{summary.max:.4f}]  ")
        lines.append(f"{_row_label(approach, preprocessed):<{label_width}}{''.join(cells)}".rstrip())
    return "\n".join(lines) + "\n"


def _row_label(approach: str, preprocessed: bool) -> str:
    return f"{approach}+pp" if preprocessed else approach


def emit_report(report: ExperimentReport, out_dir: str | Path) -> list[Path]:
    """Write the human table, the record stream, plot data, and the config snapshot."""
    if not report.grid:
        raise DataError("cannot emit an empty report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc
    written = []

    report_json = out / "report.json"
    report_json.write_text(report.to_json(), encoding="utf-8")
    written.append(report_json)

    stream = out / "report.jsonl"
    record = report.as_record()
    with stream.open("w", encoding="utf-8") as handle:
        for cell in record["cells"]:
            handle.write(json.dumps(cell, ensure_ascii=False, sort_keys=True) + "\n")
    written.append(stream)

    table = out / "report.txt"
    sections = [render_table(report)]
    for pad_size, stats in sorted(report.label_stats.items()):
        sections.append(f"\nlabel distribution, pad={pad_size}\n{stats.as_table()}\n")
    table.write_text("".join(sections), encoding="utf-8")
    written.append(table)

    snapshot = out / "config_snapshot.json"
    snapshot.write_text(
        json.dumps(report.config, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    written.append(snapshot)

    plots = out / "plots"
    plots.mkdir(exist_ok=True)
    for approach, preprocessed in sorted({(k[0], k[2]) for k in report.grid}):
        series = plots / f"{_row_label(approach, preprocessed).replace('+', '_')}.csv"
        with series.open("w", encoding="utf-8") as handle:
            handle.write("pad_size,mean,min,max\n")
            for pad_size in sorted({k[1] for k in report.grid}):
                summary = report.grid.get((approach, pad_size, preprocessed))
                if summary is not None:
                    handle.write(f"{pad_size},{summary.mean!r},{summary.min!r},{summary.max!r}\n")
        written.append(series)
    return written
