"""Document composition per modality regime, and provider-backed enrichment
of catalogs (captions, tags) and queries (keyword expansion) with caching.

Provider outputs are expensive and stable, so every call is keyed by
(provider id, model id, prompt hash, input hash) in a directory-backed
cache; a warm cache makes enrichment free and byte-identical.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError, ProviderError
from .models import Catalog, ProcessedQuery, Product, Provenance, Query

logger = logging.getLogger(__name__)

DEFAULT_DOC_CHAR_CAP = 2000

# Illustrative only; real deployments must supply a vocabulary matched to
# their catalog domain.
DEFAULT_TAG_VOCABULARY = (
    "apparel",
    "electronics",
    "home decor",
    "kitchen",
    "outdoor",
    "toy",
    "tool",
    "sports",
    "beauty",
    "pet supplies",
)

FEATURE_NAMES = ("color", "material", "usage", "intended_user")


class CompositionMode(enum.Enum):
    """Which item information feeds the searchable document."""

    TEXT = "TEXT"
    IMG_GEN = "IMG_GEN"
    TEXT_PLUS_IMG_GEN = "TEXT_PLUS_IMG_GEN"
    IMG_DIRECT = "IMG_DIRECT"


@dataclass(frozen=True)
class PromptSet:
    """Named, versioned prompts; the hash participates in cache keys."""

    caption: str = "Describe the product in this image in one sentence."
    features: Mapping[str, str] = field(
        default_factory=lambda: {
            "color": "What color is the product in this image?",
            "material": "What material is the product in this image made of?",
            "usage": "What is the product in this image used for?",
            "intended_user": "Who is the intended user of the product in this image?",
        }
    )
    preprocess: str = (
        "Extract at least 5 related tags or usage keywords from queries. "
        "Output in English as a comma separated list."
    )
    version: str = "v1"

    def hash(self) -> str:
        canonical = json.dumps(
            {
                "caption": self.caption,
                "features": dict(sorted(self.features.items())),
                "preprocess": self.preprocess,
                "version": self.version,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def load(cls, path: str | Path) -> "PromptSet":
        """Read a named-prompt record file (one {"name", "text"} object per line)."""
        named: dict[str, str] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                named[record["name"]] = record["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed prompt record: {exc}") from exc
        defaults = cls()
        features = {
            name: named.get(f"feature:{name}", defaults.features[name]) for name in FEATURE_NAMES
        }
        return cls(
            caption=named.get("caption", defaults.caption),
            features=features,
            preprocess=named.get("preprocess", defaults.preprocess),
            version=named.get("version", defaults.version),
        )

    def save(self, path: str | Path) -> None:
        records = [{"name": "caption", "text": self.caption}]
        records += [{"name": f"feature:{n}", "text": self.features[n]} for n in sorted(self.features)]
        records += [
            {"name": "preprocess", "text": self.preprocess},
            {"name": "version", "text": self.version},
        ]
        Path(path).write_text(
            "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8"
        )


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EnrichmentCache:
    """Append-only map from (provider, model, prompt hash, input hash) to output.

    Entries are single JSON files named by the key hash, written atomically
    and immutable once present: concurrent readers need no locks and a hit
    returns byte-identical prior output.
    """

    def __init__(self, cache_dir: str | Path):
        self.root = Path(cache_dir)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, provider_id: str, model_id: str, prompt_hash: str, input_hash: str) -> Path:
        key = "\x1f".join((provider_id, model_id, prompt_hash, input_hash))
        return self.root / (hashlib.sha256(key.encode("utf-8")).hexdigest() + ".json")

    def get(self, provider_id: str, model_id: str, prompt_hash: str, input_hash: str) -> object | None:
        path = self._path(provider_id, model_id, prompt_hash, input_hash)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["output"]

    def put(
        self, provider_id: str, model_id: str, prompt_hash: str, input_hash: str, output: object
    ) -> None:
        path = self._path(provider_id, model_id, prompt_hash, input_hash)
        if path.exists():
            return
        entry = {
            "provider_id": provider_id,
            "model_id": model_id,
            "prompt_hash": prompt_hash,
            "input_hash": input_hash,
            "output": output,
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                json.dump(entry, handle, ensure_ascii=False)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def __len__(self) -> int:
        return sum(1 for _ in self.root.glob("*.json"))


def _join_nonempty(parts: Iterable[str], separator: str = " ") -> str:
    return separator.join(p for p in parts if p)


def compose_document(
    product: Product, mode: CompositionMode, max_chars: int = DEFAULT_DOC_CHAR_CAP
) -> str | None:
    """Build the searchable text for a product under the given regime.

    Field order is title, description, bullet points, brand, color, then
    generated caption and comma-joined generated tags; non-empty fields are
    joined with single spaces and the result is capped at ``max_chars``.
    IMG_DIRECT has no textual document and returns None.
    """
    if mode is CompositionMode.IMG_DIRECT:
        return None
    human = _join_nonempty(
        (product.title, product.description, product.bullet_points, product.brand, product.color)
    )
    generated = ""
    if mode in (CompositionMode.IMG_GEN, CompositionMode.TEXT_PLUS_IMG_GEN):
        if product.generated_caption is None and product.generated_tags is None:
            raise DataError(
                f"product {product.product_id!r} has no generated caption or tags; run enrichment first"
            )
        generated = _join_nonempty(
            (product.generated_caption or "", ", ".join(product.generated_tags or ()))
        )
    if mode is CompositionMode.TEXT:
        document = human
    elif mode is CompositionMode.IMG_GEN:
        document = generated
    else:
        document = _join_nonempty((human, generated))
    return document[:max_chars]


@dataclass
class EnrichmentResult:
    """Enriched catalog plus per-product failure records and call accounting."""

    catalog: Catalog
    failures: dict[str, str]
    enriched: int
    skipped_no_image: int
    cache_hits: int


def _cached_call(cache, provider, capability: str, prompt_hash: str, input_text: str, call):
    """Look up the cache, falling back to the provider; returns (output, hit)."""
    model_id = provider.model_id(capability)
    input_hash = content_hash(input_text)
    cached = cache.get(provider.provider_id, model_id, prompt_hash, input_hash)
    if cached is not None:
        return cached, True
    output = call()
    cache.put(provider.provider_id, model_id, prompt_hash, input_hash, output)
    return output, False


def enrich_catalog(
    catalog: Catalog,
    caption_provider,
    tag_provider,
    prompts: PromptSet,
    cache: EnrichmentCache,
    tag_vocabulary: Sequence[str] = DEFAULT_TAG_VOCABULARY,
    tag_top_k: int = 5,
    captions: bool = True,
    tags: bool = True,
    failure_threshold: float = 0.05,
    max_in_flight: int = 4,
) -> EnrichmentResult:
    """Generate captions and/or tags for every product that has an image.

    The caption field is the caption answer followed by the per-feature
    answers; tags are the top-k vocabulary entries by provider score. Each
    provider output is cached before use, so re-running with a warm cache
    makes zero provider calls. Per-product failures are recorded and the
    run only fails when their share exceeds ``failure_threshold``.
    """
    targets = [p for p in catalog if p.image_ref]
    skipped = len(catalog) - len(targets)
    if skipped:
        logger.info("enrichment skipping %d products without image_ref", skipped)
    prompt_hash = prompts.hash()
    failures: dict[str, str] = {}
    hits = 0

    def enrich_one(product: Product) -> tuple[Product, int]:
        enriched = product
        ref = product.image_ref or ""
        product_hits = 0
        if captions:
            pieces = []
            for prompt in [prompts.caption] + [prompts.features[n] for n in FEATURE_NAMES if n in prompts.features]:
                text, hit = _cached_call(
                    cache,
                    caption_provider,
                    "caption",
                    content_hash(prompt),
                    ref,
                    lambda p=prompt: caption_provider.caption_image(ref, p),
                )
                product_hits += 1 if hit else 0
                pieces.append(str(text))
            enriched = enriched.with_caption(
                _join_nonempty(pieces),
                Provenance(caption_provider.provider_id, caption_provider.model_id("caption"), prompt_hash),
            )
        if tags:
            vocab_hash = content_hash("\x1f".join(tag_vocabulary))
            scored, hit = _cached_call(
                cache,
                tag_provider,
                "tag",
                vocab_hash,
                ref,
                lambda: tag_provider.tag_image(ref, list(tag_vocabulary)),
            )
            product_hits += 1 if hit else 0
            top = tuple(str(tag) for tag, _ in list(scored)[:tag_top_k])
            enriched = enriched.with_tags(
                top, Provenance(tag_provider.provider_id, tag_provider.model_id("tag"), prompt_hash)
            )
        return enriched, product_hits

    enriched_by_id: dict[str, Product] = {}
    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        futures = {pool.submit(enrich_one, product): product for product in targets}
        for future, product in futures.items():
            try:
                enriched, product_hits = future.result()
                enriched_by_id[product.product_id] = enriched
                hits += product_hits
            except ProviderError as exc:
                failures[product.product_id] = str(exc)
                logger.warning("enrichment failed for %s: %s", product.product_id, exc)

    if targets and len(failures) / len(targets) > failure_threshold:
        raise ProviderError(
            f"enrichment failed for {len(failures)}/{len(targets)} products, "
            f"above the {failure_threshold:.0%} threshold"
        )
    merged = Catalog(
        enriched_by_id.get(product.product_id, product) for product in catalog
    )
    return EnrichmentResult(
        catalog=merged,
        failures=failures,
        enriched=len(enriched_by_id),
        skipped_no_image=skipped,
        cache_hits=hits,
    )


def preprocess_queries(
    queries: Iterable[Query],
    preprocessor,
    cache: EnrichmentCache,
    prompts: PromptSet | None = None,
    failure_threshold: float = 0.05,
) -> dict[str, ProcessedQuery]:
    """Expand each query into keywords via the preprocessing provider.

    Failed or empty responses fall back to the original text as the single
    keyword, flagged; the run fails only past the failure threshold.
    """
    prompts = prompts or PromptSet()
    prompt = prompts.preprocess
    prompt_hash = content_hash(prompt)
    out: dict[str, ProcessedQuery] = {}
    failures = 0
    total = 0
    for query in queries:
        total += 1
        try:
            keywords, _ = _cached_call(
                cache,
                preprocessor,
                "preprocess",
                prompt_hash,
                query.text,
                lambda: preprocessor.preprocess_query(query.text, prompt),
            )
            keywords = tuple(str(k).strip() for k in keywords if str(k).strip())
            if not keywords:
                raise ProviderError("empty keyword list")
            out[query.query_id] = ProcessedQuery(
                query_id=query.query_id,
                original_text=query.text,
                keywords=keywords,
                provenance=Provenance(
                    preprocessor.provider_id, preprocessor.model_id("preprocess"), prompt_hash
                ),
            )
        except ProviderError as exc:
            failures += 1
            logger.warning("query preprocessing failed for %s: %s", query.query_id, exc)
            out[query.query_id] = ProcessedQuery(
                query_id=query.query_id,
                original_text=query.text,
                keywords=(query.text,),
                fallback=True,
            )
    if total and failures / total > failure_threshold:
        raise ProviderError(
            f"query preprocessing failed for {failures}/{total} queries, "
            f"above the {failure_threshold:.0%} threshold"
        )
    return out
