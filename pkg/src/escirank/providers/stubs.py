"""Deterministic in-process provider stubs.

Every capability is a pure function of its inputs: no clock, no global
randomness, only input-derived hashing. The text embedding is L2-normalized
character-trigram hashing, which makes lexical overlap rank sensibly in
fixtures; images are embedded through their locator string so descriptive
file names behave like short captions.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass, field

import numpy as np

from ..errors import ProviderError
from ..rankers import EmbeddingVector, cosine_similarity
from .base import StubConfig

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens with punctuation stripped."""
    return _TOKEN_RE.findall(text.lower())


def _bucket(gram: str, dim: int) -> int:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


def trigram_vector(text: str, dim: int) -> np.ndarray:
    """L2-normalized character-trigram hash counts."""
    counts = np.zeros(dim, dtype=np.float64)
    lowered = text.lower()
    grams = [lowered[i : i + 3] for i in range(len(lowered) - 2)] or [lowered]
    for gram in grams:
        counts[_bucket(gram, dim)] += 1.0
    norm = float(np.linalg.norm(counts))
    return counts / norm


def _prompt_hash8(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:8]


@dataclass(frozen=True)
class StubProvider:
    """Serves every capability locally and counts its calls."""

    config: StubConfig = field(default_factory=StubConfig)
    provider_id: str = "stub"

    def __post_init__(self) -> None:
        object.__setattr__(self, "_calls", {})
        object.__setattr__(self, "_lock", threading.Lock())

    @property
    def calls(self) -> dict[str, int]:
        with self._lock:  # type: ignore[attr-defined]
            return dict(self._calls)  # type: ignore[attr-defined]

    def _count(self, capability: str) -> None:
        with self._lock:  # type: ignore[attr-defined]
            counter = self._calls  # type: ignore[attr-defined]
            counter[capability] = counter.get(capability, 0) + 1

    def model_id(self, capability: str) -> str:
        if capability in ("embed_text", "embed_image"):
            return f"stub-trigram-{self.config.dim}"
        return f"stub-{capability}"

    def embed_texts(self, texts: list[str]) -> list[EmbeddingVector]:
        self._count("embed_text")
        if not texts:
            raise ProviderError("embed_texts requires a non-empty batch")
        vectors = []
        for text in texts:
            if not text:
                raise ProviderError("cannot embed an empty text")
            vectors.append(
                EmbeddingVector.from_array(trigram_vector(text, self.config.dim), self.model_id("embed_text"))
            )
        return vectors

    def embed_image(self, image_ref: str) -> EmbeddingVector:
        self._count("embed_image")
        if not image_ref:
            raise ProviderError("cannot embed an empty image reference")
        return EmbeddingVector.from_array(
            trigram_vector(image_ref, self.config.dim), self.model_id("embed_image")
        )

    def caption_image(self, image_ref: str, prompt: str) -> str:
        self._count("caption")
        if not prompt:
            raise ProviderError("caption prompt must be non-empty")
        return f"caption({image_ref}|{_prompt_hash8(prompt)})"

    def tag_image(self, image_ref: str, vocabulary: list[str]) -> list[tuple[str, float]]:
        """Score = cosine between the stub embeddings of tag and locator."""
        self._count("tag")
        if not vocabulary:
            raise ProviderError("tag vocabulary must be non-empty")
        image_vector = EmbeddingVector.from_array(
            trigram_vector(image_ref, self.config.dim), self.model_id("embed_image")
        )
        scored = []
        for tag in vocabulary:
            tag_vector = EmbeddingVector.from_array(
                trigram_vector(tag, self.config.dim), self.model_id("embed_text")
            )
            scored.append((tag, cosine_similarity(tag_vector, image_vector)))
        scored.sort(key=lambda ts: (-ts[1], ts[0]))
        return scored

    def cross_score(self, query_text: str, doc_texts: list[str]) -> list[float]:
        """Shared-token count between query and document."""
        self._count("cross_score")
        if not doc_texts:
            raise ProviderError("cross_score requires at least one document")
        query_tokens = set(tokenize(query_text))
        return [float(len(query_tokens & set(tokenize(doc)))) for doc in doc_texts]

    def preprocess_query(self, query_text: str, prompt: str) -> list[str]:
        """Tokenizer stand-in for the keyword-extraction provider."""
        self._count("preprocess")
        if not query_text:
            raise ProviderError("cannot preprocess an empty query")
        keywords = tokenize(query_text)
        if not keywords:
            raise ProviderError(f"no keywords extractable from {query_text!r}")
        return keywords
