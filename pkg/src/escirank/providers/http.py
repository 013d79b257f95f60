"""HTTP client for inference providers.

One POST route per capability under the endpoint's base URL. Transient
failures (connection errors, timeouts, 5xx) are retried with exponential
backoff up to the endpoint's attempt budget; 4xx responses and protocol
violations fail immediately. Bearer tokens are read from the environment
per request and never logged or stored.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from typing import Callable, Sequence

import requests

from ..errors import ProviderError, ProviderProtocolError
from ..rankers import EmbeddingVector
from .base import ProviderEndpoint

logger = logging.getLogger(__name__)

# Bounded in-flight requests: one cap across all providers, one per client.
_GLOBAL_LIMIT = threading.BoundedSemaphore(8)


class HttpProvider:
    """Thread-safe client for one provider endpoint."""

    def __init__(
        self,
        endpoint: ProviderEndpoint,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
        max_in_flight: int = 4,
    ):
        self.endpoint = endpoint
        self._session = session or requests.Session()
        self._sleep = sleep
        self._limit = threading.BoundedSemaphore(max_in_flight)

    @property
    def provider_id(self) -> str:
        return self.endpoint.provider_id

    def model_id(self, capability: str) -> str:
        return self.endpoint.model_id

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.endpoint.auth_env:
            token = os.environ.get(self.endpoint.auth_env)
            if not token:
                raise ProviderError(
                    f"auth variable {self.endpoint.auth_env!r} is not set in the environment"
                )
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, route: str, payload: dict) -> dict:
        url = self.endpoint.base_url.rstrip("/") + "/" + route
        retry = self.endpoint.retry
        last_error: str = ""
        for attempt in range(1, retry.max_attempts + 1):
            if attempt > 1:
                self._sleep(retry.delay(attempt - 1))
                logger.debug("retrying %s (attempt %d/%d)", route, attempt, retry.max_attempts)
            try:
                with _GLOBAL_LIMIT, self._limit:
                    response = self._session.post(
                        url, json=payload, headers=self._headers(), timeout=self.endpoint.timeout
                    )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = f"transport failure: {type(exc).__name__}"
                continue
            if response.status_code >= 500:
                last_error = f"server error {response.status_code}"
                continue
            if response.status_code >= 400:
                raise ProviderError(
                    f"{self.endpoint.provider_id}/{route}: rejected with status {response.status_code}"
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise ProviderProtocolError(
                    f"{self.endpoint.provider_id}/{route}: response is not valid JSON"
                ) from exc
            if not isinstance(body, dict):
                raise ProviderProtocolError(
                    f"{self.endpoint.provider_id}/{route}: expected a JSON object response"
                )
            return body
        raise ProviderError(
            f"{self.endpoint.provider_id}/{route}: giving up after "
            f"{retry.max_attempts} attempts ({last_error})"
        )

    def _vector(self, values: object, route: str) -> EmbeddingVector:
        if not isinstance(values, list) or not values:
            raise ProviderProtocolError(f"{route}: malformed vector in response")
        return EmbeddingVector.from_array(
            (float(v) for v in values), self.endpoint.model_id
        )

    def embed_texts(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ProviderError("embed_texts requires a non-empty batch")
        if any(not t for t in texts):
            raise ProviderError("cannot embed an empty text")
        body = self._post("embed_text", {"texts": list(texts), "model_id": self.endpoint.model_id})
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderProtocolError(
                f"embed_text: expected {len(texts)} vectors, got "
                f"{len(vectors) if isinstance(vectors, list) else 'none'}"
            )
        out = [self._vector(v, "embed_text") for v in vectors]
        dims = {v.dim for v in out}
        if len(dims) > 1:
            raise ProviderProtocolError(f"embed_text: inconsistent dimensions in response: {sorted(dims)}")
        return out

    def embed_image(self, image_ref: str) -> EmbeddingVector:
        if not image_ref:
            raise ProviderError("cannot embed an empty image reference")
        body = self._post("embed_image", {"image_ref": image_ref, "model_id": self.endpoint.model_id})
        return self._vector(body.get("vector"), "embed_image")

    def caption_image(self, image_ref: str, prompt: str) -> str:
        if not prompt:
            raise ProviderError("caption prompt must be non-empty")
        body = self._post("caption", {"image_ref": image_ref, "prompt": prompt})
        text = body.get("text")
        if not text or not isinstance(text, str):
            raise ProviderError("caption: provider returned an empty caption")
        return text

    def tag_image(self, image_ref: str, vocabulary: Sequence[str]) -> list[tuple[str, float]]:
        if not vocabulary:
            raise ProviderError("tag vocabulary must be non-empty")
        body = self._post("tag", {"image_ref": image_ref, "vocabulary": list(vocabulary)})
        tags = body.get("tags")
        if not isinstance(tags, list):
            raise ProviderProtocolError("tag: missing scored tag list in response")
        scored = []
        for entry in tags:
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise ProviderProtocolError("tag: scored tags must be [tag, score] pairs")
            scored.append((str(entry[0]), float(entry[1])))
        if {t for t, _ in scored} != set(vocabulary):
            raise ProviderProtocolError("tag: response does not score exactly the given vocabulary")
        scored.sort(key=lambda ts: (-ts[1], ts[0]))
        return scored

    def cross_score(self, query_text: str, doc_texts: Sequence[str]) -> list[float]:
        if not doc_texts:
            raise ProviderError("cross_score requires at least one document")
        body = self._post("cross_score", {"query": query_text, "docs": list(doc_texts)})
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(doc_texts):
            raise ProviderProtocolError(
                f"cross_score: expected {len(doc_texts)} scores, got "
                f"{len(scores) if isinstance(scores, list) else 'none'}"
            )
        return [float(s) for s in scores]

    def preprocess_query(self, query_text: str, prompt: str) -> list[str]:
        if not query_text:
            raise ProviderError("cannot preprocess an empty query")
        body = self._post("preprocess", {"query": query_text, "prompt": prompt})
        raw = body.get("keywords")
        if raw is None and isinstance(body.get("text"), str):
            raw = body["text"].split(",")
        if not isinstance(raw, list):
            raise ProviderError("preprocess: provider returned no keywords")
        keywords = [str(k).strip() for k in raw]
        keywords = [k for k in keywords if k]
        if not keywords:
            raise ProviderError("preprocess: provider returned no keywords")
        return keywords
