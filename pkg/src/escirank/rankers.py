"""Ranking strategies over a query's candidate products.

Every ranker returns a :class:`~escirank.metrics.Ranking` that is a
permutation of exactly the candidates it was given. Rankers are pure
given their inputs (and seed), so per-query work parallelizes freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, ProviderError
from .metrics import Ranking
from .models import Judgment, LABEL_ORDER
from .seeding import rng_for


def _check_examples(query_id: str, example_ids: Sequence[str]) -> list[str]:
    if not example_ids:
        raise DataError(f"query {query_id!r} has no examples to rank")
    ordered = sorted(example_ids)
    for a, b in zip(ordered, ordered[1:]):
        if a == b:
            raise DataError(f"query {query_id!r}: duplicate example {a!r}")
    return ordered


def rank_random(query_id: str, example_ids: Sequence[str], seed: int) -> Ranking:
    """Uniform random permutation, deterministic per (seed, query_id)."""
    ordered = _check_examples(query_id, example_ids)
    rng = rng_for(seed, "rank_random", query_id)
    permutation = rng.permutation(len(ordered))
    n = len(ordered)
    scores = {ordered[int(pid_index)]: float(n - position) for position, pid_index in enumerate(permutation)}
    return Ranking.from_scores(query_id, scores)


@dataclass(frozen=True)
class PopularityModel:
    """Label-weighted occurrence counts per product, fitted on training data."""

    scores: Mapping[str, float]
    scheme: tuple[float, float, float, float]

    def score(self, product_id: str) -> float:
        """Products never seen in training score 0."""
        return self.scores.get(product_id, 0.0)


def fit_popularity(
    train_judgments: Iterable[Judgment],
    scoring_scheme: Sequence[float] = (1.0, 0.0, 0.0, 0.0),
) -> PopularityModel:
    """Sum per-label weights over each product's training judgments.

    The scheme is ordered [E, S, C, I]; the default counts exact matches.
    """
    if len(scoring_scheme) != 4:
        raise DataError("scoring scheme needs exactly four values, ordered E, S, C, I")
    weights = {label: float(w) for label, w in zip(LABEL_ORDER, scoring_scheme)}
    scores: dict[str, float] = {}
    n = 0
    for judgment in train_judgments:
        n += 1
        scores[judgment.product_id] = scores.get(judgment.product_id, 0.0) + weights[judgment.label]
    if n == 0:
        raise DataError("cannot fit a popularity model on an empty training split")
    return PopularityModel(scores=scores, scheme=tuple(weights[label] for label in LABEL_ORDER))  # type: ignore[arg-type]


def rank_most_popular(model: PopularityModel, query_id: str, example_ids: Sequence[str]) -> Ranking:
    """Sort candidates by fitted popularity, ties by ascending product_id."""
    ordered = _check_examples(query_id, example_ids)
    return Ranking.from_scores(query_id, {pid: model.score(pid) for pid in ordered})


@dataclass(frozen=True)
class EmbeddingVector:
    """A dense vector tagged with the model that produced it."""

    values: tuple[float, ...]
    model_id: str

    @classmethod
    def from_array(cls, values: Iterable[float], model_id: str) -> "EmbeddingVector":
        return cls(tuple(float(v) for v in values), model_id)

    @property
    def dim(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def unit(self) -> np.ndarray:
        norm = self.norm()
        if norm == 0.0:
            raise DataError(f"zero vector from model {self.model_id!r}: cosine undefined")
        return self.as_array() / norm


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """dot(u, v) / (|u| |v|); errors on dimension mismatch or a zero vector."""
    if u.dim != v.dim:
        raise DataError(f"dimension mismatch: {u.dim} vs {v.dim}")
    return float(np.dot(u.unit(), v.unit()))


def rank_by_similarity(
    query_vector: EmbeddingVector,
    example_vectors: Mapping[str, EmbeddingVector],
    query_id: str,
) -> Ranking:
    """Sort candidates by cosine similarity to the query vector."""
    ordered = _check_examples(query_id, list(example_vectors))
    for pid in ordered:
        if example_vectors[pid].model_id != query_vector.model_id:
            raise DataError(
                f"embedding model mismatch: query uses {query_vector.model_id!r}, "
                f"product {pid!r} uses {example_vectors[pid].model_id!r}"
            )
    query_unit = query_vector.unit()
    scores = {}
    for pid in ordered:
        vector = example_vectors[pid]
        if vector.dim != query_vector.dim:
            raise DataError(f"dimension mismatch: {query_vector.dim} vs {vector.dim}")
        scores[pid] = float(np.dot(query_unit, vector.unit()))
    return Ranking.from_scores(query_id, scores)


CrossScorer = Callable[[str, Sequence[str]], Sequence[float]]


def rank_by_cross_scores(
    query_text: str,
    example_docs: Mapping[str, str],
    scorer: CrossScorer,
    query_id: str,
) -> Ranking:
    """Score (query, doc) pairs jointly and sort by score.

    Docs are submitted in ascending product_id order; a response with the
    wrong cardinality is an error, never a partial ranking.
    """
    ordered = _check_examples(query_id, list(example_docs))
    docs = [example_docs[pid] for pid in ordered]
    scores = list(scorer(query_text, docs))
    if len(scores) != len(docs):
        raise ProviderError(
            f"cross scorer returned {len(scores)} scores for {len(docs)} documents"
        )
    return Ranking.from_scores(query_id, {pid: float(s) for pid, s in zip(ordered, scores)})
