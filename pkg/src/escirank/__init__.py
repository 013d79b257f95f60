"""escirank: searchability evaluation for ESCI-style product retrieval.

Builds filtered and irrelevant-padded evaluation datasets, composes item
documents from human and image-generated text, ranks candidates per query
under multiple strategies, and scores rankings with nDCG.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .dataset_ops import PadConfig, compute_label_stats, filter_by_popularity, pad_with_irrelevant
from .enrichment import CompositionMode, EnrichmentCache, PromptSet, compose_document
from .errors import ConfigError, DataError, EsciRankError, ProviderError
from .metrics import EvalSummary, GainScheme, Ranking, aggregate_runs, dcg, idcg, ndcg
from .models import Dataset, EsciLabel, Judgment, Product, Query

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "CompositionMode",
    "ConfigError",
    "DataError",
    "Dataset",
    "EnrichmentCache",
    "EsciLabel",
    "EsciRankError",
    "EvalSummary",
    "GainScheme",
    "Judgment",
    "PadConfig",
    "Product",
    "PromptSet",
    "ProviderError",
    "Query",
    "Ranking",
    "aggregate_runs",
    "compose_document",
    "compute_label_stats",
    "dcg",
    "filter_by_popularity",
    "idcg",
    "ndcg",
    "pad_with_irrelevant",
]
