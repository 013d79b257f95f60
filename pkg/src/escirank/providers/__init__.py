"""Clients for external inference providers, plus deterministic stubs.

One route per capability: embed_text, embed_image, caption, tag,
cross_score, preprocess. Real backends are reached over HTTP
(:class:`HttpProvider`); the stubs compute everything in-process from
input hashes and are the default for tests and dry runs.
"""

from .base import ProviderEndpoint, RetryPolicy, StubConfig
from .http import HttpProvider
from .stubs import StubProvider, tokenize

CAPABILITIES = ("embed_text", "embed_image", "caption", "tag", "cross_score", "preprocess")

__all__ = [
    "CAPABILITIES",
    "HttpProvider",
    "ProviderEndpoint",
    "RetryPolicy",
    "StubConfig",
    "StubProvider",
    "tokenize",
]
