"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage/config errors exit 1, data errors
exit 2, provider errors exit 3.
"""

from __future__ import annotations


class EsciRankError(Exception):
    """Base class for all package errors."""


class ConfigError(EsciRankError):
    """Invalid configuration or command usage."""


class DataError(EsciRankError):
    """Malformed, inconsistent, or empty input data."""


class ProviderError(EsciRankError):
    """An external inference provider failed or misbehaved."""


class ProviderProtocolError(ProviderError):
    """The provider answered, but the response violates the wire contract."""
