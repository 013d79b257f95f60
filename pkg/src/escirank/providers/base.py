"""Provider configuration types."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError


@dataclass(frozen=True)
class RetryPolicy:
    """Bounded retries with exponential backoff between attempts."""

    max_attempts: int = 3
    backoff_initial: float = 0.5
    backoff_multiplier: float = 2.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ConfigError(f"max_attempts must be >= 1, got {self.max_attempts}")
        if self.backoff_initial < 0:
            raise ConfigError("backoff_initial must be non-negative")

    def delay(self, attempt: int) -> float:
        """Backoff before retry number ``attempt`` (1-based)."""
        return self.backoff_initial * self.backoff_multiplier ** (attempt - 1)


@dataclass(frozen=True)
class ProviderEndpoint:
    """Where and how to reach one provider.

    ``auth_env`` names an environment variable holding the bearer token;
    the token itself is read per request and never stored, logged, or
    serialized anywhere.
    """

    base_url: str
    provider_id: str
    model_id: str
    timeout: float = 30.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    auth_env: str | None = None

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")

    def as_record(self) -> dict:
        """Safe-to-serialize description (names the auth variable, not its value)."""
        return {
            "base_url": self.base_url,
            "provider_id": self.provider_id,
            "model_id": self.model_id,
            "timeout": self.timeout,
            "retry": {
                "max_attempts": self.retry.max_attempts,
                "backoff_initial": self.retry.backoff_initial,
                "backoff_multiplier": self.retry.backoff_multiplier,
            },
            "auth_env": self.auth_env,
        }


@dataclass(frozen=True)
class StubConfig:
    """Knobs for the in-process deterministic stubs."""

    dim: int = 64

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"stub embedding dimension must be >= 1, got {self.dim}")
