"""Shared types for the prompting pipelines."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

from ..errors import ConfigError


class StrategyKind(enum.Enum):
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"
    CHAIN_OF_THOUGHT = "chain_of_thought"
    SELF_CONSISTENCY = "self_consistency"
    LEAST_TO_MOST = "least_to_most"
    SELF_REFLECTION = "self_reflection"


@dataclass(frozen=True)
class StrategyParams:
    temperature: float = 1.0
    max_output_tokens: int = 256
    n_samples: int = 5  # self-consistency only
    top_k: int = 5

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")


@dataclass(frozen=True)
class RunPolicy:
    max_concurrency: int = 50
    max_retries: int = 3
    backoff_base: float = 0.5
    backoff_factor: float = 2.0
    jitter: bool = False

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")

    def delay(self, attempt: int, jitter_unit: float = 0.0) -> float:
        """Backoff before retry number ``attempt`` (0-based)."""
        base = self.backoff_base * (self.backoff_factor**attempt)
        if self.jitter:
            return base * (0.5 + 0.5 * jitter_unit)
        return base


@dataclass(frozen=True)
class RequestMeta:
    """Routing key the mock provider uses to look up scripted responses."""

    strategy: str
    name: str
    stage: int = 0


@dataclass
class PromptRun:
    """Full trace of one strategy execution for one name."""

    name: str
    strategy: str
    messages: list[list[dict]] = field(default_factory=list)  # one list per stage/turn
    responses: list[str] = field(default_factory=list)
    prediction: list[str] = field(default_factory=list)
    retries_used: int = 0
    unknown: bool = False
    parse_error: bool = False
    latency: float = 0.0

    def flags(self) -> dict:
        return {
            "unknown": self.unknown,
            "parse_error": self.parse_error,
            "retries_used": self.retries_used,
        }


@runtime_checkable
class ChatProvider(Protocol):
    """Chat-completion backend; implementations must allow concurrent calls."""

    async def complete(
        self,
        messages: list[dict],
        *,
        temperature: float,
        max_tokens: int,
        meta: RequestMeta | None = None,
    ) -> str: ...
