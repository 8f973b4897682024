"""Scripted in-process chat provider for tests and offline runs.

A script maps (strategy, name, stage) to an ordered list of outcomes; each
call consumes the next outcome until the last one, which then repeats.  An
outcome is either response text or a fault (timeout / http_error /
malformed).  Unkeyed requests get the script's default response.  The
provider records the maximum number of concurrently in-flight calls so tests
can assert the orchestrator's concurrency bound.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .llm.providers import ProviderHTTPError, ProviderTimeout
from .llm.types import RequestMeta
from .prng import SplitMix64, derive

MALFORMED_TEXT = '{"candidates": '  # truncated JSON, defeats array extraction

_FAULTS = ("timeout", "http_error", "malformed")


@dataclass(frozen=True)
class Outcome:
    text: str | None = None
    fault: str | None = None

    def __post_init__(self):
        if (self.text is None) == (self.fault is None):
            raise ConfigError("outcome needs exactly one of text or fault")
        if self.fault is not None and self.fault not in _FAULTS:
            raise ConfigError(f"unknown fault kind: {self.fault!r}")


@dataclass
class MockScript:
    entries: dict[tuple[str, str, int], list[Outcome]]
    default: Outcome
    latency_s: float = 0.0
    latency_jitter_s: float = 0.0

    @classmethod
    def from_dict(cls, payload: dict) -> "MockScript":
        if "default" not in payload:
            raise ConfigError("mock script must declare a default response")
        entries: dict[tuple[str, str, int], list[Outcome]] = {}
        for row in payload.get("entries", []):
            key = (row["strategy"], row["name"], int(row.get("stage", 0)))
            outcomes = [_parse_outcome(o) for o in row["responses"]]
            if not outcomes:
                raise ConfigError(f"empty response list for {key}")
            entries[key] = outcomes
        return cls(
            entries=entries,
            default=_parse_outcome(payload["default"]),
            latency_s=float(payload.get("latency_ms", 0)) / 1000.0,
            latency_jitter_s=float(payload.get("latency_jitter_ms", 0)) / 1000.0,
        )

    @classmethod
    def load(cls, path: str | Path) -> "MockScript":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def _parse_outcome(obj) -> Outcome:
    if isinstance(obj, str):
        return Outcome(text=obj)
    if isinstance(obj, dict):
        if "fault" in obj:
            return Outcome(fault=obj["fault"])
        if "text" in obj:
            return Outcome(text=obj["text"])
    raise ConfigError(f"cannot interpret scripted outcome: {obj!r}")


@dataclass
class MockStats:
    calls: int = 0
    faults_served: int = 0
    in_flight: int = 0
    max_in_flight: int = 0
    per_key_calls: dict[tuple[str, str, int], int] = field(default_factory=dict)


class MockChatProvider:
    """ChatProvider implementation backed by a MockScript."""

    def __init__(self, script: MockScript, seed: int = 0):
        self.script = script
        self.stats = MockStats()
        self._cursors: dict[tuple[str, str, int], int] = {}
        self._latency_rng = SplitMix64(derive(seed, "mock/latency"))

    def _next_outcome(self, meta: RequestMeta | None) -> Outcome:
        if meta is None:
            return self.script.default
        key = (meta.strategy, meta.name, meta.stage)
        self.stats.per_key_calls[key] = self.stats.per_key_calls.get(key, 0) + 1
        outcomes = self.script.entries.get(key)
        if outcomes is None:
            return self.script.default
        cursor = self._cursors.get(key, 0)
        outcome = outcomes[min(cursor, len(outcomes) - 1)]
        self._cursors[key] = cursor + 1
        return outcome

    async def complete(
        self,
        messages: list[dict],
        *,
        temperature: float,
        max_tokens: int,
        meta: RequestMeta | None = None,
    ) -> str:
        self.stats.calls += 1
        self.stats.in_flight += 1
        self.stats.max_in_flight = max(self.stats.max_in_flight, self.stats.in_flight)
        try:
            delay = self.script.latency_s
            if self.script.latency_jitter_s:
                delay += self._latency_rng.uniform(0.0, self.script.latency_jitter_s)
            if delay > 0:
                await asyncio.sleep(delay)
            outcome = self._next_outcome(meta)
            if outcome.fault == "timeout":
                self.stats.faults_served += 1
                raise ProviderTimeout("scripted timeout")
            if outcome.fault == "http_error":
                self.stats.faults_served += 1
                raise ProviderHTTPError(500, "scripted server error")
            if outcome.fault == "malformed":
                self.stats.faults_served += 1
                return MALFORMED_TEXT
            return outcome.text or ""
        finally:
            self.stats.in_flight -= 1
