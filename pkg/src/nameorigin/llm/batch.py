"""Bounded-concurrency batch execution of prompting strategies."""

from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import ConfigError
from ..taxonomy import TaxonomyMap
from . import strategies
from .types import ChatProvider, PromptRun, RunPolicy, StrategyKind, StrategyParams


@dataclass
class BatchSummary:
    total: int
    unknown_count: int
    retry_histogram: dict[int, int] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def unknown_rate(self) -> float:
        return self.unknown_count / self.total if self.total else 0.0


async def _dispatch(
    kind: StrategyKind,
    name: str,
    *,
    provider: ChatProvider,
    params: StrategyParams,
    policy: RunPolicy,
    label_space: Sequence[str] | None,
    taxonomy: TaxonomyMap | None,
    examples: Sequence[tuple[str, str]] | None,
    label_kind: str,
) -> PromptRun:
    if kind in (StrategyKind.ZERO_SHOT, StrategyKind.CHAIN_OF_THOUGHT,
                StrategyKind.SELF_CONSISTENCY, StrategyKind.SELF_REFLECTION,
                StrategyKind.FEW_SHOT) and label_space is None:
        raise ConfigError(f"strategy {kind.value} requires a label space")
    if kind is StrategyKind.ZERO_SHOT:
        return await strategies._zero_shot(
            name, label_space, provider, params, policy, label_kind=label_kind
        )
    if kind is StrategyKind.FEW_SHOT:
        if taxonomy is None or examples is None:
            raise ConfigError("few_shot requires a taxonomy and an example set")
        return await strategies._few_shot(
            name, label_space, examples, provider, params, policy, taxonomy
        )
    if kind is StrategyKind.CHAIN_OF_THOUGHT:
        return await strategies._chain_of_thought(name, label_space, provider, params, policy)
    if kind is StrategyKind.SELF_CONSISTENCY:
        return await strategies._self_consistency(name, label_space, provider, params, policy)
    if kind is StrategyKind.LEAST_TO_MOST:
        if taxonomy is None:
            raise ConfigError("least_to_most requires a taxonomy")
        return await strategies._least_to_most(name, taxonomy, provider, params, policy)
    if kind is StrategyKind.SELF_REFLECTION:
        return await strategies._self_reflection(name, label_space, provider, params, policy)
    raise ConfigError(f"unsupported strategy: {kind}")


async def _run_batch_async(
    names: Sequence[str],
    kind: StrategyKind,
    *,
    provider: ChatProvider,
    params: StrategyParams,
    policy: RunPolicy,
    label_space: Sequence[str] | None,
    taxonomy: TaxonomyMap | None,
    examples: Sequence[tuple[str, str]] | None,
    label_kind: str,
) -> list[PromptRun]:
    semaphore = asyncio.Semaphore(policy.max_concurrency)

    async def bounded(name: str) -> PromptRun:
        async with semaphore:
            return await _dispatch(
                kind,
                name,
                provider=provider,
                params=params,
                policy=policy,
                label_space=label_space,
                taxonomy=taxonomy,
                examples=examples,
                label_kind=label_kind,
            )

    return list(await asyncio.gather(*(bounded(name) for name in names)))


def run_batch(
    names: Sequence[str],
    kind: StrategyKind,
    *,
    provider: ChatProvider,
    params: StrategyParams = StrategyParams(),
    policy: RunPolicy = RunPolicy(),
    label_space: Sequence[str] | None = None,
    taxonomy: TaxonomyMap | None = None,
    examples: Sequence[tuple[str, str]] | None = None,
    label_kind: str = "nationalities",
) -> tuple[list[PromptRun], BatchSummary]:
    """Run a strategy over many names with at most ``max_concurrency`` in flight.

    Output order always matches input order; failures are recorded per run,
    never raised.  The summary reports the Unknown rate and a histogram of
    retries used per run.
    """
    start = time.monotonic()
    runs = asyncio.run(
        _run_batch_async(
            names,
            kind,
            provider=provider,
            params=params,
            policy=policy,
            label_space=label_space,
            taxonomy=taxonomy,
            examples=examples,
            label_kind=label_kind,
        )
    )
    histogram: dict[int, int] = {}
    for run in runs:
        histogram[run.retries_used] = histogram.get(run.retries_used, 0) + 1
    summary = BatchSummary(
        total=len(runs),
        unknown_count=sum(run.unknown for run in runs),
        retry_histogram=dict(sorted(histogram.items())),
        wall_time=time.monotonic() - start,
    )
    return runs, summary
