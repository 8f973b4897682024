"""The six prompting strategies.

Each runner produces a fully-traced PromptRun: every stage's message list,
every raw response, the parsed prediction, and retry/Unknown/parse flags.
Strategy runs are internally sequential; run_batch owns all parallelism.
Transport failures go through the shared retry wrapper; an unparseable
response is never re-prompted, it just yields Unknown.
"""

from __future__ import annotations

import asyncio
import time
from typing import Sequence

from ..dataset import NameRecord
from ..errors import BadExampleSet
from ..taxonomy import Granularity, TaxonomyMap
from . import prompts
from .parsing import parse_response
from .providers import ProviderExhausted, call_with_retry
from .types import ChatProvider, PromptRun, RequestMeta, RunPolicy, StrategyKind, StrategyParams


def _sync(coro):
    return asyncio.run(coro)


async def _one_call(
    run: PromptRun,
    messages: list[dict],
    provider: ChatProvider,
    params: StrategyParams,
    policy: RunPolicy,
    stage: int,
) -> str | None:
    """Issue one stage call, recording trace and retries; None on exhaustion."""
    run.messages.append(messages)
    meta = RequestMeta(strategy=run.strategy, name=run.name, stage=stage)
    try:
        text, retries = await call_with_retry(provider, messages, params, policy, meta)
    except ProviderExhausted as exc:
        run.retries_used += exc.attempts - 1
        run.unknown = True
        return None
    run.retries_used += retries
    run.responses.append(text)
    return text


def _finish(run: PromptRun, start: float) -> PromptRun:
    run.latency = time.monotonic() - start
    if not run.prediction:
        run.unknown = True
    return run


def _query_messages(system: str, name: str) -> list[dict]:
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": prompts.USER_QUERY.format(name=name)},
    ]


async def _zero_shot(
    name: str,
    label_space: Sequence[str],
    provider: ChatProvider,
    params: StrategyParams,
    policy: RunPolicy,
    *,
    label_kind: str = "nationalities",
    strategy: str = StrategyKind.ZERO_SHOT.value,
    stage: int = 0,
    run: PromptRun | None = None,
) -> PromptRun:
    start = time.monotonic()
    run = run or PromptRun(name=name, strategy=strategy)
    system = prompts.system_prompt(label_space, params.top_k, label_kind)
    text = await _one_call(run, _query_messages(system, name), provider, params, policy, stage)
    if text is not None:
        result = parse_response(text, label_space, limit=params.top_k)
        run.prediction = list(result.labels)
        run.parse_error = run.parse_error or result.parse_error
    return _finish(run, start)


def run_zero_shot(
    name: str,
    label_space: Sequence[str],
    provider: ChatProvider,
    params: StrategyParams = StrategyParams(),
    policy: RunPolicy = RunPolicy(),
    *,
    label_kind: str = "nationalities",
) -> PromptRun:
    return _sync(_zero_shot(name, label_space, provider, params, policy, label_kind=label_kind))


def select_fewshot_examples(
    train_records: Sequence[NameRecord], taxonomy: TaxonomyMap
) -> list[tuple[str, str]]:
    """Deterministic demonstration set: one example per region.

    Per region, take its most frequent training nationality (ties by label
    ascending) and that nationality's lexicographically first training name.
    """
    counts: dict[str, int] = {}
    first_name: dict[str, str] = {}
    for rec in train_records:
        counts[rec.nationality] = counts.get(rec.nationality, 0) + 1
        if rec.nationality not in first_name or rec.name < first_name[rec.nationality]:
            first_name[rec.nationality] = rec.name
    examples: list[tuple[str, str]] = []
    for region in taxonomy.label_space(Granularity.REGION).labels:
        members = [lab for lab in taxonomy.region_nationalities(region) if lab in counts]
        if not members:
            raise BadExampleSet(f"no training data for any nationality in region {region!r}")
        best = sorted(members, key=lambda lab: (-counts[lab], lab))[0]
        examples.append((first_name[best], best))
    return examples


def _validate_examples(
    examples: Sequence[tuple[str, str]], taxonomy: TaxonomyMap
) -> None:
    regions = [taxonomy.project(label, Granularity.REGION) for _, label in examples]
    expected = set(taxonomy.label_space(Granularity.REGION).labels)
    seen: set[str] = set()
    for region in regions:
        if region in seen:
            raise BadExampleSet(f"region {region!r} appears more than once in the example set")
        seen.add(region)
    if seen != expected:
        missing = sorted(expected - seen)
        raise BadExampleSet(f"example set misses regions: {missing}")


async def _few_shot(
    name: str,
    label_space: Sequence[str],
    examples: Sequence[tuple[str, str]],
    provider: ChatProvider,
    params: StrategyParams,
    policy: RunPolicy,
    taxonomy: TaxonomyMap,
) -> PromptRun:
    _validate_examples(examples, taxonomy)
    start = time.monotonic()
    run = PromptRun(name=name, strategy=StrategyKind.FEW_SHOT.value)
    block = "\n".join(f"{ex_name} → {ex_label}" for ex_name, ex_label in examples)
    system = prompts.system_prompt(label_space, params.top_k) + prompts.FEWSHOT_BLOCK.format(
        examples=block
    )
    text = await _one_call(run, _query_messages(system, name), provider, params, policy, 0)
    if text is not None:
        result = parse_response(text, label_space, limit=params.top_k)
        run.prediction = list(result.labels)
        run.parse_error = result.parse_error
    return _finish(run, start)


def run_few_shot(
    name: str,
    label_space: Sequence[str],
    examples: Sequence[tuple[str, str]],
    provider: ChatProvider,
    params: StrategyParams = StrategyParams(),
    policy: RunPolicy = RunPolicy(),
    *,
    taxonomy: TaxonomyMap,
) -> PromptRun:
    return _sync(_few_shot(name, label_space, examples, provider, params, policy, taxonomy))


async def _chain_of_thought(
    name: str,
    label_space: Sequence[str],
    provider: ChatProvider,
    params: StrategyParams,
    policy: RunPolicy,
) -> PromptRun:
    start = time.monotonic()
    run = PromptRun(name=name, strategy=StrategyKind.CHAIN_OF_THOUGHT.value)
    system = prompts.system_prompt(label_space, params.top_k) + prompts.COT_SUFFIX.format(
        top_k=params.top_k, label_kind="nationalities"
    )
    text = await _one_call(run, _query_messages(system, name), provider, params, policy, 0)
    if text is not None:
        result = parse_response(text, label_space, limit=params.top_k)
        run.prediction = list(result.labels)
        run.parse_error = result.parse_error
    return _finish(run, start)


def run_chain_of_thought(
    name: str,
    label_space: Sequence[str],
    provider: ChatProvider,
    params: StrategyParams = StrategyParams(),
    policy: RunPolicy = RunPolicy(),
) -> PromptRun:
    return _sync(_chain_of_thought(name, label_space, provider, params, policy))


async def _self_consistency(
    name: str,
    label_space: Sequence[str],
    provider: ChatProvider,
    params: StrategyParams,
    policy: RunPolicy,
) -> PromptRun:
    start = time.monotonic()
    run = PromptRun(name=name, strategy=StrategyKind.SELF_CONSISTENCY.value)
    sample_lists: list[list[str]] = []
    for sample_idx in range(params.n_samples):
        sample = await _zero_shot(
            name,
            label_space,
            provider,
            params,
            policy,
            strategy=run.strategy,
            stage=sample_idx,
            run=PromptRun(name=name, strategy=run.strategy),
        )
        run.messages.extend(sample.messages)
        run.responses.extend(sample.responses)
        run.retries_used += sample.retries_used
        run.parse_error = run.parse_error or sample.parse_error
        if sample.prediction:
            sample_lists.append(sample.prediction)
    run.prediction = aggregate_votes(sample_lists, limit=params.top_k)
    return _finish(run, start)


def aggregate_votes(sample_lists: Sequence[Sequence[str]], limit: int = 5) -> list[str]:
    """Majority vote over top-1s, then mean rank, then label.

    Votes count top-1 occurrences only; the final ranking orders every label
    that appeared in any sample by (votes desc, mean 1-based rank asc, label
    asc) and truncates.
    """
    votes: dict[str, int] = {}
    rank_sum: dict[str, int] = {}
    rank_n: dict[str, int] = {}
    for ranked in sample_lists:
        if ranked:
            votes[ranked[0]] = votes.get(ranked[0], 0) + 1
        for pos, lab in enumerate(ranked, start=1):
            rank_sum[lab] = rank_sum.get(lab, 0) + pos
            rank_n[lab] = rank_n.get(lab, 0) + 1
    universe = sorted(
        rank_n,
        key=lambda lab: (-votes.get(lab, 0), rank_sum[lab] / rank_n[lab], lab),
    )
    return universe[:limit]


def run_self_consistency(
    name: str,
    label_space: Sequence[str],
    provider: ChatProvider,
    params: StrategyParams = StrategyParams(),
    policy: RunPolicy = RunPolicy(),
) -> PromptRun:
    return _sync(_self_consistency(name, label_space, provider, params, policy))


async def _least_to_most(
    name: str,
    taxonomy: TaxonomyMap,
    provider: ChatProvider,
    params: StrategyParams,
    policy: RunPolicy,
) -> PromptRun:
    start = time.monotonic()
    run = PromptRun(name=name, strategy=StrategyKind.LEAST_TO_MOST.value)

    continents = list(taxonomy.label_space(Granularity.CONTINENT).labels)
    system = prompts.STAGE_CONTINENT.format(labels=prompts.label_block(continents))
    text = await _one_call(run, _query_messages(system, name), provider, params, policy, 0)
    if text is None:
        return _finish(run, start)
    stage1 = parse_response(text, continents, limit=len(continents))
    run.parse_error = run.parse_error or stage1.parse_error
    if not stage1.labels:
        return _finish(run, start)
    continent = stage1.labels[0]

    regions = taxonomy.continent_regions(continent)
    system = prompts.STAGE_REGION.format(
        continent=continent, labels=prompts.label_block(regions)
    )
    text = await _one_call(run, _query_messages(system, name), provider, params, policy, 1)
    if text is None:
        return _finish(run, start)
    stage2 = parse_response(text, regions, limit=len(regions))
    run.parse_error = run.parse_error or stage2.parse_error
    if not stage2.labels:
        return _finish(run, start)
    region = stage2.labels[0]
    # Padding preference: the model's ranking, then remaining regions ascending.
    preference = list(stage2.labels) + [r for r in regions if r not in stage2.labels]

    candidates = taxonomy.region_nationalities(region)
    system = prompts.STAGE_NATIONALITY.format(
        region=region, labels=prompts.label_block(candidates), top_k=params.top_k
    )
    text = await _one_call(run, _query_messages(system, name), provider, params, policy, 2)
    if text is None:
        return _finish(run, start)
    stage3 = parse_response(text, candidates, limit=params.top_k)
    run.parse_error = run.parse_error or stage3.parse_error
    if not stage3.labels:
        return _finish(run, start)

    prediction = list(stage3.labels)
    for reg in preference:
        if len(prediction) >= params.top_k:
            break
        for nat in taxonomy.region_nationalities(reg):
            if nat not in prediction:
                prediction.append(nat)
                if len(prediction) >= params.top_k:
                    break
    run.prediction = prediction[: params.top_k]
    return _finish(run, start)


def run_least_to_most(
    name: str,
    taxonomy: TaxonomyMap,
    provider: ChatProvider,
    params: StrategyParams = StrategyParams(),
    policy: RunPolicy = RunPolicy(),
) -> PromptRun:
    return _sync(_least_to_most(name, taxonomy, provider, params, policy))


async def _self_reflection(
    name: str,
    label_space: Sequence[str],
    provider: ChatProvider,
    params: StrategyParams,
    policy: RunPolicy,
) -> PromptRun:
    start = time.monotonic()
    run = PromptRun(name=name, strategy=StrategyKind.SELF_REFLECTION.value)
    system = prompts.system_prompt(label_space, params.top_k)
    first_messages = _query_messages(system, name)
    text = await _one_call(run, first_messages, provider, params, policy, 0)
    if text is None:
        return _finish(run, start)
    initial = parse_response(text, label_space, limit=params.top_k)

    critique = first_messages + [
        {"role": "assistant", "content": text},
        {"role": "user", "content": prompts.REFLECTION_FOLLOWUP.format(top_k=params.top_k)},
    ]
    text2 = await _one_call(run, critique, provider, params, policy, 1)
    if text2 is None:
        # transport failure on the critique turn: keep the initial answer
        run.unknown = False
        run.prediction = list(initial.labels)
        run.parse_error = run.parse_error or initial.parse_error
        return _finish(run, start)
    final = parse_response(text2, label_space, limit=params.top_k)
    if final.parse_error:
        run.prediction = list(initial.labels)
        run.parse_error = True
    else:
        run.prediction = list(final.labels)
        run.parse_error = initial.parse_error
    return _finish(run, start)


def run_self_reflection(
    name: str,
    label_space: Sequence[str],
    provider: ChatProvider,
    params: StrategyParams = StrategyParams(),
    policy: RunPolicy = RunPolicy(),
) -> PromptRun:
    return _sync(_self_reflection(name, label_space, provider, params, policy))
