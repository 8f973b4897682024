"""Prompting strategies, providers, and the batched orchestrator."""

from .types import (
    ChatProvider,
    PromptRun,
    RequestMeta,
    RunPolicy,
    StrategyKind,
    StrategyParams,
)
from .parsing import parse_response
from .providers import HttpChatProvider, ProviderExhausted, ProviderHTTPError, ProviderTimeout
from .strategies import (
    run_chain_of_thought,
    run_few_shot,
    run_least_to_most,
    run_self_consistency,
    run_self_reflection,
    run_zero_shot,
    select_fewshot_examples,
)
from .batch import BatchSummary, run_batch

__all__ = [
    "BatchSummary",
    "ChatProvider",
    "HttpChatProvider",
    "PromptRun",
    "ProviderExhausted",
    "ProviderHTTPError",
    "ProviderTimeout",
    "RequestMeta",
    "RunPolicy",
    "StrategyKind",
    "StrategyParams",
    "parse_response",
    "run_batch",
    "run_chain_of_thought",
    "run_few_shot",
    "run_least_to_most",
    "run_self_consistency",
    "run_self_reflection",
    "run_zero_shot",
    "select_fewshot_examples",
]
