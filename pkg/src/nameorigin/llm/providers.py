"""HTTP chat-completion provider and the retry wrapper all strategies share."""

from __future__ import annotations

import asyncio
import os
from dataclasses import dataclass

import httpx

from ..errors import ConfigError, ProviderError
from ..prng import SplitMix64, derive, fnv1a64
from .types import ChatProvider, RequestMeta, RunPolicy, StrategyParams


class ProviderTimeout(ProviderError):
    pass


class ProviderHTTPError(ProviderError):
    def __init__(self, status: int, detail: str = ""):
        self.status = status
        super().__init__(f"HTTP {status}: {detail}" if detail else f"HTTP {status}")


class ProviderExhausted(ProviderError):
    """All retry attempts failed; carries the attempt count actually used."""

    def __init__(self, attempts: int, last: Exception):
        self.attempts = attempts
        self.last = last
        super().__init__(f"provider failed after {attempts} attempts: {last}")


@dataclass
class HttpChatProvider:
    """POSTs {model, messages, temperature, max_tokens} to a chat endpoint.

    The bearer token is read from the environment variable named by
    ``auth_env`` at construction time, so a missing credential fails fast
    before any request is sent.
    """

    endpoint: str
    model: str
    auth_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0

    def __post_init__(self):
        token = os.environ.get(self.auth_env, "")
        if not token:
            raise ConfigError(
                f"environment variable {self.auth_env!r} is not set; refusing to start"
            )
        self._token = token
        self._client: httpx.AsyncClient | None = None

    def _get_client(self) -> httpx.AsyncClient:
        if self._client is None:
            self._client = httpx.AsyncClient(timeout=self.timeout)
        return self._client

    async def complete(
        self,
        messages: list[dict],
        *,
        temperature: float,
        max_tokens: int,
        meta: RequestMeta | None = None,
    ) -> str:
        body = {
            "model": self.model,
            "messages": messages,
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        headers = {"Authorization": f"Bearer {self._token}"}
        try:
            resp = await self._get_client().post(self.endpoint, json=body, headers=headers)
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise ProviderError(str(exc)) from exc
        if resp.status_code != 200:
            raise ProviderHTTPError(resp.status_code, resp.text[:200])
        try:
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed completion payload: {exc}") from exc

    async def aclose(self) -> None:
        if self._client is not None:
            await self._client.aclose()
            self._client = None


async def call_with_retry(
    provider: ChatProvider,
    messages: list[dict],
    params: StrategyParams,
    policy: RunPolicy,
    meta: RequestMeta,
) -> tuple[str, int]:
    """Invoke the provider with exponential backoff; returns (text, retries).

    Raises ProviderExhausted once max_retries extra attempts all fail.
    Jitter, when enabled, is drawn from a deterministic stream keyed by the
    request metadata so concurrent batches stay reproducible.
    """
    jitter_rng = SplitMix64(derive(fnv1a64(meta.name), f"backoff/{meta.strategy}/{meta.stage}"))
    last: Exception | None = None
    for attempt in range(policy.max_retries + 1):
        try:
            text = await provider.complete(
                messages,
                temperature=params.temperature,
                max_tokens=params.max_output_tokens,
                meta=meta,
            )
            return text, attempt
        except ProviderError as exc:
            last = exc
            if attempt == policy.max_retries:
                break
            await asyncio.sleep(policy.delay(attempt, jitter_rng.next_float()))
    raise ProviderExhausted(policy.max_retries + 1, last or ProviderError("unknown"))
