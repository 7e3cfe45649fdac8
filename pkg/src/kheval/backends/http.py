"""Client for OpenAI-compatible servers (vLLM, TGI, hosted APIs)."""

from __future__ import annotations

import math
import os
from typing import Any

import httpx

from ..errors import AlignmentError, BackendError, BackendRefusal, BackendUnreachable, TransportError
from .base import Backend, Candidate, GenerationParams, retry_call, sort_topk

API_KEY_ENV = "KHEVAL_API_KEY"
BASE_URL_ENV = "KHEVAL_BASE_URL"


class OpenAICompatibleBackend(Backend):
    """Chat endpoint for generation and judging; completions with echo for scoring."""

    name = "openai"

    def __init__(
        self,
        base_url: str | None = None,
        model: str = "default",
        api_key: str | None = None,
        timeout_ms: float = 30_000,
        retries: int = 3,
        backoff_ms: float = 250,
        backoff_factor: float = 4.0,
        jitter: bool = True,
        max_connections: int = 64,
        eos_token: str | None = None,
    ):
        base_url = base_url or os.environ.get(BASE_URL_ENV)
        if not base_url:
            raise BackendError(f"no base URL: set backend.base_url or {BASE_URL_ENV}")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.retries = retries
        self.backoff = backoff_ms / 1000.0
        self.backoff_factor = backoff_factor
        self.jitter = jitter
        if eos_token:
            self.eos_token = eos_token
        api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        limits = httpx.Limits(max_connections=max_connections, max_keepalive_connections=max_connections)
        self._client = httpx.Client(headers=headers, timeout=timeout_ms / 1000.0, limits=limits)

    def close(self) -> None:
        self._client.close()

    def _request(self, method: str, path: str, payload: dict[str, Any] | None = None) -> dict[str, Any]:
        url = f"{self.base_url}{path}"

        def once() -> dict[str, Any]:
            try:
                resp = self._client.request(method, url, json=payload)
            except httpx.HTTPError as exc:
                raise TransportError(f"{method} {url}: {exc.__class__.__name__}: {exc}") from exc
            if resp.status_code == 429 or resp.status_code >= 500:
                raise TransportError(f"{method} {url}: HTTP {resp.status_code}")
            if resp.status_code >= 400:
                raise BackendRefusal(f"{method} {url}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendError(f"{method} {url}: response is not JSON") from exc

        return retry_call(
            once, attempts=self.retries, base_delay=self.backoff, factor=self.backoff_factor, jitter=self.jitter
        )

    def ping(self) -> None:
        try:
            self._request("GET", "/v1/models")
        except TransportError as exc:
            raise BackendUnreachable(str(exc)) from exc
        except BackendRefusal:
            # the server answered; an unsupported listing endpoint is fine
            pass

    def generate(self, prompt: str, params: GenerationParams) -> list[Candidate]:
        self._check_n(params)
        payload: dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "n": params.n,
            "logprobs": True,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        if params.logprobs_k is not None:
            payload["top_logprobs"] = params.logprobs_k
        data = self._request("POST", "/v1/chat/completions", payload)
        return parse_chat_choices(data)

    def score_continuation(self, prompt: str, continuation: str) -> tuple[float, list[tuple[str, float]]]:
        self._check_scoring()
        if not continuation:
            raise ValueError("continuation must be nonempty")
        payload = {
            "model": self.model,
            "prompt": prompt + continuation,
            "max_tokens": 0,
            "temperature": 0.0,
            "echo": True,
            "logprobs": 1,
        }
        data = self._request("POST", "/v1/completions", payload)
        try:
            logprobs = data["choices"][0]["logprobs"]
        except (KeyError, IndexError, TypeError) as exc:
            raise AlignmentError("completion response carries no logprobs") from exc
        return continuation_logprob(logprobs, len(prompt), len(continuation))

    def next_token_topk(self, prefix: str, k: int) -> list[tuple[str, float]]:
        self._check_topk()
        if k < 1:
            raise ValueError("k must be >= 1")
        payload = {
            "model": self.model,
            "prompt": prefix,
            "max_tokens": 1,
            "temperature": 0.0,
            "logprobs": k,
        }
        data = self._request("POST", "/v1/completions", payload)
        try:
            top = data["choices"][0]["logprobs"]["top_logprobs"][0]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError("completion response carries no top_logprobs") from exc
        return sort_topk(top.items(), k)


def parse_chat_choices(data: dict[str, Any]) -> list[Candidate]:
    try:
        choices = sorted(data["choices"], key=lambda c: c.get("index", 0))
    except (KeyError, TypeError) as exc:
        raise BackendError("chat response has no choices array") from exc
    out = []
    for choice in choices:
        text = (choice.get("message") or {}).get("content") or ""
        tokens = None
        content = (choice.get("logprobs") or {}).get("content")
        if content:
            tokens = tuple((t["token"], float(t["logprob"])) for t in content)
        try:
            out.append(Candidate(text, tokens))
        except ValueError as exc:
            raise BackendError(f"inconsistent logprobs in response: {exc}") from exc
    return out


def continuation_logprob(logprobs: dict[str, Any], prompt_len: int, cont_len: int) -> tuple[float, list[tuple[str, float]]]:
    """Sum the logprobs of tokens whose character offsets fall in the continuation.

    Tokens are taken from the legacy completions ``logprobs`` block
    (``tokens``, ``token_logprobs``, ``text_offset``). A token straddling the
    prompt/continuation boundary makes the split ambiguous and raises.
    """
    tokens = logprobs.get("tokens")
    values = logprobs.get("token_logprobs")
    offsets = logprobs.get("text_offset")
    if tokens is None or values is None or offsets is None:
        raise AlignmentError("response lacks tokens/token_logprobs/text_offset")
    if not len(tokens) == len(values) == len(offsets):
        raise AlignmentError("logprob arrays differ in length")
    end = prompt_len + cont_len
    per_token: list[tuple[str, float]] = []
    covered = prompt_len
    for tok, lp, off in zip(tokens, values, offsets):
        tok_end = off + len(tok)
        if off < prompt_len:
            if tok_end > prompt_len:
                raise AlignmentError(f"token {tok!r} at offset {off} straddles the continuation boundary {prompt_len}")
            continue
        if off >= end:
            break
        if off != covered:
            raise AlignmentError(f"gap in token offsets at {covered}")
        if lp is None:
            raise AlignmentError(f"continuation token {tok!r} has no logprob")
        per_token.append((tok, float(lp)))
        covered = tok_end
    if not per_token or covered < end:
        raise AlignmentError("continuation tokens not fully covered by the response")
    return math.fsum(lp for _, lp in per_token), per_token
