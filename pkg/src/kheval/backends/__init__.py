from __future__ import annotations

from typing import Any

from .base import (
    EOS_TOKEN,
    Backend,
    BackendCapabilities,
    Candidate,
    GenerationParams,
    retry_call,
)
from .http import OpenAICompatibleBackend
from .mock import MockBackend
from .server import MockOpenAIServer

__all__ = [
    "EOS_TOKEN",
    "Backend",
    "BackendCapabilities",
    "Candidate",
    "GenerationParams",
    "MockBackend",
    "MockOpenAIServer",
    "OpenAICompatibleBackend",
    "retry_call",
]


def _mock_factory(params: dict[str, Any]) -> MockBackend:
    return MockBackend.from_samples(
        params.get("samples", ()),
        seed=params.get("seed", 0),
        latency_ms=params.get("latency_ms", 0.0),
    )


def _openai_factory(params: dict[str, Any]) -> OpenAICompatibleBackend:
    return OpenAICompatibleBackend(
        base_url=params.get("base_url"),
        model=params.get("model_name") or "default",
        timeout_ms=params.get("timeout_ms", 30_000),
        retries=params.get("retries", 3),
        backoff_ms=params.get("backoff_ms", 250),
        jitter=params.get("jitter", True),
    )


def register(registry) -> None:
    from ..registry import ComponentEntry, ComponentKind

    registry.register(
        ComponentKind.BACKEND,
        "mock",
        ComponentEntry("mock", _mock_factory, "deterministic in-process backend scripted from sample metadata"),
    )
    registry.register(
        ComponentKind.BACKEND,
        "openai",
        ComponentEntry("openai", _openai_factory, "OpenAI-compatible HTTP server (vLLM, TGI, hosted APIs)"),
    )
