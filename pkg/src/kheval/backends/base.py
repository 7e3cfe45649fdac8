from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import dataclass, replace
from typing import Callable, TypeVar

from ..errors import CapabilityError, TransportError

logger = logging.getLogger(__name__)

T = TypeVar("T")

EOS_TOKEN = "</s>"


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: int = 512
    n: int = 1
    seed: int | None = None
    logprobs_k: int | None = None

    def __post_init__(self):
        if not self.temperature >= 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if not 0 < self.top_p <= 1:
            raise ValueError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.max_tokens <= 0:
            raise ValueError(f"max_tokens must be > 0, got {self.max_tokens}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.logprobs_k is not None and not 1 <= self.logprobs_k <= 20:
            raise ValueError(f"logprobs_k must be in [1, 20], got {self.logprobs_k}")

    def with_(self, **changes) -> GenerationParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class Candidate:
    text: str
    token_logprobs: tuple[tuple[str, float], ...] | None = None
    cumulative_logprob: float | None = None

    def __post_init__(self):
        if self.token_logprobs is None:
            return
        tokens = tuple((str(t), float(lp)) for t, lp in self.token_logprobs)
        object.__setattr__(self, "token_logprobs", tokens)
        total = math.fsum(lp for _, lp in tokens)
        if self.cumulative_logprob is None:
            object.__setattr__(self, "cumulative_logprob", total)
        elif abs(self.cumulative_logprob - total) > 1e-9:
            raise ValueError(
                f"cumulative_logprob {self.cumulative_logprob} != sum of token logprobs {total}"
            )

    @property
    def token_count(self) -> int:
        if self.token_logprobs is not None:
            return len(self.token_logprobs)
        return 1


@dataclass(frozen=True)
class BackendCapabilities:
    supports_scoring: bool = True
    supports_next_token_topk: bool = True
    supports_n_sampling: bool = True


def retry_call(
    fn: Callable[[], T],
    attempts: int = 3,
    base_delay: float = 0.25,
    factor: float = 4.0,
    jitter: bool = True,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> T:
    """Call *fn*, retrying on TransportError with exponential backoff.

    Delay before retry i (0-based) is ``base_delay * factor**i``; with jitter
    the delay is drawn uniformly from [0, that value].
    """
    rng = rng or random.Random()
    for attempt in range(attempts):
        try:
            return fn()
        except TransportError as exc:
            if attempt == attempts - 1:
                raise
            delay = base_delay * factor**attempt
            if jitter:
                delay = rng.uniform(0, delay)
            logger.warning("transport error (%s), retry %d/%d in %.3fs", exc, attempt + 1, attempts - 1, delay)
            sleep(delay)
    raise AssertionError("unreachable")


class Backend:
    """Model access contract shared by the HTTP client and the mock."""

    name = "backend"
    capabilities = BackendCapabilities()
    eos_token = EOS_TOKEN

    def generate(self, prompt: str, params: GenerationParams) -> list[Candidate]:
        raise NotImplementedError

    def score_continuation(self, prompt: str, continuation: str) -> tuple[float, list[tuple[str, float]]]:
        raise NotImplementedError

    def next_token_topk(self, prefix: str, k: int) -> list[tuple[str, float]]:
        raise NotImplementedError

    def _judge(self, judge_prompt: str, params: GenerationParams) -> Candidate:
        return self.generate(judge_prompt, params)[0]

    def judge(self, judge_prompt: str, params: GenerationParams | None = None) -> Candidate:
        params = params or GenerationParams()
        if params.n != 1:
            raise ValueError("judge calls take exactly one sample (n=1)")
        return self._judge(judge_prompt, params.with_(temperature=0.0))

    def ping(self) -> None:
        """Raise BackendUnreachable when the model cannot be contacted."""

    def close(self) -> None:
        pass

    # capability guards
    def _check_n(self, params: GenerationParams) -> None:
        if params.n > 1 and not self.capabilities.supports_n_sampling:
            raise CapabilityError(f"{self.name} cannot sample n={params.n} candidates per request")

    def _check_scoring(self) -> None:
        if not self.capabilities.supports_scoring:
            raise CapabilityError(f"{self.name} does not support continuation scoring")

    def _check_topk(self) -> None:
        if not self.capabilities.supports_next_token_topk:
            raise CapabilityError(f"{self.name} does not expose next-token top-k logprobs")


def sort_topk(entries, k: int) -> list[tuple[str, float]]:
    """Order by logprob descending, ties by token text; keep at most *k*."""
    ranked = sorted(((str(t), float(lp)) for t, lp in entries), key=lambda e: (-e[1], e[0]))
    return ranked[:k]
