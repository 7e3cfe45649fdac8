"""Deterministic in-process backend used by tests and fixture runs."""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
import threading
import time
from typing import Iterable, Mapping, Sequence

from ..datasets import Sample, format_prompt, scoring_context
from ..errors import BackendError
from .base import Backend, BackendCapabilities, Candidate, GenerationParams, sort_topk

FALLBACK_TEXT = "모르겠습니다"

# Section labels shared with the bundled judge templates.
_JUDGE_SECTIONS = re.compile(r"\[정답\]\n(?P<reference>.*?)\n\n\[응답\]\n(?P<response>.*?)\n\n", re.S)


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def seeded_rng(seed: int | None, prompt: str) -> random.Random:
    """RNG for one (seed, prompt) pair, independent of call order and threads."""
    return random.Random(f"{0 if seed is None else seed}\x1f{prompt}")


def draw(rng: random.Random, texts: Sequence[str], probs: Sequence[float], n: int) -> list[int]:
    """Inverse-CDF draws of *n* indices; *probs* is renormalised to sum to one."""
    cumulative = []
    acc = 0.0
    for p in probs:
        acc += p
        cumulative.append(acc)
    out = []
    for _ in range(n):
        u = rng.random() * acc
        idx = next((i for i, c in enumerate(cumulative) if u < c), len(texts) - 1)
        out.append(idx)
    return out


_PIECE = re.compile(r"\s*\S+\s*$|\s*\S+")


def _pieces(text: str) -> list[str]:
    # whitespace stays attached so the pieces concatenate back to *text*
    return _PIECE.findall(text) or [text]


def _candidate(text: str, logprob: float) -> Candidate:
    pieces = _pieces(text)
    share = logprob / len(pieces)
    return Candidate(text, tuple((p, share) for p in pieces))


def pseudo_score(prompt: str, continuation: str) -> float:
    digest = hashlib.sha256(f"{prompt}\x1f{continuation}".encode("utf-8")).digest()
    return -(1.0 + int.from_bytes(digest[:4], "big") % 9000 / 1000.0)


def containment_verdict(judge_prompt: str) -> str | None:
    """Rule-based stand-in for a judge model reading a bundled template.

    Marks the response correct when it contains the reference after
    whitespace/case normalisation.
    """
    from ..evaluators.text import normalize_text

    m = _JUDGE_SECTIONS.search(judge_prompt)
    if not m:
        return None
    ref = normalize_text(m.group("reference")).replace(" ", "")
    resp = normalize_text(m.group("response")).replace(" ", "")
    ok = bool(ref) and ref in resp
    return json.dumps({"correct": ok, "reason": "참조 답안 포함" if ok else "참조 답안 누락"}, ensure_ascii=False)


class MockBackend(Backend):
    """Table-driven backend.

    ``responses`` maps prompt -> fixed text; ``distributions`` maps prompt ->
    {text: probability} sampled with an RNG seeded from (seed, prompt);
    ``score_table`` maps (prompt, continuation) -> logprob or a list of
    (token, logprob); ``next_token`` maps prefix -> {token: probability};
    ``judge_responses`` maps a judge prompt (or its sha256) -> text, or a list
    of texts returned one per call.
    """

    name = "mock"

    def __init__(
        self,
        responses: Mapping[str, str] | None = None,
        distributions: Mapping[str, Mapping[str, float]] | None = None,
        score_table: Mapping[tuple[str, str], float | Sequence[tuple[str, float]]] | None = None,
        next_token: Mapping[str, Mapping[str, float]] | None = None,
        judge_responses: Mapping[str, str | Sequence[str]] | None = None,
        seed: int = 0,
        latency_ms: float = 0.0,
        fallback_text: str = FALLBACK_TEXT,
        capabilities: BackendCapabilities | None = None,
    ):
        self.responses = dict(responses or {})
        self.distributions = {k: dict(v) for k, v in (distributions or {}).items()}
        self.score_table = dict(score_table or {})
        self.next_token = {k: dict(v) for k, v in (next_token or {}).items()}
        self.judge_responses = dict(judge_responses or {})
        self.seed = seed
        self.latency_ms = latency_ms
        self.fallback_text = fallback_text
        if capabilities is not None:
            self.capabilities = capabilities
        self._judge_calls: dict[str, int] = {}
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_samples(cls, samples: Iterable[Sample], **kwargs) -> MockBackend:
        """Script the mock from fixture metadata.

        ``mock_response`` is the generation for the sample prompt,
        ``mock_distribution`` a JSON {text: prob} sampling table and
        ``mock_scores`` a JSON list of option logprobs.
        """
        responses: dict[str, str] = {}
        distributions: dict[str, dict[str, float]] = {}
        scores: dict[tuple[str, str], float] = {}
        for s in samples:
            prompt = format_prompt(s)
            meta = s.metadata
            if "mock_response" in meta:
                responses[prompt] = meta["mock_response"]
            if "mock_distribution" in meta:
                distributions[prompt] = json.loads(meta["mock_distribution"])
            if "mock_scores" in meta and s.options:
                values = json.loads(meta["mock_scores"])
                if len(values) != len(s.options):
                    raise BackendError(f"sample {s.id}: mock_scores length != options length")
                ctx = scoring_context(s)
                for opt, v in zip(s.options, values):
                    scores[(ctx, opt)] = float(v)
        return cls(responses=responses, distributions=distributions, score_table=scores, **kwargs)

    def _tick(self) -> None:
        with self._lock:
            self.calls += 1
        if self.latency_ms:
            time.sleep(self.latency_ms / 1000.0)

    def generate(self, prompt: str, params: GenerationParams) -> list[Candidate]:
        self._check_n(params)
        self._tick()
        seed = self.seed if params.seed is None else params.seed
        if prompt in self.distributions:
            table = self.distributions[prompt]
            texts = list(table)
            probs = [float(table[t]) for t in texts]
            if params.temperature == 0:
                best = max(range(len(texts)), key=lambda i: (probs[i], -i))
                picks = [best] * params.n
            else:
                picks = draw(seeded_rng(seed, prompt), texts, probs, params.n)
            return [_candidate(texts[i], math.log(probs[i])) for i in picks]
        text = self.responses.get(prompt, self.fallback_text)
        return [_candidate(text, 0.0) for _ in range(params.n)]

    def score_continuation(self, prompt: str, continuation: str) -> tuple[float, list[tuple[str, float]]]:
        self._check_scoring()
        if not continuation:
            raise ValueError("continuation must be nonempty")
        self._tick()
        entry = self.score_table.get((prompt, continuation))
        if entry is None:
            per_token = [(continuation, pseudo_score(prompt, continuation))]
        elif isinstance(entry, (int, float)):
            per_token = [(continuation, float(entry))]
        else:
            per_token = [(str(t), float(lp)) for t, lp in entry]
        return math.fsum(lp for _, lp in per_token), per_token

    def split_scored_text(self, text: str) -> tuple[str, str] | None:
        """Recover the (prompt, continuation) table key whose concatenation is *text*."""
        for prompt, cont in self.score_table:
            if prompt + cont == text:
                return prompt, cont
        return None

    def next_token_topk(self, prefix: str, k: int) -> list[tuple[str, float]]:
        self._check_topk()
        if k < 1:
            raise ValueError("k must be >= 1")
        self._tick()
        dist = self.next_token.get(prefix)
        if dist is None:
            return self._scripted_next(prefix)
        return sort_topk(((t, math.log(p)) for t, p in dist.items() if p > 0), k)

    def _scripted_next(self, prefix: str) -> list[tuple[str, float]]:
        """Walk the scripted response for the longest prompt that *prefix* extends."""
        best = None
        for prompt in self.responses:
            if prefix.startswith(prompt) and (best is None or len(prompt) > len(best)):
                best = prompt
        if best is not None:
            text = self.responses[best]
            done = prefix[len(best):]
            if text.startswith(done):
                rest = _pieces(text[len(done):]) if len(done) < len(text) else []
                if rest:
                    return [(rest[0], 0.0)]
        return [(self.eos_token, 0.0)]

    def is_judge_prompt(self, prompt: str) -> bool:
        return (
            prompt in self.judge_responses
            or prompt_hash(prompt) in self.judge_responses
            or _JUDGE_SECTIONS.search(prompt) is not None
        )

    def _judge(self, judge_prompt: str, params: GenerationParams) -> Candidate:
        self._tick()
        key = prompt_hash(judge_prompt)
        scripted = self.judge_responses.get(key, self.judge_responses.get(judge_prompt))
        if scripted is None:
            text = containment_verdict(judge_prompt)
            if text is None:
                text = self.fallback_text
        elif isinstance(scripted, str):
            text = scripted
        else:
            with self._lock:
                i = self._judge_calls.get(key, 0)
                self._judge_calls[key] = i + 1
            text = scripted[min(i, len(scripted) - 1)]
        return _candidate(text, 0.0)

    def chat(self, prompt: str, params: GenerationParams) -> list[Candidate]:
        """Chat-endpoint dispatch used by the mock HTTP server."""
        if self.is_judge_prompt(prompt) and prompt not in self.responses and prompt not in self.distributions:
            return [self._judge(prompt, params) for _ in range(params.n)]
        return self.generate(prompt, params)
