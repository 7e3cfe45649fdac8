"""Test-time scaling: identity, best-of-n, self-consistency and beam search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .backends.base import Backend, Candidate, GenerationParams
from .errors import CapabilityError, MissingLogprobs
from .evaluators.text import extract_answer

Extractor = Callable[[str], str]

SCALING_METHODS = ("identity", "best_of_n", "self_consistency", "beam_search")


@dataclass(frozen=True)
class ScalingOutcome:
    final: Candidate
    all_candidates: tuple[Candidate, ...]
    method: str
    vote_tally: dict[str, int] | None = None
    final_index: int = 0

    def __post_init__(self):
        if not 0 <= self.final_index < len(self.all_candidates):
            raise ValueError("final_index out of range")
        if self.all_candidates[self.final_index] is not self.final:
            raise ValueError("final must be one of all_candidates")
        if self.vote_tally is not None and sum(self.vote_tally.values()) != len(self.all_candidates):
            raise ValueError("vote tally does not cover every candidate")


def _sample_n(prompt: str, backend: Backend, params: GenerationParams, n: int) -> list[Candidate]:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n == 1 or backend.capabilities.supports_n_sampling:
        return backend.generate(prompt, params.with_(n=n))
    # one request per sample; seeds offset by index keep the draws reproducible
    base = params.seed or 0
    out = []
    for i in range(n):
        out.extend(backend.generate(prompt, params.with_(n=1, seed=base + i)))
    return out


def identity_decode(prompt: str, backend: Backend, params: GenerationParams) -> ScalingOutcome:
    cands = backend.generate(prompt, params.with_(n=1))
    return ScalingOutcome(cands[0], (cands[0],), "identity")


def best_of_n(prompt: str, backend: Backend, params: GenerationParams, n: int) -> ScalingOutcome:
    """Keep the candidate with the highest per-token logprob (first one on ties)."""
    cands = _sample_n(prompt, backend, params, n)
    scores = []
    for i, c in enumerate(cands):
        if c.cumulative_logprob is None:
            raise MissingLogprobs(f"candidate {i} has no cumulative logprob")
        scores.append(c.cumulative_logprob / max(1, c.token_count))
    best = max(range(len(cands)), key=lambda i: (scores[i], -i))
    return ScalingOutcome(cands[best], tuple(cands), "best_of_n", final_index=best)


def majority_vote(answers: list[str]) -> tuple[str, dict[str, int]]:
    """Most frequent answer; ties go to the answer seen first."""
    tally: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for i, a in enumerate(answers):
        tally[a] = tally.get(a, 0) + 1
        first_seen.setdefault(a, i)
    winner = max(tally, key=lambda a: (tally[a], -first_seen[a]))
    return winner, tally


def self_consistency(
    prompt: str,
    backend: Backend,
    params: GenerationParams,
    n: int,
    extractor: Extractor = extract_answer,
) -> ScalingOutcome:
    cands = _sample_n(prompt, backend, params, n)
    answers = [extractor(c.text) for c in cands]
    winner, tally = majority_vote(answers)
    idx = answers.index(winner)
    return ScalingOutcome(cands[idx], tuple(cands), "self_consistency", vote_tally=tally, final_index=idx)


@dataclass(frozen=True)
class _Beam:
    tokens: tuple[tuple[str, float], ...]
    logprob: float


def _beam_candidate(beam: _Beam, eos: str) -> Candidate:
    text = "".join(t for t, _ in beam.tokens if t != eos)
    if not beam.tokens:
        return Candidate(text, None, 0.0)
    return Candidate(text, beam.tokens)


def beam_search(
    prompt: str,
    backend: Backend,
    beam_width: int,
    max_steps: int,
    eos_token: str | None = None,
) -> ScalingOutcome:
    """Token-level beam search over the backend's next-token distribution.

    Each step expands every live beam with ``next_token_topk(prefix,
    beam_width)``. Expansions ending in EOS are frozen into a finished set
    that is never pruned; the best ``beam_width`` unfinished expansions stay
    live. Logprobs only decrease, so a live beam that cannot beat the best
    finished one is dropped early. No length penalty is applied.
    """
    if beam_width < 1:
        raise ValueError(f"beam_width must be >= 1, got {beam_width}")
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    if not backend.capabilities.supports_next_token_topk:
        raise CapabilityError(f"{backend.name} does not expose next-token top-k logprobs")
    eos = eos_token or backend.eos_token

    live = [_Beam((), 0.0)]
    finished: list[_Beam] = []
    for _ in range(max_steps):
        pool: list[_Beam] = []
        for beam in live:
            prefix = prompt + "".join(t for t, _ in beam.tokens)
            expansions = backend.next_token_topk(prefix, beam_width)
            if not expansions:
                # nothing left to say counts as ending here
                finished.append(beam)
            for tok, lp in expansions:
                child = _Beam(beam.tokens + ((tok, lp),), beam.logprob + lp)
                (finished if tok == eos else pool).append(child)
        # stable sort: equal scores keep expansion order
        pool.sort(key=lambda b: -b.logprob)
        live = pool[:beam_width]
        if finished:
            best_done = max(b.logprob for b in finished)
            live = [b for b in live if b.logprob > best_done]
        if not live:
            break

    ranked = sorted(finished, key=lambda b: -b.logprob)[:beam_width]
    beams = ranked + live
    # best finished beam if any finished, else the best live one
    best = 0
    cands = tuple(_beam_candidate(b, eos) for b in beams)
    return ScalingOutcome(cands[best], cands, "beam_search", final_index=best)


@dataclass(frozen=True)
class Scaler:
    """Configured scaling method as stored in the registry."""

    method: str
    n: int = 1
    beam_width: int = 1
    max_steps: int = 32

    def run(
        self,
        prompt: str,
        backend: Backend,
        params: GenerationParams,
        extractor: Extractor = extract_answer,
    ) -> ScalingOutcome:
        if self.method == "identity":
            return identity_decode(prompt, backend, params)
        if self.method == "best_of_n":
            return best_of_n(prompt, backend, params, self.n)
        if self.method == "self_consistency":
            return self_consistency(prompt, backend, params, self.n, extractor)
        if self.method == "beam_search":
            return beam_search(prompt, backend, self.beam_width, self.max_steps)
        raise ValueError(f"unknown scaling method {self.method!r}")

    @property
    def stochastic(self) -> bool:
        return self.method in ("best_of_n", "self_consistency")


def register(registry) -> None:
    from .registry import ComponentEntry, ComponentKind

    descriptions = {
        "identity": "single greedy generation",
        "best_of_n": "n samples, keep the best length-normalised logprob",
        "self_consistency": "n samples, majority vote over extracted answers",
        "beam_search": "token-level beam search over next-token top-k",
    }

    def factory(method: str) -> Callable[[dict[str, Any]], Scaler]:
        return lambda p: Scaler(
            method, int(p.get("n", 1)), int(p.get("beam_width", 1)), int(p.get("max_steps", 32))
        )

    for method in SCALING_METHODS:
        registry.register(ComponentKind.SCALER, method, ComponentEntry(method, factory(method), descriptions[method]))
