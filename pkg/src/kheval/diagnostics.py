"""Accuracy breakdowns, morpheme-level TTR and keyword omission tracking."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Iterable, Sequence

from .datasets import Sample
from .errors import AlignmentError
from .evaluators.core import Verdict
from .evaluators.text import normalize_text

PARTICLE_LIST_VERSION = "1"
UNLABELED = "_unlabeled"


@lru_cache(maxsize=1)
def particle_list() -> tuple[str, ...]:
    text = resources.files("kheval.data").joinpath("particles.txt").read_text(encoding="utf-8")
    particles = [line.strip() for line in text.splitlines() if line.strip()]
    # longest match first regardless of file order
    return tuple(sorted(particles, key=len, reverse=True))


def _is_syllable(ch: str) -> bool:
    return "가" <= ch <= "힣"


@dataclass(frozen=True)
class MorphemeSegmentation:
    tokens: tuple[str, ...]
    particle_suffixes_stripped: int
    # (stem, particle or "") for each eojeol, in order
    eojeols: tuple[tuple[str, str], ...] = field(default=(), compare=False)


def split_eojeol(eojeol: str, particles: Sequence[str] | None = None) -> tuple[str, str]:
    """Split one eojeol into (stem, particle); particle is "" when nothing is stripped."""
    for particle in particles if particles is not None else particle_list():
        if eojeol.endswith(particle) and len(eojeol) > len(particle):
            stem = eojeol[: -len(particle)]
            if any(_is_syllable(c) for c in stem):
                return stem, particle
    return eojeol, ""


def segment_morphemes(text: str) -> MorphemeSegmentation:
    tokens: list[str] = []
    pieces = []
    stripped = 0
    for eojeol in text.split():
        stem, particle = split_eojeol(eojeol)
        pieces.append((stem, particle))
        tokens.append(stem)
        if particle:
            tokens.append(particle)
            stripped += 1
    return MorphemeSegmentation(tuple(tokens), stripped, tuple(pieces))


def ttr(tokens: Sequence[str]) -> float:
    if not tokens:
        return 0.0
    return len(set(tokens)) / len(tokens)


def _index(samples: Iterable[Sample], verdicts: Iterable[Verdict]) -> list[tuple[Sample, Verdict]]:
    by_id = {s.id: s for s in samples}
    pairs = []
    for v in verdicts:
        if v.sample_id not in by_id:
            raise AlignmentError(f"verdict for unknown sample {v.sample_id!r}")
        pairs.append((by_id[v.sample_id], v))
    return pairs


def performance_overview(verdicts: Sequence[Verdict]) -> tuple[float, dict[str, int]]:
    distribution: dict[str, int] = {}
    for v in verdicts:
        distribution[v.extracted] = distribution.get(v.extracted, 0) + 1
    if not verdicts:
        return 0.0, distribution
    return sum(v.correct for v in verdicts) / len(verdicts), distribution


def subset_accuracy(samples: Iterable[Sample], verdicts: Iterable[Verdict]) -> dict[str, tuple[float, int]]:
    counts: dict[str, list[int]] = {}
    for sample, verdict in _index(samples, verdicts):
        key = sample.subset if sample.subset is not None else UNLABELED
        slot = counts.setdefault(key, [0, 0])
        slot[0] += int(verdict.correct)
        slot[1] += 1
    return {k: (c / n, n) for k, (c, n) in counts.items()}


def ttr_by_correctness(samples: Iterable[Sample], verdicts: Iterable[Verdict]) -> tuple[float, float]:
    """TTR over morpheme tokens pooled across all outputs of each correctness group."""
    pooled: dict[bool, list[str]] = {True: [], False: []}
    for _, verdict in _index(samples, verdicts):
        pooled[verdict.correct].extend(segment_morphemes(verdict.raw_output).tokens)
    return ttr(pooled[True]), ttr(pooled[False])


def keyword_omission(samples: Iterable[Sample], verdicts: Iterable[Verdict]) -> dict[str, tuple[int, int]]:
    stats: dict[str, list[int]] = {}
    for sample, verdict in _index(samples, verdicts):
        if not sample.keywords:
            continue
        output = normalize_text(verdict.raw_output)
        for keyword in sample.keywords:
            slot = stats.setdefault(keyword, [0, 0])
            slot[1] += 1
            if normalize_text(keyword) not in output:
                slot[0] += 1
    return {k: (o, n) for k, (o, n) in stats.items()}


def rank_omissions(omission: dict[str, tuple[int, int]]) -> list[dict[str, Any]]:
    """Rows sorted by omission rate (descending), then count, then keyword."""
    rows = [
        {"keyword": k, "omitted": o, "occurrences": n, "omission_rate": o / n if n else 0.0}
        for k, (o, n) in omission.items()
    ]
    rows.sort(key=lambda r: (-r["omission_rate"], -r["omitted"], r["keyword"]))
    return rows


@dataclass(frozen=True)
class DiagnosticsReport:
    accuracy: float
    prediction_distribution: dict[str, int]
    subset_accuracy: dict[str, tuple[float, int]]
    ttr_correct: float
    ttr_incorrect: float
    keyword_omission: dict[str, tuple[int, int]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "prediction_distribution": dict(self.prediction_distribution),
            "subset_accuracy": {k: {"accuracy": a, "n": n} for k, (a, n) in self.subset_accuracy.items()},
            "ttr_correct": self.ttr_correct,
            "ttr_incorrect": self.ttr_incorrect,
            "keyword_omission": rank_omissions(self.keyword_omission),
        }


def diagnose(samples: Sequence[Sample], verdicts: Sequence[Verdict]) -> DiagnosticsReport:
    accuracy, distribution = performance_overview(verdicts)
    ttr_ok, ttr_bad = ttr_by_correctness(samples, verdicts)
    return DiagnosticsReport(
        accuracy=accuracy,
        prediction_distribution=distribution,
        subset_accuracy=subset_accuracy(samples, verdicts),
        ttr_correct=ttr_ok,
        ttr_incorrect=ttr_bad,
        keyword_omission=keyword_omission(samples, verdicts),
    )
