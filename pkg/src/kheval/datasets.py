"""Sample schema, the generic JSONL loader and bundled fixture datasets."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from .errors import DatasetError, SchemaError, ValidationError

SPLITS = ("train", "validation", "test")
FIXTURES = ("fixture_mcq", "fixture_math", "fixture_gen")

# Separator placed between the question and a scored option continuation.
OPTION_SEPARATOR = "\n답: "

_KNOWN_KEYS = {"id", "input", "reference", "options", "subset", "keywords", "metadata", "split"}
_LETTER_PREFIX = re.compile(r"^[A-Z][).:]\s")


@dataclass(frozen=True)
class Sample:
    id: str
    input: str
    reference: str
    options: tuple[str, ...] | None = None
    subset: str | None = None
    keywords: tuple[str, ...] | None = None
    metadata: dict[str, str] = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        # lists are accepted for convenience and frozen into tuples
        if self.options is not None and not isinstance(self.options, tuple):
            object.__setattr__(self, "options", tuple(self.options))
        if self.keywords is not None and not isinstance(self.keywords, tuple):
            object.__setattr__(self, "keywords", tuple(self.keywords))

    @property
    def is_mcq(self) -> bool:
        return self.options is not None

    @property
    def answer_index(self) -> int | None:
        """Index of the gold option; ``None`` for non-MCQ or unresolvable references."""
        return resolve_reference_index(self.reference, self.options)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "input": self.input, "reference": self.reference}
        if self.options is not None:
            out["options"] = list(self.options)
        if self.subset is not None:
            out["subset"] = self.subset
        if self.keywords is not None:
            out["keywords"] = list(self.keywords)
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    split: str = "test"
    source: str | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DatasetError(f"split must be one of {SPLITS}, got {self.split!r}")


def resolve_reference_index(reference: str, options: Iterable[str] | None) -> int | None:
    if options is None:
        return None
    options = list(options)
    if reference in options:
        return options.index(reference)
    if len(reference) == 1 and "A" <= reference <= "Z":
        idx = ord(reference) - ord("A")
        if idx < len(options):
            return idx
    return None


def _sample_problem(sample: Sample) -> str | None:
    if not sample.id:
        return "empty id"
    if sample.options is not None:
        if len(sample.options) < 2:
            return "options must have at least 2 entries"
        if sample.answer_index is None:
            return f"reference {sample.reference!r} matches no option"
    return None


def _require_str(record: dict, key: str, line_no: int, optional: bool = False) -> str | None:
    if key not in record:
        if optional:
            return None
        raise SchemaError(line_no, f"missing field {key}")
    value = record[key]
    if not isinstance(value, str):
        raise SchemaError(line_no, f"field {key} must be a string")
    return value


def _require_str_list(record: dict, key: str, line_no: int) -> list[str] | None:
    if key not in record or record[key] is None:
        return None
    value = record[key]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(line_no, f"field {key} must be a list of strings")
    return value


def sample_from_record(record: Any, line_no: int = 0) -> Sample:
    if not isinstance(record, dict):
        raise SchemaError(line_no, "line is not a JSON object")
    metadata: dict[str, str] = {}
    if "metadata" in record:
        raw_meta = record["metadata"]
        if not isinstance(raw_meta, dict) or not all(isinstance(v, str) for v in raw_meta.values()):
            raise SchemaError(line_no, "field metadata must map strings to strings")
        metadata.update(raw_meta)
    for key, value in record.items():
        if key not in _KNOWN_KEYS:
            metadata[key] = value if isinstance(value, str) else json.dumps(value, ensure_ascii=False, sort_keys=True)
    sample = Sample(
        id=_require_str(record, "id", line_no),
        input=_require_str(record, "input", line_no),
        reference=_require_str(record, "reference", line_no),
        options=_require_str_list(record, "options", line_no),
        subset=_require_str(record, "subset", line_no, optional=True),
        keywords=_require_str_list(record, "keywords", line_no),
        metadata=metadata,
    )
    problem = _sample_problem(sample)
    if problem:
        raise SchemaError(line_no, problem)
    return sample


def parse_jsonl(text: str, split: str = "test") -> list[Sample]:
    samples: list[Sample] = []
    seen: set[str] = set()
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(line_no, f"invalid JSON ({exc.msg})") from None
        if isinstance(record, dict) and "split" in record:
            if record["split"] not in SPLITS:
                raise SchemaError(line_no, f"unknown split {record['split']!r}")
            if record["split"] != split:
                continue
        sample = sample_from_record(record, line_no)
        if sample.id in seen:
            raise SchemaError(line_no, f"duplicate id {sample.id}")
        seen.add(sample.id)
        samples.append(sample)
    return samples


def load_jsonl(path: str | Path, split: str = "test") -> list[Sample]:
    """Load samples from a UTF-8 JSONL file, failing on the first malformed line.

    Records carrying a ``split`` key are kept only when it equals *split*;
    unrecognised keys are preserved in ``Sample.metadata``.
    """
    if split not in SPLITS:
        raise DatasetError(f"split must be one of {SPLITS}, got {split!r}")
    text = Path(path).read_text(encoding="utf-8")
    return parse_jsonl(text, split)


def dump_jsonl(samples: Iterable[Sample], path: str | Path) -> None:
    lines = [json.dumps(s.to_dict(), ensure_ascii=False, sort_keys=True) for s in samples]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8", newline="\n")


def filter_subset(samples: Iterable[Sample], subset: str) -> list[Sample]:
    return [s for s in samples if s.subset == subset]


def validate_dataset(samples: Iterable[Sample]) -> None:
    samples = list(samples)
    counts: dict[str, int] = {}
    for s in samples:
        counts[s.id] = counts.get(s.id, 0) + 1
    dups = sorted(i for i, c in counts.items() if c > 1)
    if dups:
        raise ValidationError(dups, "duplicate sample ids")
    bad = [s.id for s in samples if _sample_problem(s)]
    if bad:
        raise ValidationError(bad, "invalid samples")


def load_fixture(name: str, split: str = "test") -> list[Sample]:
    if name not in FIXTURES:
        raise DatasetError(f"unknown fixture {name!r}")
    text = resources.files("kheval.data").joinpath(f"{name}.jsonl").read_text(encoding="utf-8")
    return parse_jsonl(text, split)


def format_options(options: Iterable[str]) -> str:
    lines = []
    for i, opt in enumerate(options):
        letter = chr(ord("A") + i)
        lines.append(opt if _LETTER_PREFIX.match(opt) else f"{letter}. {opt}")
    return "\n".join(lines)


def format_prompt(sample: Sample) -> str:
    """Generation prompt sent to a backend for *sample*."""
    if sample.options is None:
        return sample.input
    return f"{sample.input}\n{format_options(sample.options)}\n정답을 알파벳으로 답하세요."


def scoring_context(sample: Sample) -> str:
    """Prefix whose continuations are the options under log-likelihood scoring."""
    return sample.input + OPTION_SEPARATOR


class JsonlDataset:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def load(self, split: str = "test") -> list[Sample]:
        return load_jsonl(self.path, split)


class FixtureDataset:
    def __init__(self, name: str):
        self.name = name

    def load(self, split: str = "test") -> list[Sample]:
        return load_fixture(self.name, split)


def _generic_factory(params: dict[str, Any]) -> JsonlDataset:
    path = params.get("path")
    if not path:
        raise DatasetError("generic_jsonl needs a dataset path")
    return JsonlDataset(path)


def register(registry) -> None:
    from .registry import ComponentEntry, ComponentKind

    registry.register(
        ComponentKind.DATASET,
        "generic_jsonl",
        ComponentEntry("generic_jsonl", _generic_factory, "any JSONL file following the sample schema"),
    )
    descriptions = {
        "fixture_mcq": "40 synthetic 4-option Korean MCQ items",
        "fixture_math": "20 synthetic math items with fractional references",
        "fixture_gen": "20 synthetic open-ended Korean items with keywords",
    }
    for name in FIXTURES:
        registry.register(
            ComponentKind.DATASET,
            name,
            ComponentEntry(name, lambda params, _n=name: FixtureDataset(_n), descriptions[name]),
        )
