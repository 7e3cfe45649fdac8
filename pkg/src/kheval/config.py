"""YAML run configuration with strict key checking."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .datasets import SPLITS
from .errors import ConfigError

# execution knobs: they change speed, never results, so reports keep them apart
EXECUTION_KEYS = ("batch_size", "max_workers", "output_path")


@dataclass(frozen=True)
class ScalingConfig:
    method: str = "identity"
    n: int = 1
    beam_width: int = 1
    max_steps: int = 32
    temperature: float = 0.7


@dataclass(frozen=True)
class EvaluationConfig:
    language_penalty_threshold: float = 0.5
    judge_template: str = "default_ko"
    length_normalize: bool = False
    judge_model: str | None = None


@dataclass(frozen=True)
class BackendConfig:
    base_url: str | None = None
    model_name: str | None = None
    timeout_ms: int = 30_000
    max_tokens: int = 512
    retries: int = 3
    backoff_ms: float = 250
    jitter: bool = True
    latency_ms: float = 0.0


@dataclass(frozen=True)
class EvalConfig:
    default_dataset: str = "fixture_mcq"
    default_model: str = "mock"
    default_split: str = "test"
    default_evaluation_method: str = "string_match"
    batch_size: int = 32
    max_workers: int = 4
    dataset_path: str | None = None
    subset: str | None = None
    seed: int = 0
    output_path: str | None = None
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)

    def __post_init__(self):
        _check(self)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> EvalConfig:
        data = dict(data or {})
        _reject_unknown(data, cls, "")
        nested = {"scaling": ScalingConfig, "evaluation": EvaluationConfig, "backend": BackendConfig}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key in nested:
                if value is None:
                    value = {}
                if not isinstance(value, dict):
                    raise ConfigError(key, "must be a mapping")
                _reject_unknown(value, nested[key], f"{key}.")
                kwargs[key] = nested[key](**{k: _coerce(nested[key], k, v, f"{key}.{k}") for k, v in value.items()})
            else:
                kwargs[key] = _coerce(cls, key, value, key)
        return cls(**kwargs)

    def merged(self, overrides: dict[str, Any]) -> EvalConfig:
        """Copy with dotted-key overrides applied; ``None`` values are ignored."""
        data = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            target = data
            *parents, leaf = key.split(".")
            for p in parents:
                target = target[p]
            target[leaf] = value
        return EvalConfig.from_dict(data)

    def without_execution(self) -> dict[str, Any]:
        data = self.to_dict()
        for key in EXECUTION_KEYS:
            data.pop(key)
        return data

    def execution(self) -> dict[str, Any]:
        return {key: getattr(self, key) for key in EXECUTION_KEYS}


_TYPES: dict[str, type | tuple[type, ...]] = {
    "int": int,
    "float": (int, float),
    "bool": bool,
    "str": str,
    "str | None": (str, type(None)),
}


def _coerce(cls, key: str, value: Any, dotted: str) -> Any:
    ftype = {f.name: f.type for f in fields(cls)}[key]
    expected = _TYPES.get(ftype)
    if expected is None:
        return value
    if ftype in ("int", "float") and isinstance(value, bool):
        raise ConfigError(dotted, f"expected {ftype}, got bool")
    if not isinstance(value, expected):
        raise ConfigError(dotted, f"expected {ftype}, got {type(value).__name__}")
    if ftype == "float":
        return float(value)
    return value


def _reject_unknown(data: dict[str, Any], cls, prefix: str) -> None:
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{prefix}{key}", f"unknown key (known: {', '.join(sorted(known))})")


def _check(cfg: EvalConfig) -> None:
    if cfg.default_split not in SPLITS:
        raise ConfigError("default_split", f"must be one of {', '.join(SPLITS)}")
    if cfg.batch_size < 1:
        raise ConfigError("batch_size", "must be >= 1")
    if cfg.max_workers < 1:
        raise ConfigError("max_workers", "must be >= 1")
    for key in ("default_dataset", "default_model", "default_evaluation_method"):
        if not getattr(cfg, key):
            raise ConfigError(key, "must be nonempty")
    s = cfg.scaling
    if s.n < 1:
        raise ConfigError("scaling.n", "must be >= 1")
    if s.beam_width < 1:
        raise ConfigError("scaling.beam_width", "must be >= 1")
    if s.max_steps < 1:
        raise ConfigError("scaling.max_steps", "must be >= 1")
    if s.temperature < 0:
        raise ConfigError("scaling.temperature", "must be >= 0")
    if not 0 <= cfg.evaluation.language_penalty_threshold <= 1:
        raise ConfigError("evaluation.language_penalty_threshold", "must be in [0, 1]")
    b = cfg.backend
    if b.timeout_ms <= 0 or b.max_tokens <= 0 or b.retries < 1:
        raise ConfigError("backend", "timeout_ms, max_tokens and retries must be positive")


def load_config(path: str | Path) -> EvalConfig:
    """Read a YAML config; absent keys take defaults, unknown keys are errors."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"invalid YAML: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError("<file>", "top level must be a mapping")
    return EvalConfig.from_dict(data)

