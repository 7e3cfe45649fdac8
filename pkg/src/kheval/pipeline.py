"""Five-stage run: dataset -> backend -> inference -> evaluation -> report."""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .backends.base import Backend, GenerationParams
from .config import EvalConfig
from .datasets import Sample, filter_subset, format_prompt, validate_dataset
from .diagnostics import PARTICLE_LIST_VERSION, diagnose
from .errors import (
    BackendUnreachable,
    HeterogeneousConfigs,
    KhevalError,
    StageError,
    TransportError,
)
from .evaluators.core import Evaluator, Verdict, apply_language_penalty
from .evaluators.text import DEFAULT_RULES, EXTRACTION_RULES_VERSION
from .registry import ComponentKind, Registry, default_registry
from .scaling import Scaler

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = "1"


def canonical_json(obj: Any) -> str:
    """Sorted keys, shortest round-trip floats, raw UTF-8, trailing newline."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2, allow_nan=False) + "\n"


@dataclass
class RunReport:
    run_id: str
    config_snapshot: dict[str, Any]
    metrics: dict[str, Any]
    diagnostics: dict[str, Any]
    verdicts: list[Verdict]
    versions: dict[str, str]
    timing: dict[str, float] = field(default_factory=dict)
    execution: dict[str, Any] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.metrics["accuracy"]

    def to_dict(self) -> dict[str, Any]:
        """Deterministic content only; timing and execution knobs live in the sidecar."""
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "run_id": self.run_id,
            "config_snapshot": self.config_snapshot,
            "metrics": self.metrics,
            "diagnostics": self.diagnostics,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "versions": self.versions,
        }

    def run_info(self) -> dict[str, Any]:
        return {"run_id": self.run_id, "timing": self.timing, "execution": self.execution}


def report_schema() -> dict[str, Any]:
    """JSON Schema for the canonical report file, shipped as package data."""
    text = resources.files("kheval.data").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".timing.json")


def write_report(report: RunReport, path: str | Path) -> Path:
    """Write the canonical report to *path* and timing data next to it."""
    path = Path(path)
    path.write_bytes(canonical_json(report.to_dict()).encode("utf-8"))
    sidecar_path(path).write_bytes(canonical_json(report.run_info()).encode("utf-8"))
    return path


def _fingerprint(samples: Sequence[Sample]) -> str:
    h = hashlib.sha256()
    for s in samples:
        h.update(json.dumps(s.to_dict(), sort_keys=True, ensure_ascii=False).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def _versions() -> dict[str, str]:
    return {
        "harness_version": __version__,
        "extraction_rules_version": EXTRACTION_RULES_VERSION,
        "particle_list_version": PARTICLE_LIST_VERSION,
        "report_schema_version": REPORT_SCHEMA_VERSION,
    }


@dataclass
class _Components:
    samples: list[Sample]
    backend: Backend
    judge_backend: Backend
    scaler: Scaler
    evaluator: Evaluator
    owned: list[Backend]


def _backend_params(config: EvalConfig, samples: Sequence[Sample]) -> dict[str, Any]:
    b = config.backend
    return {
        "samples": samples,
        "seed": config.seed,
        "latency_ms": b.latency_ms,
        "base_url": b.base_url,
        "model_name": b.model_name,
        "timeout_ms": b.timeout_ms,
        "retries": b.retries,
        "backoff_ms": b.backoff_ms,
        "jitter": b.jitter,
    }


def load_samples(config: EvalConfig, registry: Registry) -> list[Sample]:
    entry = registry.resolve(ComponentKind.DATASET, config.default_dataset)
    dataset = entry.create({"path": config.dataset_path})
    samples = dataset.load(config.default_split)
    if config.subset is not None:
        samples = filter_subset(samples, config.subset)
    validate_dataset(samples)
    return samples


def _setup(
    config: EvalConfig,
    registry: Registry,
    backend: Backend | None,
    judge_backend: Backend | None,
) -> _Components:
    # resolve everything up front so a typo fails before any work happens
    for kind, name in (
        (ComponentKind.DATASET, config.default_dataset),
        (ComponentKind.BACKEND, config.default_model),
        (ComponentKind.SCALER, config.scaling.method),
        (ComponentKind.EVALUATOR, config.default_evaluation_method),
    ):
        registry.resolve(kind, name)
    if config.evaluation.judge_model:
        registry.resolve(ComponentKind.BACKEND, config.evaluation.judge_model)

    try:
        samples = load_samples(config, registry)
    except KhevalError as exc:
        raise StageError("dataset", None, exc) from exc
    except OSError as exc:
        raise StageError("dataset", None, exc) from exc

    owned: list[Backend] = []
    try:
        if backend is None:
            backend = registry.resolve(ComponentKind.BACKEND, config.default_model).create(
                _backend_params(config, samples)
            )
            owned.append(backend)
            backend.ping()
        if judge_backend is None:
            if config.evaluation.judge_model:
                judge_backend = registry.resolve(ComponentKind.BACKEND, config.evaluation.judge_model).create(
                    _backend_params(config, samples)
                )
                owned.append(judge_backend)
                judge_backend.ping()
            else:
                judge_backend = backend
    except KhevalError as exc:
        for b in owned:
            b.close()
        raise StageError("model", None, exc) from exc

    s = config.scaling
    scaler = registry.resolve(ComponentKind.SCALER, s.method).create(
        {"n": s.n, "beam_width": s.beam_width, "max_steps": s.max_steps}
    )
    evaluator = registry.resolve(ComponentKind.EVALUATOR, config.default_evaluation_method).create(
        {
            "length_normalize": config.evaluation.length_normalize,
            "judge_template": config.evaluation.judge_template,
            "judge_backend": judge_backend,
        }
    )
    return _Components(samples, backend, judge_backend, scaler, evaluator, owned)


def _generation_params(config: EvalConfig, scaler: Scaler) -> GenerationParams:
    temperature = config.scaling.temperature if scaler.stochastic else 0.0
    return GenerationParams(
        temperature=temperature,
        max_tokens=config.backend.max_tokens,
        seed=config.seed,
    )


def _score_sample(sample: Sample, parts: _Components, params: GenerationParams, threshold: float) -> Verdict:
    evaluator = parts.evaluator
    try:
        if not evaluator.needs_generation:
            return evaluator.evaluate(sample, None, parts.backend)
        outcome = parts.scaler.run(format_prompt(sample), parts.backend, params)
        verdict = evaluator.evaluate(sample, outcome.final.text, parts.judge_backend)
    except (TransportError, BackendUnreachable) as exc:
        logger.warning("sample %s: backend failure after retries: %s", sample.id, exc)
        return Verdict(sample.id, "", "", False, evaluator.name, score=0.0, infra_error=True)
    except (KhevalError, ValueError) as exc:
        raise StageError("evaluation", sample.id, exc) from exc
    if outcome.vote_tally is not None:
        verdict = replace(verdict, vote_tally=dict(outcome.vote_tally))
    return apply_language_penalty(verdict, verdict.hangul_ratio, threshold)


def _execute(parts: _Components, config: EvalConfig) -> list[Verdict]:
    params = _generation_params(config, parts.scaler)
    threshold = config.evaluation.language_penalty_threshold
    samples = parts.samples
    slots: list[Verdict | None] = [None] * len(samples)
    done = 0
    lock = threading.Lock()

    def work(i: int) -> None:
        nonlocal done
        slots[i] = _score_sample(samples[i], parts, params, threshold)
        with lock:
            done += 1
            logger.debug("%d/%d samples scored", done, len(samples))

    with ThreadPoolExecutor(max_workers=config.max_workers, thread_name_prefix="kheval") as pool:
        for start in range(0, len(samples), config.batch_size):
            wave = [pool.submit(work, i) for i in range(start, min(start + config.batch_size, len(samples)))]
            for fut in wave:
                fut.result()
    return [v for v in slots if v is not None]


def _metrics(verdicts: Sequence[Verdict]) -> dict[str, Any]:
    n = len(verdicts)
    correct = sum(v.correct for v in verdicts)
    return {
        "accuracy": correct / n if n else 0.0,
        "n": n,
        "correct": correct,
        "penalized_count": sum(v.penalty_applied for v in verdicts),
        "invalid_judge_count": sum(v.judge_valid is False for v in verdicts),
        "infra_error_count": sum(v.infra_error for v in verdicts),
    }


def _snapshot(config: EvalConfig, parts: _Components) -> dict[str, Any]:
    snap = config.without_execution()
    snap["resolved"] = {
        "dataset_size": len(parts.samples),
        "dataset_sha256": _fingerprint(parts.samples),
        "evaluator": parts.evaluator.describe(),
        "extraction_rules": DEFAULT_RULES.as_dict(),
        "generation_temperature": _generation_params(config, parts.scaler).temperature,
    }
    return snap


def run(
    config: EvalConfig,
    registry: Registry | None = None,
    backend: Backend | None = None,
    judge_backend: Backend | None = None,
) -> RunReport:
    """Evaluate one model on one dataset as described by *config*.

    *backend* / *judge_backend* override the registry-built instances, which
    lets callers share a client or point at a test server.
    """
    registry = registry or default_registry()
    started = time.perf_counter()
    parts = _setup(config, registry, backend, judge_backend)
    try:
        verdicts = _execute(parts, config)
    finally:
        for b in parts.owned:
            b.close()
    diagnostics = diagnose(parts.samples, verdicts).to_dict()
    snapshot = _snapshot(config, parts)
    versions = _versions()
    run_id = hashlib.sha256(canonical_json({"config": snapshot, "versions": versions}).encode("utf-8")).hexdigest()[:16]
    wall_ms = (time.perf_counter() - started) * 1000.0
    return RunReport(
        run_id=run_id,
        config_snapshot=snapshot,
        metrics=_metrics(verdicts),
        diagnostics=diagnostics,
        verdicts=verdicts,
        versions=versions,
        timing={"wall_ms": wall_ms, "samples_per_sec": len(verdicts) / (wall_ms / 1000.0) if wall_ms else 0.0},
        execution=config.execution(),
    )


@dataclass
class ComparisonReport:
    reports: list[RunReport]
    table: list[dict[str, Any]]

    def to_dict(self) -> dict[str, Any]:
        return {"table": self.table, "reports": [r.to_dict() for r in self.reports]}


def model_label(config: EvalConfig) -> str:
    if config.backend.model_name:
        return f"{config.default_model}:{config.backend.model_name}"
    return config.default_model


def run_multi_model(configs: Sequence[EvalConfig], registry: Registry | None = None) -> ComparisonReport:
    """Run each config and tabulate metrics side by side, best accuracy first."""
    if not configs:
        raise HeterogeneousConfigs("no configs given")
    key = lambda c: (c.default_dataset, c.dataset_path, c.default_split, c.subset, c.default_evaluation_method)  # noqa: E731
    first = key(configs[0])
    for c in configs[1:]:
        if key(c) != first:
            raise HeterogeneousConfigs(f"configs differ in dataset or method: {first} vs {key(c)}")
    reports = [run(c, registry) for c in configs]
    rows = [
        {
            "model": model_label(c),
            "accuracy": r.metrics["accuracy"],
            "n": r.metrics["n"],
            "penalized_count": r.metrics["penalized_count"],
            "run_id": r.run_id,
        }
        for c, r in zip(configs, reports)
    ]
    rows.sort(key=lambda row: (-row["accuracy"], row["model"]))
    return ComparisonReport(reports, rows)
