"""Command-line entry point.

    python -m kheval --model mock --dataset fixture_mcq --evaluation_method string_match

Exit codes: 0 success, 2 config/usage error, 3 dataset error, 4 backend
unreachable, 5 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .config import EvalConfig, load_config
from .errors import (
    BackendUnreachable,
    ConfigError,
    KhevalError,
    RegistryError,
    StageError,
    TransportError,
)
from .pipeline import run, write_report
from .registry import ComponentKind, default_registry

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATASET = 3
EXIT_BACKEND = 4
EXIT_INTERNAL = 5

DEFAULT_OUTPUT = "kheval_report.json"

# flag -> dotted config key
FLAG_KEYS = {
    "model": "default_model",
    "dataset": "default_dataset",
    "split": "default_split",
    "evaluation_method": "default_evaluation_method",
    "subset": "subset",
    "seed": "seed",
    "dataset_path": "dataset_path",
    "batch_size": "batch_size",
    "max_workers": "max_workers",
    "base_url": "backend.base_url",
    "model_name": "backend.model_name",
    "scaling_method": "scaling.method",
    "n": "scaling.n",
    "beam_width": "scaling.beam_width",
    "temperature": "scaling.temperature",
    "judge_template": "evaluation.judge_template",
    "judge_model": "evaluation.judge_model",
}


@dataclass
class CliArgs:
    model: str | None = None
    dataset: str | None = None
    split: str | None = None
    evaluation_method: str | None = None
    config: str | None = None
    output: str | None = None
    subset: str | None = None
    seed: int | None = None
    list: ComponentKind | None = None
    dataset_path: str | None = None
    batch_size: int | None = None
    max_workers: int | None = None
    base_url: str | None = None
    model_name: str | None = None
    scaling_method: str | None = None
    n: int | None = None
    beam_width: int | None = None
    temperature: float | None = None
    judge_template: str | None = None
    judge_model: str | None = None
    verbose: bool = False

    def overrides(self) -> dict[str, object]:
        return {key: getattr(self, flag) for flag, key in FLAG_KEYS.items() if getattr(self, flag) is not None}


def _kind(value: str) -> ComponentKind:
    try:
        return ComponentKind.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kheval", description="Korean LLM evaluation harness")
    p.add_argument("--model", help="backend name (e.g. mock, openai)")
    p.add_argument("--dataset", help="dataset name (e.g. fixture_mcq, generic_jsonl)")
    p.add_argument("--split", choices=["train", "validation", "test"])
    p.add_argument("--evaluation_method", help="string_match, log_likelihood, math_verify or llm_judge")
    p.add_argument("--config", help="YAML config file; flags override its values")
    p.add_argument("--output", help=f"report path (default {DEFAULT_OUTPUT})")
    p.add_argument("--subset", help="evaluate only samples with this subset label")
    p.add_argument("--seed", type=int)
    p.add_argument("--list", type=_kind, metavar="KIND", help="list registered datasets|backends|scalers|evaluators")
    p.add_argument("--dataset_path", help="JSONL file for generic_jsonl")
    p.add_argument("--batch_size", type=int)
    p.add_argument("--max_workers", type=int)
    p.add_argument("--base_url", help="OpenAI-compatible server URL (or KHEVAL_BASE_URL)")
    p.add_argument("--model_name", help="model id sent to the server")
    p.add_argument("--scaling_method", help="identity, best_of_n, self_consistency or beam_search")
    p.add_argument("--n", type=int, help="samples per prompt for best_of_n / self_consistency")
    p.add_argument("--beam_width", type=int)
    p.add_argument("--temperature", type=float, help="sampling temperature for stochastic scaling")
    p.add_argument("--judge_template", help="default_ko, honorific_ko or a .txt template path")
    p.add_argument("--judge_model", help="backend name used for judging (default: --model)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_args(argv: list[str] | None = None) -> CliArgs:
    """Parse flags; argparse exits with status 2 on usage errors."""
    ns = build_parser().parse_args(argv)
    return CliArgs(**vars(ns))


def _print_components(kind: ComponentKind) -> None:
    registry = default_registry()
    for name in registry.list_components(kind):
        desc = registry.resolve(kind, name).description
        print(f"{name}\t{desc}" if desc else name)


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        if exc.stage == "dataset":
            return EXIT_DATASET
        if exc.stage == "model":
            if isinstance(exc.cause, (BackendUnreachable, TransportError)):
                return EXIT_BACKEND
            return EXIT_CONFIG
        return EXIT_INTERNAL
    if isinstance(exc, (ConfigError, RegistryError)):
        return EXIT_CONFIG
    return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.list is not None:
        _print_components(args.list)
        return EXIT_OK

    try:
        config = load_config(args.config) if args.config else EvalConfig()
        config = config.merged(args.overrides())
    except (OSError, ConfigError) as exc:
        print(f"kheval: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = run(config)
    except KhevalError as exc:
        print(f"kheval: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 5
        print(f"kheval: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL

    output = Path(args.output or config.output_path or DEFAULT_OUTPUT)
    try:
        write_report(report, output)
    except OSError as exc:
        print(f"kheval: cannot write report: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    m = report.metrics
    print(f"accuracy={json.dumps(m['accuracy'])} n={m['n']} penalized={m['penalized_count']}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
