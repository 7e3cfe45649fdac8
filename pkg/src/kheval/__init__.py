"""Registry-based, config-driven evaluation harness for Korean LLM benchmarks."""

__version__ = "0.1.0"

from .config import EvalConfig, load_config  # noqa: E402
from .datasets import Sample, filter_subset, load_jsonl, validate_dataset  # noqa: E402
from .pipeline import RunReport, run, run_multi_model, write_report  # noqa: E402
from .registry import ComponentEntry, ComponentKind, Registry, default_registry  # noqa: E402

__all__ = [
    "ComponentEntry",
    "ComponentKind",
    "EvalConfig",
    "Registry",
    "RunReport",
    "Sample",
    "default_registry",
    "filter_subset",
    "load_config",
    "load_jsonl",
    "run",
    "run_multi_model",
    "validate_dataset",
    "write_report",
]
