"""Exception hierarchy shared across the harness."""

from __future__ import annotations


class KhevalError(Exception):
    """Base class for every error raised by the harness."""


# registry
class RegistryError(KhevalError):
    pass


class DuplicateName(RegistryError):
    pass


class InvalidName(RegistryError):
    pass


class UnknownComponent(RegistryError):
    def __init__(self, kind: str, name: str, available: list[str]):
        self.kind = kind
        self.name = name
        self.available = available
        listing = ", ".join(available) if available else "(none)"
        super().__init__(f"unknown {kind} {name!r}; available: {listing}")


# datasets
class DatasetError(KhevalError):
    pass


class SchemaError(DatasetError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class ValidationError(DatasetError):
    def __init__(self, ids: list[str], reason: str):
        self.ids = ids
        super().__init__(f"{reason}: {', '.join(ids)}")


# backends
class BackendError(KhevalError):
    pass


class TransportError(BackendError):
    """Retryable failure: connection problems, timeouts, 5xx, 429."""


class BackendRefusal(BackendError):
    """Non-retryable rejection such as an HTTP 4xx."""


class BackendUnreachable(BackendError):
    pass


class CapabilityError(BackendError):
    pass


class AlignmentError(KhevalError):
    pass


# scaling / evaluation
class MissingLogprobs(KhevalError):
    pass


class ParseFailure(KhevalError):
    pass


class UnknownTemplate(KhevalError):
    pass


# pipeline
class ConfigError(KhevalError):
    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"config key {key!r}: {reason}")


class HeterogeneousConfigs(KhevalError):
    pass


class StageError(KhevalError):
    def __init__(self, stage: str, sample_id: str | None, cause: BaseException):
        self.stage = stage
        self.sample_id = sample_id
        self.cause = cause
        where = f" (sample {sample_id})" if sample_id is not None else ""
        super().__init__(f"{stage} stage failed{where}: {cause}")
