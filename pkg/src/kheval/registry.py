"""Name-indexed component registries.

Components are registered with explicit calls rather than decorators::

    reg = Registry()
    reg.register(ComponentKind.EVALUATOR, "my_metric",
                 ComponentEntry("my_metric", MyMetric, "exact match on digits"))
    reg.resolve(ComponentKind.EVALUATOR, "my_metric").factory({})

``default_registry()`` returns the process-wide registry with every built-in
component already registered.
"""

from __future__ import annotations

import enum
import re
import threading
from dataclasses import dataclass
from typing import Any, Callable

from .errors import DuplicateName, InvalidName, UnknownComponent

_NAME_RE = re.compile(r"^[a-z][a-z0-9]*(?:_[a-z0-9]+)*$")


class ComponentKind(str, enum.Enum):
    DATASET = "dataset"
    BACKEND = "backend"
    SCALER = "scaler"
    EVALUATOR = "evaluator"

    @classmethod
    def parse(cls, value: str | ComponentKind) -> ComponentKind:
        """Accept ``"evaluator"``, ``"evaluators"`` or an existing member."""
        if isinstance(value, ComponentKind):
            return value
        key = value.strip().lower()
        if key.endswith("s"):
            key = key[:-1]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value + "s" for k in cls)
            raise ValueError(f"unknown component kind {value!r}; choose from {choices}") from None


@dataclass(frozen=True)
class ComponentEntry:
    name: str
    factory: Callable[[dict[str, Any]], Any]
    description: str = ""

    def create(self, params: dict[str, Any] | None = None) -> Any:
        return self.factory(dict(params or {}))


class Registry:
    def __init__(self) -> None:
        self._entries: dict[ComponentKind, dict[str, ComponentEntry]] = {k: {} for k in ComponentKind}

    def register(self, kind: ComponentKind | str, name: str, entry: ComponentEntry) -> None:
        kind = ComponentKind.parse(kind)
        if not isinstance(name, str) or not _NAME_RE.match(name):
            raise InvalidName(f"component name must be nonempty lowercase snake_case, got {name!r}")
        table = self._entries[kind]
        if name in table:
            raise DuplicateName(f"{kind.value} {name!r} is already registered")
        table[name] = entry

    def resolve(self, kind: ComponentKind | str, name: str) -> ComponentEntry:
        kind = ComponentKind.parse(kind)
        try:
            return self._entries[kind][name]
        except KeyError:
            raise UnknownComponent(kind.value, name, self.list_components(kind)) from None

    def list_components(self, kind: ComponentKind | str) -> list[str]:
        return sorted(self._entries[ComponentKind.parse(kind)])

    def __contains__(self, key: tuple[ComponentKind | str, str]) -> bool:
        kind, name = key
        return name in self._entries[ComponentKind.parse(kind)]

    def copy(self) -> Registry:
        """Independent registry holding the same entries (handy for tests/plugins)."""
        other = Registry()
        for kind, table in self._entries.items():
            other._entries[kind] = dict(table)
        return other


_default: Registry | None = None
_default_lock = threading.Lock()


def register_builtins(registry: Registry) -> Registry:
    # imported lazily: component modules import this one
    from . import backends, datasets, evaluators, scaling

    datasets.register(registry)
    backends.register(registry)
    scaling.register(registry)
    evaluators.register(registry)
    return registry


def default_registry() -> Registry:
    global _default
    with _default_lock:
        if _default is None:
            _default = register_builtins(Registry())
        return _default


def builtin_registry() -> Registry:
    """A fresh registry with only the built-ins, detached from the default one."""
    return register_builtins(Registry())
