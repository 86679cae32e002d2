"""Explicitly executed procedures implemented in the host language.

``(Execution (GroundedSchema "name") arg...)`` produces an atom spec and
``(Evaluation (GroundedPredicate "name") arg...)`` produces a truth value.
Pattern matching never calls these; only :meth:`GroundedRegistry.execute`
does.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from .errors import ArityMismatch, CallbackFailure, DuplicateName, UnknownProcedure
from .sexpr import format_fraction
from .store import Atom, AtomSpec, NodeSpec, TruthValue, _View


class Kind(enum.Enum):
    SCHEMA = "GroundedSchema"
    PREDICATE = "GroundedPredicate"


@dataclass(frozen=True)
class GroundedProcedure:
    name: str
    arity: int
    kind: Kind
    callback: Callable[..., Any]
    pure: bool = True


@dataclass(frozen=True)
class GroundedResult:
    value: AtomSpec | TruthValue
    procedure: str
    # impure results are handed back for the caller to commit
    needs_commit: bool = False


_CALL_LINKS = {"Execution": Kind.SCHEMA, "Evaluation": Kind.PREDICATE}


class GroundedRegistry:
    def __init__(self):
        self._procs: dict[str, GroundedProcedure] = {}
        self._lock = threading.Lock()
        self._serial = threading.Lock()

    def register(self, proc: GroundedProcedure) -> None:
        with self._lock:
            if proc.name in self._procs:
                raise DuplicateName(f"grounded procedure {proc.name!r} is already registered")
            self._procs[proc.name] = proc

    def __contains__(self, name: str) -> bool:
        return name in self._procs

    def names(self) -> list[str]:
        return sorted(self._procs)

    def execute(self, call, snap: _View) -> GroundedResult:
        rec = snap.resolve(call)
        kind = _CALL_LINKS.get(rec.type_name) if rec.is_link else None
        if kind is None or not rec.targets:
            raise UnknownProcedure(f"atom {call} is not an Execution or Evaluation link")
        head = snap.resolve(rec.targets[0])
        if not head.is_node or head.type_name != kind.value:
            raise UnknownProcedure(f"{rec.type_name} must start with a {kind.value} node")
        proc = self._procs.get(head.name)
        if proc is None or proc.kind is not kind:
            raise UnknownProcedure(f"no {kind.value} named {head.name!r} is registered")
        args = [snap.resolve(a) for a in rec.targets[1:]]
        if len(args) != proc.arity:
            raise ArityMismatch(f"{proc.name} takes {proc.arity} arguments, got {len(args)}")
        try:
            if proc.pure:
                value = proc.callback(*args)
            else:
                with self._serial:
                    value = proc.callback(*args)
        except Exception as e:  # noqa: BLE001 - reported with the procedure name
            raise CallbackFailure(proc.name, e) from e
        return GroundedResult(value, proc.name, not proc.pure)


def _number(atom: Atom) -> Fraction:
    if atom.type_name != "Number":
        raise TypeError(f"expected a Number node, got {atom.type_name}")
    return Fraction(atom.name)


def _number_spec(q: Fraction) -> NodeSpec:
    return NodeSpec("Number", format_fraction(q))


class Counter:
    """Impure test hook: counts its invocations."""

    def __init__(self):
        self.calls = 0

    def __call__(self, *args):
        self.calls += 1
        return _number_spec(Fraction(self.calls))


def builtin_registry() -> GroundedRegistry:
    reg = GroundedRegistry()
    reg.register(GroundedProcedure("num:add", 2, Kind.SCHEMA, lambda x, y: _number_spec(_number(x) + _number(y))))
    reg.register(GroundedProcedure("num:mul", 2, Kind.SCHEMA, lambda x, y: _number_spec(_number(x) * _number(y))))
    reg.register(GroundedProcedure(
        "str:eq", 2, Kind.PREDICATE,
        lambda x, y: TruthValue(Fraction(int(x.name == y.name)), Fraction(1))))
    reg.register(GroundedProcedure("counter", 0, Kind.SCHEMA, Counter(), pure=False))
    return reg
