"""Pluggable type systems over a shared metagraph, mixed gradually.

Every registered type system is itself an atom, ``(TypeSystem "name")``, and
type expressions are ordinary atoms.  An atom with no annotation under a
system gets the verdict ``UNKNOWN`` there: the dynamic case, consistent with
everything.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import DuplicateName, UnknownAtom, UnknownSystem
from .store import AtomId, Snapshot, Store


class Verdict(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    UNKNOWN = "unknown"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TypeSystemId:
    atom: AtomId  # the (TypeSystem name) node
    name: str


class TypeSystemPlugin(Protocol):
    name: str

    def check_atom(self, snap: Snapshot, atom: AtomId, type_exprs: Sequence[AtomId]) -> Verdict:
        """Verdict for ``atom`` given its annotations under this system.

        Must be pure in ``snap``.  Returning UNKNOWN for an annotated atom is
        read by the registry as REJECT.
        """

    def types_consistent(self, snap: Snapshot, a: AtomId, b: AtomId) -> bool:
        """Reflexive and symmetric; need not be transitive."""


class TypeRegistry:
    """Append-only registry of type systems bound to one store."""

    def __init__(self, store: Store):
        self.store = store
        self._plugins: dict[str, tuple[TypeSystemId, TypeSystemPlugin]] = {}
        self._by_atom: dict[AtomId, str] = {}
        self._deferred: dict[str, TypeSystemPlugin] = {}
        self._lock = threading.RLock()

    def register(self, plugin: TypeSystemPlugin) -> TypeSystemId:
        with self._lock:
            if plugin.name in self._plugins or plugin.name in self._deferred:
                raise DuplicateName(f"type system {plugin.name!r} is already registered")
            atom = self.store.add_node("TypeSystem", plugin.name)
            sid = TypeSystemId(atom, plugin.name)
            self._plugins[plugin.name] = (sid, plugin)
            self._by_atom[atom] = plugin.name
            return sid

    def defer(self, plugin: TypeSystemPlugin) -> None:
        """Make ``plugin`` available, registering it (and creating its atom) on first use."""
        with self._lock:
            if plugin.name in self._plugins or plugin.name in self._deferred:
                raise DuplicateName(f"type system {plugin.name!r} is already registered")
            self._deferred[plugin.name] = plugin

    def system(self, name: str) -> TypeSystemId:
        with self._lock:
            if name in self._deferred:
                return self.register(self._deferred.pop(name))
            try:
                return self._plugins[name][0]
            except KeyError:
                raise UnknownSystem(f"no type system named {name!r}") from None

    def plugin(self, system: TypeSystemId | str) -> TypeSystemPlugin:
        name = system if isinstance(system, str) else system.name
        entry = self._plugins.get(name)
        if entry is None or (not isinstance(system, str) and entry[0] != system):
            raise UnknownSystem(f"type system {name!r} is not registered")
        return entry[1]

    def names(self) -> list[str]:
        return sorted([*self._plugins, *self._deferred])

    def name_of(self, system_atom: AtomId) -> str | None:
        return self._by_atom.get(system_atom)

    def annotate(self, atom: AtomId, system: TypeSystemId, type_expr: AtomId) -> None:
        self.plugin(system)
        self.store.annotate(atom, system.atom, type_expr)

    def strip(self, atom: AtomId, system: TypeSystemId, type_expr: AtomId) -> bool:
        self.plugin(system)
        return self.store.unannotate(atom, system.atom, type_expr)

    def annotations(self, atom: AtomId, system: TypeSystemId, snap: Snapshot | None = None) -> list[AtomId]:
        view = snap if snap is not None else self.store
        return sorted(expr for sys_atom, expr in view.annotations(atom) if sys_atom == system.atom)

    def check_atom(self, atom: AtomId, system: TypeSystemId, snap: Snapshot) -> Verdict:
        plugin = self.plugin(system)
        if atom not in snap:
            raise UnknownAtom(atom)
        exprs = self.annotations(atom, system, snap)
        if not exprs:
            return Verdict.UNKNOWN
        verdict = plugin.check_atom(snap, atom, exprs)
        return Verdict.REJECT if verdict is Verdict.UNKNOWN else verdict

    def consistent(self, a: AtomId | None, b: AtomId | None, system: TypeSystemId,
                   snap: Snapshot | None = None) -> bool:
        plugin = self.plugin(system)
        view = snap if snap is not None else self.store.snapshot()
        for t in (a, b):
            if t is not None and t not in view:
                raise UnknownAtom(t)
        if a is None or b is None:
            return True
        return plugin.types_consistent(view, a, b)


class SimpleArity:
    """Declares how many targets each link type takes.

    A type expression ``(ArityType "n")`` additionally pins the arity of the
    annotated atom.  Any other type expression only triggers the declared
    table.  Consistency is equality of type expressions.
    """

    name = "simple-arity"

    def __init__(self, arities: dict[str, int] | None = None):
        self.arities = dict(arities) if arities is not None else {
            "Inheritance": 2,
            "Similarity": 2,
            "Implication": 2,
            "Evaluation": 2,
            "Rule": 2,
        }

    def check_atom(self, snap: Snapshot, atom: AtomId, type_exprs: Sequence[AtomId]) -> Verdict:
        rec = snap.resolve(atom)
        arity = len(rec.targets)
        declared = self.arities.get(rec.type_name) if rec.is_link else None
        if declared is not None and declared != arity:
            return Verdict.REJECT
        for expr in type_exprs:
            t = snap.resolve(expr)
            if t.is_node and t.type_name == "ArityType":
                try:
                    wanted = int(t.name)
                except ValueError:
                    return Verdict.REJECT
                if wanted != arity:
                    return Verdict.REJECT
        return Verdict.ACCEPT

    def types_consistent(self, snap: Snapshot, a: AtomId, b: AtomId) -> bool:
        return a == b
