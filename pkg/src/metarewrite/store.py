"""RAM-resident metagraph store.

Atoms are content addressed: a node is identified by ``(type, name)`` and a
link by ``(type, targets)``, so inserting the same structure twice returns the
same id.  Links may target links.

Readers work on immutable :class:`Snapshot` views.  The live :class:`Store`
shares its state with the most recent snapshot and copies it lazily on the
next write, so a burst of writes with no snapshot in between costs nothing
extra.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Union

from .errors import Conflict, HasIncoming, UnknownAtom
from .sexpr import format_fraction, quote

AtomId = int

NODE = "Node"
LINK = "Link"
VARIABLE_TYPES = frozenset({"Variable", "SubgraphVariable"})


@dataclass(frozen=True, order=True)
class TruthValue:
    strength: Fraction
    confidence: Fraction

    def __post_init__(self):
        s = Fraction(self.strength)
        c = Fraction(self.confidence)
        if not (0 <= s <= 1 and 0 <= c <= 1):
            raise ValueError(f"truth value components must lie in [0, 1], got ({s}, {c})")
        object.__setattr__(self, "strength", s)
        object.__setattr__(self, "confidence", c)

    def __str__(self):
        return f"(tv {format_fraction(self.strength)} {format_fraction(self.confidence)})"


def revise(old: TruthValue | None, new: TruthValue | None) -> TruthValue | None:
    """Keep the higher-confidence truth value; the incumbent wins ties."""
    if new is None:
        return old
    if old is None or new.confidence > old.confidence:
        return new
    return old


@dataclass(frozen=True)
class Atom:
    kind: str
    type_name: str
    name: str = ""
    targets: tuple[AtomId, ...] = ()
    tv: TruthValue | None = None
    annotations: frozenset[tuple[AtomId, AtomId]] = frozenset()

    @property
    def is_node(self) -> bool:
        return self.kind == NODE

    @property
    def is_link(self) -> bool:
        return self.kind == LINK

    @property
    def is_variable(self) -> bool:
        return self.kind == NODE and self.type_name in VARIABLE_TYPES

    @property
    def key(self):
        return (self.kind, self.type_name, self.name, self.targets)


@dataclass(frozen=True)
class NodeSpec:
    type_name: str
    name: str
    tv: TruthValue | None = field(default=None, compare=False)


@dataclass(frozen=True)
class LinkSpec:
    """A link to be inserted.  Targets are existing ids or nested specs."""

    type_name: str
    targets: tuple[Union[AtomId, NodeSpec, "LinkSpec"], ...]
    tv: TruthValue | None = field(default=None, compare=False)


AtomSpec = Union[NodeSpec, LinkSpec]


@dataclass
class Counters:
    """Work counters used as a portable efficiency proxy."""

    inspected: int = 0  # records yielded by index-backed enumeration
    scanned: int = 0  # records visited by full linear scans

    def reset(self):
        self.inspected = 0
        self.scanned = 0


@dataclass(frozen=True)
class Committed:
    version: int
    ids: tuple[AtomId, ...] = ()
    changed: tuple[bool, ...] = ()


class _State:
    __slots__ = ("version", "atoms", "by_key", "by_type", "incoming", "annotations", "annotation_refs",
                 "facts")

    def __init__(self):
        self.version = 0
        self.atoms: dict[AtomId, Atom] = {}
        self.by_key: dict[tuple, AtomId] = {}
        self.by_type: dict[str, dict[AtomId, None]] = {}
        self.incoming: dict[AtomId, set[AtomId]] = {}
        self.annotations: dict[AtomId, frozenset[tuple[AtomId, AtomId]]] = {}
        self.annotation_refs: dict[AtomId, int] = {}
        # derived per-id facts; ids are never reused, so copies share this
        self.facts: dict = {}

    def copy(self) -> "_State":
        new = _State()
        new.version = self.version
        new.atoms = dict(self.atoms)
        new.by_key = dict(self.by_key)
        new.by_type = {k: dict(v) for k, v in self.by_type.items()}
        new.incoming = {k: set(v) for k, v in self.incoming.items()}
        new.annotations = dict(self.annotations)
        new.annotation_refs = dict(self.annotation_refs)
        new.facts = self.facts
        return new


class _View:
    """Read operations shared by the live store and its snapshots."""

    _state: _State
    counters: Counters

    @property
    def version(self) -> int:
        return self._state.version

    def __len__(self):
        return len(self._state.atoms)

    def __contains__(self, atom) -> bool:
        return atom in self._state.atoms

    def resolve(self, atom: AtomId) -> Atom:
        try:
            rec = self._state.atoms[atom]
        except (KeyError, TypeError):
            raise UnknownAtom(atom) from None
        notes = self._state.annotations.get(atom)
        return replace(rec, annotations=notes) if notes else rec

    def _get(self, atom: AtomId) -> Atom:
        try:
            return self._state.atoms[atom]
        except (KeyError, TypeError):
            raise UnknownAtom(atom) from None

    def type_name(self, atom: AtomId) -> str:
        return self._get(atom).type_name

    def is_variable(self, atom: AtomId) -> bool:
        return self._get(atom).is_variable

    def incoming(self, atom: AtomId) -> frozenset[AtomId]:
        self._get(atom)
        return frozenset(self._state.incoming.get(atom, ()))

    def atoms_of_type(self, type_name: str) -> Iterator[AtomId]:
        bucket = self._state.by_type.get(type_name)
        if not bucket:
            return
        counters = self.counters
        for atom in list(bucket):
            counters.inspected += 1
            yield atom

    def count_of_type(self, type_name: str) -> int:
        return len(self._state.by_type.get(type_name, ()))

    def type_names(self) -> list[str]:
        return sorted(t for t, b in self._state.by_type.items() if b)

    def atom_ids(self) -> Iterator[AtomId]:
        """Linear scan over every atom (no index)."""
        counters = self.counters
        for atom in list(self._state.atoms):
            counters.scanned += 1
            yield atom

    def lookup_node(self, type_name: str, name: str) -> AtomId | None:
        return self._state.by_key.get((NODE, type_name, name, ()))

    def lookup_link(self, type_name: str, targets: Iterable[AtomId]) -> AtomId | None:
        return self._state.by_key.get((LINK, type_name, "", tuple(targets)))

    def lookup(self, spec: AtomSpec | AtomId) -> AtomId | None:
        """Id of the atom structurally equal to ``spec``, or None if absent."""
        if isinstance(spec, int):
            return spec if spec in self._state.atoms else None
        if isinstance(spec, NodeSpec):
            return self.lookup_node(spec.type_name, spec.name)
        ids = []
        for t in spec.targets:
            tid = self.lookup(t)
            if tid is None:
                return None
            ids.append(tid)
        return self.lookup_link(spec.type_name, ids)

    def annotations(self, atom: AtomId) -> frozenset[tuple[AtomId, AtomId]]:
        self._get(atom)
        return self._state.annotations.get(atom, frozenset())

    def annotated_atoms(self) -> list[AtomId]:
        return sorted(a for a, notes in self._state.annotations.items() if notes)

    def to_spec(self, atom: AtomId) -> AtomSpec:
        """Fully nested spec for ``atom`` (no id references)."""
        rec = self._get(atom)
        if rec.is_node:
            return NodeSpec(rec.type_name, rec.name, rec.tv)
        return LinkSpec(rec.type_name, tuple(self.to_spec(t) for t in rec.targets), rec.tv)

    def structural_set(self) -> frozenset:
        """Id-independent description of the content, for comparing stores."""
        return frozenset(self.to_spec(a) for a in self._state.atoms)

    def render(self, atom: AtomId, *, with_tv: bool = False, _memo=None) -> str:
        memo = {} if _memo is None else _memo
        return self._render(atom, memo) if not with_tv else self._render_top(atom, memo)

    def _render(self, atom: AtomId, memo: dict) -> str:
        hit = memo.get(atom)
        if hit is not None:
            return hit
        rec = self._get(atom)
        if rec.is_node:
            text = f"({rec.type_name} {quote(rec.name)})"
        elif rec.targets:
            text = f"({rec.type_name} " + " ".join(self._render(t, memo) for t in rec.targets) + ")"
        else:
            text = f"({rec.type_name})"
        memo[atom] = text
        return text

    def _render_top(self, atom: AtomId, memo: dict) -> str:
        text = self._render(atom, memo)
        tv = self._state.atoms[atom].tv
        return text if tv is None else text[:-1] + f" {tv})"

    def dump(self) -> str:
        """Canonical text: one s-expression per atom plus one per annotation, sorted."""
        memo: dict = {}
        entries = []
        for atom, rec in self._state.atoms.items():
            key = (rec.type_name, rec.name, tuple(self._render(t, memo) for t in rec.targets))
            entries.append((key, self._render_top(atom, memo)))
        for atom, notes in self._state.annotations.items():
            for system, expr in notes:
                parts = (self._render(atom, memo), self._render(system, memo), self._render(expr, memo))
                entries.append((("Typed", "", parts), "(Typed " + " ".join(parts) + ")"))
        entries.sort()
        return "".join(text + "\n" for _, text in entries)


class Snapshot(_View):
    """Immutable view of the store at one version."""

    def __init__(self, state: _State, counters: Counters):
        self._state = state
        self.counters = counters

    def __repr__(self):
        return f"<Snapshot version={self.version} atoms={len(self)}>"


class Store(_View):
    """The live store.  All mutation is serialized through one lock."""

    def __init__(self):
        self._state = _State()
        self._shared = False
        self._next_id = 1
        self._lock = threading.RLock()
        self._own_facts = True
        self.counters = Counters()

    @classmethod
    def from_snapshot(cls, snap: Snapshot) -> "Store":
        """A new independent store whose content (and ids) equal ``snap``."""
        store = cls()
        store._state = snap._state
        store._shared = True
        # this lineage may hand out ids the parent also uses, so the
        # per-id fact cache is detached on the first write
        store._own_facts = False
        store._next_id = max(snap._state.atoms, default=0) + 1
        return store

    def __repr__(self):
        return f"<Store version={self.version} atoms={len(self)}>"

    def snapshot(self) -> Snapshot:
        with self._lock:
            self._shared = True
            return Snapshot(self._state, self.counters)

    # -- writes -------------------------------------------------------------

    def _writable(self) -> _State:
        if self._shared:
            self._state = self._state.copy()
            self._shared = False
            if not self._own_facts:
                self._state.facts = dict(self._state.facts)
                self._own_facts = True
        return self._state

    def _insert(self, st: _State, kind: str, type_name: str, name: str,
                targets: tuple[AtomId, ...], tv: TruthValue | None) -> tuple[AtomId, bool]:
        key = (kind, type_name, name, targets)
        existing = st.by_key.get(key)
        if existing is not None:
            rec = st.atoms[existing]
            merged = revise(rec.tv, tv)
            if merged is rec.tv:
                return existing, False
            st.atoms[existing] = replace(rec, tv=merged)
            return existing, True
        atom = self._next_id
        self._next_id += 1
        st.atoms[atom] = Atom(kind, type_name, name, targets, tv)
        st.by_key[key] = atom
        st.by_type.setdefault(type_name, {})[atom] = None
        for t in set(targets):
            st.incoming.setdefault(t, set()).add(atom)
        return atom, True

    def _add_spec(self, st: _State, spec: AtomSpec | AtomId) -> tuple[AtomId, bool]:
        if isinstance(spec, int):
            if spec not in st.atoms:
                raise UnknownAtom(spec)
            return spec, False
        if isinstance(spec, NodeSpec):
            if not spec.type_name or not spec.name:
                raise ValueError("nodes need a nonempty type name and name")
            return self._insert(st, NODE, spec.type_name, spec.name, (), spec.tv)
        if not spec.type_name:
            raise ValueError("links need a nonempty type name")
        ids = []
        changed = False
        for t in spec.targets:
            tid, ch = self._add_spec(st, t)
            ids.append(tid)
            changed |= ch
        atom, ch = self._insert(st, LINK, spec.type_name, "", tuple(ids), spec.tv)
        return atom, changed or ch

    def _validate_spec(self, st: _State, spec, removed: frozenset, base: Snapshot | None):
        if isinstance(spec, int):
            if spec in st.atoms and spec not in removed:
                return
            if base is not None and spec in base:
                raise Conflict(f"target {spec} was removed after the base snapshot")
            raise UnknownAtom(spec)
        if isinstance(spec, NodeSpec):
            if not spec.type_name or not spec.name:
                raise ValueError("nodes need a nonempty type name and name")
            return
        if not spec.type_name:
            raise ValueError("links need a nonempty type name")
        for t in spec.targets:
            self._validate_spec(st, t, removed, base)

    def add_node(self, type_name: str, name: str, tv: TruthValue | None = None) -> AtomId:
        return self.add(NodeSpec(type_name, name, tv))

    def add_link(self, type_name: str, targets: Iterable[AtomId | AtomSpec],
                 tv: TruthValue | None = None) -> AtomId:
        return self.add(LinkSpec(type_name, tuple(targets), tv))

    def add(self, spec: AtomSpec) -> AtomId:
        return self.add_tracked(spec)[0]

    def add_tracked(self, spec: AtomSpec) -> tuple[AtomId, bool]:
        """Insert ``spec``; also report whether the store content changed."""
        with self._lock:
            self._validate_spec(self._state, spec, frozenset(), None)
            st = self._writable()
            atom, changed = self._add_spec(st, spec)
            if changed:
                st.version += 1
            return atom, changed

    def _referrers(self, st: _State, atom: AtomId) -> set[AtomId]:
        return set(st.incoming.get(atom, ()))

    def _delete(self, st: _State, atom: AtomId):
        rec = st.atoms.pop(atom)
        del st.by_key[rec.key]
        bucket = st.by_type[rec.type_name]
        del bucket[atom]
        if not bucket:
            del st.by_type[rec.type_name]
        for t in set(rec.targets):
            inc = st.incoming.get(t)
            if inc is not None:
                inc.discard(atom)
                if not inc:
                    del st.incoming[t]
        st.incoming.pop(atom, None)
        for system, expr in st.annotations.pop(atom, ()):
            self._unref(st, system)
            self._unref(st, expr)

    def _unref(self, st: _State, atom: AtomId):
        n = st.annotation_refs[atom] - 1
        if n:
            st.annotation_refs[atom] = n
        else:
            del st.annotation_refs[atom]

    def remove(self, atom: AtomId):
        with self._lock:
            st = self._state
            if atom not in st.atoms:
                raise UnknownAtom(atom)
            refs = self._referrers(st, atom)
            if refs or st.annotation_refs.get(atom):
                raise HasIncoming(atom, refs)
            st = self._writable()
            self._delete(st, atom)
            st.version += 1

    def annotate(self, atom: AtomId, system: AtomId, type_expr: AtomId) -> bool:
        """Record ``atom : type_expr`` under ``system``.  Returns False if already present."""
        with self._lock:
            for a in (atom, system, type_expr):
                if a not in self._state.atoms:
                    raise UnknownAtom(a)
            note = (system, type_expr)
            if note in self._state.annotations.get(atom, ()):
                return False
            st = self._writable()
            st.annotations[atom] = st.annotations.get(atom, frozenset()) | {note}
            st.annotation_refs[system] = st.annotation_refs.get(system, 0) + 1
            st.annotation_refs[type_expr] = st.annotation_refs.get(type_expr, 0) + 1
            st.version += 1
            return True

    def unannotate(self, atom: AtomId, system: AtomId, type_expr: AtomId) -> bool:
        with self._lock:
            note = (system, type_expr)
            if note not in self._state.annotations.get(atom, ()):
                return False
            st = self._writable()
            rest = st.annotations[atom] - {note}
            if rest:
                st.annotations[atom] = rest
            else:
                del st.annotations[atom]
            self._unref(st, system)
            self._unref(st, type_expr)
            st.version += 1
            return True

    def commit(self, base: Snapshot, additions: Iterable[AtomSpec] = (),
               removals: Iterable[AtomId] = ()) -> Committed:
        """Apply a batch atomically, validated against the current state.

        A stale ``base`` alone is fine.  Raises :class:`Conflict` when a removal
        target has vanished or gained referrers since ``base``; the caller may
        rebuild the batch and retry.
        """
        additions = list(additions)
        removals = list(dict.fromkeys(removals))
        with self._lock:
            st = self._state
            removed = frozenset(removals)
            for atom in removals:
                if atom not in st.atoms:
                    if atom in base:
                        raise Conflict(f"atom {atom} was removed after the base snapshot")
                    raise UnknownAtom(atom)
            for atom in removals:
                refs = self._referrers(st, atom) - removed
                if refs:
                    before = base._state.incoming.get(atom, set()) if atom in base else set()
                    gained = refs - before
                    if gained:
                        raise Conflict(f"atom {atom} gained referrers {sorted(gained)} after the base snapshot")
                    raise HasIncoming(atom, refs)
                if st.annotation_refs.get(atom):
                    raise HasIncoming(atom, ())
            for spec in additions:
                self._validate_spec(st, spec, removed, base)

            st = self._writable()
            pending = set(removals)
            while pending:
                # links go before their targets
                ready = sorted(a for a in pending if not (st.incoming.get(a, set()) & pending))
                for atom in ready:
                    self._delete(st, atom)
                    pending.discard(atom)
            ids = []
            changed = []
            for spec in additions:
                atom, ch = self._add_spec(st, spec)
                ids.append(atom)
                changed.append(ch)
            st.version += 1
            return Committed(st.version, tuple(ids), tuple(changed))
