"""Static pattern matching, split into small composable steps.

The building blocks are anchored matching at one atom (:func:`match_at`),
index-driven candidate generation (:func:`candidate_roots`) and locus
movement (:func:`move_locus`).  :func:`query` composes them.
:func:`brute_force_query` is an independent oracle: it only substitutes and
looks atoms up by content.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .errors import CapExceeded, InvalidStep, UnknownAtom
from .store import AtomId, _View

DEFAULT_BRUTE_FORCE_CAP = 2000


class Bindings(Mapping):
    """Immutable, hashable map from variable atoms to bound atoms."""

    __slots__ = ("_items", "_hash")

    def __init__(self, items: Mapping | Iterable[tuple[AtomId, AtomId]] = ()):
        self._items = dict(items)
        self._hash = None

    def __getitem__(self, key):
        return self._items[key]

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._items.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Bindings):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self._items == dict(other)
        return NotImplemented

    def __repr__(self):
        inner = ", ".join(f"{k}->{v}" for k, v in sorted(self._items.items()))
        return "Bindings{" + inner + "}"

    def extend(self, var: AtomId, value: AtomId) -> "Bindings":
        new = Bindings(self._items)
        new._items[var] = value
        return new

    def restrict(self, variables: Iterable[AtomId]) -> "Bindings":
        return Bindings((v, self._items[v]) for v in variables if v in self._items)

    def sort_key(self):
        return tuple(sorted(self._items.items()))


EMPTY = Bindings()


def variables_of(view: _View, atom: AtomId) -> frozenset[AtomId]:
    found = set()
    stack = [atom]
    while stack:
        a = stack.pop()
        rec = view.resolve(a)
        if rec.is_variable:
            found.add(a)
        elif rec.is_link:
            stack.extend(rec.targets)
    return frozenset(found)


@dataclass(frozen=True)
class Pattern:
    clauses: tuple[AtomId, ...]
    variables: frozenset[AtomId]
    root: AtomId | None = None

    @classmethod
    def of(cls, view: _View, clauses: Iterable[AtomId], root: AtomId | None = None) -> "Pattern":
        clauses = tuple(clauses)
        if not clauses:
            raise ValueError("a pattern needs at least one clause")
        variables = frozenset().union(*(variables_of(view, c) for c in clauses))
        return cls(clauses, variables, root)

    @classmethod
    def from_atom(cls, view: _View, atom: AtomId) -> "Pattern":
        """``(Query c...)`` and ``(And c...)`` are conjunctions; anything else is one clause."""
        rec = view.resolve(atom)
        if rec.is_link and rec.type_name in ("Query", "And") and rec.targets:
            return cls.of(view, rec.targets, atom)
        return cls.of(view, (atom,), atom)


@dataclass(frozen=True)
class ToTarget:
    index: int


@dataclass(frozen=True)
class ToIncoming:
    link: AtomId


Step = Union[ToTarget, ToIncoming]


@dataclass(frozen=True)
class MatchCursor:
    locus: AtomId
    partial: Bindings = EMPTY
    remaining: tuple[AtomId, ...] = field(default=())


def match_at(clause: AtomId, target: AtomId, seed: Mapping = EMPTY, snap: _View = None) -> Bindings | None:
    """Anchored structural match of ``clause`` against ``target``.

    Returns the extension of ``seed`` or None.  No search happens here.
    """
    if snap is None:
        raise TypeError("match_at needs a snapshot")
    if clause not in snap:
        raise UnknownAtom(clause)
    if target not in snap:
        raise UnknownAtom(target)
    bound = dict(seed)
    if _match(snap, clause, target, bound):
        return Bindings(bound)
    return None


def _match(snap: _View, pat: AtomId, tgt: AtomId, bound: dict) -> bool:
    if not _has_variables(snap, pat):
        return pat == tgt
    p = snap._get(pat)
    if p.is_variable:
        prior = bound.get(pat)
        if prior is not None:
            return prior == tgt
        if snap._get(tgt).is_variable:
            return False
        bound[pat] = tgt
        return True
    t = snap._get(tgt)
    if not t.is_link or t.type_name != p.type_name or len(t.targets) != len(p.targets):
        return False
    for ps, ts in zip(p.targets, t.targets):
        if not _match(snap, ps, ts, bound):
            return False
    return True


def _has_variables(snap: _View, atom: AtomId) -> bool:
    facts = snap._state.facts
    key = ("has_vars", atom)
    hit = facts.get(key)
    if hit is not None:
        return hit
    rec = snap._get(atom)
    if rec.is_variable:
        result = True
    elif rec.is_node:
        result = False
    else:
        result = any(_has_variables(snap, t) for t in rec.targets)
    facts[key] = result
    return result


def candidate_roots(clause: AtomId, snap: _View) -> Iterator[AtomId]:
    """Atoms worth trying ``match_at`` against; always includes every true match."""
    rec = snap.resolve(clause)
    if rec.is_variable:
        for atom in snap.atom_ids():
            if not snap._get(atom).is_variable:
                yield atom
    elif not _has_variables(snap, clause):
        yield clause
    elif rec.is_link:
        yield from snap.atoms_of_type(rec.type_name)


def move_locus(cursor: MatchCursor, step: Step, snap: _View) -> MatchCursor:
    if cursor.locus not in snap:
        raise InvalidStep(f"locus {cursor.locus} does not resolve")
    if isinstance(step, ToTarget):
        targets = snap._get(cursor.locus).targets
        if not 0 <= step.index < len(targets):
            raise InvalidStep(f"target index {step.index} out of range for arity {len(targets)}")
        return MatchCursor(targets[step.index], cursor.partial, cursor.remaining)
    if isinstance(step, ToIncoming):
        if step.link not in snap._state.incoming.get(cursor.locus, ()):
            raise InvalidStep(f"atom {step.link} does not point at {cursor.locus}")
        return MatchCursor(step.link, cursor.partial, cursor.remaining)
    raise InvalidStep(f"unknown step {step!r}")


def _anchor_options(snap: _View, clause: AtomId, bound: Mapping) -> tuple[int, list[AtomId]] | None:
    """Cheapest way to reach candidate roots from an already-known atom.

    Looks for a direct target of the clause that is concrete or an already
    bound variable, then walks from that atom to its incoming links.
    """
    rec = snap._get(clause)
    if not rec.is_link:
        return None
    best = None
    for sub in rec.targets:
        s = snap._get(sub)
        if s.is_variable:
            anchor = bound.get(sub)
        elif not _has_variables(snap, sub):
            anchor = sub
        else:
            anchor = None
        if anchor is None:
            continue
        size = len(snap._state.incoming.get(anchor, ()))
        if best is None or size < best[0]:
            best = (size, anchor)
    if best is None:
        return None
    size, anchor = best
    cursor = MatchCursor(anchor, Bindings(bound))
    roots = []
    for link in sorted(snap._state.incoming.get(anchor, ())):
        moved = move_locus(cursor, ToIncoming(link), snap)
        if snap._get(moved.locus).type_name == rec.type_name:
            roots.append(moved.locus)
    return size, roots


def _clause_cost(snap: _View, clause: AtomId, bound: Mapping) -> tuple[int, int]:
    rec = snap._get(clause)
    unbound = len([v for v in variables_of(snap, clause) if v not in bound])
    if rec.is_variable:
        return (0 if clause in bound else len(snap), unbound)
    if not _has_variables(snap, clause):
        return (1, 0)
    anchored = _anchor_options(snap, clause, bound)
    if anchored is not None:
        return (anchored[0], unbound)
    return (snap.count_of_type(rec.type_name), unbound)


def _roots_for(snap: _View, clause: AtomId, bound: Mapping) -> Iterable[AtomId]:
    rec = snap._get(clause)
    if rec.is_variable and clause in bound:
        return (bound[clause],)
    anchored = _anchor_options(snap, clause, bound)
    if anchored is not None and anchored[0] < snap.count_of_type(rec.type_name):
        return anchored[1]
    return candidate_roots(clause, snap)


def query(pattern: Pattern, snap: _View, seed: Mapping = EMPTY) -> set[Bindings]:
    """All consistent bindings of the pattern variables satisfying every clause."""
    for c in pattern.clauses:
        if c not in snap:
            raise UnknownAtom(c)
    results: set[Bindings] = set()
    start = dict(seed)
    _solve(snap, list(pattern.clauses), start, pattern.variables, results)
    return results


def _solve(snap: _View, remaining: list[AtomId], bound: dict, variables, results: set):
    if not remaining:
        results.add(Bindings(bound).restrict(variables))
        return
    # cheapest clause first; the choice never changes the result set
    idx = min(range(len(remaining)), key=lambda i: _clause_cost(snap, remaining[i], bound))
    clause = remaining[idx]
    rest = remaining[:idx] + remaining[idx + 1:]
    cursor = MatchCursor(clause, Bindings(bound), tuple(rest))
    for root in _roots_for(snap, clause, bound):
        trial = dict(cursor.partial)
        if _match(snap, clause, root, trial):
            _solve(snap, rest, trial, variables, results)


def query_in(pattern: Pattern, view: _View, data: _View) -> set[Bindings]:
    """Matches of a pattern stored in ``view`` that hold in ``data``.

    ``view`` must extend ``data`` with the same ids (a scratch copy holding
    the pattern).  Pattern atoms that exist only in ``view`` are not facts.
    """
    out = set()
    for b in query(pattern, view):
        if all(substitute(view, c, b) in data for c in pattern.clauses):
            out.add(b)
    return out


def substitute(snap: _View, atom: AtomId, assignment: Mapping) -> AtomId | None:
    """Id of ``atom`` with variables replaced, or None if that atom is absent."""
    rec = snap._get(atom)
    if rec.is_variable:
        return assignment.get(atom, atom)
    if rec.is_node:
        return atom
    ids = []
    for t in rec.targets:
        s = substitute(snap, t, assignment)
        if s is None:
            return None
        ids.append(s)
    return snap.lookup_link(rec.type_name, ids)


def _compile(snap: _View, atom: AtomId):
    """Clause as a template: ground subtrees collapse to their ids."""
    rec = snap._get(atom)
    if rec.is_variable:
        return ("var", atom)
    if not _has_variables(snap, atom):
        return ("id", atom)
    return ("link", (rec.type_name, tuple(_compile(snap, t) for t in rec.targets)))


def brute_force_query(pattern: Pattern, snap: _View, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> set[Bindings]:
    """Enumerate assignments of pattern variables to non-variable atoms.

    A clause is tested as soon as all its variables are assigned, by
    substituting and checking that the resulting atom exists.
    """
    if len(snap) > cap:
        raise CapExceeded(f"store has {len(snap)} atoms, oracle cap is {cap}")
    universe = [a for a in sorted(snap.atom_ids()) if not snap._get(a).is_variable]
    clause_vars = [(c, variables_of(snap, c)) for c in pattern.clauses]

    order: list[AtomId] = []
    pending = list(clause_vars)
    while len(order) < len(pattern.variables):
        # pick the variable that completes a clause soonest
        best = None
        for _, vs in pending:
            missing = [v for v in sorted(vs) if v not in order]
            if missing and (best is None or len(missing) < len(best)):
                best = missing
        if best is None:
            best = sorted(v for v in pattern.variables if v not in order)
        order.append(best[0])

    checks: list[list[AtomId]] = [[] for _ in range(len(order) + 1)]
    for c, vs in clause_vars:
        level = max((order.index(v) + 1 for v in vs), default=0)
        checks[level].append(c)

    results: set[Bindings] = set()
    assignment: dict[AtomId, AtomId] = {}
    compiled = [[_compile(snap, c) for c in level] for level in checks]
    lookup_link = snap.lookup_link

    def build(template):
        kind, payload = template
        if kind == "id":
            return payload
        if kind == "var":
            return assignment[payload]
        ids = []
        for child in payload[1]:
            t = build(child)
            if t is None:
                return None
            ids.append(t)
        return lookup_link(payload[0], ids)

    def holds(level: int) -> bool:
        return all(build(t) is not None for t in compiled[level])

    def assign(level: int):
        if level == len(order):
            results.add(Bindings(assignment))
            return
        var = order[level]
        for value in universe:
            assignment[var] = value
            if holds(level + 1):
                assign(level + 1)
        del assignment[var]

    if holds(0):
        assign(0)
    return results
