"""Rewrite rules stored as atoms, local application, and rule chaining.

A rule is the link ``(Rule premise conclusion)``, where the premise is a
single clause or an ``(And clause...)`` conjunction, and the rule's truth
value is the link's own truth value.  Forward and backward chaining are
built from the matcher's anchored steps.
"""

from __future__ import annotations

import itertools
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Mapping, NamedTuple, Sequence, Union

from .errors import InvalidRule, UnboundVariable, UnknownAtom
from .pattern import EMPTY, Bindings, Pattern, match_at, query, substitute, variables_of
from .store import AtomId, AtomSpec, LinkSpec, NodeSpec, Snapshot, Store, TruthValue, _View

# atoms asserted without a truth value count as certain
DEFAULT_TV = TruthValue(Fraction(1), Fraction(1))

FIFO = "fifo"
EXHAUSTIVE = "exhaustive"


def product_formula(rule_tv: TruthValue, premises: Sequence[TruthValue]) -> TruthValue:
    s = rule_tv.strength
    c = rule_tv.confidence
    for tv in premises:
        s *= tv.strength
        c *= tv.confidence
    return TruthValue(s, c)


def min_formula(rule_tv: TruthValue, premises: Sequence[TruthValue]) -> TruthValue:
    tvs = [rule_tv, *premises]
    return TruthValue(min(t.strength for t in tvs), min(t.confidence for t in tvs))


TV_FORMULAS: dict[str, Callable[[TruthValue, Sequence[TruthValue]], TruthValue]] = {
    "product": product_formula,
    "min": min_formula,
}


@dataclass(frozen=True)
class RewriteRule:
    atom: AtomId
    premise: tuple[AtomId, ...]
    conclusion: AtomId
    variables: frozenset[AtomId]
    tv: TruthValue = DEFAULT_TV
    formula: str = "product"

    @classmethod
    def from_atom(cls, view: _View, atom: AtomId, formula: str = "product") -> "RewriteRule":
        rec = view.resolve(atom)
        if not rec.is_link or rec.type_name != "Rule" or len(rec.targets) != 2:
            raise InvalidRule(f"atom {atom} is not a (Rule premise conclusion) link")
        if formula not in TV_FORMULAS:
            raise InvalidRule(f"unknown truth-value formula {formula!r}")
        premise_atom, conclusion = rec.targets
        prem = view.resolve(premise_atom)
        if prem.is_link and prem.type_name == "And":
            clauses = prem.targets
        else:
            clauses = (premise_atom,)
        if not clauses:
            raise InvalidRule("a rule premise needs at least one clause")
        variables = frozenset().union(*(variables_of(view, c) for c in clauses))
        invented = variables_of(view, conclusion) - variables
        if invented:
            raise InvalidRule(f"conclusion variables {sorted(invented)} do not occur in the premise")
        return cls(atom, tuple(clauses), conclusion, variables, rec.tv or DEFAULT_TV, formula)


class Derivation(NamedTuple):
    spec: AtomSpec
    tv: TruthValue
    bindings: Bindings


@dataclass(frozen=True)
class ChainStep:
    rule: AtomId
    bindings: Bindings
    produced: tuple[AtomId, ...]
    # self-contained specs (no id references), replayable on a copy of the initial store
    additions: tuple[tuple[AtomSpec, TruthValue], ...]


@dataclass
class ChainTrace:
    steps: list[ChainStep] = field(default_factory=list)
    initial_version: int = 0
    final_version: int = 0
    reached_fixpoint: bool = True
    applications: int = 0

    @property
    def budget_exhausted(self) -> bool:
        """The step budget ran out before a fixpoint (reported, not fatal)."""
        return not self.reached_fixpoint


def instantiate(template: AtomId, bindings: Mapping, snap: _View) -> AtomSpec:
    """Substitute ``bindings`` into ``template``; ground parts stay as ids."""
    result = _inst(snap, template, bindings)
    if isinstance(result, int):
        rec = snap.resolve(result)
        return NodeSpec(rec.type_name, rec.name) if rec.is_node else LinkSpec(rec.type_name, rec.targets)
    return result


def _inst(snap: _View, atom: AtomId, bindings: Mapping) -> Union[AtomId, AtomSpec]:
    rec = snap.resolve(atom)
    if rec.is_variable:
        if atom not in bindings:
            raise UnboundVariable(rec.name)
        return bindings[atom]
    if rec.is_node:
        return atom
    parts = [_inst(snap, t, bindings) for t in rec.targets]
    if all(isinstance(p, int) for p in parts) and tuple(parts) == rec.targets:
        return atom
    return LinkSpec(rec.type_name, tuple(parts))


def expand(view: _View, spec: Union[AtomId, AtomSpec]) -> AtomSpec:
    """Replace id references inside ``spec`` with nested specs (truth values dropped)."""
    if isinstance(spec, int):
        rec = view.resolve(spec)
        if rec.is_node:
            return NodeSpec(rec.type_name, rec.name)
        return LinkSpec(rec.type_name, tuple(expand(view, t) for t in rec.targets))
    if isinstance(spec, NodeSpec):
        return spec
    return LinkSpec(spec.type_name, tuple(expand(view, t) for t in spec.targets), spec.tv)


def apply_rule_at(rule: RewriteRule, locus: AtomId, snap: _View) -> list[Derivation]:
    """Every conclusion of ``rule`` whose premise match involves ``locus``."""
    if locus not in snap:
        raise UnknownAtom(locus)
    found: set[Bindings] = set()
    for i, clause in enumerate(rule.premise):
        seed = match_at(clause, locus, EMPTY, snap)
        if seed is None:
            continue
        rest = rule.premise[:i] + rule.premise[i + 1:]
        if rest:
            found |= query(Pattern(rest, rule.variables), snap, seed)
        else:
            found.add(seed.restrict(rule.variables))
    formula = TV_FORMULAS[rule.formula]
    out = []
    for b in sorted(found, key=Bindings.sort_key):
        premise_tvs = [snap.resolve(substitute(snap, c, b)).tv or DEFAULT_TV for c in rule.premise]
        out.append(Derivation(instantiate(rule.conclusion, b, snap), formula(rule.tv, premise_tvs), b))
    return out


def _new_atoms(before: _View, after: _View, spec) -> list[AtomId]:
    fresh = []

    def walk(s):
        if isinstance(s, int):
            return
        if isinstance(s, LinkSpec):
            for t in s.targets:
                walk(t)
        if before.lookup(s) is None:
            atom = after.lookup(s)
            if atom is not None:
                fresh.append(atom)

    walk(spec)
    return fresh


def _apply_tasks(tasks: list[tuple[RewriteRule, AtomId]], snap: Snapshot, workers: int):
    def run(chunk):
        return [(rule, apply_rule_at(rule, locus, snap)) for rule, locus in chunk]

    if workers <= 1 or len(tasks) < 2:
        return run(tasks)
    size = -(-len(tasks) // workers)
    chunks = [tasks[i:i + size] for i in range(0, len(tasks), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(itertools.chain.from_iterable(pool.map(run, chunks)))


def _loci(view: _View) -> list[AtomId]:
    return sorted(a for a in view.atom_ids() if not view._get(a).is_variable)


def forward_chain(store: Store, rules: Sequence[RewriteRule], max_steps: int,
                  policy: str = EXHAUSTIVE, workers: int = 1) -> ChainTrace:
    """Derive consequences of ``rules`` and commit them to ``store``.

    ``fifo`` runs one (rule, locus) application per step from an agenda seeded
    with every atom and extended with each new atom.  ``exhaustive`` runs in
    rounds: every application of a round reads the same snapshot, the results
    are committed as one batch, and the next round is anchored at what the
    batch changed.  There ``max_steps`` bounds the number of rounds, and the
    result does not depend on ``workers``.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    trace = ChainTrace(initial_version=store.version)
    rules = list(rules)
    if policy == FIFO:
        _forward_fifo(store, rules, max_steps, trace)
    elif policy == EXHAUSTIVE:
        _forward_rounds(store, rules, max_steps, workers, trace)
    else:
        raise ValueError(f"unknown policy {policy!r}")
    trace.final_version = store.version
    return trace


def _record(trace: ChainTrace, rule: RewriteRule, derivations, changed_flags, before, after):
    for d, changed in zip(derivations, changed_flags):
        if not changed:
            continue
        produced = _new_atoms(before, after, d.spec)
        top = after.lookup(d.spec)
        if top is not None and top not in produced:
            produced.append(top)  # existing atom whose truth value was revised
        trace.steps.append(ChainStep(rule.atom, d.bindings, tuple(produced),
                                     ((expand(before, d.spec), d.tv),)))


def _forward_fifo(store: Store, rules: list[RewriteRule], max_steps: int, trace: ChainTrace):
    agenda = deque((rule, atom) for atom in _loci(store) for rule in rules)
    while agenda:
        if trace.applications >= max_steps:
            trace.reached_fixpoint = False
            return
        rule, locus = agenda.popleft()
        trace.applications += 1
        if locus not in store:
            continue
        snap = store.snapshot()
        derivations = apply_rule_at(rule, locus, snap)
        if not derivations:
            continue
        committed = store.commit(snap, [replace(d.spec, tv=d.tv) for d in derivations])
        after = store.snapshot()
        before_steps = len(trace.steps)
        _record(trace, rule, derivations, committed.changed, snap, after)
        for step in trace.steps[before_steps:]:
            for atom in step.produced:
                agenda.extend((r, atom) for r in rules)


def _forward_rounds(store: Store, rules: list[RewriteRule], max_rounds: int, workers: int,
                    trace: ChainTrace):
    frontier = _loci(store)
    rounds = 0
    while frontier and rules:
        if rounds >= max_rounds:
            trace.reached_fixpoint = False
            return
        rounds += 1
        snap = store.snapshot()
        tasks = [(rule, atom) for atom in frontier for rule in rules]
        trace.applications += len(tasks)
        seen = set()
        batch: list[tuple[RewriteRule, Derivation]] = []
        for rule, derivations in _apply_tasks(tasks, snap, workers):
            for d in derivations:
                key = (rule.atom, d.bindings)
                if key not in seen:
                    seen.add(key)
                    batch.append((rule, d))
        if not batch:
            return
        committed = store.commit(snap, [replace(d.spec, tv=d.tv) for _, d in batch])
        after = store.snapshot()
        changed_atoms = set()
        for (rule, d), ch in zip(batch, committed.changed):
            start = len(trace.steps)
            _record(trace, rule, [d], [ch], snap, after)
            for step in trace.steps[start:]:
                changed_atoms.update(step.produced)
        frontier = sorted(a for a in changed_atoms if not after._get(a).is_variable)


def replay(trace: ChainTrace, initial: Snapshot) -> Store:
    """Re-apply a trace's additions to a copy of ``initial``."""
    store = Store.from_snapshot(initial)
    for step in trace.steps:
        for spec, tv in step.additions:
            store.add(replace(spec, tv=tv))
    return store


# -- backward chaining ---------------------------------------------------------


@dataclass(frozen=True)
class PVar:
    """A logic variable used while subgoaling (never stored)."""

    name: str


Term = Union[PVar, NodeSpec, LinkSpec]


@dataclass(frozen=True)
class Proof:
    bindings: Bindings
    trace: ChainTrace
    tv: TruthValue = DEFAULT_TV


def _walk(term: Term, subst: dict) -> Term:
    while isinstance(term, PVar) and term in subst:
        term = subst[term]
    return term


def _resolve_term(term: Term, subst: dict) -> Term:
    term = _walk(term, subst)
    if isinstance(term, LinkSpec):
        return LinkSpec(term.type_name, tuple(_resolve_term(t, subst) for t in term.targets))
    return term


def _occurs(var: PVar, term: Term, subst: dict) -> bool:
    term = _walk(term, subst)
    if term == var:
        return True
    if isinstance(term, LinkSpec):
        return any(_occurs(var, t, subst) for t in term.targets)
    return False


def _is_stored_variable(term: Term) -> bool:
    return isinstance(term, NodeSpec) and term.type_name in ("Variable", "SubgraphVariable")


def unify(a: Term, b: Term, subst: dict) -> dict | None:
    a = _walk(a, subst)
    b = _walk(b, subst)
    if a == b:
        return subst
    if isinstance(a, PVar) or isinstance(b, PVar):
        var, other = (a, b) if isinstance(a, PVar) else (b, a)
        if _is_stored_variable(other) or _occurs(var, other, subst):
            return None
        new = dict(subst)
        new[var] = other
        return new
    if isinstance(a, LinkSpec) and isinstance(b, LinkSpec):
        if a.type_name != b.type_name or len(a.targets) != len(b.targets):
            return None
        for x, y in zip(a.targets, b.targets):
            subst = unify(x, y, subst)
            if subst is None:
                return None
        return subst
    return None


def _term_vars(term: Term, out: list):
    if isinstance(term, PVar):
        if term not in out:
            out.append(term)
    elif isinstance(term, LinkSpec):
        for t in term.targets:
            _term_vars(t, out)
    return out


def _rename(term: Term, mapping: dict) -> Term:
    if isinstance(term, PVar):
        return mapping[term]
    if isinstance(term, LinkSpec):
        return LinkSpec(term.type_name, tuple(_rename(t, mapping) for t in term.targets))
    return term


def _canonical(term: Term) -> tuple[Term, list[PVar]]:
    vs = _term_vars(term, [])
    return _rename(term, {v: PVar(f"_{i}") for i, v in enumerate(vs)}), vs


class BackwardChainer:
    """Depth-bounded subgoaling with per-(goal, depth) answer tables.

    Rule variables are renamed apart for every use; unification is two-sided
    with an occurs check.  Goal variables bind only non-variable atoms.
    """

    def __init__(self, snap: _View, rules: Sequence[RewriteRule], data: _View | None = None):
        self.snap = snap
        # facts come from ``data``; goals and rules are read from ``snap``
        self.data = snap if data is None else data
        self.rules = list(rules)
        self._table: dict = {}
        self._terms: dict[AtomId, Term] = {}
        self._fresh = itertools.count()
        self._rule_terms = {r.atom: self._rule_shape(r) for r in self.rules}

    def term_of(self, atom: AtomId, variables: Mapping[AtomId, PVar] | None = None) -> Term:
        if variables is None:
            hit = self._terms.get(atom)
            if hit is not None:
                return hit
        rec = self.snap._get(atom)
        if variables is not None and atom in variables:
            term: Term = variables[atom]
        elif rec.is_node:
            term = NodeSpec(rec.type_name, rec.name)
        else:
            term = LinkSpec(rec.type_name, tuple(self.term_of(t, variables) for t in rec.targets))
        if variables is None:
            self._terms[atom] = term
        return term

    def _rule_shape(self, rule: RewriteRule):
        vmap = {v: PVar(f"r{rule.atom}:{v}") for v in rule.variables}
        premises = tuple(self.term_of(c, vmap) for c in rule.premise)
        return vmap, premises, self.term_of(rule.conclusion, vmap)

    def _renamed(self, rule: RewriteRule):
        vmap, premises, conclusion = self._rule_terms[rule.atom]
        k = next(self._fresh)
        fresh = {v: PVar(f"{v.name}#{k}") for v in vmap.values()}
        return ({atom: fresh[v] for atom, v in vmap.items()},
                [_rename(p, fresh) for p in premises], _rename(conclusion, fresh))

    def _fact_term(self, atom: AtomId) -> Term:
        if self.data is self.snap:
            return self.term_of(atom)
        rec = self.data._get(atom)
        if rec.is_node:
            return NodeSpec(rec.type_name, rec.name)
        return LinkSpec(rec.type_name, tuple(self._fact_term(t) for t in rec.targets))

    def _direct(self, goal: Term):
        snap = self.data
        if not _term_vars(goal, []):
            atom = snap.lookup(goal)
            return [] if atom is None else [atom]
        if isinstance(goal, PVar):
            return _loci(snap)
        anchors = [snap.lookup(t) for t in goal.targets if not _term_vars(t, [])]
        anchors = [a for a in anchors if a is not None]
        if len(anchors) < sum(1 for t in goal.targets if not _term_vars(t, [])):
            return []  # a ground part is absent, so no stored atom can match
        if anchors:
            anchor = min(anchors, key=lambda a: len(snap._state.incoming.get(a, ())))
            return sorted(link for link in snap._state.incoming.get(anchor, ())
                          if snap._get(link).type_name == goal.type_name)
        return sorted(snap.atoms_of_type(goal.type_name))

    def solve(self, goal: Term, depth: int) -> list[tuple[tuple[Term, ...], tuple[ChainStep, ...], TruthValue]]:
        """Answers for a canonical goal: (values of its variables, derivation, tv)."""
        key = (goal, depth)
        table = self._table.get(key)
        if table is not None:
            return table
        variables = _term_vars(goal, [])
        answers: dict[tuple, tuple[tuple[ChainStep, ...], TruthValue]] = {}

        def offer(values, steps, tv):
            old = answers.get(values)
            if old is None or len(steps) < len(old[0]):
                answers[values] = (steps, tv)

        for atom in self._direct(goal):
            s = unify(goal, self._fact_term(atom), {})
            if s is not None:
                offer(tuple(_resolve_term(v, s) for v in variables), (), self.data._get(atom).tv or DEFAULT_TV)

        if depth > 0:
            for rule in self.rules:
                vmap, premises, conclusion = self._renamed(rule)
                s = unify(goal, conclusion, {})
                if s is None:
                    continue
                formula = TV_FORMULAS[rule.formula]
                for s2, steps, tvs in self._solve_all(premises, s, depth - 1):
                    produced = _resolve_term(conclusion, s2)
                    if _term_vars(produced, []):
                        continue
                    tv = formula(rule.tv, tvs)
                    bindings = Bindings((atom, self._as_value(_resolve_term(v, s2))) for atom, v in vmap.items())
                    existing = self.data.lookup(produced)
                    step = ChainStep(rule.atom, bindings, () if existing is None else (existing,),
                                     ((produced, tv),))
                    offer(tuple(_resolve_term(v, s2) for v in variables), steps + (step,), tv)

        result = sorted(answers.items(), key=lambda kv: (len(kv[1][0]), repr(kv[0])))
        table = [(values, steps, tv) for values, (steps, tv) in result]
        self._table[key] = table
        return table

    def _solve_all(self, goals: list[Term], subst: dict, depth: int):
        if not goals:
            yield subst, (), ()
            return
        resolved = [_resolve_term(g, subst) for g in goals]
        i = min(range(len(resolved)), key=lambda j: len(_term_vars(resolved[j], [])))
        goal = resolved[i]
        rest = goals[:i] + goals[i + 1:]
        canonical, originals = _canonical(goal)
        for values, steps, tv in self.solve(canonical, depth):
            s = subst
            for var, value in zip(originals, values):
                s = unify(var, value, s)
                if s is None:
                    break
            if s is None:
                continue
            for s2, more, tvs in self._solve_all(rest, s, depth):
                yield s2, steps + more, (tv,) + tvs

    def _as_value(self, term: Term):
        atom = self.data.lookup(term) if not isinstance(term, PVar) else None
        return atom if atom is not None else term

    def prove(self, goal: Pattern, max_depth: int) -> list[Proof]:
        if max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        vmap = {v: PVar(f"g{v}") for v in goal.variables}
        clauses = [self.term_of(c, vmap) for c in goal.clauses]
        proofs: dict[Bindings, Proof] = {}
        for s, steps, tvs in self._solve_all(clauses, {}, max_depth):
            bindings = Bindings((atom, self._as_value(_resolve_term(v, s))) for atom, v in vmap.items())
            old = proofs.get(bindings)
            if old is None or len(steps) < len(old.trace.steps):
                tv = tvs[0] if len(tvs) == 1 else product_formula(DEFAULT_TV, tvs)
                trace = ChainTrace(list(steps), self.data.version, self.data.version, True, len(steps))
                proofs[bindings] = Proof(bindings, trace, tv)
        return [proofs[b] for b in sorted(proofs, key=lambda b: repr(sorted(b.items(), key=str)))]


def backward_chain(goal: Pattern, rules: Sequence[RewriteRule], max_depth: int, snap: _View,
                   data: _View | None = None) -> list[Proof]:
    """Bindings making ``goal`` hold, directly or through at most ``max_depth`` nested rule uses.

    ``goal`` and the rules live in ``snap``.  Facts are read from ``data``
    (default ``snap``), so a goal written into a scratch copy of the data is
    not a fact just because it was written down.
    """
    return BackwardChainer(snap, rules, data).prove(goal, max_depth)
