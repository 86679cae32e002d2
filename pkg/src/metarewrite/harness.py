"""Seeded generators and the property suites built on them.

Every case derives all of its randomness from one integer seed, so a failure
reported as ``seed`` is reproduced by running that seed alone.
"""

from __future__ import annotations

import random
import time
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

from .errors import SuiteFailure
from .lam.check import BOOL, IllTyped, Reason, StepBudgetExceeded, check_against, typecheck
from .lam.encode import IsoTypePlugin, decode_term, encode_term
from .lam.evaluate import eval_distribution
from .lam.terms import (STAR, Ann, App, CastDown, CastUp, Choice, Const, Lam, Mult, Term, Var,
                        alpha_eq, apps, arrow, pretty)
from .pattern import Pattern, brute_force_query, query
from .rewrite import EXHAUSTIVE, RewriteRule, backward_chain, forward_chain
from .store import AtomId, LinkSpec, NodeSpec, Store, TruthValue
from .typesys import SimpleArity, TypeRegistry, Verdict


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    atom_budget: int = 200
    clause_budget: int = 3
    variable_budget: int = 3
    term_depth: int = 4

    def __post_init__(self):
        for name in ("atom_budget", "clause_budget", "variable_budget", "term_depth"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def rng(self, salt: str = "") -> random.Random:
        return random.Random(f"{self.seed}:{salt}")


# -- stores and patterns -------------------------------------------------------

_TVS = [None, None, TruthValue(Fraction(9, 10), Fraction(8, 10)), TruthValue(Fraction(1, 2), Fraction(1, 4))]


def gen_store(cfg: GeneratorConfig) -> Store:
    """A random metagraph with at most ``cfg.atom_budget`` atoms.

    Links target nodes and other links.  A budget of one yields a single node.
    """
    rng = cfg.rng("store")
    store = Store()
    n_nodes = max(1, min(cfg.atom_budget, cfg.atom_budget // 4 + rng.randint(0, 3)))
    nodes = [store.add_node(rng.choice(["Concept", "Concept", "Predicate"]), f"n{i}") for i in range(n_nodes)]
    links: list[AtomId] = []
    attempts = 0
    while len(store) < cfg.atom_budget and attempts < 8 * cfg.atom_budget:
        attempts += 1
        room = cfg.atom_budget - len(store)

        def pick():
            if links and rng.random() < 0.2:
                return rng.choice(links)
            return rng.choice(nodes)

        kind = rng.randrange(5)
        tv = rng.choice(_TVS)
        if kind == 0 or room < 2:
            spec = LinkSpec(rng.choice(["Inheritance", "Similarity"]), (pick(), pick()), tv)
        elif kind == 1:
            spec = LinkSpec("Evaluation", (rng.choice(nodes), LinkSpec("List", (pick(), pick()))), tv)
        elif kind == 2:
            spec = LinkSpec("Member", (pick(), pick()), tv)
        elif kind == 3:
            spec = LinkSpec("Implication", (pick(), pick()), tv)
        else:
            spec = LinkSpec("List", tuple(pick() for _ in range(rng.randint(1, 3))))
        links.append(store.add(spec))
    return store


def _var_names(cfg: GeneratorConfig) -> list[str]:
    return [f"$v{i}" for i in range(cfg.variable_budget)]


def gen_pattern(cfg: GeneratorConfig, store: Store, *, per_clause_vars: int = 2) -> Pattern:
    """A conjunctive pattern over ``store``; its clauses are added to the store.

    Most clauses are abstracted from stored links, mapping the same atom to
    the same variable, so they usually match.  Later clauses prefer links
    touching atoms already abstracted, which makes the conjunction a join.
    Variables are drawn from ``$v0 .. $v{variable_budget-1}``.
    """
    rng = cfg.rng("pattern")
    names = _var_names(cfg)
    links = sorted(a for a in store.atom_ids() if store.resolve(a).is_link and not _mentions_variable(store, a))
    clauses: list[AtomId] = []
    chosen: dict[AtomId, str] = {}
    for _ in range(rng.randint(1, cfg.clause_budget)):
        budget = [per_clause_vars]

        def var_for(atom: AtomId) -> str | None:
            if budget[0] == 0:
                return None
            name = chosen.get(atom)
            if name is None:
                fresh = [n for n in names if n not in chosen.values()]
                if not fresh:
                    return None
                name = chosen[atom] = fresh[0]
            budget[0] -= 1
            return name

        def abstract(atom: AtomId, top: bool):
            rec = store.resolve(atom)
            if not top and rng.random() < (0.8 if atom in chosen else 0.35):
                v = var_for(atom)
                if v is not None:
                    return NodeSpec("Variable", v)
            if rec.is_node:
                return NodeSpec(rec.type_name, rec.name)
            return LinkSpec(rec.type_name, tuple(abstract(t, False) for t in rec.targets))

        if links and rng.random() < 0.85:
            joined = sorted({r for a in chosen for r in store.incoming(a)} & set(links))
            source = joined if joined and rng.random() < 0.8 else links
            spec = abstract(rng.choice(source), True)
        else:
            parts = []
            for _ in range(2):
                fresh = [n for n in names if n not in chosen.values()]
                pool = sorted(set(chosen.values())) + fresh[:1]
                parts.append(NodeSpec("Variable", rng.choice(pool)) if pool and len(parts) < per_clause_vars
                             else NodeSpec("Concept", "n0"))
            spec = LinkSpec(rng.choice(["Inheritance", "Member", "Similarity"]), tuple(parts))
        clauses.append(store.add(spec))
    return Pattern.of(store, clauses)


def _mentions_variable(store, atom: AtomId) -> bool:
    rec = store.resolve(atom)
    if rec.is_variable:
        return True
    return rec.is_link and any(_mentions_variable(store, t) for t in rec.targets)


def gen_dag_store(cfg: GeneratorConfig) -> tuple[Store, list[tuple[str, str]]]:
    """Inheritance edges of a random DAG, within ``cfg.atom_budget`` atoms."""
    rng = cfg.rng("dag")
    n = max(2, min(12, cfg.atom_budget // 5))
    names = [f"c{i}" for i in range(n)]
    edges: set[tuple[str, str]] = set()
    limit = max(1, cfg.atom_budget - n)
    for _ in range(rng.randint(1, 2 * n)):
        i, j = sorted(rng.sample(range(n), 2))
        if len(edges) < limit:
            edges.add((names[i], names[j]))
    store = Store()
    for name in names:
        store.add_node("Concept", name)
    for a, b in sorted(edges):
        store.add_link("Inheritance", [NodeSpec("Concept", a), NodeSpec("Concept", b)])
    return store, sorted(edges)


DEDUCTION = """(Rule (And (Inheritance (Variable "$a") (Variable "$b"))
                (Inheritance (Variable "$b") (Variable "$c")))
           (Inheritance (Variable "$a") (Variable "$c")))"""


def add_deduction_rule(store: Store) -> RewriteRule:
    from .loader import load_text
    (atom,) = load_text(DEDUCTION, store)
    return RewriteRule.from_atom(store, atom)


def transitive_closure(edges) -> set[tuple[str, str]]:
    """Plain graph reachability, the oracle for chaining."""
    succ: dict[str, set[str]] = {}
    for a, b in edges:
        succ.setdefault(a, set()).add(b)
    out = set()
    for start in succ:
        seen, todo = set(), deque(succ[start])
        while todo:
            x = todo.popleft()
            if x in seen:
                continue
            seen.add(x)
            todo.extend(succ.get(x, ()))
        out |= {(start, x) for x in seen}
    return out


def inheritance_pairs(store) -> set[tuple[str, str]]:
    pairs = set()
    for link in store.atoms_of_type("Inheritance"):
        a, b = (store.resolve(t) for t in store.resolve(link).targets)
        if a.type_name == "Concept" and b.type_name == "Concept":
            pairs.add((a.name, b.name))
    return pairs


# -- lambda terms --------------------------------------------------------------

_CONSTS = ["a", "b", "c", "tt", "ff"]


def gen_term(cfg: GeneratorConfig, salt: str = "term") -> Term:
    """A closed, untyped-in-general term of depth at most ``cfg.term_depth``."""
    rng = cfg.rng(salt)
    counter = [0]

    def go(depth: int, scope: list[str]) -> Term:
        if depth <= 0 or rng.random() < 0.25:
            if scope and rng.random() < 0.5:
                return Var(rng.choice(scope))
            return Const(rng.choice(_CONSTS + ["not", "Pair"]))
        k = rng.randrange(8)
        if k == 0:
            counter[0] += 1
            x = f"x{counter[0]}"
            ann = rng.choice([None, BOOL])
            return Lam(x, rng.choice(list(Mult)), ann, go(depth - 1, scope + [x]))
        if k in (1, 2):
            return App(go(depth - 1, scope), go(depth - 1, scope))
        if k == 3:
            p = Fraction(rng.randint(1, 3), 4)
            return Choice(p, go(depth - 1, scope), go(depth - 1, scope))
        if k == 4:
            return CastDown(go(depth - 1, scope))
        if k == 5:
            return Ann(CastUp(go(depth - 1, scope)), App(Lam("A", Mult.MANY, STAR, Var("A")), BOOL))
        if k == 6:
            return apps(Const("Pair"), go(depth - 1, scope), go(depth - 1, scope))
        return App(Const("not"), go(depth - 1, scope))

    return go(cfg.term_depth, [])


def gen_bool_term(rng: random.Random, depth: int, linear: str | None = None) -> Term:
    """A well-typed Bool term.  With ``linear`` set it uses that variable exactly once."""
    if linear is not None:
        if depth <= 0 or rng.random() < 0.3:
            return Var(linear)
        k = rng.randrange(3)
        if k == 0:
            p = Fraction(rng.randint(1, 3), 4)
            return Choice(p, gen_bool_term(rng, depth - 1, linear), gen_bool_term(rng, depth - 1, linear))
        if k == 1:
            # a linear argument to a linear function stays linear
            return App(Lam("y", Mult.ONE, BOOL, Var("y")), gen_bool_term(rng, depth - 1, linear))
        return CastDown(Ann(CastUp(gen_bool_term(rng, depth - 1, linear)),
                            App(Lam("A", Mult.MANY, STAR, Var("A")), BOOL)))
    if depth <= 0 or rng.random() < 0.3:
        return Const(rng.choice(["a", "b", "c", "tt", "ff"]))
    k = rng.randrange(3)
    if k == 0:
        return App(Const("not"), gen_bool_term(rng, depth - 1))
    if k == 1:
        return apps(Const("and"), gen_bool_term(rng, depth - 1), gen_bool_term(rng, depth - 1))
    return Choice(Fraction(1, 2), gen_bool_term(rng, depth - 1), gen_bool_term(rng, depth - 1))


def gen_linear_term(cfg: GeneratorConfig) -> tuple[Term, Term]:
    """A term from the linear identity corpus, with its type."""
    rng = cfg.rng("linear")
    x = "x"
    body = gen_bool_term(rng, cfg.term_depth, linear=x)
    if rng.random() < 0.5:
        return Lam(x, Mult.ONE, BOOL, body), arrow(BOOL, BOOL, Mult.ONE)
    # two linear binders consumed by the linear pair constructor
    other = gen_bool_term(rng, cfg.term_depth, linear="z")
    term = Lam(x, Mult.ONE, BOOL, Lam("z", Mult.ONE, BOOL, apps(Const("Pair"), body, other)))
    return term, arrow(BOOL, arrow(BOOL, Const("BoolPair"), Mult.ONE), Mult.ONE)


def gen_duplicating_term(cfg: GeneratorConfig) -> Term:
    """A well-formed term whose linear binder is used at least twice at runtime."""
    rng = cfg.rng("dup")
    x = "x"

    def uses(depth: int) -> Term:
        # every branch mentions x at least once
        return gen_bool_term(rng, depth, linear=x)

    shape = rng.randrange(4)
    if shape == 0:
        body = apps(Const("Pair"), uses(cfg.term_depth - 1), uses(cfg.term_depth - 1))
    elif shape == 1:
        body = App(Const("not"), uses(cfg.term_depth - 1))  # unrestricted argument: counts as many
    elif shape == 2:
        body = apps(Const("and"), uses(cfg.term_depth - 1), gen_bool_term(rng, 1))
    else:
        body = App(Lam("y", Mult.MANY, BOOL, Var("y")), uses(cfg.term_depth - 1))
    return Lam(x, Mult.ONE, BOOL, body)


# -- reports -------------------------------------------------------------------

@dataclass
class CaseResult:
    seed: int
    status: str  # "pass" or "fail"
    detail: str = ""


@dataclass
class SuiteReport:
    suite: str
    seed: int
    cases: list[CaseResult] = field(default_factory=list)
    metrics: dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def failures(self) -> list[CaseResult]:
        return [c for c in self.cases if c.status != "pass"]

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> str:
        """Machine-readable: one ``seed suite status`` line per case."""
        return "".join(f"{c.seed} {self.suite} {c.status}\n" for c in self.cases)

    def text(self) -> str:
        out = [f"suite {self.suite}: {len(self.cases)} cases, {len(self.failures)} failures "
               f"({self.seconds:.2f}s)"]
        for key in sorted(self.metrics):
            out.append(f"  {key}: {self.metrics[key]}")
        for c in self.failures[:20]:
            out.append(f"  FAIL seed={c.seed}: {c.detail}")
        return "\n".join(out) + "\n"


# -- suites --------------------------------------------------------------------

def _oracle_case(cfg: GeneratorConfig, metrics) -> str | None:
    store = gen_store(cfg)
    pattern = gen_pattern(cfg, store)
    snap = store.snapshot()
    got = query(pattern, snap)
    want = brute_force_query(pattern, snap, cap=max(2000, len(snap)))
    metrics["matches"] = metrics.get("matches", 0) + len(want)
    if got != want:
        return f"query found {len(got)} bindings, brute force {len(want)}"
    return None


def _chaining_case(cfg: GeneratorConfig, metrics) -> str | None:
    store, edges = gen_dag_store(replace(cfg, atom_budget=min(cfg.atom_budget, 100)))
    rule = add_deduction_rule(store)
    initial = store.snapshot()
    closure = transitive_closure(edges)
    trace = forward_chain(store, [rule], max_steps=64, policy=EXHAUSTIVE)
    if not trace.reached_fixpoint:
        return "no fixpoint within 64 rounds"
    if inheritance_pairs(store) != closure:
        return "forward chaining differs from the transitive closure"
    # forward rounds and backward depth agree level by level
    for depth in range(0, 4):
        partial = Store.from_snapshot(initial)
        forward_chain(partial, [rule], max_steps=depth, policy=EXHAUSTIVE)
        goal_store = Store.from_snapshot(initial)
        from .loader import load_text
        (goal,) = load_text('(Inheritance (Variable "$x") (Variable "$y"))', goal_store)
        proofs = backward_chain(Pattern.from_atom(goal_store, goal), [rule], depth, goal_store.snapshot())
        back = set()
        for p in proofs:
            vals = {goal_store.resolve(v).name: val for v, val in p.bindings.items()}
            x, y = vals["$x"], vals["$y"]
            back.add((_node_name(goal_store, x), _node_name(goal_store, y)))
        if back != inheritance_pairs(partial):
            return f"forward and backward disagree at depth {depth}"
    metrics["closure_pairs"] = metrics.get("closure_pairs", 0) + len(closure)
    return None


def _node_name(store, value) -> str:
    return store.resolve(value).name if isinstance(value, int) else value.name


def _determinism_case(cfg: GeneratorConfig, metrics) -> str | None:
    store, _ = gen_dag_store(replace(cfg, atom_budget=min(cfg.atom_budget, 100)))
    add_deduction_rule(store)
    base = store.snapshot()
    dumps = set()
    for workers in (1, 2, 4, 8):
        s = Store.from_snapshot(base)
        rule = RewriteRule.from_atom(s, next(iter(s.atoms_of_type("Rule"))))
        forward_chain(s, [rule], max_steps=64, policy=EXHAUSTIVE, workers=workers)
        dumps.add(s.dump())
    if len(dumps) != 1:
        return "dumps differ across worker counts"
    # two disjoint batches commit to the same content in either order
    rng = cfg.rng("batches")
    batch_a = [LinkSpec("Similarity", (NodeSpec("Concept", f"p{i}"), NodeSpec("Concept", "q"))) for i in range(rng.randint(1, 5))]
    batch_b = [LinkSpec("Member", (NodeSpec("Concept", f"r{i}"), NodeSpec("Concept", "q"))) for i in range(rng.randint(1, 5))]
    results = set()
    for first, second in ((batch_a, batch_b), (batch_b, batch_a)):
        s = Store.from_snapshot(base)
        snap = s.snapshot()
        s.commit(snap, first)
        s.commit(snap, second)
        results.add(s.dump())
    if len(results) != 1:
        return "commit order changed the result"
    return None


CBV_TERM = App(Lam("x", Mult.MANY, BOOL, apps(Const("Pair"), Var("x"), Var("x"))),
               Choice(Fraction(1, 2), Const("a"), Const("b")))


def _lambda_case(cfg: GeneratorConfig, metrics) -> str | None:
    # casts: no cast is ill typed, one cast is typed
    try:
        typecheck(App(Const("not"), Const("b0")))
        return "uncast b0 was accepted"
    except IllTyped as e:
        if e.reason is not Reason.TYPE_MISMATCH:
            return f"uncast b0 rejected for the wrong reason: {e.reason.value}"
    if not alpha_eq(typecheck(App(Const("not"), CastDown(Const("b0")))), BOOL):
        return "cast-down b0 did not type as Bool"
    # checking terminates inside the step bound on arbitrary terms
    term = gen_term(cfg)
    try:
        typecheck(term, max_steps=100_000)
    except IllTyped:
        pass
    except StepBudgetExceeded:
        return f"type checking did not finish: {pretty(term)}"
    # linearity both ways
    good, ty = gen_linear_term(cfg)
    try:
        check_against(good, ty)
    except IllTyped as e:
        return f"linear corpus term rejected: {pretty(good)}: {e}"
    bad = gen_duplicating_term(cfg)
    try:
        typecheck(bad)
        return f"duplicated linear variable accepted: {pretty(bad)}"
    except IllTyped as e:
        if e.reason is not Reason.LINEARITY_VIOLATION:
            return f"duplicating term rejected for {e.reason.value}: {pretty(bad)}"
    # confluence of the two expansion orders, with exact mass
    bfs = eval_distribution(term, 30, "bfs")
    dfs = eval_distribution(term, 30, "dfs")
    if bfs != dfs:
        return f"expansion orders disagree on {pretty(term)}"
    if bfs.total != 1:
        return f"mass {bfs.total} on {pretty(term)}"
    cbv = eval_distribution(CBV_TERM, 50)
    pair = lambda l, r: apps(Const("Pair"), Const(l), Const(r))  # noqa: E731
    if cbv.outcomes != {pair("a", "a"): Fraction(1, 2), pair("b", "b"): Fraction(1, 2)} or cbv[pair("a", "b")]:
        return "call-by-value pair test failed"
    # encoding round-trip
    store = Store()
    if decode_term(store, encode_term(store, term)) != term:
        return f"encode/decode changed {pretty(term)}"
    return None


def _gradual_case(cfg: GeneratorConfig, metrics) -> str | None:
    rng = cfg.rng("gradual")
    store = gen_store(replace(cfg, atom_budget=min(cfg.atom_budget, 60)))
    types = TypeRegistry(store)
    arity = types.register(SimpleArity())
    iso = types.register(IsoTypePlugin())
    atoms = sorted(store.atom_ids())
    arity_types = [store.add_node("ArityType", str(k)) for k in (1, 2, 3)] + [store.add_node("Concept", "Thing")]
    for atom in rng.sample(atoms, min(len(atoms), rng.randint(1, 12))):
        types.annotate(atom, arity, rng.choice(arity_types))
    for _ in range(rng.randint(1, 6)):
        term = gen_term(replace(cfg, term_depth=3), salt=f"g{rng.random()}")
        t_atom = encode_term(store, term)
        ty = rng.choice([BOOL, arrow(BOOL, BOOL), Const("BoolPair")])
        types.annotate(t_atom, iso, encode_term(store, ty))
    notes = [(a, s, e) for a in sorted(store.annotated_atoms()) for s, e in sorted(store.annotations(a))]
    systems = {arity.atom: arity, iso.atom: iso}

    def verdicts(snap):
        return {(a, sid.name): types.check_atom(a, sid, snap) for a in snap.atom_ids() for sid in systems.values()}

    before = verdicts(store.snapshot())
    atom, system_atom, expr = rng.choice(notes)
    types.strip(atom, systems[system_atom], expr)
    after = verdicts(store.snapshot())
    metrics["annotations"] = metrics.get("annotations", 0) + len(notes)
    for key, v in before.items():
        if key[0] != atom and v is Verdict.ACCEPT and after[key] is Verdict.REJECT:
            return f"stripping an annotation of {atom} flipped {key} to reject"
    return None


BENCH_ATOMS = 100_000
BENCH_TYPED = 50


def build_bench_store(total: int = BENCH_ATOMS, typed: int = BENCH_TYPED) -> tuple[Store, Pattern]:
    """``total`` atoms of which exactly ``typed`` have type Member, counting the clause itself."""
    store = Store()
    n_nodes = total // 2
    nodes = [store.add_node("Concept", f"k{i}") for i in range(n_nodes)]
    i = 0
    # leave room for the typed links, two variables and the clause
    while len(store) < total - typed - 2:
        a, b = nodes[i % n_nodes], nodes[(i * 7 + 1) % n_nodes]
        store.add_link("Inheritance", [a, b])
        i += 1
    for j in range(typed - 1):
        store.add_link("Member", [nodes[j], nodes[j + 1]])
    # two free variables, so no anchor narrows the search below the type index
    clause = store.add_link("Member", [store.add_node("Variable", "$x"), store.add_node("Variable", "$y")])
    return store, Pattern.of(store, [clause])


def run_bench(total: int = BENCH_ATOMS, typed: int = BENCH_TYPED) -> dict[str, int]:
    store, pattern = build_bench_store(total, typed)
    snap = store.snapshot()
    store.counters.reset()
    results = query(pattern, snap)
    return {
        "store_size": len(snap),
        "typed_atoms": snap.count_of_type("Member"),
        "inspected": store.counters.inspected,
        "scanned": store.counters.scanned,
        "results": len(results),
    }


SUITES: dict[str, Callable[[GeneratorConfig, dict], str | None]] = {
    "oracle": _oracle_case,
    "chaining": _chaining_case,
    "determinism": _determinism_case,
    "lambda": _lambda_case,
    "gradual": _gradual_case,
}


def run_suite(name: str, cfg: GeneratorConfig | None = None, cases: int = 100, *,
              raise_on_failure: bool = False) -> SuiteReport:
    """Run ``cases`` seeded cases of suite ``name``; case ``i`` uses seed ``cfg.seed + i``."""
    cfg = cfg or GeneratorConfig()
    start = time.perf_counter()
    report = SuiteReport(name, cfg.seed)
    if name == "bench":
        stats = run_bench()
        report.metrics.update(stats)
        ok = stats["inspected"] == stats["typed_atoms"] and stats["scanned"] == 0
        detail = "" if ok else f"inspected {stats['inspected']} of {stats['store_size']} atoms"
        report.cases.append(CaseResult(cfg.seed, "pass" if ok else "fail", detail))
    else:
        case = SUITES.get(name)
        if case is None:
            raise ValueError(f"unknown suite {name!r}; choose from {', '.join(sorted([*SUITES, 'bench']))}")
        for i in range(cases):
            seed = cfg.seed + i
            try:
                problem = case(replace(cfg, seed=seed), report.metrics)
            except Exception as e:  # noqa: BLE001 - a crash is a failing case
                problem = f"{type(e).__name__}: {e}"
            report.cases.append(CaseResult(seed, "pass" if problem is None else "fail", problem or ""))
    report.seconds = time.perf_counter() - start
    if raise_on_failure and report.failures:
        first = report.failures[0]
        raise SuiteFailure(name, first.seed, first.detail)
    return report


SUITE_NAMES = tuple(sorted([*SUITES, "bench"]))
