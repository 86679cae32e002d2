"""Interactive session: one store, its type systems, rules and grounded procedures."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

from .errors import EngineError, GrammarError
from .grounded import GroundedRegistry, builtin_registry
from .lam.encode import IsoTypePlugin
from .lam.evaluate import eval_distribution
from .lam.terms import parse_term
from .loader import Loader
from .pattern import Pattern, query_in
from .rewrite import EXHAUSTIVE, PVar, RewriteRule, backward_chain, forward_chain
from .sexpr import SList, parse, parse_one, quote
from .store import AtomId, LinkSpec, NodeSpec, Store, TruthValue
from .typesys import SimpleArity, TypeRegistry

HELP = """\
!load FILE            load atoms and commands from FILE
!query EXPR           match a pattern; prints one sorted binding list per line
!forward RULESET [N]  forward chain (RULESET is 'all' or a file of rules) for N rounds
!backward EXPR N      prove a goal with at most N nested rule uses
!check ATOM SYSTEM    verdict for ATOM under a registered type system
!eval LAMBDA [N]      exact outcome distribution within N reduction steps
!exec EXPR            run an Execution/Evaluation link through its grounded procedure
!dump [FILE]          canonical dump, to FILE or to the output
!stats                atom counts and index-inspection counters
!help                 this text
Anything else is loaded as atoms."""


def render_value(store: Store, value) -> str:
    """Text for a bound value: a stored atom id or an in-memory term."""
    if isinstance(value, int):
        return store.render(value)
    if isinstance(value, PVar):
        return "?" + value.name
    if isinstance(value, NodeSpec):
        return f"({value.type_name} {quote(value.name)})"
    if isinstance(value, LinkSpec):
        inner = " ".join(render_value(store, t) for t in value.targets)
        return f"({value.type_name} {inner})" if inner else f"({value.type_name})"
    raise TypeError(f"cannot render {value!r}")


def render_bindings(store: Store, bindings: Mapping) -> str:
    if not bindings:
        return "(match)"
    parts = sorted((store.resolve(var).name, render_value(store, val)) for var, val in bindings.items())
    return " ".join(f"{name}={text}" for name, text in parts)


@dataclass
class Session:
    max_steps: int = 1000
    workers: int = 1
    store: Store = field(default_factory=Store)
    rules: list[RewriteRule] = field(default_factory=list)
    grounded: GroundedRegistry = field(default_factory=builtin_registry)
    base_dir: Path = field(default_factory=Path.cwd)
    errors: int = 0

    def __post_init__(self):
        self.types = TypeRegistry(self.store)
        # created on first use so a fresh session holds no atoms at all
        self.types.defer(SimpleArity())
        self.types.defer(IsoTypePlugin())

    # -- loading ---------------------------------------------------------------

    def _keep_rule(self, rule: RewriteRule):
        if rule not in self.rules:
            self.rules.append(rule)

    def load_text(self, text: str, collect: list | None = None) -> list[AtomId]:
        def on_rule(rule):
            self._keep_rule(rule)
            if collect is not None:
                collect.append(rule)
        return Loader(self.store, self.types, on_rule).load(parse(text))

    def _path(self, name: str) -> Path:
        p = Path(os.path.expanduser(name))
        return p if p.is_absolute() else self.base_dir / p

    def run_text(self, text: str, emit: Callable[[str], None], source: str = "") -> None:
        """Run a script: command lines start with '!', everything else is atoms.

        Diagnostics carry line numbers of the whole script.
        """
        prefix = f"{source}:" if source else ""
        pending: list[str] = []
        first = 0

        def flush():
            if any(line.strip() for line in pending):
                try:
                    # leading blank lines keep reader positions script-relative
                    self.load_text("\n" * first + "\n".join(pending))
                except EngineError as e:
                    self.errors += 1
                    emit(f"error: {prefix}{e}")
            pending.clear()

        for number, line in enumerate(text.splitlines()):
            if line.lstrip().startswith("!"):
                flush()
                out = self.command(line)
                if out:
                    emit(out if not out.startswith("error: ") else f"error: {prefix}{number + 1}: {out[7:]}")
            else:
                if not pending:
                    first = number
                pending.append(line)
        flush()

    # -- commands --------------------------------------------------------------

    def command(self, line: str) -> str:
        """Run one REPL line and return its rendered output.  Never raises on user error."""
        try:
            return self._dispatch(line.strip())
        except (EngineError, OSError, ValueError) as e:
            self.errors += 1
            return f"error: {e}"

    def _dispatch(self, line: str) -> str:
        if not line or line.startswith("#"):
            return ""
        if not line.startswith("!"):
            ids = self.load_text(line)
            return "\n".join(self.store.render(a) for a in ids)
        name, _, rest = line[1:].partition(" ")
        rest = rest.strip()
        handler = getattr(self, "cmd_" + name.replace("-", "_"), None)
        if handler is None:
            raise GrammarError(f"unknown command !{name}; try !help")
        return handler(rest)

    def cmd_help(self, rest: str) -> str:
        return HELP

    def cmd_load(self, rest: str) -> str:
        if not rest:
            raise GrammarError("!load needs a file name")
        path = self._path(rest)
        before = len(self.store)
        out: list[str] = []
        saved = self.base_dir
        self.base_dir = path.parent
        try:
            self.run_text(path.read_text(encoding="utf-8"), out.append, path.name)
        finally:
            self.base_dir = saved
        out.append(f"loaded {path.name}: {len(self.store) - before} new atoms")
        return "\n".join(out)

    def _scratch(self, text: str) -> tuple[Store, AtomId]:
        """Load one expression into a copy of the store, leaving the store itself alone."""
        scratch = Store.from_snapshot(self.store.snapshot())
        scratch.counters = self.store.counters
        ids = Loader(scratch).load(parse(text))
        if len(ids) != 1:
            raise GrammarError("expected exactly one expression")
        return scratch, ids[0]

    def scratch_pattern(self, text: str) -> tuple[Store, Pattern]:
        scratch, atom = self._scratch(text)
        return scratch, Pattern.from_atom(scratch, atom)

    def cmd_query(self, rest: str) -> str:
        data = self.store.snapshot()
        scratch, pattern = self.scratch_pattern(rest)
        results = query_in(pattern, scratch.snapshot(), data)
        lines = sorted(render_bindings(scratch, b) for b in results)
        return "\n".join(lines) if lines else "(no matches)"

    @staticmethod
    def _split_last(rest: str, what: str) -> tuple[str, str]:
        head, _, last = rest.rpartition(" ")
        if not head.strip() or not last:
            raise GrammarError(f"expected {what}")
        return head.strip(), last

    @staticmethod
    def _count(text: str) -> int:
        try:
            n = int(text)
        except ValueError:
            raise GrammarError(f"expected a non-negative integer, got {text!r}") from None
        if n < 0:
            raise GrammarError(f"expected a non-negative integer, got {n}")
        return n

    def _optional_count(self, rest: str, what: str) -> tuple[str, int]:
        head, _, last = rest.rpartition(" ")
        if head.strip() and last.lstrip("-").isdigit():
            return head.strip(), self._count(last)
        if not rest:
            raise GrammarError(f"expected {what}")
        return rest, self.max_steps

    def cmd_forward(self, rest: str) -> str:
        ruleset, rounds = self._optional_count(rest, "RULESET [N]")
        if ruleset == "all":
            rules = list(self.rules)
        else:
            rules: list[RewriteRule] = []
            self.load_text(self._path(ruleset).read_text(encoding="utf-8"), rules)
        before = len(self.store)
        trace = forward_chain(self.store, rules, rounds, EXHAUSTIVE, self.workers)
        state = "fixpoint" if trace.reached_fixpoint else "budget exhausted"
        return (f"{len(rules)} rules, {trace.applications} applications, "
                f"{len(self.store) - before} new atoms ({state})")

    def cmd_backward(self, rest: str) -> str:
        expr, n = self._split_last(rest, "EXPR N")
        depth = self._count(n)
        data = self.store.snapshot()
        scratch, goal = self.scratch_pattern(expr)
        proofs = backward_chain(goal, self.rules, depth, scratch.snapshot(), data)
        if not proofs:
            return "(no proofs)"
        lines = sorted(f"{render_bindings(scratch, p.bindings)} {p.tv} steps={len(p.trace.steps)}"
                       for p in proofs)
        return "\n".join(lines)

    def cmd_check(self, rest: str) -> str:
        expr, system_name = self._split_last(rest, "ATOM SYSTEM")
        system = self.types.system(system_name)
        form = parse_one(expr)
        if isinstance(form, SList) and form.head == "Typed":
            raise GrammarError("!check takes a bare atom; annotate it separately", form)
        scratch, atom = self._scratch(expr)
        return str(self.types.check_atom(atom, system, scratch.snapshot()))

    def cmd_eval(self, rest: str) -> str:
        expr, n = self._optional_count(rest, "LAMBDA [N]")
        return eval_distribution(parse_term(expr), n).render()

    def cmd_exec(self, rest: str) -> str:
        (call,) = self.load_text(rest)
        result = self.grounded.execute(call, self.store.snapshot())
        if isinstance(result.value, TruthValue):
            return str(result.value)
        return self.store.render(self.store.add(result.value))

    def cmd_dump(self, rest: str) -> str:
        text = self.store.dump()
        if not rest:
            return text.rstrip("\n")
        self._path(rest).write_text(text, encoding="utf-8")
        return f"wrote {len(self.store)} atoms to {rest}"

    def cmd_stats(self, rest: str) -> str:
        snap = self.store.snapshot()
        lines = [
            f"atoms: {len(snap)}",
            f"version: {snap.version}",
            f"rules: {len(self.rules)}",
            f"inspected: {self.store.counters.inspected}",
            f"scanned: {self.store.counters.scanned}",
        ]
        lines += [f"  {t}: {snap.count_of_type(t)}" for t in snap.type_names()]
        return "\n".join(lines)


def repl_command(line: str, session: Session) -> str:
    return session.command(line)


def interact(session: Session, *, prompt: str = "engine> ", color: bool = False) -> int:
    red, reset = ("\033[31m", "\033[0m") if color else ("", "")
    while True:
        try:
            line = input(prompt)
        except EOFError:
            print()
            return 0
        except KeyboardInterrupt:
            print()
            continue
        if line.strip() in ("!quit", "!exit"):
            return 0
        out = session.command(line)
        if out:
            print(f"{red}{out}{reset}" if out.startswith("error:") else out)


__all__ = ["HELP", "Session", "interact", "render_bindings", "render_value", "repl_command"]
