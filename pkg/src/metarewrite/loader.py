"""Turns parsed s-expressions into atoms.

Atom grammar::

    (Type "name" [(tv s c)])        node; a number may stand in for the name
    (Type child... [(tv s c)])      link; children are atom or lambda forms
    (Typed atom (TypeSystem "n") type-expr)   a bare symbol here is a lambda constant
    (lam ...), (app ...), ...        lambda terms, stored in their encoding
"""

from __future__ import annotations

from typing import Callable, Sequence

from .errors import EngineError, GrammarError
from .lam.encode import to_spec as term_spec
from .lam.terms import LAMBDA_HEADS, from_sexpr
from .rewrite import RewriteRule
from .sexpr import Rational, SExpr, SList, StringLit, Symbol, format_fraction, parse
from .store import AtomId, AtomSpec, LinkSpec, NodeSpec, Store, TruthValue
from .typesys import TypeRegistry

# Link types that may legitimately have no targets, so ``(List)`` is a link
# rather than a node missing its name.
LINK_TYPES = frozenset({
    "List", "Set", "And", "Or", "Not", "Query", "Rule", "Inheritance", "Similarity",
    "Implication", "Evaluation", "Execution", "Member", "Typed",
})


def _tv(form: SList) -> TruthValue:
    if len(form) != 3 or not all(isinstance(x, Rational) for x in form.items[1:]):
        raise GrammarError("(tv s c) needs two numbers", form)
    try:
        return TruthValue(form[1].value, form[2].value)
    except ValueError as e:
        raise GrammarError(str(e), form) from None


def _split_tv(form: SList) -> tuple[list[SExpr], TruthValue | None]:
    args = list(form.items[1:])
    if args and isinstance(args[-1], SList) and args[-1].head == "tv":
        return args[:-1], _tv(args.pop())
    return args, None


def spec_of(form: SExpr) -> AtomSpec:
    """The atom spec for one atom or lambda form."""
    if not isinstance(form, SList) or form.head is None:
        raise GrammarError("expected an atom form such as (Concept \"cat\")", form)
    head = form.head
    if head in LAMBDA_HEADS:
        try:
            return term_spec(from_sexpr(form))
        except EngineError as e:
            raise GrammarError(str(e), form) from None
    if head == "tv":
        raise GrammarError("(tv ...) must trail an atom form", form)
    if head == "Typed":
        raise GrammarError("(Typed ...) is only allowed at top level", form)
    args, tv = _split_tv(form)
    if not args:
        if head in LINK_TYPES:
            return LinkSpec(head, (), tv)
        raise GrammarError(f"({head}) needs a name or children", form)
    first = args[0]
    if isinstance(first, (StringLit, Rational)):
        if len(args) != 1:
            raise GrammarError(f"node ({head} ...) takes exactly one name", form)
        name = first.value if isinstance(first, StringLit) else format_fraction(first.value)
        if name == "":
            raise GrammarError(f"({head}) needs a non-empty name", form)
        return NodeSpec(head, name, tv)
    return LinkSpec(head, tuple(spec_of(a) for a in args), tv)


def _typed_part(form: SExpr) -> AtomSpec:
    # inside Typed, a bare symbol such as Bool or * is a lambda constant
    if isinstance(form, Symbol):
        return term_spec(from_sexpr(form))
    return spec_of(form)


class Loader:
    """Loads forms into a store, registering rules and annotations as it goes."""

    def __init__(self, store: Store, types: TypeRegistry | None = None,
                 on_rule: Callable[[RewriteRule], None] | None = None):
        self.store = store
        self.types = types
        self.on_rule = on_rule

    def load_form(self, form: SExpr) -> AtomId:
        if isinstance(form, SList) and form.head == "Typed":
            return self._typed(form)
        atom = self.store.add(spec_of(form))
        if self.on_rule is not None and self.store.type_name(atom) == "Rule":
            try:
                self.on_rule(RewriteRule.from_atom(self.store, atom))
            except EngineError as e:
                raise GrammarError(str(e), form) from None
        return atom

    def _typed(self, form: SList) -> AtomId:
        if len(form) != 4:
            raise GrammarError("(Typed atom (TypeSystem \"name\") type) takes three parts", form)
        _, atom_form, system_form, type_form = form.items
        if not (isinstance(system_form, SList) and system_form.head == "TypeSystem"
                and len(system_form) == 2 and isinstance(system_form[1], StringLit)):
            raise GrammarError("expected (TypeSystem \"name\")", system_form)
        if self.types is None:
            raise GrammarError("annotations need a type registry", form)
        try:
            system = self.types.system(system_form[1].value)
        except EngineError as e:
            raise GrammarError(str(e), system_form) from None
        atom = self.store.add(_typed_part(atom_form)) if isinstance(atom_form, Symbol) else self.load_form(atom_form)
        expr = self.store.add(_typed_part(type_form))
        self.types.annotate(atom, system, expr)
        return atom

    def load(self, exprs: Sequence[SExpr]) -> list[AtomId]:
        return [self.load_form(f) for f in exprs]


def load(exprs: Sequence[SExpr], store: Store, types: TypeRegistry | None = None,
         rules: list[RewriteRule] | None = None) -> list[AtomId]:
    """Commit ``exprs`` in order; ids come back parallel to the input.

    Rule links are appended to ``rules`` when it is given.
    """
    def keep(rule: RewriteRule):
        if rule not in rules:
            rules.append(rule)
    return Loader(store, types, keep if rules is not None else None).load(exprs)


def load_text(text: str, store: Store, types: TypeRegistry | None = None,
              rules: list[RewriteRule] | None = None) -> list[AtomId]:
    return load(parse(text), store, types, rules)


__all__ = ["LINK_TYPES", "Loader", "load", "load_text", "spec_of"]
