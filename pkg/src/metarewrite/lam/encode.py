"""Lambda terms as ordinary atoms, and the lambda layer as a type-system plugin.

Encoding::

    Var x            (LambdaVar "x")
    Const c          (LambdaConst "c")
    *                (LambdaStar "*")
    lam x m T body   (Lam (LambdaBinder (LambdaVar "x") (Multiplicity "1")) T body)
    pi x m T U       (Pi (LambdaBinder ...) T U)
    unannotated      T is (LambdaNoType "_")
    app f a          (LambdaApp f a)
    ann t T          (LambdaAnn t T)
    cast-up t        (CastUp t)
    cast-down t      (CastDown t)
    choice p l r     (Choice (Probability "p") l r)
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from ..errors import MalformedEncoding, UnknownAtom
from ..sexpr import format_fraction
from ..store import AtomId, LinkSpec, NodeSpec, Snapshot, Store, _View
from ..typesys import Verdict
from .check import IllTyped, StepBudgetExceeded, check_against, prelude_context
from .terms import STAR, Ann, App, CastDown, CastUp, Choice, Const, Lam, Mult, Pi, Star, Term, Var, alpha_eq

_MULT_NAMES = {Mult.ZERO: "0", Mult.ONE: "1", Mult.MANY: "omega"}
_MULT_BY_NAME = {v: k for k, v in _MULT_NAMES.items()}
_NO_TYPE = NodeSpec("LambdaNoType", "_")

LAMBDA_TYPES = frozenset({
    "LambdaVar", "LambdaConst", "LambdaStar", "Lam", "Pi", "LambdaBinder", "Multiplicity",
    "LambdaNoType", "LambdaApp", "LambdaAnn", "CastUp", "CastDown", "Choice", "Probability",
})


def to_spec(t: Term):
    match t:
        case Var(name):
            return NodeSpec("LambdaVar", name)
        case Const(name):
            return NodeSpec("LambdaConst", name)
        case Star():
            return NodeSpec("LambdaStar", "*")
        case Lam(x, m, ann, body):
            return LinkSpec("Lam", (_binder(x, m), to_spec(ann) if ann is not None else _NO_TYPE, to_spec(body)))
        case Pi(x, m, dom, cod):
            return LinkSpec("Pi", (_binder(x, m), to_spec(dom), to_spec(cod)))
        case App(f, a):
            return LinkSpec("LambdaApp", (to_spec(f), to_spec(a)))
        case Ann(e, ty):
            return LinkSpec("LambdaAnn", (to_spec(e), to_spec(ty)))
        case CastUp(e):
            return LinkSpec("CastUp", (to_spec(e),))
        case CastDown(e):
            return LinkSpec("CastDown", (to_spec(e),))
        case Choice(p, l, r):
            return LinkSpec("Choice", (NodeSpec("Probability", format_fraction(p)), to_spec(l), to_spec(r)))
    raise TypeError(f"not a term: {t!r}")


def _binder(x: str, m: Mult) -> LinkSpec:
    return LinkSpec("LambdaBinder", (NodeSpec("LambdaVar", x), NodeSpec("Multiplicity", _MULT_NAMES[m])))


def encode_term(store: Store, t: Term) -> AtomId:
    return store.add(to_spec(t))


def decode_term(view: _View, atom: AtomId) -> Term:
    try:
        rec = view.resolve(atom)
    except UnknownAtom:
        raise MalformedEncoding(f"atom {atom} does not resolve") from None
    shape = (rec.type_name, len(rec.targets))
    if rec.is_node:
        if rec.type_name == "LambdaVar":
            return Var(rec.name)
        if rec.type_name == "LambdaConst":
            return Const(rec.name)
        if rec.type_name == "LambdaStar":
            return STAR
        raise MalformedEncoding(f"node ({rec.type_name} {rec.name!r}) is not a lambda term")
    t = rec.targets
    if shape == ("Lam", 3):
        x, m = _decode_binder(view, t[0])
        ann_rec = view.resolve(t[1])
        ann = None if (ann_rec.is_node and ann_rec.type_name == "LambdaNoType") else decode_term(view, t[1])
        return Lam(x, m, ann, decode_term(view, t[2]))
    if shape == ("Pi", 3):
        x, m = _decode_binder(view, t[0])
        return Pi(x, m, decode_term(view, t[1]), decode_term(view, t[2]))
    if shape == ("LambdaApp", 2):
        return App(decode_term(view, t[0]), decode_term(view, t[1]))
    if shape == ("LambdaAnn", 2):
        return Ann(decode_term(view, t[0]), decode_term(view, t[1]))
    if shape == ("CastUp", 1):
        return CastUp(decode_term(view, t[0]))
    if shape == ("CastDown", 1):
        return CastDown(decode_term(view, t[0]))
    if shape == ("Choice", 3):
        p = view.resolve(t[0])
        if not (p.is_node and p.type_name == "Probability"):
            raise MalformedEncoding("choice needs a (Probability ...) node first")
        try:
            return Choice(Fraction(p.name), decode_term(view, t[1]), decode_term(view, t[2]))
        except ValueError as e:
            raise MalformedEncoding(str(e)) from None
    raise MalformedEncoding(f"link {rec.type_name} with {len(t)} targets is not a lambda term")


def _decode_binder(view: _View, atom: AtomId) -> tuple[str, Mult]:
    rec = view.resolve(atom)
    if rec.type_name == "LambdaBinder" and len(rec.targets) == 2:
        var, mult = (view.resolve(a) for a in rec.targets)
        if var.is_node and var.type_name == "LambdaVar" and mult.is_node and mult.name in _MULT_BY_NAME:
            return var.name, _MULT_BY_NAME[mult.name]
    raise MalformedEncoding("malformed binder")


class IsoTypePlugin:
    """Checks encoded terms against encoded types with the IsoType checker."""

    name = "isotype-lambda"

    def __init__(self, globals_: dict[str, Term] | None = None):
        self.ctx = prelude_context()
        if globals_ is not None:
            self.ctx.globals.update(globals_)

    def check_atom(self, snap: Snapshot, atom: AtomId, type_exprs: Sequence[AtomId]) -> Verdict:
        try:
            term = decode_term(snap, atom)
        except MalformedEncoding:
            return Verdict.UNKNOWN
        for expr in type_exprs:
            try:
                check_against(term, decode_term(snap, expr), self.ctx)
            except (MalformedEncoding, IllTyped, StepBudgetExceeded):
                return Verdict.REJECT
        return Verdict.ACCEPT

    def types_consistent(self, snap: Snapshot, a: AtomId, b: AtomId) -> bool:
        try:
            return alpha_eq(decode_term(snap, a), decode_term(snap, b))
        except MalformedEncoding:
            return a == b
