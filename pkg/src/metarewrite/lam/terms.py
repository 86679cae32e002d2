"""Terms of the probabilistic, dependently and linearly typed lambda calculus.

Surface syntax::

    *                       the sort of types
    x                       variable if bound, constant otherwise
    (lam (x lin T) body)    multiplicity is erased/0, lin/1 or many/w
    (lam (x many) body)     unannotated binder
    (pi (x many T) U)
    (app f a ...)           left-nested application
    (ann t T)  (cast-up t)  (cast-down t)
    (choice 1/3 a b)        a with probability 1/3, else b
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from ..errors import GrammarError
from ..sexpr import Rational, SExpr, SList, Symbol, format_fraction, parse_one


class Mult(enum.Enum):
    ZERO = "0"
    ONE = "1"
    MANY = "omega"

    @property
    def keyword(self) -> str:
        return {Mult.ZERO: "erased", Mult.ONE: "lin", Mult.MANY: "many"}[self]


_MULT_WORDS = {
    "0": Mult.ZERO, "erased": Mult.ZERO,
    "1": Mult.ONE, "lin": Mult.ONE,
    "many": Mult.MANY, "w": Mult.MANY, "omega": Mult.MANY, "ω": Mult.MANY,
}


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class Lam:
    binder: str
    mult: Mult
    ann: "Term | None"
    body: "Term"


@dataclass(frozen=True)
class Pi:
    binder: str
    mult: Mult
    dom: "Term"
    cod: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Ann:
    term: "Term"
    type: "Term"


@dataclass(frozen=True)
class CastUp:
    term: "Term"


@dataclass(frozen=True)
class CastDown:
    term: "Term"


@dataclass(frozen=True)
class Choice:
    p: Fraction
    left: "Term"
    right: "Term"

    def __post_init__(self):
        p = Fraction(self.p)
        if not 0 < p < 1:
            raise ValueError(f"choice probability must lie strictly between 0 and 1, got {p}")
        object.__setattr__(self, "p", p)


Term = Union[Var, Const, Star, Lam, Pi, App, Ann, CastUp, CastDown, Choice]

STAR = Star()


def arrow(dom: Term, cod: Term, mult: Mult = Mult.MANY) -> Pi:
    return Pi("_", mult, dom, cod)


def apps(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def pair(left: Term, right: Term) -> Term:
    return apps(Const("Pair"), left, right)


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(name):
            return frozenset({name})
        case Const() | Star():
            return frozenset()
        case Lam(x, _, ann, body):
            inner = free_vars(body) - {x}
            return inner | free_vars(ann) if ann is not None else inner
        case Pi(x, _, dom, cod):
            return free_vars(dom) | (free_vars(cod) - {x})
        case App(f, a):
            return free_vars(f) | free_vars(a)
        case Ann(e, ty):
            return free_vars(e) | free_vars(ty)
        case CastUp(e) | CastDown(e):
            return free_vars(e)
        case Choice(_, l, r):
            return free_vars(l) | free_vars(r)
    raise TypeError(f"not a term: {t!r}")


def fresh_name(base: str, avoid) -> str:
    name = base if base != "_" else "v"
    while name in avoid:
        name += "'"
    return name


def subst(t: Term, name: str, value: Term) -> Term:
    """Capture-avoiding ``t[name := value]``."""
    return _subst(t, name, value, free_vars(value))


def _binder(x: str, body_parts, name: str, value: Term, fv: frozenset):
    """Rename binder ``x`` if it would capture a free variable of ``value``."""
    if x in fv:
        avoid = set(fv) | {name}
        for part in body_parts:
            avoid |= free_vars(part)
        y = fresh_name(x, avoid)
        return y, [subst(p, x, Var(y)) for p in body_parts]
    return x, list(body_parts)


def _subst(t: Term, name: str, value: Term, fv: frozenset) -> Term:
    match t:
        case Var(n):
            return value if n == name else t
        case Const() | Star():
            return t
        case Lam(x, m, ann, body):
            ann2 = _subst(ann, name, value, fv) if ann is not None else None
            if x == name:
                return Lam(x, m, ann2, body)
            x2, (body2,) = _binder(x, [body], name, value, fv)
            return Lam(x2, m, ann2, _subst(body2, name, value, fv))
        case Pi(x, m, dom, cod):
            dom2 = _subst(dom, name, value, fv)
            if x == name:
                return Pi(x, m, dom2, cod)
            x2, (cod2,) = _binder(x, [cod], name, value, fv)
            return Pi(x2, m, dom2, _subst(cod2, name, value, fv))
        case App(f, a):
            return App(_subst(f, name, value, fv), _subst(a, name, value, fv))
        case Ann(e, ty):
            return Ann(_subst(e, name, value, fv), _subst(ty, name, value, fv))
        case CastUp(e):
            return CastUp(_subst(e, name, value, fv))
        case CastDown(e):
            return CastDown(_subst(e, name, value, fv))
        case Choice(p, l, r):
            return Choice(p, _subst(l, name, value, fv), _subst(r, name, value, fv))
    raise TypeError(f"not a term: {t!r}")


def alpha_eq(a: Term, b: Term) -> bool:
    return _alpha(a, b, {}, {}, 0)


def _alpha(a: Term, b: Term, env_a: dict, env_b: dict, depth: int) -> bool:
    match a, b:
        case Var(x), Var(y):
            la, lb = env_a.get(x), env_b.get(y)
            if la is None and lb is None:
                return x == y
            return la == lb
        case Const(x), Const(y):
            return x == y
        case Star(), Star():
            return True
        case Lam(x, m, ann, body), Lam(y, n, ann2, body2):
            if m != n or (ann is None) != (ann2 is None):
                return False
            if ann is not None and not _alpha(ann, ann2, env_a, env_b, depth):
                return False
            return _alpha(body, body2, {**env_a, x: depth}, {**env_b, y: depth}, depth + 1)
        case Pi(x, m, dom, cod), Pi(y, n, dom2, cod2):
            return (m == n and _alpha(dom, dom2, env_a, env_b, depth)
                    and _alpha(cod, cod2, {**env_a, x: depth}, {**env_b, y: depth}, depth + 1))
        case App(f, x), App(g, y):
            return _alpha(f, g, env_a, env_b, depth) and _alpha(x, y, env_a, env_b, depth)
        case Ann(e, t), Ann(e2, t2):
            return _alpha(e, e2, env_a, env_b, depth) and _alpha(t, t2, env_a, env_b, depth)
        case CastUp(e), CastUp(e2):
            return _alpha(e, e2, env_a, env_b, depth)
        case CastDown(e), CastDown(e2):
            return _alpha(e, e2, env_a, env_b, depth)
        case Choice(p, l, r), Choice(q, l2, r2):
            return p == q and _alpha(l, l2, env_a, env_b, depth) and _alpha(r, r2, env_a, env_b, depth)
    return False


def beta_step(t: Term) -> Term | None:
    """One leftmost-outermost beta step anywhere in ``t``, or None if ``t`` is beta-normal."""
    match t:
        case App(Lam(x, _, _, body), a):
            return subst(body, x, a)
        case App(f, a):
            s = beta_step(f)
            if s is not None:
                return App(s, a)
            s = beta_step(a)
            return App(f, s) if s is not None else None
        case Lam(x, m, ann, body):
            if ann is not None:
                s = beta_step(ann)
                if s is not None:
                    return Lam(x, m, s, body)
            s = beta_step(body)
            return Lam(x, m, ann, s) if s is not None else None
        case Pi(x, m, dom, cod):
            s = beta_step(dom)
            if s is not None:
                return Pi(x, m, s, cod)
            s = beta_step(cod)
            return Pi(x, m, dom, s) if s is not None else None
        case Ann(e, ty):
            s = beta_step(e)
            if s is not None:
                return Ann(s, ty)
            s = beta_step(ty)
            return Ann(e, s) if s is not None else None
        case CastUp(e):
            s = beta_step(e)
            return CastUp(s) if s is not None else None
        case CastDown(e):
            s = beta_step(e)
            return CastDown(s) if s is not None else None
        case Choice(p, l, r):
            s = beta_step(l)
            if s is not None:
                return Choice(p, s, r)
            s = beta_step(r)
            return Choice(p, l, s) if s is not None else None
    return None


def normalize(t: Term, fuel: int = 1000) -> Term | None:
    """Beta-normal form within ``fuel`` steps, else None."""
    for _ in range(fuel):
        s = beta_step(t)
        if s is None:
            return t
        t = s
    return None


def size(t: Term) -> int:
    match t:
        case Var() | Const() | Star():
            return 1
        case Lam(_, _, ann, body):
            return 1 + (size(ann) if ann is not None else 0) + size(body)
        case Pi(_, _, dom, cod):
            return 1 + size(dom) + size(cod)
        case App(f, a):
            return 1 + size(f) + size(a)
        case Ann(e, ty):
            return 1 + size(e) + size(ty)
        case CastUp(e) | CastDown(e):
            return 1 + size(e)
        case Choice(_, l, r):
            return 1 + size(l) + size(r)
    raise TypeError(f"not a term: {t!r}")


# -- surface syntax -------------------------------------------------------------

LAMBDA_HEADS = frozenset({"lam", "pi", "app", "ann", "cast-up", "cast-down", "choice"})


def pretty(t: Term) -> str:
    match t:
        case Var(name) | Const(name):
            return name
        case Star():
            return "*"
        case Lam(x, m, ann, body):
            decl = f"({x} {m.keyword})" if ann is None else f"({x} {m.keyword} {pretty(ann)})"
            return f"(lam {decl} {pretty(body)})"
        case Pi(x, m, dom, cod):
            return f"(pi ({x} {m.keyword} {pretty(dom)}) {pretty(cod)})"
        case App(f, a):
            return f"(app {pretty(f)} {pretty(a)})"
        case Ann(e, ty):
            return f"(ann {pretty(e)} {pretty(ty)})"
        case CastUp(e):
            return f"(cast-up {pretty(e)})"
        case CastDown(e):
            return f"(cast-down {pretty(e)})"
        case Choice(p, l, r):
            return f"(choice {format_fraction(p)} {pretty(l)} {pretty(r)})"
    raise TypeError(f"not a term: {t!r}")


def _mult(expr: SExpr) -> Mult:
    if isinstance(expr, Rational) and expr.value in (0, 1):
        return Mult.ZERO if expr.value == 0 else Mult.ONE
    if isinstance(expr, Symbol) and expr.name in _MULT_WORDS:
        return _MULT_WORDS[expr.name]
    raise GrammarError("expected a multiplicity (erased, lin or many)", expr)


def _name(expr: SExpr) -> str:
    if isinstance(expr, Symbol) and expr.name not in ("*",) and expr.name not in LAMBDA_HEADS:
        return expr.name
    raise GrammarError("expected a binder name", expr)


def from_sexpr(expr: SExpr, scope: frozenset[str] = frozenset()) -> Term:
    if isinstance(expr, Symbol):
        if expr.name == "*":
            return STAR
        return Var(expr.name) if expr.name in scope else Const(expr.name)
    if not isinstance(expr, SList) or expr.head not in LAMBDA_HEADS:
        raise GrammarError("expected a lambda term", expr)
    head, args = expr.head, expr.items[1:]

    def arity(n):
        if len(args) != n:
            raise GrammarError(f"{head} takes {n} arguments, got {len(args)}", expr)

    if head in ("lam", "pi"):
        arity(2)
        decl = args[0]
        if not isinstance(decl, SList) or len(decl) not in (2, 3):
            raise GrammarError(f"{head} binder must look like (x mult [type])", decl)
        x = _name(decl[0])
        m = _mult(decl[1])
        ann = from_sexpr(decl[2], scope) if len(decl) == 3 else None
        body = from_sexpr(args[1], scope | {x})
        if head == "lam":
            return Lam(x, m, ann, body)
        if ann is None:
            raise GrammarError("pi binder needs a domain type", decl)
        return Pi(x, m, ann, body)
    if head == "app":
        if len(args) < 2:
            raise GrammarError("app takes a function and at least one argument", expr)
        return apps(*(from_sexpr(a, scope) for a in args))
    if head == "ann":
        arity(2)
        return Ann(from_sexpr(args[0], scope), from_sexpr(args[1], scope))
    if head == "cast-up":
        arity(1)
        return CastUp(from_sexpr(args[0], scope))
    if head == "cast-down":
        arity(1)
        return CastDown(from_sexpr(args[0], scope))
    arity(3)
    if not isinstance(args[0], Rational):
        raise GrammarError("choice probability must be a rational", args[0])
    try:
        return Choice(args[0].value, from_sexpr(args[1], scope), from_sexpr(args[2], scope))
    except ValueError as e:
        raise GrammarError(str(e), args[0]) from None


def parse_term(text: str) -> Term:
    return from_sexpr(parse_one(text))
