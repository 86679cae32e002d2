"""Bidirectional type checking with multiplicities and explicit casts.

Type equality is alpha-equivalence only: the checker never beta-reduces on
its own.  A type that needs one reduction step to line up must be converted
explicitly, ``cast-down`` for a value whose type is the redex and
``cast-up`` when the expected type is.  Each cast performs exactly one
leftmost-outermost beta step on the type, so checking always terminates.

Usage is counted per variable and saturates at 2 ("many").  Uses inside
types are erased and never counted.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

from ..errors import EngineError
from .terms import (STAR, Ann, App, CastDown, CastUp, Choice, Const, Lam, Mult, Pi, Star, Term, Var,
                    alpha_eq, arrow, beta_step, fresh_name, pretty, subst)

DEFAULT_MAX_STEPS = 100_000


class Reason(enum.Enum):
    UNBOUND_VAR = "UnboundVar"
    NOT_A_FUNCTION = "NotAFunction"
    TYPE_MISMATCH = "TypeMismatch"
    LINEARITY_VIOLATION = "LinearityViolation"
    CAST_STEP_UNAVAILABLE = "CastStepUnavailable"


class IllTyped(EngineError):
    def __init__(self, reason: Reason, detail: str):
        super().__init__(f"{reason.value}: {detail}")
        self.reason = reason
        self.detail = detail


class StepBudgetExceeded(RuntimeError):
    """The checker ran past its step bound.  Never expected; guards termination."""


@dataclass(frozen=True)
class Entry:
    name: str
    type: Term
    mult: Mult


@dataclass(frozen=True)
class Context:
    entries: tuple[Entry, ...] = ()
    globals: dict = field(default_factory=dict, hash=False, compare=False)

    def extend(self, name: str, type_: Term, mult: Mult) -> "Context":
        return Context(self.entries + (Entry(name, type_, mult),), self.globals)

    def lookup(self, name: str) -> Entry | None:
        for e in reversed(self.entries):
            if e.name == name:
                return e
        return None

    def names(self) -> set[str]:
        return {e.name for e in self.entries}


BOOL = Const("Bool")
REDEX_BOOL = App(Lam("A", Mult.MANY, STAR, Var("A")), BOOL)

# Constants available to every check unless a caller supplies its own.
PRELUDE: dict[str, Term] = {
    "Bool": STAR,
    "BoolPair": STAR,
    "tt": BOOL,
    "ff": BOOL,
    "a": BOOL,
    "b": BOOL,
    "c": BOOL,
    "not": arrow(BOOL, BOOL),
    "and": arrow(BOOL, arrow(BOOL, BOOL)),
    "Pair": arrow(BOOL, arrow(BOOL, Const("BoolPair"), Mult.ONE), Mult.ONE),
    # a Bool hidden behind a type that needs one beta step
    "b0": REDEX_BOOL,
}


def prelude_context() -> Context:
    return Context((), dict(PRELUDE))


Usage = Counter


def _add(u: Usage, v: Usage) -> Usage:
    out = Counter(u)
    for k, n in v.items():
        out[k] = min(2, out[k] + n)
    return out


def _scale(m: Mult, u: Usage) -> Usage:
    if m is Mult.ZERO:
        return Counter()
    if m is Mult.ONE:
        return Counter(u)
    return Counter({k: 2 for k, n in u.items() if n})


def _join(u: Usage, v: Usage) -> Usage:
    return Counter({k: max(u[k], v[k]) for k in set(u) | set(v)})


class _Checker:
    def __init__(self, max_steps: int):
        self.steps = 0
        self.max_steps = max_steps

    def tick(self):
        self.steps += 1
        if self.steps > self.max_steps:
            raise StepBudgetExceeded(f"type checking exceeded {self.max_steps} steps")

    def open_binder(self, ctx: Context, x: str, body: Term) -> tuple[str, Term]:
        """Rename ``x`` apart from the context so names stay unique."""
        taken = ctx.names() | set(ctx.globals)
        if x not in taken and x != "_":
            return x, body
        y = fresh_name(x, taken)
        return y, subst(body, x, Var(y))

    def discharge(self, x: str, m: Mult, usage: Usage, where: Term) -> Usage:
        n = usage.get(x, 0)
        if m is Mult.ONE and n != 1:
            raise IllTyped(Reason.LINEARITY_VIOLATION,
                           f"linear variable {x!r} used {'more than once' if n > 1 else 'zero times'} in {pretty(where)}")
        if m is Mult.ZERO and n != 0:
            raise IllTyped(Reason.LINEARITY_VIOLATION, f"erased variable {x!r} used at runtime in {pretty(where)}")
        rest = Counter(usage)
        rest.pop(x, None)
        return rest

    def is_type(self, ctx: Context, t: Term):
        self.check(ctx, t, STAR)  # usage inside types is erased

    def infer(self, ctx: Context, t: Term) -> tuple[Term, Usage]:
        self.tick()
        match t:
            case Var(name):
                entry = ctx.lookup(name)
                if entry is None:
                    raise IllTyped(Reason.UNBOUND_VAR, f"variable {name!r} is not in scope")
                return entry.type, Counter({name: 1})
            case Const(name):
                if name not in ctx.globals:
                    raise IllTyped(Reason.UNBOUND_VAR, f"constant {name!r} is not declared")
                return ctx.globals[name], Counter()
            case Star():
                return STAR, Counter()
            case Pi(x, m, dom, cod):
                self.is_type(ctx, dom)
                y, cod = self.open_binder(ctx, x, cod)
                self.is_type(ctx.extend(y, dom, m), cod)
                return STAR, Counter()
            case Lam(x, m, ann, body):
                if ann is None:
                    raise IllTyped(Reason.TYPE_MISMATCH,
                                   f"cannot infer the type of unannotated {pretty(t)}; annotate it")
                self.is_type(ctx, ann)
                y, body = self.open_binder(ctx, x, body)
                body_type, usage = self.infer(ctx.extend(y, ann, m), body)
                usage = self.discharge(y, m, usage, t)
                return Pi(y, m, ann, body_type), usage
            case App(f, a):
                f_type, uf = self.infer(ctx, f)
                if not isinstance(f_type, Pi):
                    raise IllTyped(Reason.NOT_A_FUNCTION,
                                   f"{pretty(f)} has type {pretty(f_type)}, which is not a pi type")
                ua = self.check(ctx, a, f_type.dom)
                return subst(f_type.cod, f_type.binder, a), _add(uf, _scale(f_type.mult, ua))
            case Ann(e, ty):
                self.is_type(ctx, ty)
                return ty, self.check(ctx, e, ty)
            case CastDown(e):
                ty, usage = self.infer(ctx, e)
                reduced = beta_step(ty)
                if reduced is None:
                    raise IllTyped(Reason.CAST_STEP_UNAVAILABLE, f"type {pretty(ty)} has no beta step to take")
                return reduced, usage
            case CastUp():
                raise IllTyped(Reason.TYPE_MISMATCH, f"{pretty(t)} needs an expected type; annotate it")
            case Choice(_, left, right):
                ty, ul = self.infer(ctx, left)
                ur = self.check(ctx, right, ty)
                return ty, _join(ul, ur)
        raise TypeError(f"not a term: {t!r}")

    def check(self, ctx: Context, t: Term, expected: Term) -> Usage:
        self.tick()
        match t:
            case Lam(x, m, ann, body):
                if not isinstance(expected, Pi):
                    raise IllTyped(Reason.TYPE_MISMATCH,
                                   f"{pretty(t)} is a function but {pretty(expected)} is not a pi type")
                if m is not expected.mult:
                    raise IllTyped(Reason.TYPE_MISMATCH,
                                   f"binder multiplicity {m.keyword} does not match {expected.mult.keyword}")
                if ann is not None:
                    self.is_type(ctx, ann)
                    if not alpha_eq(ann, expected.dom):
                        raise IllTyped(Reason.TYPE_MISMATCH,
                                       f"binder type {pretty(ann)} differs from {pretty(expected.dom)}")
                y, body = self.open_binder(ctx, x, body)
                cod = subst(expected.cod, expected.binder, Var(y))
                usage = self.check(ctx.extend(y, expected.dom, m), body, cod)
                return self.discharge(y, m, usage, t)
            case CastUp(e):
                reduced = beta_step(expected)
                if reduced is None:
                    raise IllTyped(Reason.CAST_STEP_UNAVAILABLE,
                                   f"expected type {pretty(expected)} has no beta step to take")
                return self.check(ctx, e, reduced)
            case Choice(_, left, right):
                return _join(self.check(ctx, left, expected), self.check(ctx, right, expected))
        actual, usage = self.infer(ctx, t)
        if not alpha_eq(actual, expected):
            raise IllTyped(Reason.TYPE_MISMATCH,
                           f"{pretty(t)} has type {pretty(actual)}, expected {pretty(expected)}")
        return usage


def _check_context_usage(ctx: Context, usage: Usage):
    for e in ctx.entries:
        n = usage.get(e.name, 0)
        if (e.mult is Mult.ONE and n > 1) or (e.mult is Mult.ZERO and n > 0):
            raise IllTyped(Reason.LINEARITY_VIOLATION, f"context variable {e.name!r} used {n} times")


def typecheck(t: Term, ctx: Context | None = None, *, max_steps: int = DEFAULT_MAX_STEPS) -> Term:
    """Infer the type of ``t``.  Raises IllTyped with a Reason."""
    ctx = prelude_context() if ctx is None else ctx
    checker = _Checker(max_steps)
    ty, usage = checker.infer(ctx, t)
    _check_context_usage(ctx, usage)
    return ty


def check_against(t: Term, expected: Term, ctx: Context | None = None, *,
                  max_steps: int = DEFAULT_MAX_STEPS) -> None:
    ctx = prelude_context() if ctx is None else ctx
    checker = _Checker(max_steps)
    checker.is_type(ctx, expected)
    _check_context_usage(ctx, checker.check(ctx, t, expected))


def check_steps(t: Term, ctx: Context | None = None, *, max_steps: int = DEFAULT_MAX_STEPS) -> int:
    """How many checker steps ``t`` takes, whether or not it is well typed."""
    ctx = prelude_context() if ctx is None else ctx
    checker = _Checker(max_steps)
    try:
        checker.infer(ctx, t)
    except IllTyped:
        pass
    return checker.steps
