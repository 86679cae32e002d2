"""Call-by-value reduction to exact probability distributions.

A choice is never a value, so it is resolved before it can be substituted:
``(app (lam (x many) (app (app Pair x) x)) (choice 1/2 a b))`` yields
``Pair a a`` or ``Pair b b``, never ``Pair a b``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from ..sexpr import format_fraction
from .terms import Ann, App, CastDown, CastUp, Choice, Const, Lam, Pi, Star, Term, Var, pretty, subst

ONE = Fraction(1)


def _is_neutral(t: Term) -> bool:
    while isinstance(t, App):
        if not is_value(t.arg):
            return False
        t = t.fn
    return isinstance(t, (Const, Var))


def is_value(t: Term) -> bool:
    match t:
        case Lam() | Pi() | Star() | Const() | Var():
            return True
        case App():
            return _is_neutral(t)
        case CastUp(e):
            return is_value(e)
        case Ann(CastUp(e), _):
            return is_value(e)
    return False


def _wrap(successors, build):
    return [(build(s), w) for s, w in successors]


def reduce_step(t: Term) -> list[tuple[Term, Fraction]]:
    """Weighted successors of ``t`` under leftmost call-by-value.

    Values and stuck terms have no successors.  Weights sum to 1 otherwise.
    """
    match t:
        case Choice(p, left, right):
            return [(left, p), (right, ONE - p)]
        case App(f, a):
            if not is_value(f):
                return _wrap(reduce_step(f), lambda s: App(s, a))
            if not is_value(a):
                return _wrap(reduce_step(a), lambda s: App(f, s))
            if isinstance(f, Lam):
                return [(subst(f.body, f.binder, a), ONE)]
            return []
        case Ann(e, ty):
            if not is_value(e):
                return _wrap(reduce_step(e), lambda s: Ann(s, ty))
            if isinstance(e, CastUp):
                return []
            return [(e, ONE)]
        case CastUp(e):
            if not is_value(e):
                return _wrap(reduce_step(e), CastUp)
            return []
        case CastDown(e):
            if not is_value(e):
                return _wrap(reduce_step(e), CastDown)
            match e:
                case CastUp(v) | Ann(CastUp(v), _):
                    return [(v, ONE)]
            return [(e, ONE)]  # casts carry no runtime content
    return []


@dataclass
class Distribution:
    outcomes: dict[Term, Fraction] = field(default_factory=dict)
    residual: Fraction = Fraction(0)

    @property
    def total(self) -> Fraction:
        return sum(self.outcomes.values(), Fraction(0)) + self.residual

    def __getitem__(self, term: Term) -> Fraction:
        return self.outcomes.get(term, Fraction(0))

    def render(self) -> str:
        parts = sorted(f"{pretty(t)}:{format_fraction(p)}" for t, p in self.outcomes.items())
        if self.residual:
            parts.append(f"residual:{format_fraction(self.residual)}")
        return " ".join(parts) if parts else "(no outcomes)"


def eval_distribution(t: Term, max_steps: int, order: str = "bfs") -> Distribution:
    """Expand reductions up to ``max_steps`` deep; unfinished mass goes to ``residual``."""
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    if order == "bfs":
        return _breadth_first(t, max_steps)
    if order == "dfs":
        return _depth_first(t, max_steps)
    raise ValueError(f"unknown expansion order {order!r}")


def _breadth_first(t: Term, max_steps: int) -> Distribution:
    outcomes: dict[Term, Fraction] = defaultdict(Fraction)
    residual = Fraction(0)
    frontier = {t: ONE}
    for depth in range(max_steps + 1):
        nxt: dict[Term, Fraction] = defaultdict(Fraction)
        for term, p in frontier.items():
            successors = reduce_step(term)
            if not successors:
                outcomes[term] += p
            elif depth == max_steps:
                residual += p
            else:
                for s, w in successors:
                    nxt[s] += p * w
        frontier = nxt
        if not frontier:
            break
    return Distribution(dict(outcomes), residual)


def _depth_first(t: Term, max_steps: int) -> Distribution:
    outcomes: dict[Term, Fraction] = defaultdict(Fraction)
    residual = Fraction(0)
    stack = [(t, ONE, 0)]
    while stack:
        term, p, depth = stack.pop()
        successors = reduce_step(term)
        if not successors:
            outcomes[term] += p
        elif depth == max_steps:
            residual += p
        else:
            for s, w in reversed(successors):
                stack.append((s, p * w, depth + 1))
    return Distribution(dict(outcomes), residual)
