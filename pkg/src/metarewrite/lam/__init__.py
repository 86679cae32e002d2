"""Layer-two calculus: dependent, linear and probabilistic lambda terms."""

from .check import (PRELUDE, Context, Entry, IllTyped, Reason, StepBudgetExceeded, check_against,
                    check_steps, prelude_context, typecheck)
from .encode import IsoTypePlugin, decode_term, encode_term
from .evaluate import Distribution, eval_distribution, is_value, reduce_step
from .terms import (STAR, Ann, App, CastDown, CastUp, Choice, Const, Lam, Mult, Pi, Star, Term, Var,
                    alpha_eq, apps, arrow, beta_step, free_vars, normalize, pair, parse_term, pretty,
                    subst)

__all__ = [
    "PRELUDE", "Context", "Entry", "IllTyped", "Reason", "StepBudgetExceeded", "check_against",
    "check_steps", "prelude_context", "typecheck", "IsoTypePlugin", "decode_term", "encode_term",
    "Distribution", "eval_distribution", "is_value", "reduce_step", "STAR", "Ann", "App", "CastDown",
    "CastUp", "Choice", "Const", "Lam", "Mult", "Pi", "Star", "Term", "Var", "alpha_eq", "apps",
    "arrow", "beta_step", "free_vars", "normalize", "pair", "parse_term", "pretty", "subst",
]
