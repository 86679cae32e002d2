"""Exception hierarchy shared by every engine layer.

``EngineError`` subclasses are user-facing: the CLI maps them to exit code 1.
Anything else escaping the engine is treated as an internal error.
"""

from __future__ import annotations


class EngineError(Exception):
    pass


class UnknownAtom(EngineError, KeyError):
    def __init__(self, atom):
        super().__init__(atom)
        self.atom = atom

    def __str__(self):
        return f"unknown atom {self.atom!r}"


class HasIncoming(EngineError):
    def __init__(self, atom, referrers):
        super().__init__(f"atom {atom} is still referenced by {sorted(referrers)}")
        self.atom = atom
        self.referrers = frozenset(referrers)


class Conflict(EngineError):
    """Retryable commit failure: the batch no longer validates against the store."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class DuplicateName(EngineError):
    pass


class UnknownSystem(EngineError):
    pass


class InvalidStep(EngineError):
    pass


class CapExceeded(EngineError):
    pass


class InvalidRule(EngineError):
    pass


class UnboundVariable(EngineError):
    def __init__(self, variable):
        super().__init__(f"variable {variable!r} is unbound")
        self.variable = variable


class MalformedEncoding(EngineError):
    pass


class UnknownProcedure(EngineError):
    pass


class ArityMismatch(EngineError):
    pass


class CallbackFailure(EngineError):
    def __init__(self, procedure: str, cause: BaseException):
        super().__init__(f"grounded procedure {procedure!r} failed: {cause!r}")
        self.procedure = procedure
        self.cause = cause


class ParseError(EngineError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class GrammarError(EngineError):
    def __init__(self, message: str, form=None):
        where = ""
        pos = getattr(form, "pos", None)
        if pos is not None:
            where = f"{pos[0]}:{pos[1]}: "
        super().__init__(where + message)
        self.form = form


class SuiteFailure(EngineError):
    def __init__(self, suite: str, seed: int, detail: str):
        super().__init__(f"suite {suite!r} failed at seed {seed}: {detail}")
        self.suite = suite
        self.seed = seed
        self.detail = detail
