"""S-expression reader and printer.

Grammar: lists in parentheses, double-quoted strings with backslash escapes,
rationals written as ``7``, ``-3/4`` or ``0.25`` (decimals become exact
fractions), and symbols for everything else.  ``#`` starts a line comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .errors import ParseError

Pos = tuple[int, int]


@dataclass(frozen=True)
class Symbol:
    name: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class StringLit:
    value: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Rational:
    value: Fraction
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SList:
    items: tuple["SExpr", ...]
    pos: Pos | None = field(default=None, compare=False, repr=False)

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def head(self) -> str | None:
        if self.items and isinstance(self.items[0], Symbol):
            return self.items[0].name
        return None


SExpr = Union[Symbol, StringLit, Rational, SList]

_INT = re.compile(r"[+-]?\d+\Z")
_RATIO = re.compile(r"([+-]?\d+)/(\d+)\Z")
_DECIMAL = re.compile(r"[+-]?\d*\.\d+\Z|[+-]?\d+\.\d*\Z")
_DELIMS = set('()"#') | {" ", "\t", "\n", "\r", "\f", "\v"}
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.i = 0
        self.line = 1
        self.col = 1

    def error(self, message: str, pos: Pos | None = None):
        line, col = pos if pos else (self.line, self.col)
        return ParseError(message, line, col)

    def advance(self):
        ch = self.text[self.i]
        self.i += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def skip(self):
        text = self.text
        while self.i < len(text):
            ch = text[self.i]
            if ch == "#":
                while self.i < len(text) and text[self.i] != "\n":
                    self.advance()
            elif ch.isspace():
                self.advance()
            else:
                break

    def read_all(self) -> list[SExpr]:
        out = []
        # explicit stack: deeply nested fuzz input must not hit the recursion limit
        stack: list[tuple[Pos, list]] = []
        while True:
            self.skip()
            if self.i >= len(self.text):
                if stack:
                    raise self.error(
                        f"expected ')' to close list opened at "
                        f"{stack[-1][0][0]}:{stack[-1][0][1]}, got end of input"
                    )
                return out
            pos = (self.line, self.col)
            ch = self.text[self.i]
            if ch == "(":
                self.advance()
                stack.append((pos, []))
                continue
            if ch == ")":
                if not stack:
                    raise self.error("unexpected ')'")
                self.advance()
                start, items = stack.pop()
                value: SExpr = SList(tuple(items), start)
            elif ch == '"':
                value = self.read_string(pos)
            else:
                value = self.read_atom(pos)
            if stack:
                stack[-1][1].append(value)
            else:
                out.append(value)

    def read_string(self, pos: Pos) -> StringLit:
        self.advance()
        chars = []
        while True:
            if self.i >= len(self.text):
                raise self.error(f"expected '\"' to close string opened at {pos[0]}:{pos[1]}, got end of input")
            ch = self.advance()
            if ch == '"':
                return StringLit("".join(chars), pos)
            if ch == "\\":
                if self.i >= len(self.text):
                    raise self.error("expected escape character, got end of input")
                esc_pos = (self.line, self.col)
                esc = self.advance()
                if esc not in _ESCAPES:
                    raise self.error(f"unknown escape '\\{esc}'", esc_pos)
                chars.append(_ESCAPES[esc])
            else:
                chars.append(ch)

    def read_atom(self, pos: Pos) -> SExpr:
        start = self.i
        while self.i < len(self.text) and self.text[self.i] not in _DELIMS and not self.text[self.i].isspace():
            self.advance()
        token = self.text[start:self.i]
        if _INT.match(token):
            return Rational(Fraction(int(token)), pos)
        m = _RATIO.match(token)
        if m:
            if int(m.group(2)) == 0:
                raise self.error(f"zero denominator in {token!r}", pos)
            return Rational(Fraction(int(m.group(1)), int(m.group(2))), pos)
        if _DECIMAL.match(token):
            return Rational(Fraction(token), pos)
        return Symbol(token, pos)


def parse(text: str) -> list[SExpr]:
    """Parse the whole of ``text``; raise ParseError with a line:column position."""
    return _Reader(text).read_all()


def parse_one(text: str) -> SExpr:
    exprs = parse(text)
    if len(exprs) != 1:
        raise ParseError(f"expected exactly one expression, got {len(exprs)}", 1, 1)
    return exprs[0]


def quote(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"' or ch == "\\":
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def to_string(expr: SExpr) -> str:
    match expr:
        case Symbol(name):
            return name
        case StringLit(value):
            return quote(value)
        case Rational(value):
            return format_fraction(value)
        case SList(items):
            return "(" + " ".join(to_string(x) for x in items) + ")"
    raise TypeError(f"not an s-expression: {expr!r}")
