from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from metarewrite.errors import ParseError
from metarewrite.sexpr import Rational, SList, StringLit, Symbol, parse, parse_one, quote, to_string


def test_nested_list():
    (form,) = parse('(Inheritance (Concept "cat") (Concept "animal"))')
    assert form.head == "Inheritance"
    assert form[1] == SList((Symbol("Concept"), StringLit("cat")))


def test_rational_forms():
    form = parse_one("(choice 1/2 a b)")
    assert form[1] == Rational(Fraction(1, 2))
    assert parse_one("0.25") == Rational(Fraction(1, 4))
    assert parse_one("-3/4") == Rational(Fraction(-3, 4))
    assert parse_one("7") == Rational(Fraction(7))


def test_unclosed_reports_end_of_input():
    with pytest.raises(ParseError) as err:
        parse("(unclosed")
    assert (err.value.line, err.value.column) == (1, 10)


def test_errors_are_positioned():
    with pytest.raises(ParseError, match=r"^2:3:"):
        parse('(a)\n  )')
    with pytest.raises(ParseError):
        parse('"no end')
    with pytest.raises(ParseError):
        parse("1/0")


def test_comments_and_escapes():
    forms = parse('# header\n(a "x\\"y\\n") # trailing\n')
    assert forms == [SList((Symbol("a"), StringLit('x"y\n')))]


def test_positions_kept_but_not_compared():
    a, b = parse("(x)\n\n   (x)")
    assert a == b
    assert a.pos == (1, 1) and b.pos == (3, 4)


def test_quote_round_trip():
    s = 'tab\there "q" back\\slash'
    assert parse_one(quote(s)) == StringLit(s)


names = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=8)
symbols = st.from_regex(r"[A-Za-z$*!?<>=+_-][A-Za-z0-9$*!?<>=+_:-]{0,6}", fullmatch=True).filter(
    lambda s: not s.lstrip("+-").replace(".", "").replace("/", "").isdigit())
leaves = st.one_of(
    names.map(StringLit),
    symbols.map(Symbol),
    st.fractions(max_denominator=50).map(Rational),
)
exprs = st.recursive(leaves, lambda kids: st.lists(kids, max_size=4).map(lambda xs: SList(tuple(xs))),
                     max_leaves=20)


@given(exprs)
def test_print_parse_identity(expr):
    text = to_string(expr)
    assert parse_one(text) == expr
    assert to_string(parse_one(text)) == text


@given(st.text(max_size=60))
def test_reader_never_crashes(text):
    try:
        parse(text)
    except ParseError:
        pass
