import pytest

from metarewrite.errors import GrammarError
from metarewrite.lam.encode import IsoTypePlugin
from metarewrite.loader import load_text
from metarewrite.repl import Session
from metarewrite.store import Store
from metarewrite.typesys import SimpleArity, TypeRegistry

from conftest import FIXTURES, fixture_text

CORPUS = sorted(p.name for p in FIXTURES.glob("*.sexpr"))


def test_ids_parallel_to_input():
    store = Store()
    ids = load_text('(Concept "a") (Concept "b") (Concept "a")', store)
    assert ids[0] == ids[2] != ids[1]


def test_numbers_name_nodes_canonically():
    store = Store()
    (a,) = load_text("(Number 0.5)", store)
    (b,) = load_text('(Number "1/2")', store)
    assert a == b


def test_truth_value_suffix():
    store = Store()
    (a,) = load_text('(Concept "a" (tv 0.5 1/4))', store)
    assert str(store.resolve(a).tv) == "(tv 1/2 1/4)"


@pytest.mark.parametrize("text", [
    "(Concept)",
    '(Concept "")',
    'cat',
    '(Concept "a" "b")',
    '(Inheritance (Concept "a") cat)',
    '(Concept "a" (tv 2 1))',
    '(tv 1 1)',
    '(List (Typed (Concept "a") (TypeSystem "x") (T "t")))',
    '(Rule (Inheritance (Variable "$a") (Concept "b")) (Inheritance (Variable "$z") (Concept "b")))',
    '(lam (x lin) )',
])
def test_grammar_errors(text):
    with pytest.raises(GrammarError):
        load_text(text, Store(), rules=[])


def test_empty_link_types_are_allowed():
    store = Store()
    (a,) = load_text("(List)", store)
    assert store.resolve(a).is_link


def test_rules_are_registered():
    rules = []
    load_text(fixture_text("deduction.sexpr"), Store(), rules=rules)
    assert len(rules) == 1


def test_typed_forms_annotate():
    store = Store()
    types = TypeRegistry(store)
    arity = types.register(SimpleArity())
    iso = types.register(IsoTypePlugin())
    load_text(fixture_text("typed.sexpr"), store, types)
    snap = store.snapshot()
    verdicts = sorted(str(types.check_atom(a, s, snap)) + " " + s.name
                      for a in snap.annotated_atoms() for s in (arity, iso)
                      if types.annotations(a, s, snap))
    assert verdicts == ["accept isotype-lambda", "accept isotype-lambda", "accept simple-arity",
                        "reject isotype-lambda", "reject simple-arity"]


def test_typed_needs_a_known_system():
    store = Store()
    with pytest.raises(GrammarError):
        load_text('(Typed (Concept "a") (TypeSystem "nope") (T "t"))', store, TypeRegistry(store))


def test_lambda_forms_are_encoded():
    store = Store()
    (a,) = load_text("(lam (x lin Bool) x)", store)
    assert store.type_name(a) == "Lam"


@pytest.mark.parametrize("name", CORPUS)
def test_dump_load_dump_is_identical(name):
    first = Session()
    first.load_text(fixture_text(name))
    dump = first.store.dump()
    second = Session()
    second.load_text(dump)
    assert second.store.dump() == dump


def test_jaywalking_fixture_has_links_on_links():
    s = Session()
    s.load_text(fixture_text("jaywalking.sexpr"))
    impl = next(iter(s.store.atoms_of_type("Implication")))
    targets = [s.store.resolve(t) for t in s.store.resolve(impl).targets]
    assert all(t.is_link for t in targets)
