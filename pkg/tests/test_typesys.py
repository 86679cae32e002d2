import pytest

from metarewrite.errors import DuplicateName, UnknownAtom, UnknownSystem
from metarewrite.lam.encode import IsoTypePlugin, encode_term
from metarewrite.lam.terms import parse_term
from metarewrite.store import LinkSpec, NodeSpec, Store
from metarewrite.typesys import SimpleArity, TypeRegistry, Verdict

CAT, ANIMAL = NodeSpec("Concept", "cat"), NodeSpec("Concept", "animal")


@pytest.fixture
def reg():
    return TypeRegistry(Store())


def test_systems_are_atoms(reg):
    sid = reg.register(SimpleArity())
    assert reg.store.resolve(sid.atom).type_name == "TypeSystem"
    assert reg.system("simple-arity") == sid
    with pytest.raises(DuplicateName):
        reg.register(SimpleArity())
    with pytest.raises(UnknownSystem):
        reg.system("nope")


def test_deferred_systems_appear_on_first_use(reg):
    reg.defer(SimpleArity())
    assert len(reg.store) == 0 and reg.names() == ["simple-arity"]
    reg.system("simple-arity")
    assert len(reg.store) == 1


def test_unannotated_atoms_are_unknown(reg):
    sid = reg.register(SimpleArity())
    link = reg.store.add(LinkSpec("Inheritance", (CAT, ANIMAL)))
    assert reg.check_atom(link, sid, reg.store.snapshot()) is Verdict.UNKNOWN


def test_arity_verdicts(reg):
    sid = reg.register(SimpleArity())
    store = reg.store
    good = store.add(LinkSpec("Inheritance", (CAT, ANIMAL)))
    bad = store.add(LinkSpec("Inheritance", (CAT,)))
    pinned = store.add(LinkSpec("List", (CAT, ANIMAL, NodeSpec("Concept", "x"))))
    two = store.add(NodeSpec("ArityType", "2"))
    for atom in (good, bad, pinned):
        reg.annotate(atom, sid, two)
    snap = store.snapshot()
    assert reg.check_atom(good, sid, snap) is Verdict.ACCEPT
    assert reg.check_atom(bad, sid, snap) is Verdict.REJECT
    assert reg.check_atom(pinned, sid, snap) is Verdict.REJECT


def test_consistency_treats_missing_types_as_dynamic(reg):
    sid = reg.register(SimpleArity())
    t1 = reg.store.add(NodeSpec("ArityType", "1"))
    t2 = reg.store.add(NodeSpec("ArityType", "2"))
    assert reg.consistent(None, t1, sid)
    assert reg.consistent(t1, t1, sid)
    assert not reg.consistent(t1, t2, sid)
    with pytest.raises(UnknownAtom):
        reg.consistent(t1, 999, sid)


def test_strip_restores_unknown(reg):
    sid = reg.register(SimpleArity())
    link = reg.store.add(LinkSpec("Inheritance", (CAT,)))
    ty = reg.store.add(NodeSpec("ArityType", "2"))
    reg.annotate(link, sid, ty)
    assert reg.check_atom(link, sid, reg.store.snapshot()) is Verdict.REJECT
    assert reg.strip(link, sid, ty)
    assert reg.check_atom(link, sid, reg.store.snapshot()) is Verdict.UNKNOWN


def test_two_systems_on_one_store(reg):
    arity = reg.register(SimpleArity())
    iso = reg.register(IsoTypePlugin())
    store = reg.store
    term = encode_term(store, parse_term("(lam (x lin Bool) x)"))
    reg.annotate(term, iso, encode_term(store, parse_term("(pi (x lin Bool) Bool)")))
    snap = store.snapshot()
    assert reg.check_atom(term, iso, snap) is Verdict.ACCEPT
    assert reg.check_atom(term, arity, snap) is Verdict.UNKNOWN


def test_plugin_unknown_on_annotated_atom_is_reject(reg):
    iso = reg.register(IsoTypePlugin())
    not_a_term = reg.store.add(LinkSpec("Inheritance", (CAT, ANIMAL)))
    reg.annotate(not_a_term, iso, encode_term(reg.store, parse_term("Bool")))
    assert reg.check_atom(not_a_term, iso, reg.store.snapshot()) is Verdict.REJECT
