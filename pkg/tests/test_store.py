from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from metarewrite.errors import Conflict, HasIncoming, UnknownAtom
from metarewrite.store import LinkSpec, NodeSpec, Store, TruthValue, revise

CAT = NodeSpec("Concept", "cat")
ANIMAL = NodeSpec("Concept", "animal")


def tv(s, c):
    return TruthValue(Fraction(s), Fraction(c))


def test_nodes_deduplicate():
    store = Store()
    a = store.add_node("Concept", "cat")
    assert store.add_node("Concept", "cat") == a
    assert len(store) == 1 and store.version == 1


def test_links_deduplicate_and_index_incoming():
    store = Store()
    link = store.add(LinkSpec("Inheritance", (CAT, ANIMAL)))
    assert store.add(LinkSpec("Inheritance", (CAT, ANIMAL))) == link
    cat = store.lookup(CAT)
    assert store.incoming(cat) == {link}
    assert store.lookup(LinkSpec("Inheritance", (ANIMAL, CAT))) is None


def test_link_to_link():
    store = Store()
    inner = store.add(LinkSpec("Inheritance", (CAT, ANIMAL)))
    outer = store.add(LinkSpec("Implication", (inner, LinkSpec("List", (CAT,)))))
    assert store.resolve(outer).targets[0] == inner
    assert store.render(outer) == '(Implication (Inheritance (Concept "cat") (Concept "animal")) (List (Concept "cat")))'


def test_truth_value_revision_keeps_higher_confidence():
    assert revise(tv(1, "1/2"), tv(0, "3/4")) == tv(0, "3/4")
    assert revise(tv(1, "3/4"), tv(0, "1/2")) == tv(1, "3/4")
    assert revise(tv(1, "1/2"), tv(0, "1/2")) == tv(1, "1/2")
    assert revise(None, tv(0, 1)) == tv(0, 1)
    store = Store()
    a = store.add_node("Concept", "x", tv("1/2", "1/2"))
    v = store.version
    store.add_node("Concept", "x", tv("1/4", "1/4"))
    assert store.version == v
    store.add_node("Concept", "x", tv("1/4", "3/4"))
    assert store.resolve(a).tv == tv("1/4", "3/4") and store.version == v + 1


def test_truth_value_bounds():
    with pytest.raises(ValueError):
        tv(2, 1)


def test_remove_refuses_referenced_atoms():
    store = Store()
    link = store.add(LinkSpec("Inheritance", (CAT, ANIMAL)))
    cat = store.lookup(CAT)
    with pytest.raises(HasIncoming) as err:
        store.remove(cat)
    assert err.value.referrers == {link}
    store.remove(link)
    store.remove(cat)
    assert store.lookup(CAT) is None
    with pytest.raises(UnknownAtom):
        store.remove(cat)


def test_snapshot_is_isolated():
    store = Store()
    store.add(CAT)
    snap = store.snapshot()
    store.add(ANIMAL)
    assert len(snap) == 1 and len(store) == 2
    assert snap.version < store.version


def test_commit_is_atomic_on_failure():
    store = Store()
    cat = store.add(CAT)
    snap = store.snapshot()
    with pytest.raises(UnknownAtom):
        store.commit(snap, [LinkSpec("List", (cat,)), LinkSpec("List", (999,))])
    assert len(store) == 1


def test_commit_conflict_when_removed_since_base():
    store = Store()
    cat = store.add(CAT)
    base = store.snapshot()
    store.remove(cat)
    with pytest.raises(Conflict):
        store.commit(base, removals=[cat])


def test_commit_conflict_when_referrers_appear():
    store = Store()
    cat = store.add(CAT)
    base = store.snapshot()
    store.add(LinkSpec("List", (cat,)))
    with pytest.raises(Conflict):
        store.commit(base, removals=[cat])


def test_commit_removes_links_before_targets():
    store = Store()
    link = store.add(LinkSpec("Inheritance", (CAT, ANIMAL)))
    cat, animal = store.lookup(CAT), store.lookup(ANIMAL)
    done = store.commit(store.snapshot(), removals=[cat, link, animal])
    assert len(store) == 0 and done.version == store.version


def test_annotations_pin_their_atoms():
    store = Store()
    atom, system, ty = store.add(CAT), store.add_node("TypeSystem", "s"), store.add_node("T", "t")
    assert store.annotate(atom, system, ty)
    assert not store.annotate(atom, system, ty)
    with pytest.raises(HasIncoming):
        store.remove(ty)
    assert store.unannotate(atom, system, ty)
    store.remove(ty)


def test_dump_is_sorted_and_id_independent():
    a, b = Store(), Store()
    a.add(LinkSpec("Inheritance", (CAT, ANIMAL), tv(1, "1/2")))
    b.add(ANIMAL)
    b.add(LinkSpec("Inheritance", (CAT, ANIMAL), tv(1, "1/2")))
    assert a.dump() == b.dump()
    assert '(tv 1 1/2)' in a.dump()


def test_from_snapshot_keeps_ids():
    store = Store()
    cat = store.add(CAT)
    copy = Store.from_snapshot(store.snapshot())
    assert copy.lookup(CAT) == cat
    copy.add(ANIMAL)
    assert store.lookup(ANIMAL) is None


# -- properties ---------------------------------------------------------------

names = st.sampled_from(["a", "b", "c", "d"])
types = st.sampled_from(["Concept", "Predicate"])
node_specs = st.builds(NodeSpec, types, names)
specs = st.recursive(
    node_specs,
    lambda kids: st.builds(LinkSpec, st.sampled_from(["List", "Inheritance", "Member"]),
                           st.lists(kids, min_size=1, max_size=3).map(tuple)),
    max_leaves=8,
)


@given(st.lists(specs, max_size=12))
def test_adding_twice_changes_nothing(batch):
    store = Store()
    ids = [store.add(s) for s in batch]
    version, size = store.version, len(store)
    assert [store.add(s) for s in batch] == ids
    assert (store.version, len(store)) == (version, size)


@given(st.lists(specs, max_size=12))
def test_type_index_equals_linear_scan(batch):
    store = Store()
    for s in batch:
        store.add(s)
    for t in store.type_names():
        by_index = sorted(store.atoms_of_type(t))
        by_scan = sorted(a for a in store.atom_ids() if store.type_name(a) == t)
        assert by_index == by_scan


@given(st.lists(specs, max_size=6), st.lists(specs, max_size=6), st.lists(specs, max_size=6))
def test_commit_order_does_not_matter(base, first, second):
    results = set()
    for order in ((first, second), (second, first)):
        store = Store()
        for s in base:
            store.add(s)
        snap = store.snapshot()
        for batch in order:
            store.commit(snap, batch)
        results.add(store.dump())
    assert len(results) == 1
