import pytest
from hypothesis import given, settings, strategies as st

from metarewrite.errors import CapExceeded, InvalidStep, UnknownAtom
from metarewrite.harness import GeneratorConfig, gen_pattern, gen_store
from metarewrite.loader import load_text
from metarewrite.pattern import (EMPTY, Bindings, MatchCursor, Pattern, ToIncoming, ToTarget,
                                 brute_force_query, candidate_roots, match_at, move_locus, query)
from metarewrite.store import NodeSpec


def pattern_of(store, text):
    (atom,) = load_text(text, store)
    return Pattern.from_atom(store, atom)


def names(store, results, var="$x"):
    v = store.lookup(NodeSpec("Variable", var))
    return sorted(store.resolve(b[v]).name for b in results)


def test_query_two_animals(animals):
    p = pattern_of(animals, '(Inheritance (Variable "$x") (Concept "animal"))')
    results = query(p, animals.snapshot())
    assert names(animals, results) == ["cat", "dog"]
    assert results == brute_force_query(p, animals.snapshot())


def test_conjunction_joins(animals):
    p = pattern_of(animals, '(Query (Inheritance (Variable "$x") (Concept "animal"))'
                            '       (Inheritance (Variable "$x") (Concept "pet")))')
    assert names(animals, query(p, animals.snapshot())) == ["cat"]


def test_no_match_is_empty(animals):
    p = pattern_of(animals, '(Inheritance (Variable "$x") (Concept "plant"))')
    assert query(p, animals.snapshot()) == set()


def test_variables_never_bind_variables(animals):
    p = pattern_of(animals, '(Inheritance (Variable "$x") (Variable "$y"))')
    for b in query(p, animals.snapshot()):
        assert not any(animals.resolve(v).is_variable for v in b.values())


def test_variable_binds_whole_link(animals):
    load_text('(Implication (Inheritance (Concept "cat") (Concept "pet")) (Concept "happy"))', animals)
    p = pattern_of(animals, '(Implication (Variable "$ante") (Concept "happy"))')
    (b,) = query(p, animals.snapshot())
    (value,) = b.values()
    assert animals.render(value) == '(Inheritance (Concept "cat") (Concept "pet"))'


def test_match_at_is_anchored(animals):
    (clause,) = load_text('(Inheritance (Variable "$x") (Concept "animal"))', animals)
    snap = animals.snapshot()
    (cat_animal,) = load_text('(Inheritance (Concept "cat") (Concept "animal"))', animals)
    (cat_pet,) = load_text('(Inheritance (Concept "cat") (Concept "pet"))', animals)
    assert match_at(clause, cat_pet, EMPTY, snap) is None
    b = match_at(clause, cat_animal, EMPTY, snap)
    x = animals.lookup(NodeSpec("Variable", "$x"))
    assert animals.resolve(b[x]).name == "cat"
    dog = animals.lookup(NodeSpec("Concept", "dog"))
    assert match_at(clause, cat_animal, Bindings({x: dog}), snap) is None
    with pytest.raises(UnknownAtom):
        match_at(clause, 10_000, EMPTY, snap)


def test_repeated_variable_must_agree(animals):
    load_text('(Similarity (Concept "cat") (Concept "cat"))', animals)
    p = pattern_of(animals, '(Similarity (Variable "$x") (Variable "$x"))')
    assert names(animals, query(p, animals.snapshot())) == ["cat"]


def test_candidate_roots_use_type_index(animals):
    (clause,) = load_text('(Similarity (Variable "$x") (Variable "$y"))', animals)
    snap = animals.snapshot()
    roots = list(candidate_roots(clause, snap))
    assert set(roots) == set(snap.atoms_of_type("Similarity"))


def test_move_locus(animals):
    snap = animals.snapshot()
    link = next(iter(snap.atoms_of_type("Similarity")))
    down = move_locus(MatchCursor(link), ToTarget(0), snap)
    assert snap.resolve(down.locus).name == "cat"
    up = move_locus(down, ToIncoming(link), snap)
    assert up.locus == link
    with pytest.raises(InvalidStep):
        move_locus(MatchCursor(link), ToTarget(5), snap)
    with pytest.raises(InvalidStep):
        move_locus(down, ToIncoming(down.locus), snap)


def test_brute_force_cap(animals):
    p = pattern_of(animals, '(Inheritance (Variable "$x") (Concept "animal"))')
    with pytest.raises(CapExceeded):
        brute_force_query(p, animals.snapshot(), cap=3)


def test_queries_leave_the_snapshot_alone(animals):
    p = pattern_of(animals, '(Inheritance (Variable "$x") (Concept "animal"))')
    snap = animals.snapshot()
    before = snap.dump()
    query(p, snap)
    assert snap.dump() == before


@settings(max_examples=60)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=1, max_value=60))
def test_query_matches_oracle(seed, budget):
    cfg = GeneratorConfig(seed=seed, atom_budget=budget)
    store = gen_store(cfg)
    p = gen_pattern(cfg, store)
    snap = store.snapshot()
    assert query(p, snap) == brute_force_query(p, snap)
