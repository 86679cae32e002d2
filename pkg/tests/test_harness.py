import pytest

from metarewrite.errors import SuiteFailure
from metarewrite.harness import (GeneratorConfig, gen_dag_store, gen_pattern, gen_store, gen_term,
                                 run_suite, transitive_closure)
from metarewrite.lam.terms import free_vars


def test_same_seed_same_corpus():
    cfg = GeneratorConfig(seed=42)
    assert gen_store(cfg).dump() == gen_store(cfg).dump()
    assert gen_term(cfg) == gen_term(cfg)
    a, b = gen_store(cfg), gen_store(cfg)
    pa, pb = gen_pattern(cfg, a), gen_pattern(cfg, b)
    assert [a.render(c) for c in pa.clauses] == [b.render(c) for c in pb.clauses]


def test_budget_of_one_is_a_single_node():
    store = gen_store(GeneratorConfig(atom_budget=1))
    assert len(store) == 1 and store.resolve(next(iter(store.atom_ids()))).is_node


@pytest.mark.parametrize("seed", range(20))
def test_stores_respect_budget(seed):
    assert len(gen_store(GeneratorConfig(seed=seed, atom_budget=50))) <= 50


@pytest.mark.parametrize("seed", range(20))
def test_pattern_variables_are_declared(seed):
    cfg = GeneratorConfig(seed=seed, variable_budget=2, clause_budget=3)
    store = gen_store(cfg)
    p = gen_pattern(cfg, store)
    assert 1 <= len(p.clauses) <= 3
    assert {store.resolve(v).name for v in p.variables} <= {"$v0", "$v1"}


@pytest.mark.parametrize("seed", range(20))
def test_terms_are_closed(seed):
    assert free_vars(gen_term(GeneratorConfig(seed=seed, term_depth=6))) == frozenset()


def test_budgets_must_be_positive():
    with pytest.raises(ValueError):
        GeneratorConfig(atom_budget=0)


def test_closure_oracle():
    assert transitive_closure([("a", "b"), ("b", "c")]) == {("a", "b"), ("b", "c"), ("a", "c")}


def test_dag_store_is_small():
    store, edges = gen_dag_store(GeneratorConfig(seed=3, atom_budget=100))
    assert len(store) <= 100 and all(a < b for a, b in ((int(x[1:]), int(y[1:])) for x, y in edges))


@pytest.mark.parametrize("suite", ["oracle", "chaining", "determinism", "lambda", "gradual"])
def test_suites_pass_briefly(suite):
    report = run_suite(suite, GeneratorConfig(seed=11), 5)
    assert report.ok and len(report.cases) == 5
    assert report.lines().splitlines()[0] == f"11 {suite} pass"


def test_failures_carry_their_seed(monkeypatch):
    from metarewrite import harness
    monkeypatch.setitem(harness.SUITES, "oracle", lambda cfg, m: "boom" if cfg.seed == 4 else None)
    report = run_suite("oracle", GeneratorConfig(seed=2), 5)
    assert [c.seed for c in report.failures] == [4]
    assert "FAIL seed=4: boom" in report.text()
    with pytest.raises(SuiteFailure) as err:
        run_suite("oracle", GeneratorConfig(seed=2), 5, raise_on_failure=True)
    assert err.value.seed == 4


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")
