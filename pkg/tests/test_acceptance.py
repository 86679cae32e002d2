"""Acceptance gate: one test per criterion, summarized at the end of the run."""

import random
import time
from fractions import Fraction

import pytest

from metarewrite.errors import ParseError
from metarewrite.harness import (BENCH_ATOMS, BENCH_TYPED, CBV_TERM, GeneratorConfig, gen_duplicating_term,
                                 gen_linear_term, gen_term, run_bench, run_suite)
from metarewrite.lam import (IllTyped, Reason, StepBudgetExceeded, apps, check_against, decode_term,
                             encode_term, eval_distribution, parse_term, typecheck)
from metarewrite.lam.terms import Const
from metarewrite.repl import Session
from metarewrite.sexpr import parse
from metarewrite.store import Store

from conftest import FIXTURES


@pytest.mark.criterion(1, "oracle equivalence: query == brute force on 1,000 seeded cases")
def test_oracle_equivalence(criterion):
    report = run_suite("oracle", GeneratorConfig(seed=0, atom_budget=200, clause_budget=3, variable_budget=3),
                       1000)
    criterion.append(f"{len(report.cases)} cases, {len(report.failures)} mismatches, {report.seconds:.1f}s")
    assert len(report.cases) == 1000
    assert report.ok, report.text()
    assert report.seconds < 60


@pytest.mark.criterion(2, "chaining closure and forward/backward agreement on random DAGs")
def test_chaining_closure(criterion):
    report = run_suite("chaining", GeneratorConfig(seed=0, atom_budget=100), 200)
    criterion.append(f"{len(report.cases)} DAGs, {report.metrics.get('closure_pairs', 0)} closure pairs")
    assert report.ok, report.text()


@pytest.mark.criterion(3, "determinism under parallelism and commit order")
def test_determinism(criterion):
    report = run_suite("determinism", GeneratorConfig(seed=0, atom_budget=100), 100)
    criterion.append(f"{len(report.cases)} stores x workers 1/2/4/8")
    assert report.ok, report.text()


@pytest.mark.criterion(4, "IsoType casts and bounded type checking")
def test_isotype(criterion):
    with pytest.raises(IllTyped) as err:
        typecheck(parse_term("(app not b0)"))
    assert err.value.reason is Reason.TYPE_MISMATCH
    assert typecheck(parse_term("(app not (cast-down b0))")) == Const("Bool")
    check_against(parse_term("(cast-up a)"), parse_term("(app (lam (A many *) A) Bool)"))
    bound, checked = 100_000, 0
    for seed in range(2000):
        term = gen_term(GeneratorConfig(seed=seed, term_depth=1 + seed % 6))
        try:
            typecheck(term, max_steps=bound)
        except IllTyped:
            pass
        except StepBudgetExceeded:
            pytest.fail(f"seed {seed}: checking exceeded {bound} steps")
        checked += 1
    criterion.append(f"cast triple ok, {checked} generated terms checked within {bound} steps")


@pytest.mark.criterion(5, "linearity: duplicated linear variables rejected, linear corpus accepted")
def test_linearity(criterion):
    rejected = accepted = 0
    for seed in range(500):
        bad = gen_duplicating_term(GeneratorConfig(seed=seed))
        with pytest.raises(IllTyped) as err:
            typecheck(bad)
        assert err.value.reason is Reason.LINEARITY_VIOLATION, seed
        rejected += 1
        good, ty = gen_linear_term(GeneratorConfig(seed=seed))
        check_against(good, ty)
        accepted += 1
    for text in ["(lam (x lin Bool) x)", "(lam (A erased *) (lam (x lin A) x))",
                 "(lam (x lin Bool) (lam (y lin Bool) (app Pair x y)))"]:
        typecheck(parse_term(text))
        accepted += 1
    criterion.append(f"{rejected}/500 rejected, {accepted}/{accepted} accepted")


@pytest.mark.criterion(6, "probabilistic confluence with exact mass")
def test_confluence(criterion):
    for seed in range(50):
        term = gen_term(GeneratorConfig(seed=seed, term_depth=4))
        bfs, dfs = eval_distribution(term, 40, "bfs"), eval_distribution(term, 40, "dfs")
        assert bfs == dfs, seed
        assert bfs.total == 1, seed
    d = eval_distribution(CBV_TERM, 100)
    pair = lambda l, r: apps(Const("Pair"), Const(l), Const(r))  # noqa: E731
    assert d.outcomes == {pair("a", "a"): Fraction(1, 2), pair("b", "b"): Fraction(1, 2)}
    assert d[pair("a", "b")] == 0 and d.residual == 0
    criterion.append("50 terms identical under bfs/dfs; CBV pair test exact")


@pytest.mark.criterion(7, "gradual guarantee: stripping an annotation never flips accept to reject")
def test_gradual_guarantee(criterion):
    report = run_suite("gradual", GeneratorConfig(seed=0), 500)
    criterion.append(f"{len(report.cases)} cases, {report.metrics.get('annotations', 0)} annotations")
    assert report.ok, report.text()


@pytest.mark.criterion(8, "index efficiency: inspections equal the typed-atom count")
def test_index_efficiency(criterion):
    stats = run_bench(BENCH_ATOMS, BENCH_TYPED)
    criterion.append(f"inspected {stats['inspected']} of {stats['store_size']} atoms")
    assert stats["store_size"] == 100_000
    assert stats["typed_atoms"] == 50
    assert stats["inspected"] == 50
    assert stats["scanned"] == 0


def _fuzz_inputs(rng: random.Random, corpus: list[str], n: int):
    alphabet = '()"\\#;/.-+0123456789 \n\tabcxyz$*é\x00'
    for i in range(n):
        kind = i % 4
        if kind == 0:
            yield bytes(rng.randrange(256) for _ in range(rng.randint(0, 80))).decode("utf-8", "replace")
        elif kind == 1:
            text = rng.choice(corpus)
            yield text[:rng.randint(0, len(text))]
        elif kind == 2:
            yield "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
        else:
            text = list(rng.choice(corpus))
            for _ in range(rng.randint(1, 5)):
                if text:
                    text[rng.randrange(len(text))] = rng.choice(alphabet)
            yield "".join(text)


@pytest.mark.criterion(9, "round-trips: dumps, lambda encodings, fuzzed reader")
def test_round_trips(criterion):
    corpus = [p.read_text(encoding="utf-8") for p in sorted(FIXTURES.glob("*.sexpr"))]
    for text in corpus:
        first = Session()
        first.load_text(text)
        dump = first.store.dump()
        second = Session()
        second.load_text(dump)
        assert second.store.dump() == dump
    for seed in range(1000):
        term = gen_term(GeneratorConfig(seed=seed, term_depth=1 + seed % 6))
        store = Store()
        assert decode_term(store, encode_term(store, term)) == term
    rng = random.Random(0)
    start, count = time.perf_counter(), 0
    for text in _fuzz_inputs(rng, corpus, 10_000):
        try:
            parse(text)
        except ParseError:
            pass
        count += 1
    criterion.append(f"{len(corpus)} fixtures, 1000 terms, {count} fuzzed inputs "
                     f"({time.perf_counter() - start:.1f}s)")
