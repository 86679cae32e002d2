from metarewrite.repl import HELP, Session, repl_command

from conftest import FIXTURES


def test_stats_on_empty_session_are_zero():
    out = repl_command("!stats", Session())
    assert out.splitlines()[:5] == ["atoms: 0", "version: 0", "rules: 0", "inspected: 0", "scanned: 0"]


def test_query_on_standard_fixture(session):
    session.command("!load animals.sexpr")
    out = session.command('!query (Inheritance (Variable "$x") (Concept "animal"))')
    assert out == '$x=(Concept "cat")\n$x=(Concept "dog")'


def test_query_does_not_grow_the_store(session):
    session.command("!load animals.sexpr")
    size = len(session.store)
    session.command('!query (Inheritance (Variable "$x") (Concept "plant"))')
    assert len(session.store) == size


def test_ground_query(session):
    session.command("!load animals.sexpr")
    assert session.command('!query (Inheritance (Concept "cat") (Concept "pet"))') == "(match)"
    assert session.command('!query (Inheritance (Concept "dog") (Concept "pet"))') == "(no matches)"


def test_eval():
    assert Session().command("!eval (choice 1/2 (choice 1/2 a b) c) 100") == "a:1/4 b:1/4 c:1/2"


def test_forward_and_backward(session):
    session.command("!load deduction.sexpr")
    assert session.command('!backward (Inheritance (Concept "cat") (Concept "organism")) 1') == "(no proofs)"
    out = session.command('!backward (Inheritance (Concept "cat") (Variable "$y")) 2')
    assert out.count("\n") == 2
    out = session.command("!forward all 10")
    assert "3 new atoms (fixpoint)" in out
    out = session.command('!query (Inheritance (Concept "cat") (Variable "$y"))')
    assert out.count("\n") == 2


def test_forward_with_rule_file(session):
    session.command('(Inheritance (Concept "a") (Concept "b"))')
    session.command('(Inheritance (Concept "b") (Concept "c"))')
    assert "1 rules" in session.command("!forward deduction.sexpr 5")


def test_check(session):
    session.command("!load typed.sexpr")
    assert session.command("!check (lam (x lin Bool) x) isotype-lambda") == "accept"
    assert session.command("!check (lam (x lin Bool) (app Pair x x)) isotype-lambda") == "reject"
    assert session.command('!check (Concept "new") simple-arity') == "unknown"
    assert session.command('!check (Concept "new") nope').startswith("error:")


def test_exec(session):
    assert session.command('!exec (Execution (GroundedSchema "num:mul") (Number 3) (Number 1/2))') == '(Number "3/2")'


def test_dump_to_file_and_back(session, tmp_path):
    session.command("!load jaywalking.sexpr")
    target = tmp_path / "out.sexpr"
    assert session.command(f"!dump {target}").startswith("wrote")
    again = Session()
    again.command(f"!load {target}")
    assert again.store.dump() == session.store.dump()


def test_errors_never_abort(session):
    for line in ["(Concept)", "!nope", "!load missing.sexpr", "!eval (app", "!forward all x",
                 "!backward (Concept \"a\")", "!query", '!check (Concept "a")']:
        assert session.command(line).startswith("error:"), line
    assert session.errors == 8
    assert session.command('(Concept "still-alive")') == '(Concept "still-alive")'


def test_help_and_comments(session):
    assert session.command("!help") == HELP
    assert session.command("# just a comment") == ""


def test_script_runs_commands_in_order():
    s = Session(base_dir=FIXTURES)
    out = []
    s.run_text((FIXTURES / "script.engine").read_text(), out.append)
    assert out == ['$x=(Concept "cat")\n$x=(Concept "dog")', "a:1/4 b:1/4 c:1/2"]


def test_script_errors_use_script_lines():
    out = []
    Session().run_text('(Concept "a")\n\n(Concept)\n', out.append, "f.sexpr")
    assert out == ["error: f.sexpr:3:1: (Concept) needs a name or children"]
