import subprocess
import sys

import pytest

from metarewrite import cli

from conftest import FIXTURES


@pytest.fixture(autouse=True)
def no_color(monkeypatch):
    monkeypatch.setenv("ENGINE_COLOR", "0")


def test_run_script(capsys):
    assert cli.main(["run", str(FIXTURES / "script.engine")]) == 0
    out = capsys.readouterr().out
    assert out == '$x=(Concept "cat")\n$x=(Concept "dog")\na:1/4 b:1/4 c:1/2\n'


def test_run_reports_user_errors(tmp_path, capsys):
    bad = tmp_path / "bad.sexpr"
    bad.write_text('(Concept "a")\n(Concept)\n')
    assert cli.main(["run", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "bad.sexpr:2:1: (Concept) needs a name" in err
    assert "\033[" not in err


def test_missing_file_is_a_user_error(capsys):
    assert cli.main(["run", "/nonexistent/file.sexpr"]) == 1


def test_query(capsys):
    code = cli.main(["query", str(FIXTURES / "animals.sexpr"),
                     "--pattern", '(Inheritance (Variable "$x") (Concept "animal"))'])
    assert code == 0
    assert capsys.readouterr().out == '$x=(Concept "cat")\n$x=(Concept "dog")\n'


def test_check(capsys):
    code = cli.main(["check", str(FIXTURES / "typed.sexpr"), "--system", "isotype-lambda"])
    out = capsys.readouterr().out
    assert code == 1  # the fixture contains one ill-typed term
    assert out.splitlines()[-1] == "# 2 accepted, 1 rejected under isotype-lambda"


def test_check_unknown_system(capsys):
    assert cli.main(["check", str(FIXTURES / "typed.sexpr"), "--system", "nope"]) == 1


def test_test_suite_lines(capsys):
    assert cli.main(["test", "--suite", "oracle", "--seed", "7", "--cases", "3", "--format", "lines"]) == 0
    assert capsys.readouterr().out == "7 oracle pass\n8 oracle pass\n9 oracle pass\n"


def test_bad_usage_is_a_user_error(capsys):
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["run", "x", "--workers", "0"]) == 1


def test_internal_errors_exit_2(monkeypatch, capsys):
    def boom(args):
        raise RuntimeError("bug")
    parser = cli.build_parser
    monkeypatch.setattr(cli, "build_parser", lambda: _with_func(parser(), boom))
    assert cli.main(["run", "x"]) == 2


def _with_func(parser, func):
    parser.set_defaults(func=func)
    for action in parser._subparsers._group_actions:
        for sub in action.choices.values():
            sub.set_defaults(func=func)
    return parser


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "metarewrite.cli", "test", "--suite", "bench"],
                          capture_output=True, text=True, env={"ENGINE_COLOR": "0", "PATH": ""})
    assert proc.returncode == 0, proc.stderr
    assert "inspected: 50" in proc.stdout and "store_size: 100000" in proc.stdout
