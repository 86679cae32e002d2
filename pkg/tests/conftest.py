from pathlib import Path

import pytest
from hypothesis import settings

from metarewrite.loader import load_text
from metarewrite.repl import Session
from metarewrite.store import Store

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture
def animals() -> Store:
    store = Store()
    load_text(fixture_text("animals.sexpr"), store)
    return store


@pytest.fixture
def session() -> Session:
    return Session(base_dir=FIXTURES)


# -- acceptance reporting -------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; the outcome is the test's own."""
    number, title = request.node.get_closest_marker("criterion").args
    details: list[str] = []
    ACCEPTANCE[number] = (title, False, "")
    yield details
    ACCEPTANCE[number] = (title, True, "; ".join(details))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is not None and call.excinfo is not None and call.when == "call":
        number, title = marker.args
        ACCEPTANCE[number] = (title, False, call.excinfo.exconly().splitlines()[0][:160])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
