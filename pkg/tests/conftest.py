import pytest
from support import ACCEPTANCE

from tccsim.engine import Engine
from tccsim.quizzes import QuizzesFunctionalities


@pytest.fixture
def engine():
    with Engine(simulation=True) as e:
        yield e


@pytest.fixture
def app(engine):
    return QuizzesFunctionalities(engine)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
