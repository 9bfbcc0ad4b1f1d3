import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from boothvote.group import generate_params, make_params  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures" / "v1"

ACCEPTANCE_LINES = []


@pytest.fixture
def p23():
    return make_params(23, 5, 3, 2)


@pytest.fixture
def p47():
    return make_params(47, 5, 3, 2)


@pytest.fixture(scope="session")
def params64():
    return generate_params(64, 12, 3, b"tests/params64")


@pytest.fixture
def acceptance_line():
    def record(label, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
