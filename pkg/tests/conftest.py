import numpy as np
import pytest

ACCEPTANCE_LINES: list = []


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append((number, f"[{number:>2}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
