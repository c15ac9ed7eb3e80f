from __future__ import annotations

import pytest

from cfml.primes import load_table, sieve


@pytest.fixture(scope="session")
def small_table():
    return sieve(10**6)


@pytest.fixture(scope="session")
def mc_table():
    return load_table(10**7)


@pytest.fixture(scope="session")
def big_table():
    return load_table(10**8)


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record ``(number, title, passed, detail)``; prints a PASS/FAIL line and asserts."""

    def record(number: int, title: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
        _CRITERIA.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
