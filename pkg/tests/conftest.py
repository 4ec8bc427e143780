from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from dangerinv import corpus

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BIG = corpus.BIG


@pytest.fixture
def fig4a16():
    return corpus.program("fig4a", 8, {BIG: 16})


@pytest.fixture
def fig3a():
    return corpus.program("fig3a", 8)


@pytest.fixture
def fig3c():
    return corpus.program("fig3c", 8)


# One summary line per acceptance criterion, filled in by test_acceptance.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    def record(n: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE[n] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
