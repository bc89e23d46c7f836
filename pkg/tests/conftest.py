"""Collects acceptance verdicts and prints one line per criterion at the end."""

from __future__ import annotations

import time

import pytest

SUITE_BUDGET_S = 60.0

_verdicts: dict[int, tuple[str, bool, str]] = {}
_started = time.perf_counter()


class Recorder:
    def __init__(self, number: int, title: str):
        self.number, self.title = number, title

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        detail = "" if ok else f"{exc_type.__name__}: {exc}".splitlines()[0]
        _verdicts[self.number] = (self.title, ok, detail)
        print(f"criterion {self.number:2d} {'PASS' if ok else 'FAIL'}  {self.title}" + (f"  ({detail})" if detail else ""))
        return False


@pytest.fixture
def criterion():
    return Recorder


def _suite_elapsed() -> float:
    return time.perf_counter() - _started


def pytest_sessionfinish(session, exitstatus):
    if _verdicts and _suite_elapsed() > SUITE_BUDGET_S and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    elapsed = _suite_elapsed()
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_verdicts):
        title, ok, detail = _verdicts[n]
        if n == 12:
            fast = elapsed < SUITE_BUDGET_S
            title = f"{title}; full suite {elapsed:.1f} s (< {SUITE_BUDGET_S:.0f} s)"
            ok = ok and fast
        tr.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else ""))
