"""Shared pytest configuration.

Collects one pass/fail line per acceptance criterion (registered by
tests/test_acceptance.py) and prints them in the terminal summary so the
verdicts survive output capturing.
"""

CRITERION_RESULTS = {}


def record_criterion(number: int, description: str, ok: bool) -> None:
    CRITERION_RESULTS[number] = (description, ok)


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERION_RESULTS):
        description, ok = CRITERION_RESULTS[number]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number} {verdict}: {description}")
