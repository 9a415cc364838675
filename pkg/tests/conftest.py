import numpy as np
import pytest

TWO_PI = 2.0 * np.pi

_criterion_lines: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    _criterion_lines.append(f"acceptance criterion {number}: {status} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criterion_lines):
            terminalreporter.write_line(line)


def periodic_dist(p, q):
    d = (np.asarray(p) - np.asarray(q) + np.pi) % TWO_PI - np.pi
    return float(np.hypot(*d))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
