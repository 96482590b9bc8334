import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pure(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


# acceptance summary: criterion -> list of (part, passed, detail)
CRITERIA: dict[int, list] = {}


def record(criterion: int, part: str, passed: bool, detail: str) -> None:
    CRITERIA.setdefault(criterion, []).append((part, bool(passed), detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(CRITERIA):
        parts = CRITERIA[n]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name}: {d}" + ("" if p else " FAILED") for name, p, d in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
