import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    """Keep a one-line verdict for the terminal summary."""
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title}" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hermitian(rng, n, pd=False):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if pd:
        return a @ a.conj().T + n * np.eye(n)
    return 0.5 * (a + a.conj().T)
