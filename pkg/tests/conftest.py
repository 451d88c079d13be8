import numpy as np
import pytest


def dense_diff(M, N):
    """Periodic forward differences built entry by entry; vertical block first."""
    n = M * N
    D = np.zeros((2 * n, n))
    for j in range(N):
        for i in range(M):
            k = i + M * j
            D[k, ((i + 1) % M) + M * j] += 1.0
            D[k, k] -= 1.0
            D[n + k, i + M * ((j + 1) % N)] += 1.0
            D[n + k, k] -= 1.0
    return D


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
