import numpy as np
import pytest


def equicorrelation(n, rho):
    m = np.full((n, n), float(rho))
    np.fill_diagonal(m, 1.0)
    return m


def random_spd(rng, n, jitter=0.1):
    x = rng.standard_normal((n, n))
    return x @ x.T / n + jitter * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
