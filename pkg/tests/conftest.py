import numpy as np
import pytest


def random_metzler(rng, n, density=0.6, irreducible=True):
    """Random Metzler matrix; a directed cycle is added to force irreducibility."""
    a = rng.uniform(0.0, 2.0, (n, n)) * (rng.uniform(size=(n, n)) < density)
    if irreducible:
        cyc = np.roll(np.eye(n), 1, axis=1)
        a += rng.uniform(0.2, 1.0) * cyc
    np.fill_diagonal(a, 0.0)
    np.fill_diagonal(a, rng.uniform(-4.0, 1.0, n) - a.sum(axis=1))
    return a


def random_reversible(rng, n, density=0.5):
    """Irreducible Metzler matrix with W A symmetric for random positive weights W."""
    s = rng.uniform(0.1, 2.0, (n, n)) * (rng.uniform(size=(n, n)) < density)
    s = np.triu(s, 1)
    path = np.diag(rng.uniform(0.2, 1.0, n - 1), 1)
    s = s + path
    s = s + s.T
    w = rng.uniform(0.5, 2.0, n)
    a = s / w[:, None]
    np.fill_diagonal(a, rng.uniform(-3.0, 0.0, n) - a.sum(axis=1))
    return a, w


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
