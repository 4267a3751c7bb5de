import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from netsynth.graph import Network

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_network(n, p, directed, rng):
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    if not directed:
        mask = np.triu(mask, 1)
    u, v = np.nonzero(mask)
    order = rng.permutation(len(u))
    return Network(n, directed, list(zip(u[order].tolist(), v[order].tolist())))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
