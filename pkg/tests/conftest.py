import numpy as np
import pytest

from mreinfer import Event, OutcomeSpace, make_distribution


def random_distribution(rng, n, zero_frac=0.0):
    w = rng.dirichlet(np.ones(n))
    if zero_frac:
        w[rng.random(n) < zero_frac] = 0.0
        if w.sum() == 0:
            w[rng.integers(n)] = 1.0
    return make_distribution(OutcomeSpace(f"x{i}" for i in range(n)), w)


def random_event(rng, space, min_size=1):
    k = rng.integers(min_size, space.n + 1)
    members = rng.choice(space.n, size=k, replace=False)
    return Event(space, (space.labels[i] for i in members))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def dice():
    return OutcomeSpace.range(1, 6)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
