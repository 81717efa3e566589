import warnings

import numpy as np
import pytest

from oversmooth.graph import (DegenerateGraphWarning, ErdosRenyi, Graph, RandomGeometric,
                              complete_graph, connected_components, generate)


@pytest.fixture
def k2():
    return complete_graph(2)


@pytest.fixture(scope="session")
def er200():
    """Connected G(200, 0.05) sample."""
    for seed in range(100):
        g = generate(ErdosRenyi(200, 0.05, seed=seed))
        if len(connected_components(g)) == 1:
            return g
    raise RuntimeError("no connected sample found")


@pytest.fixture(scope="session")
def rgg200():
    return generate(RandomGeometric(200, 0.2, seed=0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_graph(rng, n_max=30, weighted=True) -> Graph:
    n = int(rng.integers(2, n_max + 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGraphWarning)
        g = generate(ErdosRenyi(n, float(rng.uniform(0.05, 0.7)), seed=int(rng.integers(2**31))))
    if weighted and g.n_edges and rng.random() < 0.5:
        g = g.with_weights(rng.uniform(0.1, 10.0, g.n_edges))
    return g


# acceptance lines collected by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
