import itertools

import numpy as np
import pytest

from mccm.model import Assortment, ModelParams, symmetric_model

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def sym3():
    return symmetric_model(3)


def transitive_closure(adj):
    """Warshall's algorithm on a boolean adjacency matrix."""
    reach = np.array(adj, dtype=bool)
    k = reach.shape[0]
    for m in range(k):
        reach = reach | (reach[:, [m]] & reach[[m], :])
    return reach


def strongly_connected_bruteforce(adj):
    k = len(adj)
    if k <= 1:
        return True
    reach = transitive_closure(adj)
    return bool(np.all(reach | np.eye(k, dtype=bool)))


def absorption_by_powering(model, S, squarings=60):
    """Absorption probabilities by repeatedly squaring the absorbing chain's
    transition matrix; independent of any linear solve."""
    P = np.array(model.rho, dtype=float)
    for s in S.outcomes:
        P[s] = 0.0
        P[s, s] = 1.0
    for _ in range(squarings):
        P = P @ P
    return P[:, list(S.outcomes)]


def subsets(n, sizes):
    for k in sizes:
        for c in itertools.combinations(range(1, n + 1), k):
            yield Assortment(c)
