import numpy as np
import pytest

from qaoalab import csp


@pytest.fixture
def single_edge():
    return csp.maxcut_from_graph(2, [(0, 1)])


@pytest.fixture
def triangle():
    return csp.maxcut_from_graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def ring4():
    return csp.ring_maxcut(4)


@pytest.fixture
def ring6():
    return csp.ring_maxcut(6)


@pytest.fixture
def ring8():
    return csp.ring_maxcut(8)


def random_maxcut(rng: np.random.Generator, n: int, extra_edges: int = 0) -> csp.CspInstance:
    """Random connected MAX-CUT instance: a spanning path plus extra edges."""
    edges = [(i, i + 1) for i in range(n - 1)]
    for _ in range(extra_edges):
        i, j = rng.choice(n, size=2, replace=False)
        edges.append((int(i), int(j)))
    return csp.maxcut_from_graph(n, edges)


def random_3sat(rng: np.random.Generator, n: int, m: int) -> csp.CspInstance:
    """Random 3SAT instance as OR truth-table clauses."""
    clauses = []
    for _ in range(m):
        vars_ = tuple(int(v) for v in rng.choice(n, size=3, replace=False))
        falsify = int(rng.integers(8))
        clauses.append(csp.Clause(vars_, frozenset(range(8)) - {falsify}))
    return csp.CspInstance(n, tuple(clauses))


def brute_cost(instance: csp.CspInstance, z: int) -> int:
    """Pure-Python cost oracle, independent of the vectorized table."""
    total = 0
    for clause in instance.clauses:
        k = len(clause.vars)
        code = 0
        for t, v in enumerate(clause.vars):
            code |= ((z >> v) & 1) << (k - 1 - t)
        total += 1 if code in clause.patterns else 0
    return total


def tv_distance(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
