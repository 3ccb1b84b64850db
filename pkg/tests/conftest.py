import numpy as np
import pytest

from foci.linalg import SparseMatrix
from foci.solver import FactorSet


def random_sparse(rng, rows, cols, density=0.3, binary=False):
    mask = rng.random((rows, cols)) < density
    vals = np.ones((rows, cols)) if binary else rng.uniform(0.1, 3.0, (rows, cols))
    return SparseMatrix.from_dense(np.where(mask, vals, 0.0))


def random_network(rng, size, density=0.3):
    dense = (rng.random((size, size)) < density).astype(float)
    np.fill_diagonal(dense, 0.0)
    return SparseMatrix.from_dense(dense)


def random_problem(rng, users, words, k):
    """(S, N, FactorSet) with strictly positive factors."""
    s = random_sparse(rng, users, words, 0.4)
    n = random_network(rng, users, 0.3)
    f = FactorSet(
        rng.uniform(0.1, 1.0, (users, k)),
        rng.uniform(0.1, 1.0, (k, k)),
        rng.uniform(0.1, 1.0, (words, k)),
    )
    return s, n, f


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    if acceptance is not None and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)
