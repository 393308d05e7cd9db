import numpy as np
import pytest

from lowweight.encoder import plan_matmat, plan_matvec
from lowweight.sparsemat import generate_random_sparse


@pytest.fixture
def matvec12_plan():
    return plan_matvec(12, 10, 2, seed=0)


@pytest.fixture
def matmat27_plan():
    return plan_matmat(27, 6, 4, 3, 2, 2, seed=0)


@pytest.fixture
def small_AB():
    return generate_random_sparse(60, 12, 0.3, 11), generate_random_sparse(60, 8, 0.3, 12)


def rel_err(X, Y):
    return np.linalg.norm(np.asarray(X) - np.asarray(Y)) / np.linalg.norm(np.asarray(Y))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
