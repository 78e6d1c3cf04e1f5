import itertools

import numpy as np
import pytest

from glassdescent.sk_model import instance_from_upper

# (criterion, passed, detail) tuples appended by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def three_spin():
    """J_01 = +1, J_02 = -1, J_12 = +2 (0-based)."""
    return instance_from_upper(3, [(0, 1, 1.0), (0, 2, -1.0), (1, 2, 2.0)])


def brute_energy(J, spins):
    """Direct double sum -1/2 sum_ij J_ij s_i s_j, no caching."""
    n = len(spins)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += J[i][j] * spins[i] * spins[j]
    return -0.5 * total


def all_configs(n):
    return [np.array(c, dtype=np.int8) for c in itertools.product((1, -1), repeat=n)]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
