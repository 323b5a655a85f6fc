import itertools
import math
from functools import lru_cache, reduce

import numpy as np
import pytest
from hypothesis import settings

from ghzmetro.oracle import averaged_matrix_units

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

SZ = np.diag([1.0, -1.0])

# lines collected by test_acceptance and echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def local_z(i, n):
    return reduce(np.kron, [SZ if k == i else np.eye(2) for k in range(n)])


@lru_cache(maxsize=None)
def units(n):
    return averaged_matrix_units(n)


def unit_coefficients(n, Y, two_m, two_mp):
    """Expand ``Y`` over ``avg|j,m><j,m'|`` (fixed m, m'); returns
    ``({two_j: coeff}, residual)``."""
    U = units(n)
    coeffs, rebuilt = {}, np.zeros_like(Y)
    for tj in range(n % 2, n + 1, 2):
        key = (tj, two_m, two_mp)
        if key in U:
            X = U[key]
            coeffs[tj] = float(np.vdot(X, Y).real / np.vdot(X, X).real)
            rebuilt = rebuilt + coeffs[tj] * X
    return coeffs, float(np.abs(Y - rebuilt).max())


def flip_sum(n, X, k):
    """``sum over k-subsets S of sz_S X sz_S``."""
    zs = [local_z(i, n) for i in range(n)]
    out = np.zeros_like(X)
    for subset in itertools.combinations(range(n), k):
        op = reduce(np.matmul, [zs[i] for i in subset], np.eye(2 ** n))
        out = out + op @ X @ op
    return out


def krawtchouk(k, x, n):
    return sum((-1) ** i * math.comb(x, i) * math.comb(n - x, k - i) for i in range(k + 1))
