import numpy as np
import pytest

from pdflow import ConvexQuadraticProgram, make_random_qp

# One line per acceptance criterion, filled in by test_acceptance.py.
ACCEPTANCE_LINES = {}


def general_qp(seed):
    """Random QP with a dense positive-definite Hessian, ``n <= 20``, ``m <= min(n, 10)``."""
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(1, 21))
    m = int(rng.integers(1, min(n, 10) + 1))
    B = rng.standard_normal((n, n))
    H = B @ B.T / n + np.eye(n) * rng.uniform(0.1, 2.0)
    A = rng.standard_normal((m, n))
    return ConvexQuadraticProgram(H=0.5 * (H + H.T), c=rng.standard_normal(n), A=A,
                                  b=rng.standard_normal(m),
                                  provenance={"generator": "general_qp", "seed": seed})


@pytest.fixture
def tiny():
    """``min x^2`` subject to ``x <= -1``; saddle point ``(-1, 2)``."""
    return ConvexQuadraticProgram(H=[[2.0]], c=[0.0], A=[[1.0]], b=[-1.0])


@pytest.fixture
def example1():
    return make_random_qp(1, 10, 5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
