import numpy as np
import pytest

from twinreg.data import Dataset
from twinreg.twin import TwinModel


class PairFunction:
    """Stand-in base model: evaluates ``fn(A, B)`` on pair-feature rows."""

    parameter_count = 0

    def __init__(self, fn, f):
        self.fn = fn
        self.f = f

    def predict(self, P):
        P = np.asarray(P, dtype=float)
        return np.asarray(self.fn(P[:, :self.f], P[:, self.f:2 * self.f]), dtype=float)


def zero_twin(X, y):
    """TwinModel whose base predicts 0 for every pair (F == 0)."""
    X = np.asarray(X, dtype=float)
    return TwinModel(PairFunction(lambda a, b: np.zeros(len(a)), X.shape[1]), X, y)


def function_twin(X, y, fn):
    X = np.asarray(X, dtype=float)
    return TwinModel(PairFunction(fn, X.shape[1]), X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dataset(rng):
    X = rng.normal(size=(40, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + 0.3
    return Dataset(X, y, "small")


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
