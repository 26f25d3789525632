import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from simgood.data import Dataset
from simgood.goodness import ReasonableSet

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    status = "PASS" if passed else "FAIL"
    if passed is None:
        status = "SKIP"
    ACCEPTANCE_LINES.append((number, f"criterion {number:>2}: {status}  {detail}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


def unit_ball(rng, n, d):
    """``n`` points drawn uniformly in direction with norms in [0, 1]."""
    X = rng.normal(size=(n, d))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X * rng.uniform(0.05, 1.0, size=(n, 1))


def random_instance(seed, n=None, d=None):
    """Random labeled set in the unit ball with a non-degenerate signed mean."""
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(6, 41))
    d = d or int(rng.integers(2, 9))
    while True:
        X = unit_ball(rng, n, d)
        y = np.where(rng.uniform(size=n) < 0.5, 1, -1)
        y[0], y[1] = 1, -1
        # shift one class so the problem has some structure
        X[y > 0] = 0.7 * X[y > 0] + 0.3 * np.eye(d)[0]
        X /= np.maximum(1.0, np.linalg.norm(X, axis=1, keepdims=True))
        T = Dataset(X, y)
        R = ReasonableSet.from_dataset(T)
        if np.linalg.norm((y[:, None] * X).mean(axis=0)) > 1e-3:
            return T, R


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
