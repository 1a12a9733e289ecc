import numpy as np
import pytest

from antihmc.models import ClassificationData, GaussianTarget, LogisticRegression


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def std_normal_2d():
    return GaussianTarget(dim=2)


@pytest.fixture
def small_blr():
    gen = np.random.default_rng(7)
    X = np.hstack([np.ones((60, 1)), gen.standard_normal((60, 3))])
    w_true = np.array([0.3, 1.0, -0.5, 0.8])
    y = (gen.random(60) < 1.0 / (1.0 + np.exp(-X @ w_true))).astype(float)
    return LogisticRegression(ClassificationData(X, y))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
