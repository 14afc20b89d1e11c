import numpy as np
import pytest

from stabsel.core import DatasetBundle, GroupStructure, standardize_columns


def make_bundle(N, d, t=1, seed=0, groups=None, noise=0.5, n_true=2):
    """Small standardized regression problem with a few true inputs."""
    rng = np.random.default_rng(seed)
    X = standardize_columns(rng.standard_normal((N, d)))
    B = np.zeros((d, t))
    B[:n_true] = rng.uniform(0.5, 1.5, size=(n_true, t))
    Y = X @ B + noise * rng.standard_normal((N, t))
    return DatasetBundle(X, standardize_columns(Y), groups or GroupStructure())


@pytest.fixture
def small_bundle():
    return make_bundle(40, 10, seed=1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
