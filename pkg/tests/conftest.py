import numpy as np
import pytest

from ascalc import diagonal, dirichlet_laplacian_1d, random_normal


def diagonalizable_gallery():
    return [diagonal(1, 2), diagonal(1, 4), dirichlet_laplacian_1d(4), dirichlet_laplacian_1d(8),
            dirichlet_laplacian_1d(16), random_normal(16, seed=3)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rel(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[cid])
