import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def fd_curl(F, x, h=1e-5):
    """Central-difference curl of a field F: R^3 -> C^3 (or columns of C^{3x3})."""
    J = [(F(x + h * e) - F(x - h * e)) / (2 * h) for e in np.eye(3)]
    return np.stack([J[1][2] - J[2][1], J[2][0] - J[0][2], J[0][1] - J[1][0]])


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "_RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
