import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rrrl.image import PointSpreadFunction  # noqa: E402

BINOMIAL = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def binomial():
    return PointSpreadFunction(BINOMIAL)


@pytest.fixture
def skew_psf():
    """Asymmetric 3x5 kernel; exercises the difference between H and H*."""
    return PointSpreadFunction(
        np.array([[0.0, 1.0, 2.0, 0.5, 0.0], [1.0, 3.0, 1.0, 0.0, 0.2], [0.0, 0.3, 2.0, 1.5, 0.7]])
    )


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[n])
