import math
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from patchlab.motion import CriticalLength  # noqa: E402
from patchlab.quadrature import QuadratureConfig  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long reference runs (deselect with -m 'not slow')")


@pytest.fixture
def crit():
    """D = 1, f'(0) = 1, so L_crit = pi"""
    return CriticalLength(1.0, 1.0)


@pytest.fixture
def quick_quad():
    """Coarser ledger settings for tests that only need a few digits"""
    return QuadratureConfig(tol=1e-9, horizon=2000.0, segments=120, start_points=120)


@pytest.fixture
def pi():
    return math.pi
