import os
import sys

# Keep test runs from writing log files
os.environ.setdefault('NLA_LOG_DIR', '')
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import pytest

from nla.protocols.schemes import ProtocolConfig

ETA_GRID = (0.01, 0.05, 0.1, 0.25, 0.49)


@pytest.fixture
def ideal_end():
    return ProtocolConfig.from_parameters(scheme='end', tau=0.5, t=0.8, eta=0.25)


@pytest.fixture
def ideal_middle():
    return ProtocolConfig.from_parameters(scheme='middle', tau=0.5, t=0.5, eta=0.25)


@pytest.fixture
def ideal_direct():
    return ProtocolConfig.from_parameters(scheme='direct', tau=0.5, eta=0.3)


@pytest.fixture
def methods_middle():
    return ProtocolConfig.from_parameters(scheme='middle', tau=0.5, t=0.5, eta=0.1, eps1=0.85, eps2=0.85,
                                          delta1=0.95, delta2=0.80, dark_prob=1.3e-6)
