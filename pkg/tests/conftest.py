# tests/conftest.py
"""
Pytest fixtures shared by every suite
Random generators, the reference Gaussian setup and small dictionaries
"""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root for imports without installation
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from nougat.core.events import EventBus
from nougat.core.kernel_dict import Dictionary
from nougat.core.simgen import sample_dictionary
from nougat.schemas.gaussian import GaussianSpec
from nougat.schemas.kernel import KernelParams


def mc_runs(default: int) -> int:
    """Monte Carlo run count, reducible through NOUGAT_TEST_MC_RUNS"""
    return int(os.environ.get("NOUGAT_TEST_MC_RUNS", default))


# ============================================
# Random generators
# ============================================

@pytest.fixture
def rng():
    """Seeded generator, fresh for each test"""
    return np.random.default_rng(12345)


# ============================================
# Reference Gaussian setup
# ============================================

@pytest.fixture
def kernel():
    """Bandwidth used by the two-dimensional Gaussian experiments"""
    return KernelParams(sigma=0.25)


@pytest.fixture
def null_spec():
    """Two-dimensional, std 0.5, correlation 0.25"""
    return GaussianSpec.from_std_corr(2, std=0.5, corr=0.25)


@pytest.fixture
def post_spec():
    """Post-change distribution: std 0.7, correlation 0.1"""
    return GaussianSpec.from_std_corr(2, std=0.7, corr=0.1)


@pytest.fixture
def small_dictionary(kernel, null_spec):
    """Four atoms drawn from the null distribution"""
    return sample_dictionary(null_spec, 4, kernel, seed=7)


@pytest.fixture
def dictionary16(kernel, null_spec):
    """Sixteen atoms drawn from the null distribution"""
    return sample_dictionary(null_spec, 16, kernel, seed=11)


@pytest.fixture
def grid_dictionary():
    """Three well-separated scalar atoms with a wide kernel"""
    return Dictionary(np.array([[-1.0], [0.0], [1.0]]), KernelParams(sigma=0.8), eta0=1.0)


# ============================================
# Event bus
# ============================================

@pytest.fixture
def bus():
    """Cleared singleton bus; cleared again after the test"""
    event_bus = EventBus()
    event_bus.clear()
    yield event_bus
    event_bus.clear()
