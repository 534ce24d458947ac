# nougat/schemas/__init__.py
"""
Pydantic schemas for the change-point toolkit
Organized by domain: kernel/windows, detectors, distributions, runs
"""

from .base import ErrorReport
from .kernel import KernelParams, DictionaryConfig, WindowConfig
from .detectors import (
    AlarmRule,
    DetectorName,
    KnnSearch,
    NougatConfig,
    DrulsifConfig,
    MaConfig,
    GmaConfig,
    KnnConfig,
    DetectorSuite,
)
from .gaussian import GaussianSpec
from .simulation import (
    GaussianStreamSpec,
    GaussianChangeSpec,
    GmmChangeSpec,
    StreamSpec,
)
from .run import TheoryConfig, McConfig, BenchConfig, RunConfig

__all__ = [
    # Base
    "ErrorReport",
    # Kernel / windows
    "KernelParams",
    "DictionaryConfig",
    "WindowConfig",
    # Detectors
    "AlarmRule",
    "DetectorName",
    "KnnSearch",
    "NougatConfig",
    "DrulsifConfig",
    "MaConfig",
    "GmaConfig",
    "KnnConfig",
    "DetectorSuite",
    # Distributions
    "GaussianSpec",
    "GaussianStreamSpec",
    "GaussianChangeSpec",
    "GmmChangeSpec",
    "StreamSpec",
    # Runs
    "TheoryConfig",
    "McConfig",
    "BenchConfig",
    "RunConfig",
]
