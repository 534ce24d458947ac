# nougat/core/host_info.py
"""
Host Information Collector
Describes the machine a benchmark ran on
"""

import logging
import os
import platform
from typing import Any, Dict

import numpy as np
import scipy

logger = logging.getLogger(__name__)


def collect_host_info() -> Dict[str, Any]:
    """
    Collect platform and library versions, plus CPU and memory when psutil
    is installed

    Returns:
        Dict of flat, CSV-friendly values
    """
    info = {
        "platform": platform.system(),
        "platform_release": platform.release(),
        "architecture": platform.machine(),
        "processor": platform.processor(),
        "python_version": platform.python_version(),
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "cpu_count": os.cpu_count(),
    }

    try:
        import psutil
        info["cpu_count_physical"] = psutil.cpu_count(logical=False)
        freq = psutil.cpu_freq()
        if freq is not None:
            info["cpu_freq_mhz"] = round(freq.max or freq.current, 1)
        info["memory_total_mb"] = psutil.virtual_memory().total // (1024 * 1024)
    except ImportError:
        logger.debug("psutil not installed; host info limited to platform data")
    except Exception as e:
        logger.debug(f"psutil failed to describe the host: {e}")

    return info


def host_summary(info: Dict[str, Any]) -> str:
    """One-line key=value rendering"""
    return " ".join(f"{key}={str(value).replace(' ', '_')}" for key, value in info.items() if value not in (None, ""))
