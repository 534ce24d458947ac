# nougat/core/__init__.py
"""
Core numerical modules
"""

from .kernel_dict import Dictionary, kappa, kvec, coherence_admit, build_dictionary
from .windows import WindowStats, batch_statistics
from .detectors import (
    NougatState,
    nougat_step,
    nougat_alarm,
    drulsif_solve,
    drulsif_statistic,
    ma_statistic,
    GmaState,
    gma_step,
    gma_statistic,
    knn_statistic,
    knn_deficit,
)
from .pipeline import DetectionPipeline, StepRecord, Traces
from .gaussian_moments import MomentSet, psi, moment_h, moment_H, moment_Gamma, moment_Delta, moment_set
from .theory_models import (
    AlgoConfig,
    ChangeScenario,
    TheoryTrace,
    step_bound,
    mean_null,
    variance_null,
    steady_state_null,
    smallmu_variance,
    regime_schedule,
    mean_change,
    variance_change,
)
from .simgen import gen_gaussian_stream, gen_gmm_change, median_bandwidth, monte_carlo, McReport
from .metrics import AlarmRecord, RocCurve, pfa, pd, mtfa, mtd, roc, bench_runtime

__all__ = [
    # Kernel dictionary
    "Dictionary",
    "kappa",
    "kvec",
    "coherence_admit",
    "build_dictionary",
    # Windows
    "WindowStats",
    "batch_statistics",
    # Detectors
    "NougatState",
    "nougat_step",
    "nougat_alarm",
    "drulsif_solve",
    "drulsif_statistic",
    "ma_statistic",
    "GmaState",
    "gma_step",
    "gma_statistic",
    "knn_statistic",
    "knn_deficit",
    "DetectionPipeline",
    "StepRecord",
    "Traces",
    # Gaussian moments
    "MomentSet",
    "psi",
    "moment_h",
    "moment_H",
    "moment_Gamma",
    "moment_Delta",
    "moment_set",
    # Theory
    "AlgoConfig",
    "ChangeScenario",
    "TheoryTrace",
    "step_bound",
    "mean_null",
    "variance_null",
    "steady_state_null",
    "smallmu_variance",
    "regime_schedule",
    "mean_change",
    "variance_change",
    # Simulation
    "gen_gaussian_stream",
    "gen_gmm_change",
    "median_bandwidth",
    "monte_carlo",
    "McReport",
    # Metrics
    "AlarmRecord",
    "RocCurve",
    "pfa",
    "pd",
    "mtfa",
    "mtd",
    "roc",
    "bench_runtime",
]
