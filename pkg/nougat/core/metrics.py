# nougat/core/metrics.py
"""
Detection Performance

For runs with a change at t0 and horizon n_t:
    PFA  = P(some alarm at t_a < t0)
    PD   = P(some alarm at t0 <= t_a <= n_t)
    MTFA = E{t_a | t_a < t0}           (first alarm of each run)
    MTD  = E{t_a - t0 | t_a >= t0}     (first alarm at or after t0)

ROC curves and operating tables re-threshold stored statistic traces, so
one Monte Carlo campaign serves every threshold.
"""

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import norm

from ..schemas.detectors import AlarmRule, DetectorSuite
from ..schemas.kernel import KernelParams, WindowConfig
from ..schemas.simulation import StreamSpec
from .detectors import alarm_score
from .errors import ConfigurationError, DataError
from .pipeline import DetectionPipeline
from .simgen import derive_seed, draw_stream, make_rng, sample_dictionary

logger = logging.getLogger(__name__)


# =============================================================================
# Alarm records
# =============================================================================

@dataclass
class AlarmRecord:
    """Sorted alarm instants of one run"""
    alarms: np.ndarray
    t0: int
    n_t: int

    def __post_init__(self):
        self.alarms = np.sort(np.asarray(self.alarms, dtype=int))
        if self.alarms.size and (self.alarms[0] < 0 or self.alarms[-1] > self.n_t):
            raise DataError(f"Alarm instants must lie in [0, {self.n_t}]")

    @property
    def false_alarms(self) -> np.ndarray:
        return self.alarms[self.alarms < self.t0]

    @property
    def detections(self) -> np.ndarray:
        return self.alarms[self.alarms >= self.t0]

    @property
    def first_false_alarm(self) -> Optional[int]:
        pre = self.false_alarms
        return int(pre[0]) if pre.size else None

    @property
    def first_detection(self) -> Optional[int]:
        post = self.detections
        return int(post[0]) if post.size else None


def records_from_traces(
    traces: np.ndarray,
    t: np.ndarray,
    xi: float,
    t0: int,
    n_t: int,
    rule: AlarmRule = AlarmRule.UPPER,
) -> List[AlarmRecord]:
    """Alarm records of (n_runs, T) statistic traces at threshold xi"""
    traces = np.atleast_2d(traces)
    alarms = alarm_score(rule, traces) > xi
    return [AlarmRecord(t[row], t0, n_t) for row in alarms]


def _require(records: Sequence[AlarmRecord]) -> None:
    if not records:
        raise DataError("No alarm records")


def pfa(records: Sequence[AlarmRecord]) -> float:
    """Fraction of runs with at least one alarm before t0"""
    _require(records)
    return sum(r.first_false_alarm is not None for r in records) / len(records)


def pd(records: Sequence[AlarmRecord]) -> float:
    """Fraction of runs with at least one alarm in [t0, n_t]"""
    _require(records)
    return sum(r.first_detection is not None for r in records) / len(records)


def mtfa(records: Sequence[AlarmRecord], all_alarms: bool = False) -> Optional[float]:
    """
    Mean time to false alarm; None when no run alarms before t0

    ``all_alarms`` averages every pre-t0 alarm instead of each run's first.
    """
    _require(records)
    if all_alarms:
        values = np.concatenate([r.false_alarms for r in records])
    else:
        values = np.array([r.first_false_alarm for r in records if r.first_false_alarm is not None])
    return float(values.mean()) if values.size else None


def mtd(records: Sequence[AlarmRecord], all_alarms: bool = False) -> Optional[float]:
    """Mean detection delay from t0; None when no run alarms at or after t0"""
    _require(records)
    if all_alarms:
        values = np.concatenate([r.detections - r.t0 for r in records])
    else:
        values = np.array([r.first_detection - r.t0 for r in records if r.first_detection is not None])
    return float(values.mean()) if values.size else None


# =============================================================================
# ROC
# =============================================================================

@dataclass
class RocCurve:
    """(threshold, pfa, pd) points, thresholds ascending"""
    thresholds: np.ndarray
    pfa: np.ndarray
    pd: np.ndarray

    def __len__(self) -> int:
        return int(self.thresholds.shape[0])

    def auc(self) -> float:
        """Area under pd(pfa)"""
        order = np.lexsort((self.pd, self.pfa))
        return float(trapezoid(self.pd[order], self.pfa[order]))

    def to_csv(self, path: Union[str, Path, None]) -> None:
        from .csv_io import write_table
        write_table(path, ["threshold", "pfa", "pd"], [self.thresholds, self.pfa, self.pd])


def _segments(t: np.ndarray, t0: int, n_t: Optional[int]):
    t = np.asarray(t)
    pre = t < t0
    post = t >= t0 if n_t is None else (t >= t0) & (t <= n_t)
    if not pre.any():
        logger.warning(f"No statistic before t0={t0}; PFA is 0 at every threshold")
    if not post.any():
        logger.warning(f"No statistic at or after t0={t0}; PD is 0 at every threshold")
    return pre, post


def _segment_max(scores: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if not mask.any():
        return np.full(scores.shape[0], -np.inf)
    return scores[:, mask].max(axis=1)


def roc(
    traces: np.ndarray,
    t: np.ndarray,
    t0: int,
    thresholds: Sequence[float],
    rule: AlarmRule = AlarmRule.UPPER,
    n_t: Optional[int] = None,
) -> RocCurve:
    """
    PFA and PD of (n_runs, T) statistic traces at each threshold

    A run raises a false alarm at xi iff its largest pre-t0 score exceeds xi,
    so one maximum per run and segment covers the whole sweep.
    """
    thresholds = np.sort(np.asarray(thresholds, dtype=float))
    if thresholds.shape[0] < 2:
        raise ConfigurationError("ROC needs at least 2 thresholds")
    scores = alarm_score(rule, np.atleast_2d(np.asarray(traces, dtype=float)))
    pre, post = _segments(t, t0, n_t)
    pre_max = _segment_max(scores, pre)
    post_max = _segment_max(scores, post)
    return RocCurve(
        thresholds=thresholds,
        pfa=(pre_max[None, :] > thresholds[:, None]).mean(axis=1),
        pd=(post_max[None, :] > thresholds[:, None]).mean(axis=1),
    )


def default_thresholds(
    traces: np.ndarray,
    t: np.ndarray,
    t0: int,
    n: int = 50,
    rule: AlarmRule = AlarmRule.UPPER,
) -> np.ndarray:
    """
    Empirical quantiles of the pooled pre-t0 scores, widened to the overall
    score range so the sweep reaches both (1, 1) and (0, 0)
    """
    scores = alarm_score(rule, np.atleast_2d(np.asarray(traces, dtype=float)))
    pre = np.asarray(t) < t0
    pooled = scores[:, pre].ravel() if pre.any() else scores.ravel()
    grid = np.quantile(pooled, np.linspace(0.0, 1.0, n))
    low = np.nextafter(scores.min(), -np.inf)
    return np.unique(np.concatenate([[low], grid, [scores.max()]]))


def pd_at_pfa(curve: RocCurve, target: float) -> float:
    """Largest PD among the points whose PFA does not exceed target"""
    ok = curve.pfa <= target
    return float(curve.pd[ok].max()) if ok.any() else 0.0


# =============================================================================
# Operating tables
# =============================================================================

@dataclass
class OperatingPoint:
    threshold: float
    pfa: float
    pd: float
    mtfa: Optional[float]
    mtd: Optional[float]


def operating_table(
    traces: np.ndarray,
    t: np.ndarray,
    t0: int,
    thresholds: Sequence[float],
    rule: AlarmRule = AlarmRule.UPPER,
    n_t: Optional[int] = None,
) -> List[OperatingPoint]:
    """(threshold, pfa, pd, mtfa, mtd) per threshold, first-alarm semantics"""
    t = np.asarray(t)
    n_t = int(t[-1]) if n_t is None else n_t
    scores = alarm_score(rule, np.atleast_2d(np.asarray(traces, dtype=float)))
    pre, post = _segments(t, t0, n_t)
    t_pre, t_post = t[pre], t[post]

    rows = []
    for xi in np.sort(np.asarray(thresholds, dtype=float)):
        alarms = scores > xi
        a_pre, a_post = alarms[:, pre], alarms[:, post]
        has_pre = a_pre.any(axis=1)
        has_post = a_post.any(axis=1)
        first_pre = t_pre[a_pre.argmax(axis=1)][has_pre] if t_pre.size else np.empty(0)
        first_post = t_post[a_post.argmax(axis=1)][has_post] if t_post.size else np.empty(0)
        rows.append(
            OperatingPoint(
                threshold=float(xi),
                pfa=float(has_pre.mean()),
                pd=float(has_post.mean()),
                mtfa=float(first_pre.mean()) if first_pre.size else None,
                mtd=float(first_post.mean() - t0) if first_post.size else None,
            )
        )
    return rows


def write_operating_table(tables: Dict[str, List[OperatingPoint]], path: Union[str, Path, None]) -> None:
    """One CSV for several detectors; undefined MTFA/MTD are written as nan"""
    from .csv_io import write_table

    nan = float("nan")
    names = [name for name, rows in tables.items() for _ in rows]
    rows = [row for table in tables.values() for row in table]
    write_table(
        path,
        ["detector", "threshold", "pfa", "pd", "mtfa", "mtd"],
        [
            names,
            [r.threshold for r in rows],
            [r.pfa for r in rows],
            [r.pd for r in rows],
            [nan if r.mtfa is None else r.mtfa for r in rows],
            [nan if r.mtd is None else r.mtd for r in rows],
        ],
    )


# =============================================================================
# Null distribution
# =============================================================================

@dataclass
class NullHistogram:
    """Binned pre-change statistic samples of one detector and the matching Gaussian"""
    detector: str
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    variance: float

    @property
    def n_samples(self) -> int:
        return int(self.counts.sum())

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.n_samples * np.diff(self.edges))

    @property
    def gaussian_density(self) -> np.ndarray:
        """N(mean, variance) at the bin centers; nan for a degenerate sample"""
        centers = 0.5 * (self.edges[:-1] + self.edges[1:])
        if self.variance <= 0:
            return np.full(centers.shape, np.nan)
        return norm.pdf(centers, loc=self.mean, scale=np.sqrt(self.variance))


def null_histogram(
    detector: str,
    traces: np.ndarray,
    t: np.ndarray,
    t0: Optional[int] = None,
    bins: int = 50,
) -> NullHistogram:
    """
    Histogram of the statistic pooled over runs and the records before t0

    With no change point every record counts as null.
    """
    traces = np.atleast_2d(np.asarray(traces, dtype=float))
    t = np.asarray(t)
    samples = traces if t0 is None else traces[:, t < t0]
    samples = samples[np.isfinite(samples)]
    if samples.size < 2:
        raise DataError(
            f"Null histogram of {detector} needs at least 2 pre-change samples, got {samples.size}",
            {"detector": detector, "t0": t0},
        )
    counts, edges = np.histogram(samples, bins=bins)
    return NullHistogram(
        detector=detector,
        edges=edges,
        counts=counts,
        mean=float(samples.mean()),
        variance=float(samples.var(ddof=1)),
    )


def write_histograms(histograms: Sequence[NullHistogram], path: Union[str, Path, None]) -> None:
    """One CSV for several detectors; the sample mean and variance go in comment lines"""
    from .csv_io import write_table

    write_table(
        path,
        ["detector", "bin_left", "bin_right", "count", "density", "gaussian_density"],
        [
            [h.detector for h in histograms for _ in h.counts],
            np.concatenate([h.edges[:-1] for h in histograms]),
            np.concatenate([h.edges[1:] for h in histograms]),
            np.concatenate([h.counts for h in histograms]),
            np.concatenate([h.density for h in histograms]),
            np.concatenate([h.gaussian_density for h in histograms]),
        ],
        integer_columns={"count"},
        comments=[f"{h.detector}: n={h.n_samples} mean={h.mean:.9g} var={h.variance:.9g}" for h in histograms],
    )


# =============================================================================
# Runtime
# =============================================================================

@dataclass
class BenchRow:
    detector: str
    dictionary_size: int
    n_ref: int
    n_test: int
    median_seconds: float
    repetitions: int


def time_pass(pipeline_factory, samples: np.ndarray, repetitions: int) -> float:
    """Median wall-clock seconds of a full pass, a fresh pipeline per repetition"""
    if repetitions < 3:
        raise ConfigurationError(f"repetitions must be >= 3, got {repetitions}")
    timings = []
    for _ in range(repetitions):
        pipeline = pipeline_factory()
        start = time.perf_counter()
        pipeline.run(samples)
        timings.append(time.perf_counter() - start)
    return float(np.median(timings))


def bench_runtime(
    kernel: KernelParams,
    windows: WindowConfig,
    detectors: DetectorSuite,
    stream: StreamSpec,
    dictionary_sizes: Sequence[int],
    repetitions: int,
    seed: Optional[int] = None,
) -> List[BenchRow]:
    """
    Median pass time of each enabled detector on one stream, per dictionary size

    Dictionaries are pre-tuned draws from the pre-change distribution and
    stay fixed during the pass.
    """
    rng = make_rng(seed)
    drawn = draw_stream(stream, rng)
    samples = drawn.samples

    rows = []
    for L in dictionary_sizes:
        dictionary = sample_dictionary(drawn.pre_sampler, L, kernel, derive_seed(seed or 0, L))
        for name in detectors.enabled_names():
            suite = detectors.only([name.value])

            def factory(suite=suite):
                return DetectionPipeline(kernel, windows, suite, dictionary=dictionary.copy(), adaptive=False)

            median = time_pass(factory, samples, repetitions)
            logger.info(f"Bench {name.value} L={L}: median {median:.6f} s over {repetitions} passes")
            rows.append(BenchRow(name.value, L, windows.n_ref, windows.n_test, median, repetitions))
    return rows


def write_bench(rows: List[BenchRow], path: Union[str, Path, None], comments: Sequence[str] = ()) -> None:
    from .csv_io import write_table

    write_table(
        path,
        ["detector", "L", "n_ref", "n_test", "median_seconds", "repetitions"],
        [
            [r.detector for r in rows],
            [r.dictionary_size for r in rows],
            [r.n_ref for r in rows],
            [r.n_test for r in rows],
            [r.median_seconds for r in rows],
            [r.repetitions for r in rows],
        ],
        integer_columns={"L", "n_ref", "n_test", "repetitions"},
        comments=comments,
    )
