# nougat/core/pipeline.py
"""
Detection Pipeline

Runs every enabled detector over one stream with shared windows, in the
order of the online algorithm:
    1. push the sample into the windows
    2. apply the coherence rule; on insertion extend windows, theta and vartheta
    3. update each detector and compute its statistic
    4. threshold the statistics

Stream samples are indexed from 0; a StepRecord carries the index t of the
newest sample. Nothing is published before the windows are warm, so the
first record has t = N_ref + N_test - 1.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np

from ..schemas.detectors import DetectorName, DetectorSuite
from ..schemas.kernel import KernelParams, WindowConfig
from . import domain_events
from .detectors import (
    GmaState,
    NougatState,
    alarm_score,
    drulsif_statistic,
    gma_statistic,
    gma_step,
    knn_deficit,
    ma_statistic,
    nougat_step,
)
from .errors import ConfigurationError
from .events import EventBus
from .kernel_dict import Dictionary
from .windows import WindowStats

logger = logging.getLogger(__name__)

SOURCE = "pipeline"


@dataclass
class StepRecord:
    """Output of one warm step"""
    t: int
    statistics: Dict[str, float]
    scores: Dict[str, float]
    alarms: Dict[str, bool]
    dictionary_size: int
    grew: bool = False


@dataclass
class Traces:
    """Statistic streams of a whole run, one array per detector"""
    t: np.ndarray
    statistics: Dict[str, np.ndarray] = field(default_factory=dict)
    dictionary_size: int = 0

    def __len__(self) -> int:
        return int(self.t.shape[0])


def initial_theta(theta0: Optional[List[float]], size: int) -> np.ndarray:
    """Zeros, a broadcast scalar or an explicit vector of length size"""
    if theta0 is None:
        return np.zeros(size)
    if len(theta0) == 1:
        return np.full(size, float(theta0[0]))
    if len(theta0) != size:
        raise ConfigurationError(
            f"theta0 has {len(theta0)} entries but the dictionary has {size} atoms",
            {"theta0_size": len(theta0), "dictionary_size": size},
        )
    return np.asarray(theta0, dtype=float)


class DetectionPipeline:
    """
    Streaming driver for the detector suite

    With no dictionary the first sample seeds one and the coherence rule
    grows it (up to ``max_size``). A supplied dictionary stays fixed unless
    ``adaptive`` is set.
    """

    def __init__(
        self,
        kernel: KernelParams,
        windows: WindowConfig,
        detectors: DetectorSuite,
        dictionary: Optional[Dictionary] = None,
        eta0: float = 0.7,
        max_size: Optional[int] = None,
        adaptive: Optional[bool] = None,
        bus: Optional[EventBus] = None,
    ):
        self.kernel = kernel
        self.window_config = windows
        self.suite = detectors
        self.enabled = detectors.enabled_names()
        self.dictionary = dictionary
        self.eta0 = eta0
        self.max_size = max_size
        self.adaptive = dictionary is None if adaptive is None else adaptive
        self.bus = bus

        self.stats: Optional[WindowStats] = None
        self.nougat: Optional[NougatState] = None
        self.gma: Optional[GmaState] = None
        self._t = 0
        self._was_warm = False

        if dictionary is not None:
            self._init_state(dictionary)

    # === Setup ===

    def _init_state(self, dictionary: Dictionary) -> None:
        self.dictionary = dictionary
        self.stats = WindowStats(self.window_config.n_ref, self.window_config.n_test, dictionary)
        cfg = self.suite.nougat
        if cfg.enabled:
            self.nougat = NougatState(
                theta=initial_theta(cfg.theta0, dictionary.size),
                mu=cfg.mu,
                nu=cfg.nu,
                xi=cfg.xi,
                rule=cfg.rule,
            )

    def _publish(self, event_type: str, payload: dict) -> None:
        if self.bus is not None:
            self.bus.emit(event_type, payload, SOURCE)

    # === Streaming ===

    @property
    def t(self) -> int:
        """Index the next sample will get"""
        return self._t

    def push(self, y) -> Optional[StepRecord]:
        """Consume one sample; returns a record once the windows are warm"""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        t = self._t
        self._t += 1

        seeded = False
        if self.dictionary is None:
            self._init_state(Dictionary(y, self.kernel, self.eta0, self.max_size))
            seeded = True
            logger.debug(f"Dictionary seeded by sample t={t}")

        dictionary = self.dictionary
        stats = self.stats
        warm = stats.push(y, dictionary)
        if stats.last_repair is not None:
            self._publish(
                domain_events.EventTypes.DRIFT_REPAIRED,
                domain_events.drift_repaired_payload(t, stats.last_repair),
            )

        grew = False
        if self.adaptive and not seeded and dictionary.offer(y):
            grew = True
            self._on_growth(t)

        if DetectorName.GMA in self.enabled:
            if self.gma is None:
                cfg = self.suite.gma
                self.gma = GmaState(vartheta=dictionary.kvec(y), alpha=cfg.alpha, nominal=cfg.nominal)
            else:
                gma_step(self.gma, y, dictionary)

        if not warm:
            return None

        if not self._was_warm:
            self._was_warm = True
            self._on_warm(t)

        return self._evaluate(t, y, grew)

    def _on_growth(self, t: int) -> None:
        dictionary = self.dictionary
        index = dictionary.size - 1
        self.stats.extend_dimension(index, dictionary)
        if self.nougat is not None:
            self.nougat.grow()
        if self.gma is not None:
            buffered = self.stats.features()[:, -1]
            mean = float(buffered.mean()) if buffered.size else 0.0
            self.gma.grow(initial=mean, nominal=mean)
        logger.debug(f"Dictionary grew to L={dictionary.size} at t={t}")
        self._publish(
            domain_events.EventTypes.DICTIONARY_GROWN,
            domain_events.dictionary_grown_payload(t, dictionary.size, dictionary.atoms[index].tolist()),
        )

    def _on_warm(self, t: int) -> None:
        if self.gma is not None:
            if self.gma.nominal is None:
                self.gma.nominal = self.stats.feature_mean()
            elif self.gma.nominal.shape[0] != self.dictionary.size:
                raise ConfigurationError(
                    f"GMA nominal has {self.gma.nominal.shape[0]} entries, dictionary has {self.dictionary.size}"
                )
        logger.debug(f"Windows warm at t={t} with L={self.dictionary.size}")
        self._publish(
            domain_events.EventTypes.WINDOWS_WARM,
            domain_events.windows_warm_payload(
                t, self.window_config.n_ref, self.window_config.n_test, self.dictionary.size
            ),
        )

    def _statistic(self, name: DetectorName, grew: bool) -> float:
        stats = self.stats
        if name == DetectorName.NOUGAT:
            return nougat_step(self.nougat, stats, grew).g
        if name == DetectorName.DRULSIF:
            return drulsif_statistic(stats, self.suite.drulsif.nu)
        if name == DetectorName.MA:
            return ma_statistic(stats)
        if name == DetectorName.GMA:
            return gma_statistic(self.gma)
        if name == DetectorName.KNN:
            cfg = self.suite.knn
            return knn_deficit(stats.window(), stats.n_ref, cfg.k_neighbors, cfg.search)
        raise ValueError(f"Unknown detector: {name}")

    def _evaluate(self, t: int, y: np.ndarray, grew: bool) -> StepRecord:
        statistics: Dict[str, float] = {}
        scores: Dict[str, float] = {}
        alarms: Dict[str, bool] = {}

        for name in self.enabled:
            cfg = getattr(self.suite, name.value)
            value = self._statistic(name, grew)
            score = float(alarm_score(cfg.rule, value))
            statistics[name.value] = value
            scores[name.value] = score
            alarms[name.value] = score > cfg.xi
            if alarms[name.value]:
                self._publish(
                    domain_events.EventTypes.CHANGE_POINT_FLAGGED,
                    domain_events.change_point_payload(t, name.value, value, score, cfg.xi),
                )

        return StepRecord(
            t=t,
            statistics=statistics,
            scores=scores,
            alarms=alarms,
            dictionary_size=self.dictionary.size,
            grew=grew,
        )

    def run(self, stream: Iterable) -> List[StepRecord]:
        """Push a whole stream, returning the warm records"""
        records = []
        for y in stream:
            record = self.push(y)
            if record is not None:
                records.append(record)
        return records

    def run_traces(self, stream: Iterable) -> Traces:
        """Push a whole stream, returning one statistic array per detector"""
        records = self.run(stream)
        traces = Traces(
            t=np.array([r.t for r in records], dtype=int),
            dictionary_size=self.dictionary.size if self.dictionary is not None else 0,
        )
        for name in self.enabled:
            traces.statistics[name.value] = np.array([r.statistics[name.value] for r in records])
        return traces
