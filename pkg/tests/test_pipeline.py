# tests/test_pipeline.py
"""
Unit Tests for the streaming detection pipeline

Run with:
    pytest tests/test_pipeline.py -v
"""

import numpy as np
import pytest

from nougat.config import settings
from nougat.core.detectors import NougatState, alarm_score, knn_expected_edges, nougat_step
from nougat.core.domain_events import EventTypes
from nougat.core.errors import ConfigurationError
from nougat.core.pipeline import DetectionPipeline, initial_theta
from nougat.core.windows import WindowStats
from nougat.schemas.detectors import (
    DetectorSuite,
    DrulsifConfig,
    GmaConfig,
    KnnConfig,
    MaConfig,
    NougatConfig,
)
from nougat.schemas.kernel import KernelParams, WindowConfig

pytestmark = pytest.mark.unit


@pytest.fixture
def windows():
    return WindowConfig(n_ref=6, n_test=4)


@pytest.fixture
def all_detectors():
    return DetectorSuite(
        nougat=NougatConfig(mu=0.05, nu=0.01),
        drulsif=DrulsifConfig(enabled=True),
        ma=MaConfig(enabled=True),
        gma=GmaConfig(enabled=True, alpha=0.2),
        knn=KnnConfig(enabled=True, k_neighbors=3),
    )


class TestStreaming:
    """Tests for record timing and ordering"""

    def test_first_record_at_window_length(self, windows, grid_dictionary, rng):
        """The first record carries t = N_ref + N_test - 1"""
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, DetectorSuite(), dictionary=grid_dictionary)
        records = pipeline.run(rng.normal(size=(30, 1)))
        assert records[0].t == windows.total - 1
        assert [r.t for r in records] == list(range(windows.total - 1, 30))

    def test_no_record_before_warm(self, windows, grid_dictionary):
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, DetectorSuite(), dictionary=grid_dictionary)
        assert all(pipeline.push([0.1 * i]) is None for i in range(windows.total - 1))
        assert pipeline.push([0.0]) is not None
        assert pipeline.t == windows.total

    def test_every_detector_reports(self, windows, grid_dictionary, rng, all_detectors):
        """Statistics, scores and alarms for each enabled detector"""
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, all_detectors, dictionary=grid_dictionary)
        records = pipeline.run(rng.normal(size=(40, 1)))
        for record in records:
            assert list(record.statistics) == ["nougat", "drulsif", "ma", "gma", "knn"]
            for name, value in record.statistics.items():
                cfg = getattr(all_detectors, name)
                assert record.scores[name] == pytest.approx(float(alarm_score(cfg.rule, value)))
                assert record.alarms[name] == (record.scores[name] > cfg.xi)

    def test_traces_shape(self, windows, grid_dictionary, rng, all_detectors):
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, all_detectors, dictionary=grid_dictionary)
        traces = pipeline.run_traces(rng.normal(size=(50, 1)))
        assert len(traces) == 50 - windows.total + 1
        assert set(traces.statistics) == {"nougat", "drulsif", "ma", "gma", "knn"}
        assert all(v.shape == traces.t.shape for v in traces.statistics.values())
        assert traces.dictionary_size == 3


class TestKnnInPipeline:
    """The k-NN column reports the cross-edge deficit"""

    def test_jump_raises_default_alarm(self, windows, grid_dictionary, rng):
        samples = np.vstack([rng.normal(size=(20, 1)), rng.normal(loc=100.0, size=(4, 1))])
        suite = DetectorSuite(nougat=NougatConfig(enabled=False), knn=KnnConfig(enabled=True, k_neighbors=3))
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, suite, dictionary=grid_dictionary)
        last = pipeline.run(samples)[-1]
        # test window all post-jump, reference all pre-jump: no cross edges
        assert last.statistics["knn"] == pytest.approx(knn_expected_edges(6, 4, 3))
        assert last.alarms["knn"]


class TestNougatInPipeline:
    """The pipeline runs the same recursion as the bare step"""

    def test_matches_manual_recursion(self, windows, grid_dictionary, rng):
        samples = rng.normal(size=(60, 1))
        suite = DetectorSuite(nougat=NougatConfig(mu=0.1, nu=0.02))
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, suite, dictionary=grid_dictionary.copy())
        traces = pipeline.run_traces(samples)

        stats = WindowStats(windows.n_ref, windows.n_test, grid_dictionary)
        state = NougatState(theta=np.zeros(3), mu=0.1, nu=0.02, xi=1.5)
        expected = []
        for y in samples:
            if stats.push(y, grid_dictionary):
                expected.append(nougat_step(state, stats).g)
        np.testing.assert_allclose(traces.statistics["nougat"], expected, rtol=1e-12)

    def test_theta0_broadcast(self, windows, grid_dictionary):
        suite = DetectorSuite(nougat=NougatConfig(theta0=[0.5]))
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, suite, dictionary=grid_dictionary)
        np.testing.assert_array_equal(pipeline.nougat.theta, [0.5, 0.5, 0.5])

    def test_theta0_wrong_length(self):
        with pytest.raises(ConfigurationError):
            initial_theta([1.0, 2.0], 3)

    def test_theta0_default_zero(self):
        np.testing.assert_array_equal(initial_theta(None, 4), np.zeros(4))


class TestOnlineDictionary:
    """Tests for coherence-rule growth during streaming"""

    def test_seeded_by_first_sample(self, windows, rng):
        pipeline = DetectionPipeline(KernelParams(sigma=0.3), windows, DetectorSuite(), eta0=0.5)
        first = rng.normal(size=2)
        pipeline.push(first)
        np.testing.assert_array_equal(pipeline.dictionary.atoms[0], first)

    def test_growth_keeps_dimensions_consistent(self, windows, rng, all_detectors):
        pipeline = DetectionPipeline(KernelParams(sigma=0.3), windows, all_detectors, eta0=0.5)
        records = pipeline.run(rng.normal(size=(200, 2)))
        L = pipeline.dictionary.size
        assert L > 1
        assert pipeline.nougat.theta.shape == (L,)
        assert pipeline.gma.vartheta.shape == (L,)
        assert pipeline.stats.n_features == L
        assert records[-1].dictionary_size == L
        assert pipeline.dictionary.coherence() <= 0.5 + 1e-15

    def test_max_size_respected(self, windows, rng):
        pipeline = DetectionPipeline(KernelParams(sigma=0.1), windows, DetectorSuite(), eta0=0.3, max_size=5)
        pipeline.run(rng.normal(size=(300, 2)))
        assert pipeline.dictionary.size == 5

    def test_supplied_dictionary_is_fixed(self, windows, grid_dictionary, rng):
        """A given dictionary does not grow unless adaptive is set"""
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, DetectorSuite(), dictionary=grid_dictionary)
        pipeline.run(5.0 * rng.normal(size=(100, 1)))
        assert grid_dictionary.size == 3


class TestGma:
    """GMA nominal handling"""

    def test_nominal_frozen_at_warm(self, windows, grid_dictionary, rng):
        suite = DetectorSuite(nougat=NougatConfig(enabled=False), gma=GmaConfig(enabled=True, alpha=0.3))
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, suite, dictionary=grid_dictionary)
        samples = rng.normal(size=(windows.total, 1))
        for y in samples[:-1]:
            pipeline.push(y)
        assert pipeline.gma.nominal is None
        record = pipeline.push(samples[-1])
        expected_nominal = grid_dictionary.features(samples).mean(axis=0)
        np.testing.assert_allclose(pipeline.gma.nominal, expected_nominal, atol=1e-14)
        assert record.statistics["gma"] == pytest.approx(
            np.linalg.norm(pipeline.gma.vartheta - expected_nominal), abs=1e-14
        )

    def test_nominal_size_checked(self, windows, grid_dictionary, rng):
        suite = DetectorSuite(gma=GmaConfig(enabled=True, nominal=[0.0, 0.0]))
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, suite, dictionary=grid_dictionary)
        with pytest.raises(ConfigurationError):
            pipeline.run(rng.normal(size=(windows.total, 1)))


class TestEvents:
    """Tests for the events a pipeline publishes"""

    def test_warm_once(self, bus, windows, grid_dictionary, rng):
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, DetectorSuite(), dictionary=grid_dictionary, bus=bus)
        pipeline.run(rng.normal(size=(40, 1)))
        warm = bus.get_history(EventTypes.WINDOWS_WARM)
        assert len(warm) == 1
        assert warm[0].payload["t"] == windows.total - 1
        assert warm[0].payload["dictionary_size"] == 3

    def test_growth_events_match_dictionary(self, bus, windows, rng):
        pipeline = DetectionPipeline(KernelParams(sigma=0.3), windows, DetectorSuite(), eta0=0.5, bus=bus)
        pipeline.run(rng.normal(size=(150, 2)))
        grown = bus.get_history(EventTypes.DICTIONARY_GROWN, limit=1000)
        assert len(grown) == pipeline.dictionary.size - 1
        assert [e.payload["dictionary_size"] for e in grown] == list(range(2, pipeline.dictionary.size + 1))

    def test_alarms_published(self, bus, windows, grid_dictionary, rng):
        suite = DetectorSuite(nougat=NougatConfig(enabled=False), ma=MaConfig(enabled=True, xi=0.0))
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, suite, dictionary=grid_dictionary, bus=bus)
        records = pipeline.run(rng.normal(size=(30, 1)))
        flagged = bus.get_history(EventTypes.CHANGE_POINT_FLAGGED, limit=1000)
        assert len(flagged) == sum(r.alarms["ma"] for r in records)
        assert all(e.payload["detector"] == "ma" for e in flagged)

    def test_drift_repair_published(self, bus, windows, grid_dictionary, rng):
        """A repair fires DRIFT_REPAIR_FACTOR * (N_ref + N_test) pushes after warm-up"""
        period = settings.DRIFT_REPAIR_FACTOR * windows.total
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, DetectorSuite(), dictionary=grid_dictionary, bus=bus)
        pipeline.run(rng.normal(size=(windows.total + period + 5, 1)))
        repaired = bus.get_history(EventTypes.DRIFT_REPAIRED)
        assert len(repaired) == 1
        assert repaired[0].payload["t"] == windows.total - 1 + period
        assert repaired[0].payload["max_abs_correction"] < 1e-12

    def test_silent_without_bus(self, bus, windows, grid_dictionary, rng):
        pipeline = DetectionPipeline(KernelParams(sigma=0.8), windows, DetectorSuite(), dictionary=grid_dictionary)
        pipeline.run(rng.normal(size=(20, 1)))
        assert bus.get_history() == []
