# tests/test_simgen.py
"""
Unit Tests for synthetic streams and the Monte Carlo harness

Run with:
    pytest tests/test_simgen.py -v
"""

import numpy as np
import pytest

from nougat.core import simgen
from nougat.core.domain_events import EventTypes
from nougat.core.errors import DataError
from nougat.core.simgen import (
    McTask,
    RunningMoments,
    derive_seed,
    draw_gmm_params,
    draw_stream,
    gen_gaussian_change,
    gen_gaussian_stream,
    gen_gmm_change,
    median_bandwidth,
    monte_carlo,
    run_once,
    sample_dictionary,
)
from nougat.schemas.detectors import DetectorSuite, MaConfig, NougatConfig
from nougat.schemas.gaussian import GaussianSpec
from nougat.schemas.kernel import WindowConfig
from nougat.schemas.simulation import GaussianChangeSpec, GaussianStreamSpec, GmmChangeSpec

pytestmark = pytest.mark.unit


@pytest.fixture
def small_task(null_spec, post_spec, kernel):
    return McTask(
        stream=GaussianChangeSpec(pre=null_spec, post=post_spec, t0=40, n_t=60),
        kernel=kernel,
        windows=WindowConfig(n_ref=10, n_test=10),
        detectors=DetectorSuite(nougat=NougatConfig(mu=0.1), ma=MaConfig(enabled=True)),
        dictionary_size=4,
    )


class TestSeeds:
    """Tests for seed derivation"""

    def test_deterministic(self):
        assert derive_seed(1, 2) == derive_seed(1, 2)

    def test_distinct_across_runs_and_bases(self):
        seeds = {derive_seed(base, i) for base in range(5) for i in range(200)}
        assert len(seeds) == 1000

    def test_not_concatenation_ambiguous(self):
        """(1, 23) and (12, 3) hash differently"""
        assert derive_seed(1, 23) != derive_seed(12, 3)

    def test_fits_63_bits(self):
        assert all(0 <= derive_seed(7, i) < 2 ** 63 for i in range(100))


class TestGaussianStreams:
    """Tests for Gaussian stream generation"""

    def test_same_seed_same_stream(self, null_spec):
        np.testing.assert_array_equal(gen_gaussian_stream(null_spec, 50, 3), gen_gaussian_stream(null_spec, 50, 3))

    def test_zero_covariance_is_constant(self):
        spec = GaussianSpec.from_arrays(np.array([1.0, -2.0]), np.zeros((2, 2)))
        samples = gen_gaussian_stream(spec, 20, 0)
        np.testing.assert_array_equal(samples, np.tile([1.0, -2.0], (20, 1)))

    def test_sample_moments(self, null_spec):
        samples = gen_gaussian_stream(null_spec, 50_000, 5)
        np.testing.assert_allclose(np.cov(samples.T), null_spec.R, atol=0.01)
        np.testing.assert_allclose(samples.mean(axis=0), null_spec.mu, atol=0.01)

    def test_change_switches_distribution(self):
        pre = GaussianSpec.from_arrays(np.zeros(1), np.zeros((1, 1)))
        post = GaussianSpec.from_arrays(np.ones(1), np.zeros((1, 1)))
        samples = gen_gaussian_change(pre, post, 3, 5, 0)
        np.testing.assert_array_equal(samples[:, 0], [0.0, 0.0, 0.0, 1.0, 1.0])

    @pytest.mark.parametrize("t0", [0, 5])
    def test_change_at_edges(self, null_spec, post_spec, t0):
        """t0 = 0 is all post-change, t0 = n_t has no change"""
        assert gen_gaussian_change(null_spec, post_spec, t0, 5, 0).shape == (5, 2)

    def test_change_outside_stream(self, null_spec, post_spec):
        with pytest.raises(DataError):
            gen_gaussian_change(null_spec, post_spec, 6, 5, 0)

    def test_empty_stream(self, null_spec):
        with pytest.raises(DataError):
            gen_gaussian_stream(null_spec, 0)


class TestGmm:
    """Tests for Gaussian mixture streams"""

    def test_single_component_weight(self, rng):
        params = draw_gmm_params(3, 1, 5.0, rng)
        np.testing.assert_array_equal(params.weights, [1.0])

    def test_params_shapes(self, rng):
        params = draw_gmm_params(4, 3, 5.0, rng)
        assert params.means.shape == (3, 4)
        assert params.covs.shape == (3, 4, 4)
        assert params.weights.sum() == pytest.approx(1.0)
        for cov in params.covs:
            assert np.min(np.linalg.eigvalsh(cov)) > 0

    def test_reproducible_from_spec_seed(self):
        spec = GmmChangeSpec(k=2, n_components=2, t0=30, n_t=50, seed=17)
        np.testing.assert_array_equal(gen_gmm_change(spec), gen_gmm_change(spec))

    def test_parameters_redrawn_at_change(self, rng):
        spec = GmmChangeSpec(k=2, n_components=2, t0=30, n_t=50)
        stream = draw_stream(spec, rng)
        params0, params1 = stream.params
        assert stream.samples.shape == (50, 2)
        assert stream.t0 == 30
        assert not np.allclose(params0.means, params1.means)

    def test_no_change_inside(self, rng):
        spec = GmmChangeSpec(k=2, n_components=2, t0=50, n_t=50)
        assert draw_stream(spec, rng).samples.shape == (50, 2)


class TestBandwidthAndDictionary:
    """Tests for the median heuristic and pre-tuned dictionaries"""

    def test_median_of_known_points(self):
        # pairwise distances 1, 2, 3
        assert median_bandwidth(np.array([0.0, 1.0, 3.0])) == 2.0

    def test_identical_samples(self):
        assert median_bandwidth(np.zeros((4, 2))) == 0.0

    def test_too_few(self):
        with pytest.raises(DataError):
            median_bandwidth(np.zeros((1, 2)))

    def test_sample_dictionary_reproducible(self, null_spec, kernel):
        a = sample_dictionary(null_spec, 8, kernel, seed=3)
        b = sample_dictionary(null_spec, 8, kernel, seed=3)
        assert a.size == 8
        np.testing.assert_array_equal(a.atoms, b.atoms)

    def test_sample_dictionary_size(self, null_spec, kernel):
        with pytest.raises(DataError):
            sample_dictionary(null_spec, 0, kernel)


class TestRunningMoments:
    """Tests for the per-t accumulator"""

    def test_matches_numpy(self, rng):
        data = rng.normal(size=(30, 7))
        acc = RunningMoments(7)
        for row in data:
            acc.update(row)
        np.testing.assert_allclose(acc.mean, data.mean(axis=0), rtol=1e-12)
        np.testing.assert_allclose(acc.variance, data.var(axis=0, ddof=1), rtol=1e-10)
        np.testing.assert_allclose(acc.stderr, data.std(axis=0, ddof=1) / np.sqrt(30), rtol=1e-10)

    def test_single_run_has_no_variance(self):
        acc = RunningMoments(2)
        acc.update([1.0, 2.0])
        assert np.all(np.isnan(acc.variance))

    def test_constant_input(self):
        acc = RunningMoments(3)
        for _ in range(5):
            acc.update([0.1, 0.2, 0.3])
        np.testing.assert_array_equal(acc.variance, np.zeros(3))

    def test_length_checked(self):
        with pytest.raises(DataError):
            RunningMoments(3).update([1.0, 2.0])


class TestMonteCarlo:
    """Tests for the campaign harness"""

    def test_report_layout(self, small_task):
        report = monte_carlo(small_task, 4, base_seed=1, keep_traces=True)
        assert report.detectors == ["nougat", "ma"]
        np.testing.assert_array_equal(report.t, np.arange(19, 60))
        assert report.n_runs == 4
        assert report.t0 == 40
        assert report.traces["nougat"].shape == (4, 41)
        np.testing.assert_allclose(report.mean["ma"], report.traces["ma"].mean(axis=0), rtol=1e-12)

    def test_reproducible(self, small_task):
        a = monte_carlo(small_task, 3, base_seed=8)
        b = monte_carlo(small_task, 3, base_seed=8)
        np.testing.assert_array_equal(a.mean["nougat"], b.mean["nougat"])
        np.testing.assert_array_equal(a.variance["ma"], b.variance["ma"])

    def test_runs_use_derived_seeds(self, small_task):
        report = monte_carlo(small_task, 3, base_seed=8, keep_traces=True)
        assert report.seeds == [derive_seed(8, i) for i in range(3)]
        single = run_once(small_task, derive_seed(8, 1))
        np.testing.assert_array_equal(report.traces["nougat"][1], single.statistics["nougat"])

    def test_constant_stream_has_zero_variance(self, kernel):
        """R = 0 gives identical runs"""
        spec = GaussianSpec.from_arrays(np.array([0.1, 0.2]), np.zeros((2, 2)))
        task = McTask(
            stream=GaussianStreamSpec(spec=spec, n_t=30),
            kernel=kernel,
            windows=WindowConfig(n_ref=5, n_test=5),
            detectors=DetectorSuite(),
            dictionary_size=3,
        )
        report = monte_carlo(task, 3, base_seed=0)
        np.testing.assert_array_equal(report.variance["nougat"], np.zeros(21))
        assert report.t0 is None

    def test_online_dictionary(self, small_task):
        small_task.online_dictionary = True
        small_task.eta0 = 0.5
        report = monte_carlo(small_task, 2, base_seed=4)
        assert np.all(np.isfinite(report.mean["nougat"]))

    def test_needs_two_runs(self, small_task):
        with pytest.raises(DataError):
            monte_carlo(small_task, 1)

    def test_failures_reported(self, small_task, monkeypatch, bus):
        """Failed runs are skipped, logged and published"""
        real_run = simgen.run_once

        def flaky(task, seed):
            if seed == derive_seed(5, 1):
                raise DataError("synthetic failure")
            return real_run(task, seed)

        monkeypatch.setattr(simgen, "run_once", flaky)
        report = monte_carlo(small_task, 3, base_seed=5, bus=bus)
        assert report.n_runs == 2
        assert report.failed == [(1, "synthetic failure")]
        failed = bus.get_history(EventTypes.MONTE_CARLO_RUN_FAILED)
        assert len(failed) == 1
        assert failed[0].payload["error_code"] == "INVALID_DATA"
        assert bus.get_history(EventTypes.MONTE_CARLO_PROGRESS)[-1].payload == {
            "completed": 3,
            "total": 3,
            "failed": 1,
        }

    def test_too_many_failures(self, small_task, monkeypatch):
        def broken(task, seed):
            raise DataError("always fails")

        monkeypatch.setattr(simgen, "run_once", broken)
        with pytest.raises(DataError):
            monte_carlo(small_task, 3, base_seed=5)

    def test_csv(self, small_task, tmp_path):
        report = monte_carlo(small_task, 2, base_seed=1)
        path = tmp_path / "mc.csv"
        report.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,nougat_mean,nougat_var,ma_mean,ma_var,n_runs"
        assert lines[1].startswith("19,")
        assert lines[1].endswith(",2")
        assert len(lines) == 1 + 41
