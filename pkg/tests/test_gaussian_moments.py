# tests/test_gaussian_moments.py
"""
Unit Tests for the closed-form Gaussian kernel moments

Run with:
    pytest tests/test_gaussian_moments.py -v
"""

import numpy as np
import pytest

from nougat.core.errors import DataError, SingularSystemError
from nougat.core.gaussian_moments import (
    MomentSet,
    moment_Delta,
    moment_Gamma,
    moment_h,
    moment_H,
    moment_set,
    monte_carlo_moments,
    psi,
)
from nougat.core.kernel_dict import Dictionary
from nougat.schemas.gaussian import GaussianSpec
from nougat.schemas.kernel import KernelParams

pytestmark = pytest.mark.unit

MC_SAMPLES = 200_000
# kernel products lie in [0, 1], so every sample average has std <= 1/2
MC_TOLERANCE = 5 * 0.5 / np.sqrt(MC_SAMPLES)


@pytest.fixture
def point_mass():
    """R = 0 at a non-zero mean"""
    return GaussianSpec.from_arrays(np.array([0.2, -0.1]), np.zeros((2, 2)))


@pytest.fixture
def mc_pair(small_dictionary, null_spec):
    """Closed-form and sample-average moment sets of the null distribution"""
    rng = np.random.default_rng(2024)
    samples = rng.multivariate_normal(null_spec.mu, null_spec.R, size=MC_SAMPLES)
    return moment_set(small_dictionary, null_spec), monte_carlo_moments(small_dictionary, samples)


class TestPsi:
    """Tests for the quadratic-form moment generating function"""

    def test_zero_s(self, null_spec):
        assert psi(0.0, np.eye(2), np.ones(2), null_spec) == 1.0

    def test_scalar_chi_square(self):
        """E{exp(s y^2)} = (1 - 2 s r)^(-1/2) for y ~ N(0, r)"""
        spec = GaussianSpec(mean=[0.0], cov=[[0.3]])
        for s in (-2.0, -0.5, 0.4):
            assert psi(s, np.eye(1), np.zeros(1), spec) == pytest.approx((1 - 2 * s * 0.3) ** -0.5, rel=1e-13)

    def test_linear_term_is_gaussian_mgf(self):
        """W = 0 reduces to exp(s b^T mu + s^2 b^T R b / 2)"""
        spec = GaussianSpec(mean=[0.5, -1.0], cov=[[0.4, 0.1], [0.1, 0.2]])
        b = np.array([0.3, -0.7])
        s = -0.8
        expected = np.exp(s * b @ spec.mu + 0.5 * s * s * b @ spec.R @ b)
        assert psi(s, np.zeros((2, 2)), b, spec) == pytest.approx(expected, rel=1e-13)

    def test_divergent_mgf_rejected(self):
        """|I - 2sWR| <= 0 has no finite moment"""
        spec = GaussianSpec(mean=[0.0], cov=[[1.0]])
        with pytest.raises(SingularSystemError):
            psi(1.0, np.eye(1), np.zeros(1), spec)


class TestPointMass:
    """R = 0 gives kernel values at the mean"""

    def test_h(self, small_dictionary, point_mass):
        k = small_dictionary.kvec(point_mass.mu)
        np.testing.assert_allclose(moment_h(small_dictionary, point_mass), k, rtol=1e-12)

    def test_H(self, small_dictionary, point_mass):
        k = small_dictionary.kvec(point_mass.mu)
        np.testing.assert_allclose(moment_H(small_dictionary, point_mass), np.outer(k, k), rtol=1e-12)

    def test_Gamma(self, small_dictionary, point_mass):
        k = small_dictionary.kvec(point_mass.mu)
        kk = np.outer(k, k)
        np.testing.assert_allclose(moment_Gamma(small_dictionary, point_mass), np.kron(kk, kk), rtol=1e-12)

    def test_Delta(self, small_dictionary, point_mass):
        k = small_dictionary.kvec(point_mass.mu)
        expected = np.kron(np.outer(k, k), k[:, None])
        np.testing.assert_allclose(moment_Delta(small_dictionary, point_mass), expected, rtol=1e-12)


class TestAgainstSampleAverages:
    """Closed forms agree with sample averages of the feature map"""

    def test_h(self, mc_pair):
        exact, sampled = mc_pair
        np.testing.assert_allclose(exact.h, sampled.h, rtol=0, atol=MC_TOLERANCE)

    def test_H(self, mc_pair):
        exact, sampled = mc_pair
        np.testing.assert_allclose(exact.H, sampled.H, rtol=0, atol=MC_TOLERANCE)

    def test_Gamma(self, mc_pair):
        exact, sampled = mc_pair
        np.testing.assert_allclose(exact.Gamma, sampled.Gamma, rtol=0, atol=MC_TOLERANCE)

    def test_Delta(self, mc_pair):
        exact, sampled = mc_pair
        np.testing.assert_allclose(exact.Delta, sampled.Delta, rtol=0, atol=MC_TOLERANCE)

    def test_chunking_does_not_change_result(self, small_dictionary, rng):
        samples = rng.normal(size=(1000, 2))
        whole = monte_carlo_moments(small_dictionary, samples, chunk_size=1000)
        chunked = monte_carlo_moments(small_dictionary, samples, chunk_size=77)
        np.testing.assert_allclose(whole.Gamma, chunked.Gamma, rtol=1e-12)
        np.testing.assert_allclose(whole.h, chunked.h, rtol=1e-12)


class TestStructure:
    """Symmetries of the moment tensors"""

    def test_H_symmetric_psd(self, dictionary16, null_spec):
        H = moment_H(dictionary16, null_spec)
        np.testing.assert_array_equal(H, H.T)
        assert np.min(np.linalg.eigvalsh(H)) > -1e-12

    def test_Gamma_index_symmetry(self, small_dictionary, null_spec):
        """E{k_q k_n k_r k_s} is invariant under index permutations"""
        L = small_dictionary.size
        G = moment_Gamma(small_dictionary, null_spec).reshape(L, L, L, L)
        np.testing.assert_array_equal(G, G.transpose(1, 0, 2, 3))
        np.testing.assert_array_equal(G, G.transpose(0, 1, 3, 2))
        np.testing.assert_array_equal(G, G.transpose(2, 3, 0, 1))

    def test_Gamma_diagonal_matches_H_of_squares(self, small_dictionary, null_spec):
        """E{k_q^2 k_r^2} equals H of the kernel with half the bandwidth"""
        L = small_dictionary.size
        G = moment_Gamma(small_dictionary, null_spec).reshape(L, L, L, L)
        narrow = Dictionary(small_dictionary.atoms, KernelParams(sigma=small_dictionary.sigma / np.sqrt(2)))
        H_narrow = moment_H(narrow, null_spec)
        q, r = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
        np.testing.assert_allclose(G[q, q, r, r], H_narrow, rtol=1e-12)

    def test_dimension_mismatch(self, small_dictionary):
        spec = GaussianSpec(mean=[0.0], cov=[[1.0]])
        with pytest.raises(DataError):
            moment_h(small_dictionary, spec)


class TestMomentSet:
    """Tests for the container"""

    def test_second_order_only(self, small_dictionary, null_spec):
        moments = moment_set(small_dictionary, null_spec, fourth_order=False)
        assert moments.size == 4
        assert not moments.has_fourth_order

    def test_save_load(self, small_dictionary, null_spec, tmp_path):
        moments = moment_set(small_dictionary, null_spec)
        path = tmp_path / "moments.npz"
        moments.save(path)
        loaded = MomentSet.load(path)
        np.testing.assert_array_equal(loaded.Gamma, moments.Gamma)
        np.testing.assert_array_equal(loaded.h, moments.h)
        assert loaded.has_fourth_order

    def test_empty_samples(self, small_dictionary):
        with pytest.raises(DataError):
            monte_carlo_moments(small_dictionary, np.empty((0, 2)))
