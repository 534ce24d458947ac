# tests/test_kernel_dict.py
"""
Unit Tests for the Gaussian kernel and the coherence-rule dictionary

Run with:
    pytest tests/test_kernel_dict.py -v
"""

import numpy as np
import pytest

from nougat.core.errors import ConfigurationError, DimensionMismatchError, EmptyInputError
from nougat.core.kernel_dict import (
    Dictionary,
    build_dictionary,
    coherence_admit,
    kappa,
    kernel_matrix,
    kvec,
)
from nougat.schemas.kernel import KernelParams

pytestmark = pytest.mark.unit


class TestKappa:
    """Tests for the Gaussian kernel"""

    def test_identical_points_give_one(self):
        """kappa(y, y) = 1"""
        assert kappa([0.3, -1.2], [0.3, -1.2], KernelParams(sigma=0.25)) == 1.0

    def test_known_value(self):
        """||y - y'||^2 = 1, sigma = 1 gives exp(-1/2)"""
        assert kappa([0.0, 0.0], [1.0, 0.0], KernelParams(sigma=1.0)) == pytest.approx(np.exp(-0.5), rel=1e-15)

    def test_symmetry_and_bounds(self, rng):
        """Symmetric and in (0, 1] on random pairs"""
        params = KernelParams(sigma=0.7)
        for _ in range(50):
            a, b = rng.normal(size=3), rng.normal(size=3)
            value = kappa(a, b, params)
            assert value == kappa(b, a, params)
            assert 0.0 < value <= 1.0

    def test_dimension_mismatch(self):
        """Arguments of different lengths are rejected"""
        with pytest.raises(DimensionMismatchError):
            kappa([0.0, 1.0], [0.0], KernelParams(sigma=1.0))

    def test_kernel_matrix_matches_pairwise(self, rng):
        """Vectorized matrix equals element-wise kappa"""
        params = KernelParams(sigma=0.5)
        X = rng.normal(size=(6, 2))
        atoms = rng.normal(size=(4, 2))
        K = kernel_matrix(X, atoms, params.sigma)
        expected = np.array([[kappa(x, a, params) for a in atoms] for x in X])
        np.testing.assert_allclose(K, expected, rtol=1e-13)


class TestDictionary:
    """Tests for the Dictionary container"""

    def test_single_atom_seed(self, kernel):
        """A vector seeds a one-atom dictionary"""
        d = Dictionary([0.1, 0.2], kernel)
        assert d.size == 1
        assert d.dim == 2
        assert d.coherence() == 0.0

    def test_empty_rejected(self, kernel):
        """No atoms, no dictionary"""
        with pytest.raises(EmptyInputError):
            Dictionary(np.empty((0, 2)), kernel)

    @pytest.mark.parametrize("eta0", [0.0, -0.1, 1.5])
    def test_eta0_domain(self, kernel, eta0):
        """eta0 must be in (0, 1]"""
        with pytest.raises(ConfigurationError):
            Dictionary([0.0], kernel, eta0=eta0)

    def test_atoms_are_read_only(self, kernel):
        """The atoms view cannot be written through"""
        d = Dictionary([[0.0], [1.0]], kernel)
        with pytest.raises(ValueError):
            d.atoms[0, 0] = 5.0

    def test_kvec_matches_kappa(self, grid_dictionary):
        """Feature image entries are kernel values against each atom"""
        y = np.array([0.4])
        k = kvec(grid_dictionary, y)
        expected = [kappa(y, a, grid_dictionary.params) for a in grid_dictionary.atoms]
        np.testing.assert_allclose(k, expected, rtol=1e-14)

    def test_kvec_dimension_mismatch(self, grid_dictionary):
        """Samples must live in the atoms' space"""
        with pytest.raises(DimensionMismatchError):
            grid_dictionary.kvec([0.0, 1.0])

    def test_copy_is_independent(self, grid_dictionary):
        """Growing a copy leaves the original alone"""
        clone = grid_dictionary.copy()
        clone.insert([5.0])
        assert clone.size == 4
        assert grid_dictionary.size == 3


class TestCoherenceRule:
    """Tests for admission by coherence"""

    def test_duplicate_never_admitted(self, kernel):
        """kappa(y, y) = 1 > eta0 for eta0 < 1"""
        d = Dictionary([0.5, 0.5], kernel, eta0=0.9)
        assert not coherence_admit(d, [0.5, 0.5])

    def test_far_point_admitted(self, kernel):
        """A distant point has negligible coherence"""
        d = Dictionary([0.0, 0.0], kernel, eta0=0.3)
        assert d.offer([10.0, 10.0])
        assert d.size == 2

    def test_eta0_one_admits_everything_distinct(self, kernel):
        """With eta0 = 1 every sample passes the rule"""
        d = Dictionary([0.0], KernelParams(sigma=1.0), eta0=1.0)
        assert d.offer([1e-3])

    def test_max_size_caps_growth(self):
        """A full dictionary admits nothing"""
        d = Dictionary([0.0], KernelParams(sigma=0.1), eta0=0.5, max_size=2)
        assert d.offer([5.0])
        assert d.is_full
        assert not d.offer([-5.0])
        assert d.size == 2

    def test_max_size_smaller_than_seed(self, kernel):
        """The cap cannot be below the initial atom count"""
        with pytest.raises(ConfigurationError):
            Dictionary([[0.0], [1.0]], kernel, max_size=1)

    def test_built_dictionary_respects_eta0(self, rng):
        """Pairwise coherence of a sequentially built dictionary stays <= eta0"""
        params = KernelParams(sigma=0.5)
        samples = rng.normal(size=(400, 2))
        d = build_dictionary(samples, params, eta0=0.4)
        assert d.size > 1
        assert d.coherence() <= 0.4 + 1e-15

    def test_build_from_scalar_series(self):
        """One-dimensional input is treated as scalar samples"""
        d = build_dictionary(np.array([0.0, 0.0, 3.0]), KernelParams(sigma=0.5), eta0=0.5)
        np.testing.assert_array_equal(d.atoms, [[0.0], [3.0]])

    def test_build_empty(self, kernel):
        """Empty sample sets are rejected"""
        with pytest.raises(EmptyInputError):
            build_dictionary(np.empty((0, 2)), kernel, eta0=0.5)
