# nougat/core/kernel_dict.py
"""
Gaussian Kernel Dictionary

Evaluates the Gaussian reproducing kernel
    kappa(y, y') = exp(-||y - y'||^2 / (2 sigma^2))
and manages the dictionary of atoms that defines the feature map
    kappa_w(y) = (kappa(y, atom_1), ..., kappa(y, atom_L)).

Atoms are admitted by the coherence rule: a candidate is inserted iff its
largest kernel value against the current atoms is <= eta0.
"""

import logging
from typing import Iterable, Optional

import numpy as np
from scipy.spatial.distance import cdist

from ..schemas.kernel import KernelParams
from .errors import ConfigurationError, DimensionMismatchError, EmptyInputError

logger = logging.getLogger(__name__)


def _as_vector(y) -> np.ndarray:
    return np.atleast_1d(np.asarray(y, dtype=float))


def kappa(y, y2, params: KernelParams) -> float:
    """Gaussian kernel between two vectors"""
    a = _as_vector(y)
    b = _as_vector(y2)
    if a.shape != b.shape:
        raise DimensionMismatchError(a.shape[0], b.shape[0], "kernel argument")
    d2 = float(np.sum((a - b) ** 2))
    return float(np.exp(-d2 / (2.0 * params.sigma ** 2)))


def kernel_matrix(X: np.ndarray, atoms: np.ndarray, sigma: float) -> np.ndarray:
    """
    Feature images of every row of X

    Returns the (n, L) matrix K[i, l] = kappa(X[i], atoms[l]).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    if X.shape[1] != atoms.shape[1]:
        raise DimensionMismatchError(atoms.shape[1], X.shape[1], "sample")
    return np.exp(-cdist(X, atoms, "sqeuclidean") / (2.0 * sigma ** 2))


class Dictionary:
    """
    Ordered set of L kernel atoms in R^k

    Atoms are stored by value and never evicted. ``max_size`` caps growth
    when set.
    """

    def __init__(
        self,
        atoms,
        params: KernelParams,
        eta0: float = 1.0,
        max_size: Optional[int] = None,
    ):
        atoms = np.atleast_2d(np.array(atoms, dtype=float))
        if atoms.size == 0:
            raise EmptyInputError("Dictionary needs at least one atom")
        if not 0.0 < eta0 <= 1.0:
            raise ConfigurationError(f"eta0 must be in (0, 1], got {eta0}", {"eta0": eta0})
        if max_size is not None and max_size < atoms.shape[0]:
            raise ConfigurationError(
                f"max_size ({max_size}) is smaller than the initial atom count ({atoms.shape[0]})"
            )
        self._atoms = atoms
        self.params = params
        self.eta0 = float(eta0)
        self.max_size = max_size

    @property
    def atoms(self) -> np.ndarray:
        """Read-only view of the (L, k) atom matrix"""
        view = self._atoms.view()
        view.flags.writeable = False
        return view

    @property
    def size(self) -> int:
        return self._atoms.shape[0]

    @property
    def dim(self) -> int:
        return self._atoms.shape[1]

    @property
    def sigma(self) -> float:
        return self.params.sigma

    @property
    def is_full(self) -> bool:
        return self.max_size is not None and self.size >= self.max_size

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"Dictionary(L={self.size}, k={self.dim}, sigma={self.sigma}, eta0={self.eta0})"

    def kvec(self, y) -> np.ndarray:
        """Feature image kappa_w(y), length L"""
        y = _as_vector(y)
        if y.shape[0] != self.dim:
            raise DimensionMismatchError(self.dim, y.shape[0], "sample")
        return kernel_matrix(y[None, :], self._atoms, self.sigma)[0]

    def features(self, X: np.ndarray) -> np.ndarray:
        """Feature images of a batch of samples, shape (n, L)"""
        return kernel_matrix(X, self._atoms, self.sigma)

    def coherence_of(self, y) -> float:
        """Largest kernel value between y and the atoms"""
        return float(np.max(np.abs(self.kvec(y))))

    def admits(self, y) -> bool:
        """True iff y passes the coherence rule (and the size cap)"""
        if self.is_full:
            return False
        return self.coherence_of(y) <= self.eta0

    def insert(self, y) -> int:
        """Append y as a new atom and return its index"""
        y = _as_vector(y)
        if y.shape[0] != self.dim:
            raise DimensionMismatchError(self.dim, y.shape[0], "atom")
        self._atoms = np.vstack([self._atoms, y.copy()])
        logger.debug(f"Dictionary grew to L={self.size}")
        return self.size - 1

    def offer(self, y) -> bool:
        """Apply the coherence rule to y, inserting it when admitted"""
        if self.admits(y):
            self.insert(y)
            return True
        return False

    def gram(self) -> np.ndarray:
        """Kernel matrix between atoms, shape (L, L)"""
        return kernel_matrix(self._atoms, self._atoms, self.sigma)

    def coherence(self) -> float:
        """Largest off-diagonal kernel value between atoms (0 for a single atom)"""
        if self.size < 2:
            return 0.0
        G = self.gram()
        np.fill_diagonal(G, 0.0)
        return float(np.max(np.abs(G)))

    def copy(self) -> "Dictionary":
        return Dictionary(self._atoms.copy(), self.params, self.eta0, self.max_size)


def kvec(dictionary: Dictionary, y) -> np.ndarray:
    """Feature image of y under the dictionary"""
    return dictionary.kvec(y)


def coherence_admit(dictionary: Dictionary, y) -> bool:
    """True iff max_i |kappa(y, atom_i)| <= eta0, i.e. y should be inserted"""
    return dictionary.admits(y)


def build_dictionary(
    samples: Iterable,
    params: KernelParams,
    eta0: float,
    max_size: Optional[int] = None,
) -> Dictionary:
    """
    Sequential coherence-rule construction

    The first sample is always admitted; each following sample is admitted
    iff it passes the coherence rule against the atoms kept so far.
    """
    samples = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=float)
    if samples.size == 0:
        raise EmptyInputError("Cannot build a dictionary from an empty sample set")
    if samples.ndim == 1:
        samples = samples[:, None]

    dictionary = Dictionary(samples[0], params, eta0, max_size)
    for y in samples[1:]:
        if dictionary.is_full:
            break
        dictionary.offer(y)

    logger.info(f"Built dictionary with L={dictionary.size} atoms from {samples.shape[0]} samples (eta0={eta0})")
    return dictionary
