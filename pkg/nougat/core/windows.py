# nougat/core/windows.py
"""
Sliding Reference / Test Windows

Keeps the last N_ref + N_test samples in a ring buffer together with their
feature images and maintains, in O(L^2) per push:
    h_ref  = mean of kappa_w(y) over the reference window
    h_test = mean of kappa_w(y) over the test window
    H_ref  = mean of kappa_w(y) kappa_w(y)^T over the reference window
    e_opt  = h_ref - h_test

The reference window holds the oldest N_ref buffered samples, the test
window the newest N_test. Statistics are published once the buffer is
full ("warm").
"""

import logging
from typing import NamedTuple, Optional

import numpy as np

from ..config import settings
from .errors import DimensionMismatchError, WindowStateError
from .kernel_dict import Dictionary, kernel_matrix

logger = logging.getLogger(__name__)

# Drift repair corrections above this are worth a warning
DRIFT_WARN_TOLERANCE = 1e-8


class BatchStatistics(NamedTuple):
    h_ref: np.ndarray
    h_test: np.ndarray
    H_ref: np.ndarray
    e_opt: np.ndarray


def statistics_from_features(K: np.ndarray, n_ref: int, n_test: int) -> BatchStatistics:
    """Window statistics from chronologically ordered feature rows"""
    if K.shape[0] != n_ref + n_test:
        raise WindowStateError(f"Expected {n_ref + n_test} feature rows, got {K.shape[0]}")
    K_ref = K[:n_ref]
    K_test = K[n_ref:]
    h_ref = K_ref.mean(axis=0)
    h_test = K_test.mean(axis=0)
    H_ref = K_ref.T @ K_ref / n_ref
    return BatchStatistics(h_ref, h_test, H_ref, h_ref - h_test)


def batch_statistics(raw: np.ndarray, dictionary: Dictionary, n_ref: int, n_test: int) -> BatchStatistics:
    """From-scratch window statistics over n_ref + n_test chronologically ordered samples"""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    return statistics_from_features(dictionary.features(raw), n_ref, n_test)


class WindowStats:
    """
    Ring-buffered windows with recursively maintained statistics

    Single writer. ``push`` returns True once the windows are warm.
    """

    def __init__(
        self,
        n_ref: int,
        n_test: int,
        dictionary: Dictionary,
        repair_every: Optional[int] = None,
    ):
        if n_ref < 1 or n_test < 1:
            raise WindowStateError(f"Window lengths must be >= 1, got n_ref={n_ref}, n_test={n_test}")
        self.n_ref = n_ref
        self.n_test = n_test
        self.capacity = n_ref + n_test
        self.repair_every = repair_every or settings.DRIFT_REPAIR_FACTOR * self.capacity

        L = dictionary.size
        self._raw = np.zeros((self.capacity, dictionary.dim))
        self._feat = np.zeros((self.capacity, L))
        self._head = 0      # next write position == oldest sample once full
        self._count = 0
        self._since_repair = 0
        self.pushes = 0
        self.last_repair: Optional[float] = None  # correction applied by the latest push, if any

        self.h_ref = np.zeros(L)
        self.h_test = np.zeros(L)
        self.H_ref = np.zeros((L, L))

    # === State ===

    @property
    def warm(self) -> bool:
        return self._count >= self.capacity

    @property
    def fill(self) -> int:
        return self._count

    @property
    def n_features(self) -> int:
        return self._feat.shape[1]

    @property
    def e_opt(self) -> np.ndarray:
        return self.h_ref - self.h_test

    def _order(self) -> np.ndarray:
        """Buffer positions from oldest to newest"""
        if self.warm:
            return (self._head + np.arange(self.capacity)) % self.capacity
        return np.arange(self._count)

    def window(self) -> np.ndarray:
        """Buffered raw samples, oldest first"""
        return self._raw[self._order()].copy()

    def features(self) -> np.ndarray:
        """Buffered feature images, oldest first"""
        return self._feat[self._order()].copy()

    def ref_samples(self) -> np.ndarray:
        self._require_warm()
        return self.window()[: self.n_ref]

    def test_samples(self) -> np.ndarray:
        self._require_warm()
        return self.window()[self.n_ref:]

    def feature_mean(self) -> np.ndarray:
        """Mean feature image over the whole buffer"""
        self._require_warm()
        return (self.n_ref * self.h_ref + self.n_test * self.h_test) / self.capacity

    def _require_warm(self) -> None:
        if not self.warm:
            raise WindowStateError(
                f"Windows are not warm yet ({self._count}/{self.capacity} samples buffered)"
            )

    # === Updates ===

    def push(self, y, dictionary: Dictionary) -> bool:
        """
        Shift the windows by one sample

        The newest sample enters the test window, the oldest test sample
        migrates to the reference window and the oldest reference sample
        leaves.
        """
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.shape[0] != self._raw.shape[1]:
            raise DimensionMismatchError(self._raw.shape[1], y.shape[0], "sample")
        if dictionary.size != self.n_features:
            raise WindowStateError(
                f"Dictionary has {dictionary.size} atoms but windows track {self.n_features} features"
            )

        k_new = dictionary.kvec(y)
        self.last_repair = None
        self.pushes += 1

        if not self.warm:
            self._raw[self._head] = y
            self._feat[self._head] = k_new
            self._head = (self._head + 1) % self.capacity
            self._count += 1
            if self.warm:
                self.recompute()
            return self.warm

        oldest = self._head
        migrating = (self._head + self.n_ref) % self.capacity
        k_old = self._feat[oldest]
        k_mig = self._feat[migrating]

        self.h_ref += (k_mig - k_old) / self.n_ref
        self.H_ref += (np.outer(k_mig, k_mig) - np.outer(k_old, k_old)) / self.n_ref
        self.h_test += (k_new - k_mig) / self.n_test

        self._raw[oldest] = y
        self._feat[oldest] = k_new
        self._head = (self._head + 1) % self.capacity

        self._since_repair += 1
        if self._since_repair >= self.repair_every:
            correction = self.recompute()
            self.last_repair = correction
            if correction > DRIFT_WARN_TOLERANCE:
                logger.warning(f"Drift repair corrected window statistics by {correction:.3e}")
            else:
                logger.debug(f"Drift repair correction {correction:.3e}")
        return True

    def recompute(self) -> float:
        """
        Rebuild the statistics from the buffered features

        Returns the largest absolute correction applied.
        """
        self._require_warm()
        stats = statistics_from_features(self.features(), self.n_ref, self.n_test)
        correction = max(
            float(np.max(np.abs(stats.h_ref - self.h_ref), initial=0.0)),
            float(np.max(np.abs(stats.h_test - self.h_test), initial=0.0)),
            float(np.max(np.abs(stats.H_ref - self.H_ref), initial=0.0)),
        )
        self.h_ref = stats.h_ref
        self.h_test = stats.h_test
        self.H_ref = (stats.H_ref + stats.H_ref.T) / 2.0
        self._since_repair = 0
        return correction

    def extend_dimension(self, new_atom_index: int, dictionary: Dictionary) -> None:
        """
        Track one more feature after the dictionary grew from L to L + 1

        Every buffered feature image gains kappa(y, new_atom); the statistics
        gain the matching entries computed over the buffered data.
        """
        L = self.n_features
        if dictionary.size != L + 1 or new_atom_index != L:
            raise WindowStateError(
                f"extend_dimension expects a dictionary of {L + 1} atoms and index {L}, "
                f"got {dictionary.size} atoms and index {new_atom_index}"
            )

        atom = dictionary.atoms[new_atom_index]
        column = np.zeros(self.capacity)
        if self._count:
            filled = self._order()
            column[filled] = kernel_matrix(self._raw[filled], atom[None, :], dictionary.sigma)[:, 0]
        self._feat = np.hstack([self._feat, column[:, None]])

        self.h_ref = np.append(self.h_ref, 0.0)
        self.h_test = np.append(self.h_test, 0.0)
        H = np.zeros((L + 1, L + 1))
        H[:L, :L] = self.H_ref
        self.H_ref = H

        if self.warm:
            order = self._order()
            K = self._feat[order]
            ref_rows = K[: self.n_ref]
            new_col = ref_rows[:, -1]
            self.h_ref[-1] = new_col.mean()
            self.h_test[-1] = K[self.n_ref:, -1].mean()
            cross = ref_rows.T @ new_col / self.n_ref
            self.H_ref[-1, :] = cross
            self.H_ref[:, -1] = cross
