# nougat/core/detectors.py
"""
Change-Point Detectors

- NOUGAT: one gradient step per sample on the windowed quadratic cost
      theta <- theta - mu [(H_ref + nu I) theta + e_opt],   g = theta^T h_test
- dRuLSIF: exact minimizer of the same cost, (H_ref + nu I) theta = -e_opt
- MA: ||h_test - h_ref||_2
- GMA: geometric moving average of the feature map against a nominal mean
- k-NN: cross-window edge count of the pooled k-nearest-neighbor graph,
  centered by its expectation under exchangeable labels
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ..config import settings
from ..schemas.detectors import AlarmRule, KnnSearch
from .errors import ConfigurationError, DataError, DimensionMismatchError, SingularSystemError
from .kernel_dict import Dictionary
from .windows import WindowStats

logger = logging.getLogger(__name__)


# =============================================================================
# Alarm rules
# =============================================================================

def alarm_score(rule: AlarmRule, g):
    """Score compared against the threshold; works on scalars and arrays"""
    if rule == AlarmRule.ABS_SHIFT:
        return np.abs(g + 1.0)
    if rule == AlarmRule.TWO_SIDED:
        return np.abs(g)
    if rule == AlarmRule.UPPER:
        return g
    if rule == AlarmRule.LOWER:
        return -g
    raise ValueError(f"Unknown alarm rule: {rule}")


def is_alarm(rule: AlarmRule, g: float, xi: float) -> bool:
    return bool(alarm_score(rule, g) > xi)


# =============================================================================
# NOUGAT
# =============================================================================

@dataclass
class NougatState:
    """Weights and parameters of the online detector"""
    theta: np.ndarray
    mu: float
    nu: float
    xi: float
    rule: AlarmRule = AlarmRule.ABS_SHIFT
    g: float = float("nan")

    def __post_init__(self):
        self.theta = np.array(self.theta, dtype=float)
        if self.mu <= 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if self.nu < 0:
            raise ConfigurationError(f"nu must be non-negative, got {self.nu}")

    def grow(self) -> None:
        """Append a zero weight for a newly inserted atom"""
        self.theta = np.append(self.theta, 0.0)


def nougat_step(state: NougatState, stats: WindowStats, grew: bool = False) -> NougatState:
    """
    One gradient step, then the test statistic g = theta^T h_test

    When ``grew`` is set the caller has already padded theta with a zero.
    """
    L = stats.n_features
    if state.theta.shape[0] != L:
        hint = " (theta was not padded after dictionary growth)" if grew else ""
        raise DimensionMismatchError(L, state.theta.shape[0], f"theta{hint}")

    theta = state.theta
    gradient = stats.H_ref @ theta + state.nu * theta + stats.e_opt
    state.theta = theta - state.mu * gradient
    state.g = float(state.theta @ stats.h_test)
    return state


def nougat_alarm(state: NougatState) -> bool:
    """True iff the statistic crosses the threshold under the state's rule"""
    return is_alarm(state.rule, state.g, state.xi)


# =============================================================================
# dRuLSIF
# =============================================================================

def drulsif_solve(stats: WindowStats, nu: float) -> np.ndarray:
    """Exact minimizer: solves (H_ref + nu I) theta = -e_opt by Cholesky"""
    return solve_regularized(stats.H_ref, stats.e_opt, nu)


def solve_regularized(H: np.ndarray, e_opt: np.ndarray, nu: float) -> np.ndarray:
    L = H.shape[0]
    A = H + nu * np.eye(L)
    if nu == 0.0 and np.linalg.matrix_rank(H) < L:
        raise SingularSystemError(
            f"H_ref is rank deficient ({np.linalg.matrix_rank(H)} < {L}) and nu = 0",
            {"rank": int(np.linalg.matrix_rank(H)), "L": L},
        )
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        min_eig = float(np.min(np.linalg.eigvalsh(A)))
        raise SingularSystemError(
            f"H_ref + nu I is not positive definite (min eigenvalue {min_eig:.3e}, nu = {nu})",
            {"min_eigenvalue": min_eig, "nu": nu},
        ) from e
    return linalg.cho_solve(factor, -e_opt, check_finite=False)


def solve_residual(stats: WindowStats, nu: float, theta: np.ndarray) -> float:
    """||(H_ref + nu I) theta + e_opt||_2"""
    return float(np.linalg.norm(stats.H_ref @ theta + nu * theta + stats.e_opt))


def drulsif_statistic(stats: WindowStats, nu: float) -> float:
    """theta_hat^T h_test for the exact solution"""
    return float(drulsif_solve(stats, nu) @ stats.h_test)


# =============================================================================
# MA / GMA
# =============================================================================

def ma_statistic(stats: WindowStats) -> float:
    return float(np.linalg.norm(stats.e_opt))


@dataclass
class GmaState:
    """Geometrically weighted feature mean"""
    vartheta: np.ndarray
    alpha: float
    nominal: Optional[np.ndarray] = None

    def __post_init__(self):
        self.vartheta = np.array(self.vartheta, dtype=float)
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.nominal is not None:
            self.nominal = np.array(self.nominal, dtype=float)

    def grow(self, initial: float = 0.0, nominal: Optional[float] = None) -> None:
        self.vartheta = np.append(self.vartheta, initial)
        if self.nominal is not None:
            self.nominal = np.append(self.nominal, initial if nominal is None else nominal)


def gma_step(state: GmaState, y, dictionary: Dictionary) -> GmaState:
    """vartheta <- (1 - alpha) vartheta + alpha kappa_w(y)"""
    k = dictionary.kvec(y)
    if k.shape[0] != state.vartheta.shape[0]:
        raise DimensionMismatchError(k.shape[0], state.vartheta.shape[0], "vartheta")
    state.vartheta = (1.0 - state.alpha) * state.vartheta + state.alpha * k
    return state


def gma_statistic(state: GmaState, nominal: Optional[np.ndarray] = None) -> float:
    """||vartheta - nominal||_2; needs a nominal feature mean"""
    reference = state.nominal if nominal is None else np.asarray(nominal, dtype=float)
    if reference is None:
        raise DataError("GMA statistic needs a nominal feature mean")
    return float(np.linalg.norm(state.vartheta - reference))


# =============================================================================
# k-NN two-sample statistic
# =============================================================================

def knn_graph(X: np.ndarray, k: int, search: KnnSearch = KnnSearch.BRUTE) -> np.ndarray:
    """
    Directed k-NN graph on the rows of X (Euclidean)

    Returns an (N, k) array of neighbor indices. A point is never its own
    neighbor. With brute-force search, distance ties go to the smaller index.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < k + 1:
        raise DataError(f"k-NN graph needs at least k + 1 = {k + 1} points, got {n}", {"n": n, "k": k})

    if search == KnnSearch.AUTO:
        search = KnnSearch.TREE if n >= settings.KNN_TREE_MIN_POINTS else KnnSearch.BRUTE

    if search == KnnSearch.TREE:
        _, idx = cKDTree(X).query(X, k=k + 1)
        idx = np.atleast_2d(idx)
        neighbors = np.empty((n, k), dtype=int)
        for i in range(n):
            row = idx[i][idx[i] != i]
            neighbors[i] = row[:k]
        return neighbors

    D = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def cross_edge_count(neighbors: np.ndarray, labels: np.ndarray) -> int:
    """Directed edges whose endpoints carry different labels"""
    labels = np.asarray(labels)
    return int(np.sum(labels[neighbors] != labels[:, None]))


def knn_expected_edges(n_ref: int, n_test: int, k: int) -> float:
    """E{N_e} = k * 2 N_ref N_test / (N_ref + N_test - 1) for exchangeable labels"""
    return k * 2.0 * n_ref * n_test / (n_ref + n_test - 1)


def window_labels(n_ref: int, n_test: int) -> np.ndarray:
    """0 for reference rows, 1 for test rows"""
    return np.concatenate([np.zeros(n_ref, dtype=int), np.ones(n_test, dtype=int)])


def knn_statistic(
    window: np.ndarray,
    n_ref: int,
    k_neighbors: int,
    search: KnnSearch = KnnSearch.BRUTE,
) -> float:
    """
    N_e - E{N_e} on the pooled window (reference rows first)

    Negative values mean fewer cross edges than expected, i.e. the windows
    separate.
    """
    window = np.atleast_2d(np.asarray(window, dtype=float))
    n_test = window.shape[0] - n_ref
    if n_ref < 1 or n_test < 1:
        raise DataError(f"Pooled window must contain both windows (n_ref={n_ref}, n_test={n_test})")
    neighbors = knn_graph(window, k_neighbors, search)
    n_e = cross_edge_count(neighbors, window_labels(n_ref, n_test))
    return n_e - knn_expected_edges(n_ref, n_test, k_neighbors)


def knn_deficit(
    window: np.ndarray,
    n_ref: int,
    k_neighbors: int,
    search: KnnSearch = KnnSearch.BRUTE,
) -> float:
    """
    E{N_e} - N_e, the k-NN column of the pipeline

    Grows as the windows separate, so the default UPPER rule alarms on
    deficit > xi.
    """
    return -knn_statistic(window, n_ref, k_neighbors, search)
