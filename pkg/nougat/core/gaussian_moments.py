# nougat/core/gaussian_moments.py
"""
Closed-Form Kernel Moments under Gaussian Data

For y ~ N(mu, R) every moment of products of Gaussian kernels reduces to
the moment generating function of a Gaussian quadratic form

    Psi(s, W, b) = E{exp(s (y^T W y + b^T y))}
                 = |I - 2sWR|^(-1/2)
                   * exp(s [(mu^T W mu + b^T mu) + (s/2) v^T R (I - 2sWR)^(-1) v]),
    v = 2 W mu + b.

Moments computed here:
    h      = E{kappa_w(y)}                          (L)
    H      = E{kappa_w(y) kappa_w(y)^T}             (L x L)
    Gamma  = E{kappa kappa^T (x) kappa kappa^T}     (L^2 x L^2)
    Delta  = E{kappa kappa^T (x) kappa}             (L^2 x L)

An entry of Gamma or Delta depends on its atom indices only through their
multiset, so each distinct multiset is evaluated once.
"""

import logging
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import linalg

from ..config import settings
from ..schemas.gaussian import GaussianSpec
from .errors import DataError, SingularSystemError
from .kernel_dict import Dictionary

logger = logging.getLogger(__name__)


# =============================================================================
# Psi
# =============================================================================

def _psi_factor(s: float, W: np.ndarray, spec: GaussianSpec):
    """LU factorization of M = I - 2sWR and |M|^(-1/2)"""
    k = spec.dim
    M = np.eye(k) - 2.0 * s * W @ spec.R
    lu, piv = linalg.lu_factor(M, check_finite=False)
    diag = np.diag(lu)
    sign = -1.0 if np.count_nonzero(piv != np.arange(k)) % 2 else 1.0
    det = sign * float(np.prod(diag))
    if not np.isfinite(det) or det <= 0.0 or np.min(np.abs(diag)) < 1e-300:
        raise SingularSystemError(
            f"I - 2sWR is singular or has non-positive determinant ({det:.3e}) for s = {s}",
            {"s": s, "determinant": det},
        )
    return (lu, piv), det ** -0.5


def psi_batch(s: float, W: np.ndarray, B: np.ndarray, spec: GaussianSpec) -> np.ndarray:
    """Psi for one (s, W) and many linear terms, B of shape (n, k)"""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    mu = spec.mu
    if B.shape[1] != spec.dim:
        raise DataError(f"Linear term has dimension {B.shape[1]}, spec has {spec.dim}")

    factor, scale = _psi_factor(s, W, spec)
    V = (2.0 * W @ mu)[None, :] + B                      # (n, k)
    # R (I - 2sWR)^(-1) v  ==  R M^(-1) v
    solved = linalg.lu_solve(factor, V.T, check_finite=False)  # (k, n)
    quad = np.einsum("nk,kn->n", V, spec.R @ solved)
    linear = float(mu @ W @ mu) + B @ mu
    return scale * np.exp(s * (linear + 0.5 * s * quad))


def psi(s: float, W: np.ndarray, b: np.ndarray, spec: GaussianSpec) -> float:
    """Moment generating function of a Gaussian quadratic form"""
    if s == 0.0:
        return 1.0
    return float(psi_batch(s, W, np.asarray(b, dtype=float)[None, :], spec)[0])


# =============================================================================
# Kernel moments
# =============================================================================

def _check_dims(dictionary: Dictionary, spec: GaussianSpec) -> None:
    if dictionary.dim != spec.dim:
        raise DataError(
            f"Dictionary atoms live in R^{dictionary.dim} but the Gaussian spec in R^{spec.dim}",
            {"dictionary_dim": dictionary.dim, "spec_dim": spec.dim},
        )


def moment_h(dictionary: Dictionary, spec: GaussianSpec) -> np.ndarray:
    """E{kappa_w(y)}"""
    _check_dims(dictionary, spec)
    atoms = dictionary.atoms
    sigma2 = dictionary.sigma ** 2
    k = spec.dim
    prefactor = np.exp(-np.sum(atoms ** 2, axis=1) / (2.0 * sigma2))
    return prefactor * psi_batch(-1.0 / (2.0 * sigma2), np.eye(k), -2.0 * atoms, spec)


def moment_H(dictionary: Dictionary, spec: GaussianSpec) -> np.ndarray:
    """E{kappa_w(y) kappa_w(y)^T}"""
    _check_dims(dictionary, spec)
    atoms = dictionary.atoms
    L = dictionary.size
    sigma2 = dictionary.sigma ** 2
    norms = np.sum(atoms ** 2, axis=1)

    rows, cols = np.triu_indices(L)
    prefactor = np.exp(-(norms[rows] + norms[cols]) / (2.0 * sigma2))
    values = prefactor * psi_batch(
        -1.0 / sigma2, np.eye(spec.dim), -(atoms[rows] + atoms[cols]), spec
    )
    H = np.empty((L, L))
    H[rows, cols] = values
    H[cols, rows] = values
    return H


def _multiset_moments(dictionary: Dictionary, spec: GaussianSpec, order: int, s: float, w: float, b_scale: float):
    """
    Full order-way tensor E{kappa_i1 ... kappa_in} built from one evaluation
    per sorted index multiset
    """
    atoms = dictionary.atoms
    L = dictionary.size
    sigma2 = dictionary.sigma ** 2
    norms = np.sum(atoms ** 2, axis=1)

    combos = np.array(list(combinations_with_replacement(range(L), order)), dtype=np.int64)
    atom_sums = atoms[combos].sum(axis=1)                     # (m, k)
    prefactor = np.exp(-norms[combos].sum(axis=1) / (2.0 * sigma2))
    values = prefactor * psi_batch(s, w * np.eye(spec.dim), b_scale * atom_sums, spec)

    # Map every index tuple to its multiset through a base-L code of the sorted tuple
    powers = L ** np.arange(order - 1, -1, -1, dtype=np.int64)
    combo_codes = combos @ powers                               # ascending
    grid = np.indices((L,) * order).reshape(order, -1).T
    tuple_codes = np.sort(grid, axis=1) @ powers
    positions = np.searchsorted(combo_codes, tuple_codes)
    logger.debug(f"Order-{order} moments: {combos.shape[0]} distinct entries for L={L}")
    return values[positions].reshape((L,) * order)


def moment_Gamma(dictionary: Dictionary, spec: GaussianSpec) -> np.ndarray:
    """E{kappa kappa^T (x) kappa kappa^T}, entry [(q)L + r, (n)L + s] = E{k_q k_n k_r k_s}"""
    _check_dims(dictionary, spec)
    L = dictionary.size
    sigma2 = dictionary.sigma ** 2
    G4 = _multiset_moments(dictionary, spec, order=4, s=-1.0 / sigma2, w=2.0, b_scale=-1.0)
    return G4.transpose(0, 2, 1, 3).reshape(L * L, L * L)


def moment_Delta(dictionary: Dictionary, spec: GaussianSpec) -> np.ndarray:
    """E{kappa kappa^T (x) kappa}, entry [(q)L + r, n] = E{k_q k_n k_r}"""
    _check_dims(dictionary, spec)
    L = dictionary.size
    sigma2 = dictionary.sigma ** 2
    D3 = _multiset_moments(dictionary, spec, order=3, s=-1.0 / (2.0 * sigma2), w=3.0, b_scale=-2.0)
    return D3.transpose(0, 2, 1).reshape(L * L, L)


# =============================================================================
# Moment sets
# =============================================================================

@dataclass
class MomentSet:
    """h, H and (optionally) the higher-order moments of one distribution"""
    h: np.ndarray
    H: np.ndarray
    Gamma: Optional[np.ndarray] = None
    Delta: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.h.shape[0]

    @property
    def has_fourth_order(self) -> bool:
        return self.Gamma is not None and self.Delta is not None

    def save(self, path: Union[str, Path]) -> None:
        """Write an .npz dump"""
        arrays = {"h": self.h, "H": self.H}
        if self.Gamma is not None:
            arrays["Gamma"] = self.Gamma
        if self.Delta is not None:
            arrays["Delta"] = self.Delta
        np.savez(path, **arrays)
        logger.info(f"Saved moment set (L={self.size}) to {path}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MomentSet":
        with np.load(path) as data:
            return cls(
                h=data["h"],
                H=data["H"],
                Gamma=data["Gamma"] if "Gamma" in data.files else None,
                Delta=data["Delta"] if "Delta" in data.files else None,
            )


def moment_set(dictionary: Dictionary, spec: GaussianSpec, fourth_order: bool = True) -> MomentSet:
    """Closed-form moments of one Gaussian distribution"""
    moments = MomentSet(h=moment_h(dictionary, spec), H=moment_H(dictionary, spec))
    if fourth_order:
        moments.Gamma = moment_Gamma(dictionary, spec)
        moments.Delta = moment_Delta(dictionary, spec)
    return moments


def monte_carlo_moments(
    dictionary: Dictionary,
    samples: np.ndarray,
    fourth_order: bool = True,
    chunk_size: Optional[int] = None,
) -> MomentSet:
    """
    Sample-average moments for arbitrary (non-Gaussian) data

    Same layout as the closed forms; samples are processed in chunks.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[0]
    if n == 0:
        raise DataError("No samples for Monte Carlo moments")
    chunk_size = chunk_size or settings.MOMENT_MC_CHUNK
    L = dictionary.size

    h = np.zeros(L)
    H = np.zeros((L, L))
    Gamma = np.zeros((L * L, L * L)) if fourth_order else None
    Delta = np.zeros((L * L, L)) if fourth_order else None

    for start in range(0, n, chunk_size):
        K = dictionary.features(samples[start:start + chunk_size])
        h += K.sum(axis=0)
        H += K.T @ K
        if fourth_order:
            KK = np.einsum("ni,nj->nij", K, K).reshape(K.shape[0], L * L)
            Gamma += KK.T @ KK
            Delta += KK.T @ K

    moments = MomentSet(h=h / n, H=H / n)
    if fourth_order:
        moments.Gamma = Gamma / n
        moments.Delta = Delta / n
    return moments
