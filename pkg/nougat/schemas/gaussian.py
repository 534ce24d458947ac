# nougat/schemas/gaussian.py
"""
Gaussian data-generating distribution
"""

from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

PSD_TOLERANCE = 1e-10


class GaussianSpec(BaseModel):
    """
    N(mean, cov)

    cov must be symmetric positive semidefinite. A zero matrix is allowed
    and describes the point mass at mean.
    """
    mean: List[float] = Field(..., min_length=1)
    cov: List[List[float]]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_covariance(self) -> "GaussianSpec":
        k = len(self.mean)
        R = np.asarray(self.cov, dtype=float)
        if R.shape != (k, k):
            raise ValueError(f"cov must be {k}x{k}, got shape {R.shape}")
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(self.mean)):
            raise ValueError("mean and cov must be finite")
        scale = max(1.0, float(np.max(np.abs(R))))
        if not np.allclose(R, R.T, rtol=0.0, atol=PSD_TOLERANCE * scale):
            raise ValueError("cov must be symmetric")
        if np.min(np.linalg.eigvalsh(R)) < -PSD_TOLERANCE * scale:
            raise ValueError("cov must be positive semidefinite")
        return self

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def mu(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    @property
    def R(self) -> np.ndarray:
        return np.asarray(self.cov, dtype=float)

    @classmethod
    def from_arrays(cls, mu: np.ndarray, R: np.ndarray) -> "GaussianSpec":
        return cls(mean=np.asarray(mu, dtype=float).tolist(), cov=np.asarray(R, dtype=float).tolist())

    @classmethod
    def from_std_corr(cls, k: int, std: float, corr: float, mean: float = 0.0) -> "GaussianSpec":
        """
        Equicorrelated spec: every variance std**2, every covariance corr * std**2
        """
        R = np.full((k, k), corr * std * std)
        np.fill_diagonal(R, std * std)
        return cls.from_arrays(np.full(k, mean), R)
