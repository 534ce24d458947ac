# nougat/schemas/simulation.py
"""
Synthetic stream schemas

Streams are tagged by ``kind`` so a JSON config can pick one:
- gaussian: i.i.d. N(mean, cov)
- gaussian_change: N(pre) before t0, N(post) from t0 on
- gmm: Gaussian mixture whose parameters are all redrawn at t0
"""

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from .gaussian import GaussianSpec


def _default_gaussian() -> GaussianSpec:
    return GaussianSpec.from_std_corr(2, std=0.5, corr=0.25)


class GaussianStreamSpec(BaseModel):
    """Stationary Gaussian stream"""
    kind: Literal["gaussian"] = "gaussian"
    spec: GaussianSpec = Field(default_factory=_default_gaussian)
    n_t: int = Field(2000, ge=1)

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def change_point(self) -> Optional[int]:
        return None


class GaussianChangeSpec(BaseModel):
    """Gaussian stream with a single change at sample index t0"""
    kind: Literal["gaussian_change"] = "gaussian_change"
    pre: GaussianSpec = Field(default_factory=_default_gaussian)
    post: GaussianSpec = Field(default_factory=lambda: GaussianSpec.from_std_corr(2, std=0.7, corr=0.1))
    t0: int = Field(1000, ge=0)
    n_t: int = Field(2000, ge=1)

    @model_validator(mode="after")
    def check_consistency(self) -> "GaussianChangeSpec":
        if self.pre.dim != self.post.dim:
            raise ValueError(f"pre and post dimensions differ: {self.pre.dim} vs {self.post.dim}")
        if self.t0 > self.n_t:
            raise ValueError(f"t0 ({self.t0}) must not exceed n_t ({self.n_t})")
        return self

    @property
    def dim(self) -> int:
        return self.pre.dim

    @property
    def change_point(self) -> Optional[int]:
        return self.t0


class GmmChangeSpec(BaseModel):
    """
    Mixture of n_components k-dimensional Gaussians, parameters redrawn at t0

    Means ~ N(0, I), covariances ~ Wishart(I, k + 2) scaled by 1/q for the
    q-th component (q starting at 1), weights ~ Dirichlet(alpha).
    """
    kind: Literal["gmm"] = "gmm"
    k: int = Field(6, ge=1)
    n_components: int = Field(3, ge=1)
    alpha: float = Field(5.0, gt=0)
    t0: int = Field(400, ge=0)
    n_t: int = Field(700, ge=1)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def check_change_point(self) -> "GmmChangeSpec":
        if self.t0 > self.n_t:
            raise ValueError(f"t0 ({self.t0}) must not exceed n_t ({self.n_t})")
        return self

    @property
    def dim(self) -> int:
        return self.k

    @property
    def change_point(self) -> Optional[int]:
        return self.t0


StreamSpec = Annotated[
    Union[GaussianStreamSpec, GaussianChangeSpec, GmmChangeSpec],
    Field(discriminator="kind"),
]
