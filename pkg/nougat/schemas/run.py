# nougat/schemas/run.py
"""
Top-level run configuration

One JSON file validated by RunConfig drives every subcommand; CLI flags
are applied on top before validation.
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from .detectors import DetectorName, DetectorSuite
from .gaussian import GaussianSpec
from .kernel import DictionaryConfig, KernelParams, WindowConfig
from .simulation import GaussianStreamSpec, GmmChangeSpec, StreamSpec


class TheoryConfig(BaseModel):
    """Analytical mean/variance run"""
    horizon: int = Field(30_000, ge=1, description="Number of theory steps")
    pre: GaussianSpec = Field(default_factory=lambda: GaussianSpec.from_std_corr(2, std=0.5, corr=0.25))
    post: Optional[GaussianSpec] = Field(None, description="Post-change distribution; None runs the null model")
    t0: Optional[int] = Field(None, ge=0, description="Stream index of the first post-change sample")
    neglect_mean: bool = Field(False, description="Drop the weight mean from the null covariance recursion")
    moments: Literal["closed_form", "monte_carlo"] = "closed_form"
    mc_samples: int = Field(200_000, ge=100, description="Samples for Monte Carlo moments")
    step_sizes: List[float] = Field(default_factory=list, description="Step sizes for the steady-state variance sweep")
    sweep_path: Optional[str] = Field(None, description="CSV file for the step-size sweep")
    target_pfa: Optional[float] = Field(None, gt=0, lt=1, description="Report the Gaussian threshold for this per-step PFA")

    @model_validator(mode="after")
    def check_change(self) -> "TheoryConfig":
        if self.post is not None:
            if self.t0 is None:
                raise ValueError("t0 is required when a post-change distribution is given")
            if self.post.dim != self.pre.dim:
                raise ValueError(f"pre and post dimensions differ: {self.pre.dim} vs {self.post.dim}")
        if any(mu <= 0 for mu in self.step_sizes):
            raise ValueError("step_sizes must be positive")
        return self


class McConfig(BaseModel):
    """Monte Carlo campaign"""
    n_runs: int = Field(500, ge=2)
    stream: StreamSpec = Field(default_factory=GaussianStreamSpec)
    workers: Optional[int] = Field(None, ge=1, description="Process workers; None uses settings")
    keep_traces: bool = Field(False, description="Keep per-run statistic traces (needed for ROC)")
    online_dictionary: bool = Field(False, description="Grow each run's dictionary by the coherence rule instead of a pre-tuned draw")
    table_path: Optional[str] = Field(None, description="Operating-characteristic CSV (change streams only)")
    n_thresholds: int = Field(50, ge=2)
    histogram_path: Optional[str] = Field(None, description="Histogram CSV of the pre-change statistic samples")
    histogram_bins: int = Field(50, ge=2)


class BenchConfig(BaseModel):
    """Runtime benchmark"""
    dictionary_sizes: List[int] = Field(default_factory=lambda: [10, 20, 40, 80], min_length=1)
    repetitions: int = Field(5, ge=3)
    stream: GmmChangeSpec = Field(default_factory=GmmChangeSpec)

    @model_validator(mode="after")
    def check_sizes(self) -> "BenchConfig":
        if any(size < 1 for size in self.dictionary_sizes):
            raise ValueError("dictionary_sizes must be positive")
        return self


class RunConfig(BaseModel):
    """
    Complete parameter set of one invocation

    Every domain constraint is enforced here so nothing is read or
    computed with an invalid configuration.
    """
    command: Literal["detect", "theory", "mc", "bench"] = "detect"
    kernel: KernelParams = Field(default_factory=lambda: KernelParams(sigma=0.25))
    windows: WindowConfig = Field(default_factory=lambda: WindowConfig(n_ref=250, n_test=250))
    dictionary: DictionaryConfig = Field(default_factory=DictionaryConfig)
    detectors: DetectorSuite = Field(default_factory=DetectorSuite)
    embed_k: int = Field(1, ge=1, description="Time-delay embedding dimension for scalar series")
    seed: Optional[int] = None
    input: Optional[str] = None
    output: Optional[str] = None
    theory: TheoryConfig = Field(default_factory=TheoryConfig)
    mc: McConfig = Field(default_factory=McConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)

    @model_validator(mode="after")
    def check_cross_fields(self) -> "RunConfig":
        knn = self.detectors.knn
        if knn.enabled and knn.k_neighbors >= self.windows.total:
            raise ValueError(
                f"k_neighbors ({knn.k_neighbors}) must be smaller than n_ref + n_test ({self.windows.total})"
            )
        return self

    @property
    def enabled_detectors(self) -> List[DetectorName]:
        return self.detectors.enabled_names()
