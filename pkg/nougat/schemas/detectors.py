# nougat/schemas/detectors.py
"""
Detector parameter schemas
"""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class AlarmRule(str, Enum):
    """How a statistic is turned into an alarm score (alarm iff score > xi)"""
    ABS_SHIFT = "abs_shift"   # |g + 1|, density ratio estimate vs 1
    TWO_SIDED = "two_sided"   # |g|
    UPPER = "upper"           # g
    LOWER = "lower"           # -g


class DetectorName(str, Enum):
    """Detectors available to the pipeline, in output column order"""
    NOUGAT = "nougat"
    DRULSIF = "drulsif"
    MA = "ma"
    GMA = "gma"
    KNN = "knn"


class KnnSearch(str, Enum):
    """Neighbor search strategy for the k-NN baseline"""
    AUTO = "auto"
    BRUTE = "brute"
    TREE = "tree"


class NougatConfig(BaseModel):
    """Online gradient detector"""
    enabled: bool = True
    mu: float = Field(5e-4, gt=0, description="Step size")
    nu: float = Field(1e-3, ge=0, description="Ridge regularization")
    xi: float = Field(1.5, ge=0, description="Detection threshold")
    rule: AlarmRule = AlarmRule.ABS_SHIFT
    theta0: Optional[List[float]] = Field(
        None,
        description="Initial weights; a single value is broadcast to every atom, None means zeros",
    )


class DrulsifConfig(BaseModel):
    """Exact windowed density-ratio solver"""
    enabled: bool = False
    nu: float = Field(1e-2, ge=0, description="Ridge regularization")
    xi: float = Field(1.5, ge=0)
    rule: AlarmRule = AlarmRule.ABS_SHIFT


class MaConfig(BaseModel):
    """Two-window feature mean distance"""
    enabled: bool = False
    xi: float = Field(0.1, ge=0)
    rule: AlarmRule = AlarmRule.UPPER


class GmaConfig(BaseModel):
    """Geometric moving average of the feature map"""
    enabled: bool = False
    alpha: float = Field(0.05, gt=0, le=1, description="Forgetting factor")
    xi: float = Field(0.1, ge=0)
    rule: AlarmRule = AlarmRule.UPPER
    nominal: Optional[List[float]] = Field(
        None,
        description="Nominal feature mean; None freezes the mean of the first full buffer",
    )


class KnnConfig(BaseModel):
    """k-nearest-neighbor two-sample statistic, reported as the cross-edge deficit"""
    enabled: bool = False
    k_neighbors: int = Field(10, ge=1)
    xi: float = Field(5.0, ge=0)
    rule: AlarmRule = AlarmRule.UPPER
    search: KnnSearch = KnnSearch.AUTO


class DetectorSuite(BaseModel):
    """Detectors sharing one pair of windows"""
    nougat: NougatConfig = Field(default_factory=NougatConfig)
    drulsif: DrulsifConfig = Field(default_factory=DrulsifConfig)
    ma: MaConfig = Field(default_factory=MaConfig)
    gma: GmaConfig = Field(default_factory=GmaConfig)
    knn: KnnConfig = Field(default_factory=KnnConfig)

    @model_validator(mode="after")
    def at_least_one(self) -> "DetectorSuite":
        if not self.enabled_names():
            raise ValueError("At least one detector must be enabled")
        return self

    def enabled_names(self) -> List[DetectorName]:
        """Enabled detectors in output column order"""
        return [name for name in DetectorName if getattr(self, name.value).enabled]

    def only(self, names: List[str]) -> "DetectorSuite":
        """Copy with exactly the given detectors enabled"""
        wanted = {DetectorName(n) for n in names}
        updates = {
            name.value: getattr(self, name.value).model_copy(update={"enabled": name in wanted})
            for name in DetectorName
        }
        return self.model_copy(update=updates)
