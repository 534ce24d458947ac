# nougat/schemas/kernel.py
"""
Kernel, dictionary and window parameter schemas
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class KernelParams(BaseModel):
    """Gaussian kernel bandwidth"""
    sigma: float = Field(..., gt=0, description="Kernel bandwidth", examples=[0.25])

    model_config = ConfigDict(frozen=True)


class DictionaryConfig(BaseModel):
    """
    How the dictionary is obtained

    With no path the dictionary is built online by the coherence rule,
    seeded by the first sample of the stream.
    """
    eta0: float = Field(0.7, gt=0, le=1, description="Coherence threshold")
    max_size: Optional[int] = Field(None, ge=1, description="Optional cap on the number of atoms")
    path: Optional[str] = Field(None, description="CSV file to load a fixed dictionary from")
    save_path: Optional[str] = Field(None, description="CSV file the final dictionary is written to")
    size: int = Field(16, ge=1, description="Atoms drawn for a pre-tuned dictionary (theory and mc)")
    seed: Optional[int] = Field(None, description="Seed for the pre-tuned dictionary draw")


class WindowConfig(BaseModel):
    """Reference and test window lengths"""
    n_ref: int = Field(..., ge=1, description="Reference window length", examples=[250])
    n_test: int = Field(..., ge=1, description="Test window length", examples=[250])

    model_config = ConfigDict(frozen=True)

    @property
    def total(self) -> int:
        """Samples buffered once warm"""
        return self.n_ref + self.n_test
