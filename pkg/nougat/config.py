# nougat/config.py
"""
Application Configuration
Uses pydantic-settings for environment variable management
"""

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Toolkit settings loaded from environment variables (prefix NOUGAT_)
    Create a .env file for local overrides
    """

    # === Application ===
    APP_NAME: str = "NOUGAT change-point toolkit"
    APP_VERSION: str = "0.1.0"
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # === Output ===
    FLOAT_DIGITS: int = 17  # significant digits, round-trips IEEE doubles

    # === Windows ===
    DRIFT_REPAIR_FACTOR: int = 10  # full recompute every factor * (N_ref + N_test) pushes

    # === Monte Carlo ===
    MC_WORKERS: int = 1
    MC_LOG_EVERY: int = 50
    MOMENT_MC_CHUNK: int = 20_000
    DEFAULT_SEED: int = 20_240_601

    # === k-NN ===
    KNN_TREE_MIN_POINTS: int = 512  # auto mode switches to the KD-tree above this pooled size

    model_config = SettingsConfigDict(
        env_prefix="NOUGAT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    @property
    def float_format(self) -> str:
        """Format spec for CSV floats"""
        return f".{self.FLOAT_DIGITS}g"


@lru_cache()
def get_settings() -> Settings:
    """
    Cached settings instance
    Use this to get settings throughout the package
    """
    return Settings()


settings = get_settings()
