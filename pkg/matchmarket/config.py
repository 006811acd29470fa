"""
Configuration settings for the matching market simulator.
"""

from functools import lru_cache
from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables (prefix ``MATCHMARKET_``)."""

    model_config = SettingsConfigDict(
        env_prefix="MATCHMARKET_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Settings
    app_name: str = Field(default="Matching Market Simulator")
    app_version: str = Field(default="1.0.0")

    # Logging
    log_level: str = Field(default="INFO")
    log_format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    # Execution
    max_workers: int = Field(default=1, ge=1, description="Replication pool size")
    trace_float_format: str = Field(default="%.10g")
    checkpoint_count: int = Field(default=60, ge=2)
    burn_in_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)

    # Estimation
    singular_tolerance: float = Field(default=1e-10, gt=0.0)

    # Validation
    spectral_sample_cap: int = Field(default=4096, ge=1)

    # Change detection
    cd_threshold_scale: float = Field(default=4.0, gt=0.0)
    cd_rate_scale: float = Field(default=1.0, gt=0.0)
    cd_drift: float = Field(default=0.1, ge=0.0)
    cd_warmup: Optional[int] = Field(default=None, ge=1)
    cd_reference_mode: Literal["frozen", "rolling"] = Field(default="frozen")


@lru_cache
def get_settings() -> Settings:
    """Return the process-wide settings instance."""
    return Settings()


# Global settings instance
settings = get_settings()
