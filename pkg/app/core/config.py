"""Process configuration from environment."""
from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from env / .env (prefix COOPGRASP_)."""

    model_config = SettingsConfigDict(
        env_prefix="COOPGRASP_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    app_name: str = "Cooperative Grasp Simulator"

    # Default root for run directories when a config or --out gives none
    output_root: Path = Path("runs")

    log_level: str = "INFO"

    # Bound of the worker pool used by sweep and multi-seed training
    max_workers: int = 4


@lru_cache
def get_settings() -> Settings:
    return Settings()

