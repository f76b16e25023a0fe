# app/core/config.py
"""Runtime settings read from the environment (and a local .env file)."""

import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent


class Settings(BaseModel):
    threads: int = Field(default=1, ge=1, description="cap on joblib workers")
    log_level: str = "INFO"
    output_dir: Path = Path("results")

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {value!r}")
        return level

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        return cls(
            threads=os.getenv("ANONDET_THREADS", "1"),
            log_level=os.getenv("ANONDET_LOG_LEVEL", "INFO"),
            output_dir=os.getenv("ANONDET_OUTPUT_DIR", "results"),
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.from_env()
