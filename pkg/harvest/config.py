# harvest/config.py
from __future__ import annotations

import os

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Numerical and runtime defaults, overridable through `HARVEST_*` variables
    (environment or a `.env` in the working directory). Unrelated keys are ignored.
    """

    model_config = SettingsConfigDict(
        env_prefix="HARVEST_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ─── Runtime ──────────────────────────────────────────────────────────────
    LOG_LEVEL: str = "warning"
    PROGRESS: bool = True
    JOBS: int | None = None  # None -> os.cpu_count()

    # ─── Tolerances ───────────────────────────────────────────────────────────
    TOL: float = 1e-9  # outer integrals and reported observables
    INNER_TOL: float = 1e-10  # x-tilde integrals at fixed y-tilde

    # ─── Physics dispatch ─────────────────────────────────────────────────────
    # Below this a*sigma the accelerated formulas fall back to the rest closed forms.
    A_MIN: float = 1e-6

    # ─── L_max search ─────────────────────────────────────────────────────────
    L_LO: float = 0.05
    L_HI: float = 12.0
    LMAX_SCAN_POINTS: int = 80
    LMAX_SCAN_MAX: int = 640
    LMAX_BRACKET: float = 1e-4

    def default_jobs(self) -> int:
        """Worker count used when no --jobs flag is given."""
        if self.JOBS and self.JOBS > 0:
            return int(self.JOBS)
        return os.cpu_count() or 1


# Singleton settings instance
settings = Settings()
