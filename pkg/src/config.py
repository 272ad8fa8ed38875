"""Configuration management for the top-view fisheye renderer."""

import os
from dataclasses import dataclass
from pathlib import Path


@dataclass
class AppConfig:
    """Application configuration with environment variable support."""

    # Dataset root for configs that set no output_dir
    output_dir: str = "topview_output"

    # Parallel rendering
    workers: int = 0  # 0 = all available cores
    rows_per_task: int = 8

    # Logging
    log_level: str = "INFO"
    log_format: str = (
        "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"
    )

    def __post_init__(self) -> None:
        """Load values from environment variables after initialization."""
        self.output_dir = os.getenv("TOPVIEW_OUTPUT_DIR", self.output_dir)

        self.workers = int(os.getenv("TOPVIEW_WORKERS", self.workers))
        self.rows_per_task = int(os.getenv("TOPVIEW_ROWS_PER_TASK", self.rows_per_task))

        # Logging
        self.log_level = os.getenv("TOPVIEW_LOG_LEVEL", self.log_level).upper()
        self.log_format = os.getenv("TOPVIEW_LOG_FORMAT", self.log_format)

    @property
    def effective_workers(self) -> int:
        """Worker count with 0 resolved to the available parallelism."""
        if self.workers > 0:
            return self.workers
        return os.cpu_count() or 1

    def ensure_directories(self) -> None:
        """Create the output directory if it doesn't exist."""
        Path(self.output_dir).mkdir(parents=True, exist_ok=True)


# Global config instance
_config: AppConfig | None = None


def get_config() -> AppConfig:
    """Get or create the global configuration instance."""
    global _config
    if _config is None:
        _config = AppConfig()
    return _config


def reset_config() -> None:
    """Reset the global config (useful for testing)."""
    global _config
    _config = None
