import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables
load_dotenv()

# Get the project root directory
ROOT_DIR = Path(__file__).parent.parent.parent
RESULTS_DIR = ROOT_DIR / "results"


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="SFG_SIM_", env_file=".env", extra="ignore")

    # Engine parallelism (0 = one worker per CPU)
    THREADS: int = Field(default=0, ge=0)

    # Logging
    LOG_LEVEL: str = "WARNING"

    # Output settings
    OUTPUT_DIR: str = str(RESULTS_DIR)

    # Stream engine: expected pairs per generation shard. Shard geometry is
    # fixed by this value alone, so streams do not depend on THREADS.
    STREAM_SHARD_PAIRS: int = Field(default=200_000, ge=1)

    # Validation suite
    VALIDATE_SEEDS: int = Field(default=6, ge=2)

    def worker_count(self) -> int:
        """Resolved number of worker threads"""
        if self.THREADS > 0:
            return self.THREADS
        return os.cpu_count() or 1
