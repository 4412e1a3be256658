import pytest

from sfg_sim.config.settings import Settings
from sfg_sim.models.schemas import SpectralConfig


@pytest.fixture
def reference_config() -> SpectralConfig:
    return SpectralConfig.reference()


@pytest.fixture
def desk_config(reference_config) -> SpectralConfig:
    """Reference bandwidth ratios at Δ_DC = 1 MHz"""
    return reference_config.scaled_to(1e6)


@pytest.fixture
def settings(tmp_path) -> Settings:
    return Settings(THREADS=2, LOG_LEVEL="WARNING", OUTPUT_DIR=str(tmp_path / "results"), VALIDATE_SEEDS=3)
