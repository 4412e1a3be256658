import numpy as np
import pytest

from sfg_sim.config.settings import Settings
from sfg_sim.utils.rng import derive_seed, stage_key, substream


def test_stage_key_is_stable():
    assert stage_key("generate") == stage_key("generate")
    assert stage_key("generate") != stage_key("convert")


def test_substreams_are_reproducible_and_distinct():
    first = substream(42, "generate", 0).random(5)
    np.testing.assert_array_equal(first, substream(42, "generate", 0).random(5))
    assert not np.array_equal(first, substream(42, "generate", 1).random(5))
    assert not np.array_equal(first, substream(43, "generate", 0).random(5))


def test_derive_seed_range():
    seed = derive_seed(2**64 - 1, "sweep", 3)
    assert 0 <= seed < 2**64
    assert seed == derive_seed(2**64 - 1, "sweep", 3)


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_bounds(seed):
    with pytest.raises(ValueError):
        substream(seed, "generate")


def test_worker_count():
    assert Settings(THREADS=3).worker_count() == 3
    assert Settings(THREADS=0).worker_count() >= 1
