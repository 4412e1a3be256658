"""Named, counter-based random substreams derived from one master seed.

Each stage of a simulation (generation shard, thinning, conversion,
detection...) draws from its own Philox stream keyed by
(master seed, stage name, indices). Changing how much one stage draws never
shifts another stage's numbers, and a shard's numbers do not depend on
which thread runs it.
"""
import hashlib
from typing import Tuple

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

MAX_SEED = 2**64 - 1


def stage_key(stage: str) -> int:
    """Stable 32-bit key for a stage name (independent of PYTHONHASHSEED)"""
    digest = hashlib.sha256(stage.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def _seed_sequence(seed: int, stage: str, indices: Tuple[int, ...]) -> SeedSequence:
    if seed < 0 or seed > MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return SeedSequence(entropy=seed, spawn_key=(stage_key(stage), *indices))


def substream(seed: int, stage: str, *indices: int) -> Generator:
    """Generator for one named stage of the simulation"""
    return Generator(Philox(_seed_sequence(seed, stage, indices)))


def derive_seed(seed: int, stage: str, *indices: int) -> int:
    """Child master seed for nested runs (e.g. one per sweep point)"""
    state = _seed_sequence(seed, stage, indices).generate_state(1, dtype=np.uint64)
    return int(state[0])
