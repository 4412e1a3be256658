"""Array-backed simulation values: Fock-space states and photon event streams."""
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from sfg_sim.errors import DimensionOverflowError
from sfg_sim.models.schemas import OperatingPoint, SpectralConfig

# complex entries a dense ensemble may hold (branches × dim)
MAX_ENSEMBLE_ENTRIES = 10_000_000


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


# -----------------------------
# Fock space
# -----------------------------

@dataclass(frozen=True, eq=False)
class MultimodeState:
    """Pure state over N signal/idler mode pairs, truncated per mode.

    Modes are ordered (s1, i1, s2, i2, ...); amplitudes are dense over the
    mixed-radix basis of occupation tuples, most significant mode first.
    """

    num_pairs: int
    cutoff: int
    amplitudes: np.ndarray
    pump_phase: float = 0.0
    truncation_deficit: float = 0.0

    def __post_init__(self):
        if self.num_pairs < 1:
            raise ValueError("num_pairs must be at least 1")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.size != self.dim:
            raise ValueError(f"expected {self.dim} amplitudes, got {amplitudes.size}")
        object.__setattr__(self, "amplitudes", _frozen(amplitudes))

    @property
    def num_modes(self) -> int:
        return 2 * self.num_pairs

    @property
    def local_dim(self) -> int:
        return self.cutoff + 1

    @property
    def dim(self) -> int:
        return self.local_dim**self.num_modes

    @property
    def branches(self) -> np.ndarray:
        return self.amplitudes[None, :]

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def index_of(self, occupations: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occupations), (self.local_dim,) * self.num_modes))

    def amplitude(self, occupations: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.index_of(occupations)])

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.local_dim,) * self.num_modes)

    # one block over all pairs, so pure and mixed states share the rate code
    @property
    def blocks(self) -> Tuple[np.ndarray, ...]:
        return (self.branches,)

    @property
    def block_pairs(self) -> Tuple[int, ...]:
        return (self.num_pairs,)

    def branch_chunks(self, max_entries: int = MAX_ENSEMBLE_ENTRIES) -> Iterator[np.ndarray]:
        yield self.branches


@dataclass(frozen=True, eq=False)
class MixedState:
    """ρ = ⊗_b ρ_b over consecutive blocks of mode pairs.

    Each block ρ_b = Σ |v⟩⟨v| is an ensemble of unnormalized branches of
    shape (B_b, local_dim ** (2 · pairs_b)). ``branches`` expands the whole
    product densely; ``branch_chunks`` does so in bounded pieces.
    """

    cutoff: int
    blocks: Tuple[np.ndarray, ...]
    pump_phase: float = 0.0
    block_pairs: Tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        if not self.blocks:
            raise ValueError("a mixed state needs at least one block")
        pair_dim = (self.cutoff + 1) ** 2
        blocks, pairs = [], []
        for block in self.blocks:
            block = np.asarray(block, dtype=complex)
            if block.ndim != 2 or block.shape[0] < 1:
                raise ValueError("every block must have shape (B, dim) with B >= 1")
            count = 1
            while pair_dim**count < block.shape[1]:
                count += 1
            if pair_dim**count != block.shape[1]:
                raise ValueError(f"block dimension {block.shape[1]} is not a power of {pair_dim}")
            blocks.append(_frozen(block))
            pairs.append(count)
        object.__setattr__(self, "blocks", tuple(blocks))
        object.__setattr__(self, "block_pairs", tuple(pairs))

    @property
    def num_pairs(self) -> int:
        return sum(self.block_pairs)

    @property
    def num_modes(self) -> int:
        return 2 * self.num_pairs

    @property
    def local_dim(self) -> int:
        return self.cutoff + 1

    @property
    def dim(self) -> int:
        return self.local_dim**self.num_modes

    @property
    def num_branches(self) -> int:
        return math.prod(block.shape[0] for block in self.blocks)

    @property
    def trace(self) -> float:
        return math.prod(float(np.sum(np.abs(block) ** 2)) for block in self.blocks)

    def branch_chunks(self, max_entries: int = MAX_ENSEMBLE_ENTRIES) -> Iterator[np.ndarray]:
        """Dense product branches, at most ``max_entries`` complex entries at a time"""
        per_chunk = max(1, max_entries // self.dim)
        counts = tuple(block.shape[0] for block in self.blocks)
        total = self.num_branches
        for start in range(0, total, per_chunk):
            picks = np.unravel_index(np.arange(start, min(start + per_chunk, total)), counts)
            chunk = self.blocks[0][picks[0]]
            for block, pick in zip(self.blocks[1:], picks[1:]):
                chunk = (chunk[:, :, None] * block[pick][:, None, :]).reshape(chunk.shape[0], -1)
            yield chunk

    @property
    def branches(self) -> np.ndarray:
        if self.num_branches * self.dim > MAX_ENSEMBLE_ENTRIES:
            raise DimensionOverflowError(
                f"dense ensemble of {self.num_branches} branches of dimension {self.dim} "
                f"exceeds {MAX_ENSEMBLE_ENTRIES} entries"
            )
        return np.concatenate(list(self.branch_chunks()), axis=0)


# -----------------------------
# Photon event streams
# -----------------------------

class Channel(IntEnum):
    SIGNAL = 0
    IDLER = 1


class PhotonEvent(NamedTuple):
    time: float
    freq_offset: float
    channel: Channel
    pair_id: int


@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-sorted photon records stored column-wise"""

    time: np.ndarray
    freq_offset: np.ndarray
    channel: np.ndarray
    pair_id: np.ndarray
    config: SpectralConfig
    op: OperatingPoint
    seed: int
    duration: float
    parameters: Tuple[Tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        time = np.asarray(self.time, dtype=np.float64)
        columns = {
            "time": time,
            "freq_offset": np.asarray(self.freq_offset, dtype=np.float64),
            "channel": np.asarray(self.channel, dtype=np.int8),
            "pair_id": np.asarray(self.pair_id, dtype=np.int64),
        }
        if len({c.shape for c in columns.values()}) != 1 or time.ndim != 1:
            raise ValueError("event columns must be 1-D and of equal length")
        if time.size and np.any(np.diff(time) < 0):
            raise ValueError("events must be sorted by time")
        lineage = columns["pair_id"] * 2 + columns["channel"]
        if np.unique(lineage).size != lineage.size:
            raise ValueError("a pair_id may carry at most one signal and one idler photon")
        for name, column in columns.items():
            object.__setattr__(self, name, _frozen(column))

    def __len__(self) -> int:
        return int(self.time.size)

    def __iter__(self) -> Iterator[PhotonEvent]:
        for t, f, c, p in zip(self.time, self.freq_offset, self.channel, self.pair_id):
            yield PhotonEvent(float(t), float(f), Channel(int(c)), int(p))

    @property
    def signal_mask(self) -> np.ndarray:
        return self.channel == Channel.SIGNAL

    @property
    def idler_mask(self) -> np.ndarray:
        return self.channel == Channel.IDLER

    def select(self, mask: np.ndarray) -> "EventStream":
        """Sub-stream of the events where ``mask`` is true"""
        return EventStream(
            time=self.time[mask],
            freq_offset=self.freq_offset[mask],
            channel=self.channel[mask],
            pair_id=self.pair_id[mask],
            config=self.config,
            op=self.op,
            seed=self.seed,
            duration=self.duration,
            parameters=self.parameters,
        )

    @classmethod
    def from_events(
        cls,
        events: Iterable[PhotonEvent],
        config: SpectralConfig,
        op: Optional[OperatingPoint] = None,
        seed: int = 0,
        duration: float = 1.0,
    ) -> "EventStream":
        """Build a stream from individual events (sorted here by time)"""
        events = sorted(events, key=lambda e: e.time)
        columns = list(zip(*events)) if events else [(), (), (), ()]
        return cls(
            time=np.array(columns[0], dtype=np.float64),
            freq_offset=np.array(columns[1], dtype=np.float64),
            channel=np.array([int(c) for c in columns[2]], dtype=np.int8),
            pair_id=np.array(columns[3], dtype=np.int64),
            config=config,
            op=op if op is not None else OperatingPoint.from_density(config, 0.0),
            seed=seed,
            duration=duration,
        )
