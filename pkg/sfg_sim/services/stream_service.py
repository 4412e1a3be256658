"""Monte Carlo photon-pair streams, attenuation, coincidence SFG and detection.

Runs at desk-scale bandwidths (Δ_DC ~ 1e6 Hz) with every bandwidth ratio
and n preserved, so event counts stay tractable while the dimensionless
rate laws carry over.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np
from scipy.special import erf

from sfg_sim.models.schemas import (
    AcceptanceMode,
    DetectionResult,
    DetectorModel,
    ExpectedCounts,
    OperatingPoint,
    SfgCounts,
    SpectralConfig,
    SpectralShape,
)
from sfg_sim.models.states import Channel, EventStream
from sfg_sim.utils.rng import substream

logger = logging.getLogger(__name__)

MAX_STREAM_PAIRS = 50_000_000
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


# -----------------------------
# Spectral shapes
# -----------------------------

def sample_offsets(rng: np.random.Generator, count: int, config: SpectralConfig, shape: SpectralShape) -> np.ndarray:
    """Signal detunings from band centre; FWHM (or full width) Δ_DC"""
    if shape is SpectralShape.FLAT:
        half = config.dc_bandwidth / 2.0
        return rng.uniform(-half, half, count)
    return rng.normal(0.0, config.dc_bandwidth * FWHM_TO_SIGMA, count)


def accidental_acceptance(config: SpectralConfig, shape: SpectralShape = SpectralShape.FLAT) -> float:
    """Probability that two independent photons sum to within ±δ_UC/2 of the pump.

    The sum of two independent detunings is spread over ~2Δ_DC: a triangle
    for the flat spectrum, a Gaussian of width √2σ for the Gaussian one.
    Pump jitter (δ_p ≪ Δ_DC) is neglected.
    """
    half_window = config.uc_bandwidth / 2.0
    if shape is SpectralShape.FLAT:
        x = min(half_window / config.dc_bandwidth, 1.0)
        return 1.0 - (1.0 - x) ** 2
    sigma = config.dc_bandwidth * FWHM_TO_SIGMA
    return float(erf(half_window / (2.0 * sigma)))


# -----------------------------
# Generation
# -----------------------------

def _generate_shard(
    index: int,
    shard_length: float,
    pair_rate: float,
    config: SpectralConfig,
    seed: int,
    shape: SpectralShape,
) -> Tuple[np.ndarray, ...]:
    rng = substream(seed, "generate", index)
    count = int(rng.poisson(pair_rate * shard_length))
    created = index * shard_length + np.sort(rng.uniform(0.0, shard_length, count))
    signal_freq = sample_offsets(rng, count, config, shape)
    jitter = rng.uniform(-config.pump_bandwidth / 2.0, config.pump_bandwidth / 2.0, count)
    delay = rng.normal(0.0, config.coherence_time, count)
    return created, created + delay, signal_freq, -signal_freq + jitter


def generate_stream(
    config: SpectralConfig,
    op: OperatingPoint,
    duration: float,
    seed: int,
    shape: SpectralShape = SpectralShape.FLAT,
    shard_pairs: int = 200_000,
    threads: int = 1,
) -> EventStream:
    """Poisson stream of photon pairs at Φ/2 = n·Δ_DC/2 pairs per second.

    The run is split into shards of ~``shard_pairs`` expected pairs, each
    drawn from its own substream, so the result is identical for any
    ``threads``.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    pair_rate = op.pair_rate
    expected = pair_rate * duration
    if expected > MAX_STREAM_PAIRS:
        raise ValueError(
            f"{expected:.3g} expected pairs exceeds {MAX_STREAM_PAIRS}; use a desk-scale dc_bandwidth"
        )
    num_shards = max(1, math.ceil(expected / shard_pairs))
    shard_length = duration / num_shards
    logger.info(f"Generating {expected:.0f} expected pairs in {num_shards} shards (seed {seed})")

    def run(index):
        return _generate_shard(index, shard_length, pair_rate, config, seed, shape)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        shards = list(pool.map(run, range(num_shards)))

    signal_time, idler_time, signal_freq, idler_freq = (
        np.concatenate([shard[k] for shard in shards]) for k in range(4)
    )
    pairs = signal_time.size
    pair_ids = np.arange(pairs, dtype=np.int64)

    time = np.concatenate([signal_time, idler_time])
    order = np.argsort(time, kind="stable")
    stream = EventStream(
        time=time[order],
        freq_offset=np.concatenate([signal_freq, idler_freq])[order],
        channel=np.concatenate(
            [np.full(pairs, Channel.SIGNAL, np.int8), np.full(pairs, Channel.IDLER, np.int8)]
        )[order],
        pair_id=np.concatenate([pair_ids, pair_ids])[order],
        config=config,
        op=op,
        seed=seed,
        duration=duration,
        parameters=(("shape", shape.value), ("shard_pairs", str(shard_pairs))),
    )
    logger.info(f"Generated {pairs} pairs")
    return stream


def attenuate_stream(stream: EventStream, t: float, seed: int) -> EventStream:
    """Keep each photon independently with probability t.

    Repeated attenuation records the overall transmission as one parameter.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmission must be in [0, 1], got {t}")
    rng = substream(seed, "attenuate")
    keep = rng.random(len(stream)) < t
    thinned = stream.select(keep)
    params = dict(thinned.parameters)
    total = t * float(params.pop("transmission", "1.0"))
    return replace(thinned, parameters=tuple(params.items()) + (("transmission", repr(total)),))


# -----------------------------
# Coincidences and conversion
# -----------------------------

def _cross_coincidences(stream: EventStream, window: float) -> Tuple[np.ndarray, np.ndarray]:
    """Indices (signal, idler) of photon pairs from different pairs with |Δt| ≤ window"""
    signals = np.flatnonzero(stream.signal_mask)
    idlers = np.flatnonzero(stream.idler_mask)
    idler_time = stream.time[idlers]
    signal_time = stream.time[signals]
    lo = np.searchsorted(idler_time, signal_time - window, side="left")
    hi = np.searchsorted(idler_time, signal_time + window, side="right")
    counts = hi - lo
    total = int(counts.sum())
    starts = np.cumsum(counts) - counts
    offsets = np.arange(total) - np.repeat(starts, counts)
    signal_idx = np.repeat(signals, counts)
    idler_idx = idlers[np.repeat(lo, counts) + offsets]
    cross = stream.pair_id[signal_idx] != stream.pair_id[idler_idx]
    return signal_idx[cross], idler_idx[cross]


def count_intact_pairs(stream: EventStream) -> int:
    signal_ids = stream.pair_id[stream.signal_mask]
    idler_ids = stream.pair_id[stream.idler_mask]
    return int(np.intersect1d(signal_ids, idler_ids, assume_unique=True).size)


def count_sfg(
    stream: EventStream,
    config: SpectralConfig,
    conv_prob: float,
    seed: Optional[int] = None,
    acceptance: AcceptanceMode = AcceptanceMode.ANALYTIC,
    shape: SpectralShape = SpectralShape.FLAT,
) -> SfgCounts:
    """Count SFG events from signal–idler coincidences.

    Intact pairs convert with probability ``conv_prob`` straight back to the
    pump frequency whatever their delay, so the window applies only across
    pairs. Photons from different pairs within w = 1/Δ_DC of each other
    convert twice over: into the pump band through the phase-correlated
    (classical) part of the fields, and into the broadband sum spectrum,
    where only the share inside δ_UC is counted as accidental.
    """
    if not 0.0 < conv_prob <= 1.0:
        raise ValueError(f"conv_prob must be in (0, 1], got {conv_prob}")
    seed = stream.seed if seed is None else seed
    window = 1.0 / config.dc_bandwidth

    intact = count_intact_pairs(stream)
    signal_idx, idler_idx = _cross_coincidences(stream, window)
    cross = int(signal_idx.size)

    rng = substream(seed, "convert")
    paired = int(rng.binomial(intact, conv_prob))
    coherent_cross = int(rng.binomial(cross, conv_prob))
    if acceptance is AcceptanceMode.ANALYTIC:
        accidental = int(rng.binomial(cross, conv_prob * accidental_acceptance(config, shape)))
    else:
        converted = rng.random(cross) < conv_prob
        total_freq = stream.freq_offset[signal_idx] + stream.freq_offset[idler_idx]
        accidental = int(np.count_nonzero(converted & (np.abs(total_freq) <= config.uc_bandwidth / 2.0)))

    logger.debug(f"SFG counts: intact={intact} cross={cross} paired={paired} accidental={accidental}")
    return SfgCounts(
        paired=paired,
        coherent_cross=coherent_cross,
        accidental=accidental,
        intact_pairs=intact,
        cross_coincidences=cross,
    )


def expected_counts(
    config: SpectralConfig,
    op: OperatingPoint,
    conv_prob: float,
    duration: float,
    transmission: float = 1.0,
    shape: SpectralShape = SpectralShape.FLAT,
) -> ExpectedCounts:
    """Mean of each ``count_sfg`` channel.

    With signal and idler rates r = t·n·Δ_DC/2 the cross-pair coincidence
    rate is r²·2w = t²n²Δ_DC/2, so paired + coherent equals
    (conv/2)·Δ_DC·(n + n²)·t², the correlated rate law with α = conv/2.
    """
    pair_rate = op.pair_rate
    paired = conv_prob * transmission**2 * pair_rate * duration
    cross = (transmission * pair_rate) ** 2 * (2.0 / config.dc_bandwidth) * duration
    return ExpectedCounts(
        paired=paired,
        coherent_cross=conv_prob * cross,
        accidental=conv_prob * cross * accidental_acceptance(config, shape),
    )


# -----------------------------
# Detection
# -----------------------------

def detect(sfg_rate: float, model: DetectorModel, seed: int) -> DetectionResult:
    """Poisson photo-counts with collection efficiency and dark counts; dark level subtracted"""
    if sfg_rate < 0:
        raise ValueError("sfg_rate must be non-negative")
    rng = substream(seed, "detect")
    dark = model.dark_rate * model.integration_time
    mean = model.collection_efficiency * sfg_rate * model.integration_time + dark
    raw = int(rng.poisson(mean))
    return DetectionResult(
        raw_counts=raw,
        dark_subtracted=raw - dark,
        integration_time=model.integration_time,
    )
