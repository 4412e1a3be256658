"""Truncated multimode Fock-space engine for down-converted mode pairs.

The engine works on amplitude tensors with one axis per mode and applies
ladder operators by slicing. Lossy states stay factored into blocks of
mode pairs, and rates combine per-block moments. ``oracle_expectation`` is
an independent sparse-matrix path on the full basis, kept as ground truth
for every rate computed here.
"""
import logging
import math
import warnings
from itertools import permutations
from typing import Iterator, List, Tuple, Union

import numpy as np
from scipy.special import comb

from sfg_sim.errors import DimensionOverflowError
from sfg_sim.models.schemas import AmplitudeLaw, DephasedRates, LossChannel
from sfg_sim.models.states import MAX_ENSEMBLE_ENTRIES, MixedState, MultimodeState
from sfg_sim.utils.operators import (
    NormalOrderedOperator,
    embedded_annihilator,
    mode_index,
    SIGNAL,
    IDLER,
)
from sfg_sim.utils.rng import substream

logger = logging.getLogger(__name__)

State = Union[MultimodeState, MixedState]

MAX_STATE_DIM = 1_000_000
MAX_ORACLE_DIM = 100_000
# relative size of the second singular value below which a cut is a product
PRODUCT_TOLERANCE = 1e-12
# n above which cutoff 2 drops noticeable weight
TRUNCATION_WARN_DENSITY = 0.3
DEPHASE_BATCH = 512


# -----------------------------
# State construction
# -----------------------------

def geometric_ratio(n: float, law: AmplitudeLaw) -> float:
    """λ² with c_{k+1}²/c_k² = λ² for the chosen amplitude law"""
    if law is AmplitudeLaw.FIRST_ORDER:
        return n
    return n / (1.0 + n)


def pair_amplitudes(n: float, cutoff: int, law: AmplitudeLaw = AmplitudeLaw.FIRST_ORDER) -> np.ndarray:
    """Unnormalized magnitudes c_0..c_cutoff of one mode pair"""
    k = np.arange(cutoff + 1, dtype=float)
    if law is AmplitudeLaw.FIRST_ORDER:
        return np.power(n, k / 2.0)
    return np.sqrt(np.power(n, k) / np.power(1.0 + n, k + 1.0))


def truncation_deficit(n: float, num_pairs: int, cutoff: int, law: AmplitudeLaw) -> float:
    """Weight the truncated product state misses relative to the untruncated one"""
    ratio = geometric_ratio(n, law)
    if ratio >= 1.0:
        return 1.0
    captured = 1.0 - ratio ** (cutoff + 1)
    return float(1.0 - captured**num_pairs)


def build_state(
    n: float,
    num_pairs: int,
    cutoff: int = 2,
    pump_phase: float = 0.0,
    law: AmplitudeLaw = AmplitudeLaw.FIRST_ORDER,
) -> MultimodeState:
    """Product over mode pairs of Σ_k c_k e^{ik(φ_p + π/2)} |k, k⟩, renormalized.

    At cutoff 1 each pair is M|0,0⟩ + √n e^{i(φ_p+π/2)}|1,1⟩ up to
    normalization; to first order in √n the product is the multimode
    superposition of single-pair excitations.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    if num_pairs < 1:
        raise ValueError("num_pairs must be at least 1")
    dim = (cutoff + 1) ** (2 * num_pairs)
    if dim > MAX_STATE_DIM:
        raise DimensionOverflowError(f"basis dimension {dim} exceeds {MAX_STATE_DIM}")
    if n > TRUNCATION_WARN_DENSITY and cutoff <= 2:
        warnings.warn(
            f"n={n} at cutoff {cutoff} truncates a noticeable part of the state",
            RuntimeWarning,
            stacklevel=2,
        )

    k = np.arange(cutoff + 1)
    phases = np.exp(1j * k * (pump_phase + np.pi / 2.0))
    pair = np.diag(pair_amplitudes(n, cutoff, law) * phases)

    tensor = pair
    for _ in range(num_pairs - 1):
        tensor = np.multiply.outer(tensor, pair)
    amplitudes = tensor.reshape(-1)
    amplitudes = amplitudes / np.linalg.norm(amplitudes)

    return MultimodeState(
        num_pairs=num_pairs,
        cutoff=cutoff,
        amplitudes=amplitudes,
        pump_phase=pump_phase,
        truncation_deficit=truncation_deficit(n, num_pairs, cutoff, law),
    )


# -----------------------------
# Ladder operators on amplitude tensors
# -----------------------------

def _block_tensors(state: State) -> List[Tuple[np.ndarray, int]]:
    """Each block's branches reshaped to (B, d, d, ..., d), with its pair count"""
    return [
        (block.reshape((-1,) + (state.local_dim,) * (2 * pairs)), pairs)
        for block, pairs in zip(state.blocks, state.block_pairs)
    ]


def _others(traces: List[float], *skip: int) -> float:
    """Product of the block traces not in ``skip``"""
    return math.prod(trace for index, trace in enumerate(traces) if index not in skip)


def _annihilate(tensor: np.ndarray, mode: int) -> np.ndarray:
    axis = mode + 1
    d = tensor.shape[axis]
    out = np.zeros_like(tensor)
    src = [slice(None)] * tensor.ndim
    dst = [slice(None)] * tensor.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(0, d - 1)
    shape = [1] * tensor.ndim
    shape[axis] = d - 1
    out[tuple(dst)] = tensor[tuple(src)] * np.sqrt(np.arange(1, d, dtype=float)).reshape(shape)
    return out


def _sfg_field(tensor: np.ndarray, num_pairs: int) -> np.ndarray:
    """A|ψ⟩ per branch"""
    total = np.zeros_like(tensor)
    for j in range(num_pairs):
        total += _annihilate(_annihilate(tensor, mode_index(j, IDLER)), mode_index(j, SIGNAL))
    return total


def _norm_squared(tensor: np.ndarray) -> float:
    return float(np.sum(np.abs(tensor) ** 2))


# -----------------------------
# Rates
# -----------------------------

def sfg_rate_correlated(state: State) -> float:
    """⟨A†A⟩ with A = Σ_j a_sj a_ij, in units of α·δ_p.

    Across blocks ⟨A_b† A_c⟩ = ⟨A_b⟩* ⟨A_c⟩, weighted by the other blocks' traces.
    """
    tensors = _block_tensors(state)
    traces = [_norm_squared(tensor) for tensor, _ in tensors]
    fields = [_sfg_field(tensor, pairs) for tensor, pairs in tensors]
    total = sum(_norm_squared(field) * _others(traces, b) for b, field in enumerate(fields))
    if len(tensors) > 1:
        amplitudes = [np.vdot(tensor.reshape(-1), field.reshape(-1)) for (tensor, _), field in zip(tensors, fields)]
        for b, c in permutations(range(len(tensors)), 2):
            total += (np.conj(amplitudes[b]) * amplitudes[c]).real * _others(traces, b, c)
    return float(total)


def sfg_amplitude(state: State) -> complex:
    """⟨A⟩ = Tr(ρA)"""
    tensors = _block_tensors(state)
    traces = [_norm_squared(tensor) for tensor, _ in tensors]
    total = 0j
    for b, (tensor, pairs) in enumerate(tensors):
        field = _sfg_field(tensor, pairs)
        total += np.vdot(tensor.reshape(-1), field.reshape(-1)) * _others(traces, b)
    return complex(total)


def sfg_rate_coherent(state: State) -> float:
    """|⟨A⟩|², the part of the correlated rate whose pair amplitudes add coherently"""
    return abs(sfg_amplitude(state)) ** 2


def sfg_rate_uncorrelated(state: State) -> float:
    """Σ_{j≠j'} ⟨a†_sj a†_ij' a_sj a_ij'⟩: up-conversion of photons from different pairs"""
    if state.num_pairs < 2:
        raise ValueError("uncorrelated SFG needs at least two mode pairs")
    tensors = _block_tensors(state)
    traces = [_norm_squared(tensor) for tensor, _ in tensors]
    within, signals, idlers = [], [], []
    for tensor, pairs in tensors:
        lowered = [_annihilate(tensor, mode_index(k, IDLER)) for k in range(pairs)]
        within.append(sum(
            _norm_squared(_annihilate(lowered[k], mode_index(j, SIGNAL)))
            for j in range(pairs) for k in range(pairs) if j != k
        ))
        signals.append(sum(_norm_squared(_annihilate(tensor, mode_index(j, SIGNAL))) for j in range(pairs)))
        idlers.append(sum(_norm_squared(idler) for idler in lowered))
    total = sum(value * _others(traces, b) for b, value in enumerate(within))
    for b, c in permutations(range(len(tensors)), 2):
        total += signals[b] * idlers[c] * _others(traces, b, c)
    return float(total)


# -----------------------------
# Loss
# -----------------------------

def _kraus_coefficients(transmissivity: float, cutoff: int, lost: int) -> np.ndarray:
    """⟨k−l|K_l|k⟩ for k = l..cutoff"""
    k = np.arange(lost, cutoff + 1)
    return np.sqrt(comb(k, lost) * transmissivity ** (k - lost) * (1.0 - transmissivity) ** lost)


def _apply_kraus(tensor: np.ndarray, mode: int, transmissivity: float, lost: int) -> np.ndarray:
    axis = mode + 1
    d = tensor.shape[axis]
    out = np.zeros_like(tensor)
    src = [slice(None)] * tensor.ndim
    dst = [slice(None)] * tensor.ndim
    src[axis] = slice(lost, d)
    dst[axis] = slice(0, d - lost)
    shape = [1] * tensor.ndim
    shape[axis] = d - lost
    coeffs = _kraus_coefficients(transmissivity, d - 1, lost).reshape(shape)
    out[tuple(dst)] = tensor[tuple(src)] * coeffs
    return out


def _pair_factors(state: MultimodeState) -> Iterator[Tuple[np.ndarray, int]]:
    """Split a pure state into consecutive pair blocks wherever a cut has Schmidt rank 1"""
    pair_dim = state.local_dim**2
    rest, remaining, width = state.amplitudes, state.num_pairs, 1
    while width < remaining:
        left, values, right = np.linalg.svd(rest.reshape(pair_dim**width, -1), full_matrices=False)
        if values[1] > PRODUCT_TOLERANCE * values[0]:
            width += 1
            continue
        yield left[:, 0] * values[0], width
        rest, remaining, width = right[0], remaining - width, 1
    yield rest, remaining


def apply_loss(state: State, channel: LossChannel) -> MixedState:
    """Beam-splitter loss of intensity transmissivity t on every mode.

    Exact Kraus sum over the number of photons lost per mode, applied inside
    each block of mode pairs; branches that vanish identically are dropped.
    Product states from ``build_state`` split into one block per pair, so
    the ensemble grows per pair and never over the whole basis.
    """
    t = channel.transmissivity
    if isinstance(state, MultimodeState):
        blocks = [(vector[None, :], pairs) for vector, pairs in _pair_factors(state)]
    else:
        blocks = list(zip(state.blocks, state.block_pairs))

    lossy = []
    for block, pairs in blocks:
        block_dim = block.shape[1]
        branches = block.reshape((-1,) + (state.local_dim,) * (2 * pairs))
        for mode in range(2 * pairs):
            # upper bound before any zero branch is pruned
            if t < 1.0 and branches.shape[0] * state.local_dim * block_dim > MAX_ENSEMBLE_ENTRIES:
                raise DimensionOverflowError(
                    f"loss ensemble would exceed {MAX_ENSEMBLE_ENTRIES} entries "
                    f"({branches.shape[0]} branches of dimension {block_dim} before mode {mode})"
                )
            outcomes = []
            for lost in range(state.local_dim):
                if lost > 0 and t == 1.0:
                    break
                branch = _apply_kraus(branches, mode, t, lost)
                keep = np.any(branch.reshape(branch.shape[0], -1) != 0, axis=1)
                if np.any(keep):
                    outcomes.append(branch[keep])
            branches = np.concatenate(outcomes, axis=0)
        lossy.append(branches.reshape(branches.shape[0], -1))
    logger.debug(f"Loss t={t}: branches per block {[block.shape[0] for block in lossy]}")
    return MixedState(cutoff=state.cutoff, blocks=tuple(lossy), pump_phase=state.pump_phase)


# -----------------------------
# Phase-randomized ensemble
# -----------------------------

def dephased_rates(state: MultimodeState, samples: int, seed: int) -> DephasedRates:
    """Rates averaged over independent uniform phases on every mode pair.

    Each sample rotates the signal mode of pair j by θ_j, so a basis vector
    picks up e^{i Σ_j k_sj θ_j}. Returns sample means and standard errors.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = substream(seed, "dephase")
    shape = (state.local_dim,) * state.num_modes
    occupations = np.indices(shape).reshape(state.num_modes, -1)
    signal_counts = occupations[0::2].T.astype(float)

    correlated = np.empty(samples)
    coherent = np.empty(samples)
    for start in range(0, samples, DEPHASE_BATCH):
        stop = min(start + DEPHASE_BATCH, samples)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=(stop - start, state.num_pairs))
        batch = np.exp(1j * theta @ signal_counts.T) * state.amplitudes[None, :]
        tensor = batch.reshape((-1,) + shape)
        field = _sfg_field(tensor, state.num_pairs).reshape(stop - start, -1)
        correlated[start:stop] = np.sum(np.abs(field) ** 2, axis=1)
        coherent[start:stop] = np.abs(np.sum(np.conj(batch) * field, axis=1)) ** 2

    def sem(values):
        return float(np.std(values, ddof=1) / np.sqrt(values.size))

    return DephasedRates(
        samples=samples,
        correlated_mean=float(np.mean(correlated)),
        correlated_sem=sem(correlated),
        coherent_mean=float(np.mean(coherent)),
        coherent_sem=sem(coherent),
    )


# -----------------------------
# Oracle
# -----------------------------

def oracle_expectation(state: State, operator: NormalOrderedOperator) -> complex:
    """Tr(ρ O) for a normally-ordered O by sparse matrices on the full basis.

    ⟨a†_c… a_a…⟩ is evaluated as ⟨(a_c…)ψ|(a_a…)ψ⟩, so only truncated
    annihilators are needed. Mixed states are expanded to dense branches
    chunk by chunk.
    """
    if state.dim > MAX_ORACLE_DIM:
        raise DimensionOverflowError(f"basis dimension {state.dim} exceeds {MAX_ORACLE_DIM}")
    if operator.max_mode >= state.num_modes:
        raise ValueError(f"operator acts on mode {operator.max_mode}, state has {state.num_modes}")

    def lower(vectors: np.ndarray, modes) -> np.ndarray:
        for mode in modes:
            vectors = embedded_annihilator(mode, state.num_modes, state.cutoff) @ vectors
        return vectors

    total = 0j
    for chunk in state.branch_chunks():
        vectors = chunk.T
        for term in operator.terms:
            left = lower(vectors, term.creators)
            right = lower(vectors, term.annihilators)
            total += term.coefficient * np.sum(np.conj(left) * right)
    return complex(total)
