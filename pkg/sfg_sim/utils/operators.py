"""Symbolic normally-ordered ladder operators and their sparse matrices.

Modes are numbered 2j (signal of pair j) and 2j + 1 (idler of pair j),
pairs counted from 0. The matrices act on the mixed-radix basis used by
``MultimodeState`` (mode 0 most significant).
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
import scipy.sparse as sp

SIGNAL = 0
IDLER = 1


def mode_index(pair: int, channel: int) -> int:
    if pair < 0 or channel not in (SIGNAL, IDLER):
        raise ValueError(f"invalid mode (pair={pair}, channel={channel})")
    return 2 * pair + channel


@dataclass(frozen=True)
class LadderTerm:
    """coefficient · a†_{c1} … a†_{ck} a_{a1} … a_{al}"""

    coefficient: complex
    creators: Tuple[int, ...] = ()
    annihilators: Tuple[int, ...] = ()

    @property
    def modes(self) -> Tuple[int, ...]:
        return self.creators + self.annihilators


@dataclass(frozen=True)
class NormalOrderedOperator:
    terms: Tuple[LadderTerm, ...]

    def __add__(self, other: "NormalOrderedOperator") -> "NormalOrderedOperator":
        return NormalOrderedOperator(self.terms + other.terms)

    def scaled(self, factor: complex) -> "NormalOrderedOperator":
        return NormalOrderedOperator(
            tuple(LadderTerm(t.coefficient * factor, t.creators, t.annihilators) for t in self.terms)
        )

    @property
    def max_mode(self) -> int:
        return max((max(t.modes) for t in self.terms if t.modes), default=-1)


def number_operator(mode: int) -> NormalOrderedOperator:
    return NormalOrderedOperator((LadderTerm(1.0, (mode,), (mode,)),))


def pair_number_product(pair: int) -> NormalOrderedOperator:
    """n_s n_i = a†_s a†_i a_s a_i for one mode pair"""
    s, i = mode_index(pair, SIGNAL), mode_index(pair, IDLER)
    return NormalOrderedOperator((LadderTerm(1.0, (s, i), (s, i)),))


def sfg_amplitude_operator(num_pairs: int) -> NormalOrderedOperator:
    """A = Σ_j a_sj a_ij, the sum-frequency field into the pump mode"""
    return NormalOrderedOperator(
        tuple(
            LadderTerm(1.0, (), (mode_index(j, SIGNAL), mode_index(j, IDLER)))
            for j in range(num_pairs)
        )
    )


def sfg_correlated_operator(num_pairs: int) -> NormalOrderedOperator:
    """A†A = Σ_{j,j'} a†_ij a†_sj a_sj' a_ij'"""
    terms = []
    for j in range(num_pairs):
        for k in range(num_pairs):
            terms.append(
                LadderTerm(
                    1.0,
                    (mode_index(j, IDLER), mode_index(j, SIGNAL)),
                    (mode_index(k, SIGNAL), mode_index(k, IDLER)),
                )
            )
    return NormalOrderedOperator(tuple(terms))


def sfg_uncorrelated_operator(num_pairs: int) -> NormalOrderedOperator:
    """Σ_{j≠j'} a†_sj a†_ij' a_sj a_ij'"""
    terms = []
    for j in range(num_pairs):
        for k in range(num_pairs):
            if j == k:
                continue
            s, i = mode_index(j, SIGNAL), mode_index(k, IDLER)
            terms.append(LadderTerm(1.0, (s, i), (s, i)))
    return NormalOrderedOperator(tuple(terms))


@lru_cache(maxsize=64)
def single_mode_annihilator(cutoff: int) -> sp.csr_matrix:
    """Truncated a with a|k⟩ = √k |k−1⟩ on occupations 0..cutoff"""
    return sp.diags(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), offsets=1, format="csr")


@lru_cache(maxsize=256)
def embedded_annihilator(mode: int, num_modes: int, cutoff: int) -> sp.csr_matrix:
    """a_mode acting on the full num_modes-mode truncated space"""
    d = cutoff + 1
    left = sp.identity(d**mode, format="csr")
    right = sp.identity(d ** (num_modes - mode - 1), format="csr")
    return sp.kron(sp.kron(left, single_mode_annihilator(cutoff)), right, format="csr")
