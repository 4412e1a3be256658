"""Unit tests for the truncated Fock-space engine and its sparse-matrix oracle"""
import numpy as np
import pytest

from sfg_sim.errors import DimensionOverflowError
from sfg_sim.models.schemas import AmplitudeLaw, LossChannel
from sfg_sim.models.states import MAX_ENSEMBLE_ENTRIES, MultimodeState
from sfg_sim.services import fock_service as fock
from sfg_sim.utils.operators import (
    number_operator,
    pair_number_product,
    sfg_amplitude_operator,
    sfg_correlated_operator,
    sfg_uncorrelated_operator,
)

PAIRS = [1, 2, 3, 4]


def truncated_thermal_moment(n, cutoff):
    """⟨n_s n_i⟩ of a two-mode squeezed state cut at ``cutoff`` and renormalized"""
    k = np.arange(cutoff + 1)
    weights = (n / (1 + n)) ** k
    return float(np.sum(k**2 * weights) / np.sum(weights))


class TestBuildState:
    def test_single_pair_first_order(self):
        n = 0.04
        state = fock.build_state(n, 1, 1)
        assert state.norm_squared == pytest.approx(1.0, abs=1e-14)
        assert state.amplitude((0, 0)) == pytest.approx(1 / np.sqrt(1 + n))
        assert state.amplitude((1, 1)) == pytest.approx(1j * np.sqrt(n / (1 + n)))
        assert state.amplitude((1, 0)) == 0

    def test_pump_phase_enters_pair_amplitude(self):
        state = fock.build_state(0.1, 1, 1, pump_phase=np.pi / 2)
        assert state.amplitude((1, 1)) == pytest.approx(-np.sqrt(0.1 / 1.1))

    def test_dimension(self):
        state = fock.build_state(0.1, 3, 2)
        assert state.dim == 3**6
        assert state.tensor().shape == (3,) * 6

    def test_dimension_overflow(self):
        with pytest.raises(DimensionOverflowError):
            fock.build_state(0.1, 6, 8)

    @pytest.mark.parametrize("n, cutoff", [(-0.1, 1), (0.1, 0)])
    def test_invalid_arguments(self, n, cutoff):
        with pytest.raises(ValueError):
            fock.build_state(n, 1, cutoff)

    def test_truncation_warning(self):
        with pytest.warns(RuntimeWarning):
            fock.build_state(0.5, 1, 2)

    def test_truncation_deficit(self):
        assert fock.truncation_deficit(1.5, 2, 3, AmplitudeLaw.FIRST_ORDER) == 1.0
        ratio = 0.1 / 1.1
        expected = 1 - (1 - ratio**3) ** 2
        assert fock.truncation_deficit(0.1, 2, 2, AmplitudeLaw.THERMAL) == pytest.approx(expected)

    @pytest.mark.parametrize("law", list(AmplitudeLaw))
    def test_truncation_deficit_falls_with_cutoff(self, law):
        deficits = [fock.truncation_deficit(0.2, 2, cutoff, law) for cutoff in range(1, 8)]
        assert all(later < earlier for earlier, later in zip(deficits, deficits[1:]))


class TestRates:
    @pytest.mark.parametrize("num_pairs, cutoff", [(1, 3), (2, 2), (3, 1)])
    def test_pump_phase_leaves_rates_unchanged(self, num_pairs, cutoff):
        reference = fock.build_state(0.1, num_pairs, cutoff)
        for phase in (0.3, np.pi / 2, 2.5):
            rotated = fock.build_state(0.1, num_pairs, cutoff, pump_phase=phase)
            assert fock.sfg_rate_correlated(rotated) == pytest.approx(fock.sfg_rate_correlated(reference), rel=1e-12)
            assert fock.sfg_rate_coherent(rotated) == pytest.approx(fock.sfg_rate_coherent(reference), rel=1e-12)

    def test_pump_phase_rotates_pair_amplitude(self):
        theta = 0.7
        reference = fock.build_state(0.1, 1, 1)
        rotated = fock.build_state(0.1, 1, 1, pump_phase=theta)
        assert rotated.amplitude((1, 1)) == pytest.approx(np.exp(1j * theta) * reference.amplitude((1, 1)))
        assert rotated.amplitude((0, 0)) == pytest.approx(reference.amplitude((0, 0)))

    @pytest.mark.parametrize("n", [1e-3, 0.05])
    def test_single_pair_rate(self, n):
        assert fock.sfg_rate_correlated(fock.build_state(n, 1, 1)) == pytest.approx(n / (1 + n), rel=1e-12)

    @pytest.mark.parametrize("num_pairs", PAIRS)
    @pytest.mark.parametrize("n", [0.01, 0.3])
    def test_coherent_gain_is_n_squared(self, num_pairs, n):
        base = fock.sfg_rate_coherent(fock.build_state(n, 1, 1))
        rate = fock.sfg_rate_coherent(fock.build_state(n, num_pairs, 1))
        assert rate / base == pytest.approx(num_pairs**2, rel=1e-12)

    @pytest.mark.parametrize("num_pairs", PAIRS)
    def test_correlated_rate_closed_form(self, num_pairs):
        n = 0.2
        single = n / (1 + n)
        expected = num_pairs * single + num_pairs * (num_pairs - 1) * n / (1 + n) ** 2
        assert fock.sfg_rate_correlated(fock.build_state(n, num_pairs, 1)) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("num_pairs", PAIRS)
    def test_correlated_gain_at_low_density(self, num_pairs):
        base = fock.sfg_rate_correlated(fock.build_state(1e-13, 1, 1))
        rate = fock.sfg_rate_correlated(fock.build_state(1e-13, num_pairs, 1))
        assert rate / base == pytest.approx(num_pairs**2, rel=1e-12)

    @pytest.mark.parametrize("n", [1e-4, 1e-3, 1e-2])
    def test_linear_term(self, n):
        per_n = fock.sfg_rate_correlated(fock.build_state(n, 1, 1)) / n
        assert per_n == pytest.approx(1.0, rel=0.015)

    def test_two_mode_squeezed_moment(self):
        exact = 2 * 0.1**2 + 0.1
        at_six = fock.sfg_rate_correlated(fock.build_state(0.1, 1, 6, law=AmplitudeLaw.THERMAL))
        at_seven = fock.sfg_rate_correlated(fock.build_state(0.1, 1, 7, law=AmplitudeLaw.THERMAL))
        assert at_six == pytest.approx(truncated_thermal_moment(0.1, 6), abs=1e-12)
        assert abs(at_six - exact) < 3e-6
        assert abs(at_seven - exact) < 1e-6

    def test_thermal_coherent_rate(self):
        n = 0.2
        state = fock.build_state(n, 1, 14, law=AmplitudeLaw.THERMAL)
        assert fock.sfg_rate_coherent(state) == pytest.approx(n**2 + n, rel=1e-9)

    def test_uncorrelated_needs_two_pairs(self):
        with pytest.raises(ValueError):
            fock.sfg_rate_uncorrelated(fock.build_state(0.1, 1, 2))

    def test_uncorrelated_thermal(self):
        n = 0.05
        state = fock.build_state(n, 2, 6, law=AmplitudeLaw.THERMAL)
        assert fock.sfg_rate_uncorrelated(state) == pytest.approx(2 * n**2, rel=1e-6)


class TestLoss:
    @pytest.mark.parametrize("t", [0.25, 0.5, 0.9])
    def test_rates_scale_as_t_squared(self, t):
        state = fock.build_state(0.1, 2, 2, pump_phase=0.4)
        lossy = fock.apply_loss(state, LossChannel(transmissivity=t))
        assert lossy.trace == pytest.approx(1.0, abs=1e-12)
        assert fock.sfg_rate_correlated(lossy) == pytest.approx(t**2 * fock.sfg_rate_correlated(state), rel=1e-12)
        assert fock.sfg_rate_coherent(lossy) == pytest.approx(t**2 * fock.sfg_rate_coherent(state), rel=1e-12)

    def test_unit_transmission_is_identity(self):
        state = fock.build_state(0.1, 1, 3)
        lossy = fock.apply_loss(state, LossChannel(transmissivity=1.0))
        assert lossy.branches.shape[0] == 1
        np.testing.assert_allclose(lossy.branches[0], state.amplitudes, atol=1e-15)

    def test_full_loss_leaves_vacuum(self):
        lossy = fock.apply_loss(fock.build_state(0.1, 1, 2), LossChannel(transmissivity=0.0))
        assert fock.sfg_rate_correlated(lossy) == 0.0
        assert lossy.trace == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("t", [0.1, 0.5, 0.9])
    def test_four_pairs_at_cutoff_two(self, t):
        state = fock.build_state(0.1, 4, 2, pump_phase=0.2)
        lossy = fock.apply_loss(state, LossChannel(transmissivity=t))
        assert lossy.block_pairs == (1, 1, 1, 1)
        assert all(block.shape[0] <= 9 for block in lossy.blocks)
        assert lossy.trace == pytest.approx(1.0, abs=1e-12)
        assert fock.sfg_rate_correlated(lossy) == pytest.approx(t**2 * fock.sfg_rate_correlated(state), rel=1e-9)
        assert fock.sfg_rate_coherent(lossy) == pytest.approx(t**2 * fock.sfg_rate_coherent(state), rel=1e-9)
        assert fock.sfg_rate_uncorrelated(lossy) == pytest.approx(t**2 * fock.sfg_rate_uncorrelated(state), rel=1e-9)

    def test_repeated_loss_composes(self):
        state = fock.build_state(0.1, 2, 2)
        twice = fock.apply_loss(fock.apply_loss(state, LossChannel(transmissivity=0.5)), LossChannel(transmissivity=0.8))
        once = fock.apply_loss(state, LossChannel(transmissivity=0.4))
        assert fock.sfg_rate_correlated(twice) == pytest.approx(fock.sfg_rate_correlated(once), rel=1e-12)

    def test_entangled_pairs_stay_in_one_block(self):
        amplitudes = np.zeros(16, dtype=complex)
        amplitudes[0] = amplitudes[15] = 1 / np.sqrt(2)   # |0000⟩ + |1111⟩
        state = MultimodeState(num_pairs=2, cutoff=1, amplitudes=amplitudes)
        lossy = fock.apply_loss(state, LossChannel(transmissivity=0.7))
        assert lossy.block_pairs == (2,)
        oracle = fock.oracle_expectation(lossy, sfg_correlated_operator(2)).real
        assert fock.sfg_rate_correlated(lossy) == pytest.approx(oracle, abs=1e-12)

    def test_dense_expansion_is_bounded(self):
        lossy = fock.apply_loss(fock.build_state(0.1, 4, 2), LossChannel(transmissivity=0.5))
        assert lossy.num_branches * lossy.dim > MAX_ENSEMBLE_ENTRIES
        with pytest.raises(DimensionOverflowError):
            lossy.branches


class TestOracle:
    @pytest.mark.parametrize("law", list(AmplitudeLaw))
    @pytest.mark.parametrize("num_pairs, cutoff", [(1, 1), (1, 4), (2, 1), (2, 2), (3, 1), (3, 2)])
    def test_pure_states(self, law, num_pairs, cutoff):
        state = fock.build_state(0.1, num_pairs, cutoff, pump_phase=0.3, law=law)
        correlated = fock.oracle_expectation(state, sfg_correlated_operator(num_pairs))
        amplitude = fock.oracle_expectation(state, sfg_amplitude_operator(num_pairs))
        assert correlated.real == pytest.approx(fock.sfg_rate_correlated(state), abs=1e-10)
        assert abs(correlated.imag) < 1e-12
        assert amplitude == pytest.approx(fock.sfg_amplitude(state), abs=1e-10)
        if num_pairs > 1:
            uncorrelated = fock.oracle_expectation(state, sfg_uncorrelated_operator(num_pairs))
            assert uncorrelated.real == pytest.approx(fock.sfg_rate_uncorrelated(state), abs=1e-10)

    @pytest.mark.parametrize("num_pairs, cutoff", [(1, 3), (2, 1), (2, 2), (3, 2)])
    def test_mixed_states(self, num_pairs, cutoff):
        state = fock.apply_loss(fock.build_state(0.2, num_pairs, cutoff), LossChannel(transmissivity=0.6))
        correlated = fock.oracle_expectation(state, sfg_correlated_operator(num_pairs))
        assert correlated.real == pytest.approx(fock.sfg_rate_correlated(state), abs=1e-10)
        amplitude = fock.oracle_expectation(state, sfg_amplitude_operator(num_pairs))
        assert abs(amplitude) ** 2 == pytest.approx(fock.sfg_rate_coherent(state), abs=1e-10)

    def test_photon_number(self):
        state = fock.build_state(0.1, 1, 10, law=AmplitudeLaw.THERMAL)
        assert fock.oracle_expectation(state, number_operator(0)).real == pytest.approx(0.1, rel=1e-8)
        product = fock.oracle_expectation(state, pair_number_product(0)).real
        assert product == pytest.approx(fock.sfg_rate_correlated(state), abs=1e-12)

    def test_dimension_limit(self):
        with pytest.raises(DimensionOverflowError):
            fock.oracle_expectation(fock.build_state(0.01, 3, 6), sfg_correlated_operator(3))

    def test_operator_outside_state(self):
        with pytest.raises(ValueError):
            fock.oracle_expectation(fock.build_state(0.01, 1, 1), sfg_correlated_operator(2))


class TestDephasing:
    @pytest.mark.parametrize("num_pairs", [2, 3])
    def test_gain_becomes_linear(self, num_pairs):
        n = 0.01
        single = fock.sfg_rate_correlated(fock.build_state(n, 1, 1))
        rates = fock.dephased_rates(fock.build_state(n, num_pairs, 1), 4000, seed=11)
        assert abs(rates.correlated_mean - num_pairs * single) < 4 * rates.correlated_sem
        assert abs(rates.coherent_mean - num_pairs * fock.sfg_rate_coherent(fock.build_state(n, 1, 1))) \
            < 4 * rates.coherent_sem

    def test_deterministic(self):
        state = fock.build_state(0.05, 2, 1)
        first = fock.dephased_rates(state, 600, seed=3)
        second = fock.dephased_rates(state, 600, seed=3)
        assert first == second

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            fock.dephased_rates(fock.build_state(0.05, 2, 1), 1, seed=3)
