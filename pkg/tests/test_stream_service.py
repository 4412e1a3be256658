"""Tests for the Monte Carlo photon-pair stream engine"""
import numpy as np
import pytest

from sfg_sim.models.schemas import (
    AcceptanceMode,
    DetectorModel,
    OperatingPoint,
    SpectralConfig,
    SpectralShape,
)
from sfg_sim.models.states import Channel, EventStream, PhotonEvent
from sfg_sim.services import analytic_service as analytic
from sfg_sim.services import stream_service as stream


@pytest.fixture
def small_stream(desk_config):
    op = OperatingPoint.from_density(desk_config, 0.05)
    return stream.generate_stream(desk_config, op, 1.0, seed=2024)


class TestGeneration:
    def test_pair_count(self, small_stream):
        pairs = len(small_stream) // 2
        # Poisson(25000)
        assert abs(pairs - 25_000) < 5 * np.sqrt(25_000)
        assert np.count_nonzero(small_stream.signal_mask) == pairs

    def test_sorted_and_paired(self, small_stream):
        assert np.all(np.diff(small_stream.time) >= 0)
        signal_ids = np.sort(small_stream.pair_id[small_stream.signal_mask])
        idler_ids = np.sort(small_stream.pair_id[small_stream.idler_mask])
        np.testing.assert_array_equal(signal_ids, idler_ids)
        assert stream.count_intact_pairs(small_stream) == signal_ids.size

    def test_frequency_anticorrelation(self, small_stream, desk_config):
        order_s = np.argsort(small_stream.pair_id[small_stream.signal_mask])
        order_i = np.argsort(small_stream.pair_id[small_stream.idler_mask])
        signal = small_stream.freq_offset[small_stream.signal_mask][order_s]
        idler = small_stream.freq_offset[small_stream.idler_mask][order_i]
        assert np.all(np.abs(signal) <= desk_config.dc_bandwidth / 2)
        assert np.all(np.abs(signal + idler) <= desk_config.pump_bandwidth / 2)

    def test_same_seed_same_stream(self, desk_config, small_stream):
        again = stream.generate_stream(desk_config, small_stream.op, 1.0, seed=2024)
        np.testing.assert_array_equal(again.time, small_stream.time)
        np.testing.assert_array_equal(again.pair_id, small_stream.pair_id)

    def test_independent_of_thread_count(self, desk_config):
        op = OperatingPoint.from_density(desk_config, 0.05)
        one = stream.generate_stream(desk_config, op, 1.0, seed=9, shard_pairs=4000, threads=1)
        four = stream.generate_stream(desk_config, op, 1.0, seed=9, shard_pairs=4000, threads=4)
        np.testing.assert_array_equal(one.time, four.time)
        np.testing.assert_array_equal(one.freq_offset, four.freq_offset)
        np.testing.assert_array_equal(one.channel, four.channel)

    def test_gaussian_shape(self, desk_config):
        op = OperatingPoint.from_density(desk_config, 0.05)
        events = stream.generate_stream(desk_config, op, 1.0, seed=4, shape=SpectralShape.GAUSSIAN)
        signal = events.freq_offset[events.signal_mask]
        sigma = desk_config.dc_bandwidth / (2 * np.sqrt(2 * np.log(2)))
        assert np.std(signal) == pytest.approx(sigma, rel=0.03)
        assert dict(events.parameters)["shape"] == "gaussian"

    def test_zero_density_gives_empty_stream(self, desk_config):
        events = stream.generate_stream(desk_config, OperatingPoint.from_density(desk_config, 0.0), 1.0, seed=3)
        assert len(events) == 0
        counts = stream.count_sfg(events, desk_config, conv_prob=0.5)
        assert counts.correlated == 0 and counts.accidental == 0

    @pytest.mark.slow
    def test_intra_pair_delay_spread(self, desk_config):
        # ~10^6 pairs
        op = OperatingPoint.from_density(desk_config, 0.5)
        events = stream.generate_stream(desk_config, op, 4.0, seed=31)
        signal, idler = events.signal_mask, events.idler_mask
        signal_time = events.time[signal][np.argsort(events.pair_id[signal])]
        idler_time = events.time[idler][np.argsort(events.pair_id[idler])]
        assert signal_time.size > 900_000
        spread = np.std(idler_time - signal_time)
        assert spread == pytest.approx(desk_config.coherence_time, rel=0.02)
        assert desk_config.coherence_time == pytest.approx(1 / (2 * desk_config.dc_bandwidth))

    def test_rejects_bad_duration(self, desk_config):
        with pytest.raises(ValueError):
            stream.generate_stream(desk_config, OperatingPoint.from_density(desk_config, 0.05), 0.0, seed=1)

    def test_rejects_full_scale_bandwidth(self, reference_config):
        with pytest.raises(ValueError):
            stream.generate_stream(reference_config, OperatingPoint.from_density(reference_config, 0.1), 1.0, seed=1)


class TestAttenuation:
    def test_keeps_fraction(self, small_stream):
        thinned = stream.attenuate_stream(small_stream, 0.5, seed=1)
        assert len(thinned) == pytest.approx(0.5 * len(small_stream), rel=0.01)
        assert dict(thinned.parameters)["transmission"] == "0.5"

    def test_unit_transmission_keeps_everything(self, small_stream):
        assert len(stream.attenuate_stream(small_stream, 1.0, seed=1)) == len(small_stream)

    @pytest.mark.parametrize("t", [-0.1, 1.5])
    def test_invalid_transmission(self, small_stream, t):
        with pytest.raises(ValueError):
            stream.attenuate_stream(small_stream, t, seed=1)

    def test_zero_transmission_empties_stream(self, small_stream):
        assert len(stream.attenuate_stream(small_stream, 0.0, seed=1)) == 0

    def test_repeated_attenuation_records_product(self, small_stream):
        twice = stream.attenuate_stream(stream.attenuate_stream(small_stream, 0.5, seed=1), 0.8, seed=2)
        params = dict(twice.parameters)
        assert [key for key, _ in twice.parameters].count("transmission") == 1
        assert float(params["transmission"]) == pytest.approx(0.4)
        assert params["shape"] == "flat"

    def test_intact_pairs_scale_as_t_squared(self, small_stream):
        pairs = stream.count_intact_pairs(small_stream)
        thinned = stream.attenuate_stream(small_stream, 0.5, seed=8)
        assert stream.count_intact_pairs(thinned) == pytest.approx(0.25 * pairs, rel=0.04)


class TestCoincidences:
    def test_cross_pair_window(self, desk_config):
        events = [
            PhotonEvent(0.0, 100.0, Channel.SIGNAL, 0),
            PhotonEvent(2e-7, -100.0, Channel.IDLER, 0),
            PhotonEvent(5e-7, -300.0, Channel.IDLER, 1),
            PhotonEvent(10.0, 300.0, Channel.SIGNAL, 1),
            PhotonEvent(12.0, 50.0, Channel.SIGNAL, 2),
        ]
        events = EventStream.from_events(events, desk_config, duration=20.0)
        counts = stream.count_sfg(events, desk_config, conv_prob=1.0, acceptance=AcceptanceMode.SAMPLED)
        assert counts.intact_pairs == 2
        assert counts.paired == 2
        assert counts.cross_coincidences == 1
        assert counts.coherent_cross == 1
        # 100 Hz + (-300 Hz) lies inside δ_UC/2
        assert counts.accidental == 1

    def test_intact_pair_counts_outside_window(self, desk_config):
        events = [PhotonEvent(0.0, 10.0, Channel.SIGNAL, 0), PhotonEvent(3e-6, -10.0, Channel.IDLER, 0)]
        events = EventStream.from_events(events, desk_config, duration=1.0)
        counts = stream.count_sfg(events, desk_config, conv_prob=1.0)
        assert counts.paired == 1
        assert counts.cross_coincidences == 0

    def test_lineage_enforced(self, desk_config):
        events = [PhotonEvent(0.0, 0.0, Channel.SIGNAL, 0), PhotonEvent(1.0, 0.0, Channel.SIGNAL, 0)]
        with pytest.raises(ValueError):
            EventStream.from_events(events, desk_config)

    def test_conv_prob_range(self, small_stream, desk_config):
        with pytest.raises(ValueError):
            stream.count_sfg(small_stream, desk_config, conv_prob=0.0)


class TestExpectedCounts:
    def test_correlated_follows_rate_law(self, desk_config):
        n, conv = 0.2, 0.5
        op = OperatingPoint.from_density(desk_config, n)
        expected = stream.expected_counts(desk_config, op, conv, duration=1.0)
        law = analytic.correlated_rate(desk_config, op, conv / 2)
        assert expected.correlated == pytest.approx(law, rel=1e-12)

    def test_ratio_tracks_closed_form(self, desk_config):
        n = 0.1
        op = OperatingPoint.from_density(desk_config, n)
        expected = stream.expected_counts(desk_config, op, 0.5, duration=1.0)
        ratio = expected.correlated / expected.accidental
        assert ratio == pytest.approx(analytic.rate_ratio(desk_config, n).ratio, rel=0.01)

    @pytest.mark.parametrize("acceptance", list(AcceptanceMode))
    def test_counts_match_expectation(self, desk_config, acceptance):
        n, conv, duration = 0.2, 0.5, 1.0
        op = OperatingPoint.from_density(desk_config, n)
        expected = stream.expected_counts(desk_config, op, conv, duration)
        correlated = accidental = 0
        seeds = (1, 2, 3)
        for seed in seeds:
            events = stream.generate_stream(desk_config, op, duration, seed=seed)
            counts = stream.count_sfg(events, desk_config, conv, acceptance=acceptance)
            correlated += counts.correlated
            accidental += counts.accidental
        assert correlated == pytest.approx(3 * expected.correlated, rel=0.02)
        assert abs(accidental - 3 * expected.accidental) < 5 * np.sqrt(3 * expected.accidental)

    def test_low_density_counts_halve_with_pump(self, desk_config):
        conv, duration = 0.5, 4.0
        totals, means = [], []
        for n, seed in ((0.01, 12), (0.005, 13)):
            op = OperatingPoint.from_density(desk_config, n)
            means.append(stream.expected_counts(desk_config, op, conv, duration).correlated)
            events = stream.generate_stream(desk_config, op, duration, seed=seed)
            totals.append(stream.count_sfg(events, desk_config, conv).correlated)
        ratio = totals[1] / totals[0]
        sigma = 0.5 * np.sqrt(1 / means[0] + 1 / means[1])
        assert abs(ratio - 0.5) < 3 * sigma

    def test_accidentals_linear_in_acceptance_bandwidth(self, desk_config):
        wide = SpectralConfig(**{**desk_config.model_dump(), "uc_bandwidth": 4 * desk_config.uc_bandwidth})
        op = OperatingPoint.from_density(desk_config, 0.2)
        counts = {desk_config.uc_bandwidth: 0, wide.uc_bandwidth: 0}
        for seed in (1, 2, 3):
            events = stream.generate_stream(desk_config, op, 1.0, seed=seed)
            for config in (desk_config, wide):
                found = stream.count_sfg(events, config, 1.0, acceptance=AcceptanceMode.SAMPLED)
                counts[config.uc_bandwidth] += found.accidental
        narrow_mean = 3 * stream.expected_counts(desk_config, op, 1.0, 1.0).accidental
        wide_mean = 3 * stream.expected_counts(wide, op, 1.0, 1.0).accidental
        assert wide_mean / narrow_mean == pytest.approx(4.0, rel=0.02)
        assert abs(counts[desk_config.uc_bandwidth] - narrow_mean) < 3 * np.sqrt(narrow_mean)
        assert abs(counts[wide.uc_bandwidth] - wide_mean) < 3 * np.sqrt(wide_mean)

    def test_attenuated_expectation(self, desk_config):
        op = OperatingPoint.from_density(desk_config, 0.05)
        full = stream.expected_counts(desk_config, op, 0.5, 1.0)
        half = stream.expected_counts(desk_config, op, 0.5, 1.0, transmission=0.5)
        assert half.correlated == pytest.approx(0.25 * full.correlated, rel=1e-12)
        assert half.accidental == pytest.approx(0.25 * full.accidental, rel=1e-12)


class TestAcceptance:
    def test_flat_small_window(self, desk_config):
        ratio = desk_config.uc_bandwidth / desk_config.dc_bandwidth
        assert stream.accidental_acceptance(desk_config) == pytest.approx(ratio, rel=0.01)

    def test_gaussian_between_zero_and_one(self, desk_config):
        value = stream.accidental_acceptance(desk_config, SpectralShape.GAUSSIAN)
        assert 0.0 < value < 1.0


class TestDetection:
    def test_reference_detector(self):
        model = DetectorModel(collection_efficiency=0.06, dark_rate=50.0, integration_time=5.0)
        rates = [stream.detect(40_000.0, model, seed=k).rate for k in range(20)]
        assert np.mean(rates) == pytest.approx(2400.0, abs=100.0)

    def test_dark_subtraction(self):
        result = stream.detect(0.0, DetectorModel(), seed=5)
        assert result.dark_subtracted == result.raw_counts - 250.0

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            stream.detect(-1.0, DetectorModel(), seed=0)

    def test_deterministic(self):
        assert stream.detect(1000.0, DetectorModel(), seed=3) == stream.detect(1000.0, DetectorModel(), seed=3)
