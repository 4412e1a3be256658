from dataclasses import replace

import numpy as np
import pytest

from sfg_sim.errors import ConfigError
from sfg_sim.models.schemas import OperatingPoint
from sfg_sim.services import stream_service as stream
from sfg_sim.utils.stream_io import FORMAT_TAG, read_stream, write_stream


def test_write_then_read_is_exact(tmp_path, desk_config):
    op = OperatingPoint.from_density(desk_config, 0.01)
    events = stream.attenuate_stream(stream.generate_stream(desk_config, op, 0.2, seed=77), 0.8, seed=1)
    path = write_stream(events, tmp_path / "events.csv")
    loaded = read_stream(path)

    np.testing.assert_array_equal(loaded.time, events.time)
    np.testing.assert_array_equal(loaded.freq_offset, events.freq_offset)
    np.testing.assert_array_equal(loaded.channel, events.channel)
    np.testing.assert_array_equal(loaded.pair_id, events.pair_id)
    assert loaded.config == events.config
    assert loaded.op == events.op
    assert loaded.seed == 77
    assert loaded.duration == 0.2
    assert loaded.parameters == events.parameters


def test_header_lines(tmp_path, desk_config):
    events = stream.generate_stream(desk_config, OperatingPoint.from_density(desk_config, 0.01), 0.01, seed=5)
    text = write_stream(events, tmp_path / "events.csv").read_text()
    assert text.startswith(f"# format={FORMAT_TAG}\n# seed=5\n")
    assert "time_s,freq_offset_hz,channel,pair_id\n" in text


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        read_stream(tmp_path / "absent.csv")


def test_bad_row_reports_line(tmp_path, desk_config):
    events = stream.generate_stream(desk_config, OperatingPoint.from_density(desk_config, 0.01), 0.01, seed=5)
    path = write_stream(events, tmp_path / "events.csv")
    with open(path, "a") as handle:
        handle.write("0.5,1.0,photon,3\n")
    line_count = len(path.read_text().splitlines())
    with pytest.raises(ConfigError) as excinfo:
        read_stream(path)
    assert excinfo.value.line == line_count


def test_wrong_format_tag(tmp_path):
    path = tmp_path / "events.csv"
    path.write_text("# format=other/2\ntime_s,freq_offset_hz,channel,pair_id\n")
    with pytest.raises(ConfigError, match="unsupported format"):
        read_stream(path)


def test_repeated_attenuation_round_trips(tmp_path, desk_config):
    events = stream.generate_stream(desk_config, OperatingPoint.from_density(desk_config, 0.01), 0.05, seed=3)
    events = stream.attenuate_stream(stream.attenuate_stream(events, 0.5, seed=1), 0.8, seed=2)
    loaded = read_stream(write_stream(events, tmp_path / "events.csv"))
    assert loaded.parameters == events.parameters
    assert dict(loaded.parameters)["transmission"] == repr(0.8 * 0.5)


def test_duplicate_parameter_rejected(tmp_path, desk_config):
    events = stream.generate_stream(desk_config, OperatingPoint.from_density(desk_config, 0.01), 0.01, seed=5)
    events = replace(events, parameters=events.parameters + (("shape", "gaussian"),))
    with pytest.raises(ValueError, match="set twice"):
        write_stream(events, tmp_path / "events.csv")
