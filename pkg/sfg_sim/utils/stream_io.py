"""Columnar text format for event streams.

    # format=sfg_sim-events/1
    # seed=42
    # <key>=<value>           (one line per parameter)
    time_s,freq_offset_hz,channel,pair_id
    1.25e-06,-312.5,signal,0
    ...

Floats are written with ``repr``, which round-trips IEEE doubles exactly.
"""
import csv
from pathlib import Path
from typing import Dict, Union

import numpy as np

from sfg_sim.errors import ConfigError
from sfg_sim.models.schemas import OperatingPoint, SpectralConfig
from sfg_sim.models.states import Channel, EventStream

FORMAT_TAG = "sfg_sim-events/1"
COLUMNS = ("time_s", "freq_offset_hz", "channel", "pair_id")
CONFIG_FIELDS = tuple(SpectralConfig.model_fields)


def _header(stream: EventStream) -> Dict[str, str]:
    header = {"format": FORMAT_TAG, "seed": str(stream.seed), "duration": repr(stream.duration)}
    header["n"] = repr(stream.op.n)
    header["flux"] = repr(stream.op.flux)
    for name in CONFIG_FIELDS:
        header[name] = repr(getattr(stream.config, name))
    for key, value in stream.parameters:
        if f"param.{key}" in header:
            raise ValueError(f"parameter {key!r} is set twice")
        header[f"param.{key}"] = value
    return header


def write_stream(stream: EventStream, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        for key, value in _header(stream).items():
            handle.write(f"# {key}={value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(COLUMNS)
        for t, f, c, p in zip(stream.time.tolist(), stream.freq_offset.tolist(),
                              stream.channel.tolist(), stream.pair_id.tolist()):
            writer.writerow((repr(t), repr(f), Channel(c).name.lower(), p))
    return path


def read_stream(path: Union[str, Path]) -> EventStream:
    path = Path(path)
    if not path.exists():
        raise ConfigError("stream file not found", path=str(path))
    header: Dict[str, str] = {}
    times, freqs, channels, pair_ids = [], [], [], []
    with open(path, newline="") as handle:
        line_no = 0
        for line_no, line in enumerate(handle, start=1):
            if not line.startswith("#"):
                break
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise ConfigError(f"malformed header line {line.strip()!r}", str(path), line_no)
            header[key.strip()] = value.strip()
        else:
            line = ""
        if header.get("format") != FORMAT_TAG:
            raise ConfigError(f"unsupported format {header.get('format')!r}", str(path))
        if tuple(col.strip() for col in line.strip().split(",")) != COLUMNS:
            raise ConfigError("missing column header", str(path), line_no)
        for row_no, row in enumerate(csv.reader(handle), start=line_no + 1):
            if not row:
                continue
            try:
                times.append(float(row[0]))
                freqs.append(float(row[1]))
                channels.append(Channel[row[2].strip().upper()])
                pair_ids.append(int(row[3]))
            except (IndexError, KeyError, ValueError) as e:
                raise ConfigError(f"bad event row: {e}", str(path), row_no)

    missing = [key for key in CONFIG_FIELDS + ("n", "flux", "seed", "duration") if key not in header]
    if missing:
        raise ConfigError(f"header is missing {', '.join(missing)}", str(path))
    config = SpectralConfig(**{name: float(header[name]) for name in CONFIG_FIELDS})
    parameters = tuple(
        (key[len("param."):], value) for key, value in header.items() if key.startswith("param.")
    )
    return EventStream(
        time=np.array(times, dtype=np.float64),
        freq_offset=np.array(freqs, dtype=np.float64),
        channel=np.array(channels, dtype=np.int8),
        pair_id=np.array(pair_ids, dtype=np.int64),
        config=config,
        op=OperatingPoint(n=float(header["n"]), flux=float(header["flux"])),
        seed=int(header["seed"]),
        duration=float(header["duration"]),
        parameters=parameters,
    )
