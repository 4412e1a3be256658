import argparse
import logging

from sfg_sim.commands.common import csv_text, load_scenario, output_dir, output_format, resolve_seed
from sfg_sim.config.settings import Settings
from sfg_sim.models.schemas import OperatingPoint
from sfg_sim.services import stream_service as stream
from sfg_sim.utils.reports import to_json, write_json
from sfg_sim.utils.rng import derive_seed
from sfg_sim.utils.stream_io import write_stream

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace, settings: Settings) -> int:
    """Generate one event stream, optionally attenuate it, count SFG and save everything"""
    scenario = load_scenario(args)
    seed = resolve_seed(args, scenario)
    section = scenario.stream
    options = section.to_options()
    config = scenario.spectral_config().scaled_to(options.dc_bandwidth)
    n = args.n if args.n is not None else section.density
    transmission = args.transmission if args.transmission is not None else section.transmission
    op = OperatingPoint.from_density(config, n)

    logger.info("=== Stream run ===")
    logger.info("1. Generating stream...")
    events = stream.generate_stream(
        config, op, options.duration, seed,
        shape=options.shape, shard_pairs=settings.STREAM_SHARD_PAIRS, threads=settings.worker_count(),
    )
    if transmission < 1.0:
        logger.info("2. Attenuating...")
        events = stream.attenuate_stream(events, transmission, derive_seed(seed, "stream-command"))
    logger.info("3. Counting SFG...")
    counts = stream.count_sfg(events, config, options.conv_prob,
                              acceptance=options.acceptance, shape=options.shape)
    expected = stream.expected_counts(config, op, options.conv_prob, options.duration,
                                      transmission=transmission, shape=options.shape)

    out = output_dir(args, scenario, settings)
    events_path = write_stream(events, out / "stream_events.csv")
    payload = {
        "seed": seed,
        "n": n,
        "transmission": transmission,
        "duration": options.duration,
        "dc_bandwidth": options.dc_bandwidth,
        "events": len(events),
        "counts": counts.model_dump(),
        "correlated": counts.correlated,
        "expected": expected.model_dump(),
        "expected_correlated": expected.correlated,
        "events_file": str(events_path),
    }
    write_json(payload, out / "stream_counts.json")

    if output_format(args, scenario) == "json":
        print(to_json(payload))
    else:
        row = {"n": n, "transmission": transmission, **counts.model_dump(), "correlated": counts.correlated,
               "expected_correlated": expected.correlated, "expected_accidental": expected.accidental}
        print(csv_text([row]), end="")
    return 0
