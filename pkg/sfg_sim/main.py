import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from sfg_sim.commands import fock_command, rates_command, stream_command, sweep_command, validate_command
from sfg_sim.config.settings import Settings
from sfg_sim.errors import ConfigError
from sfg_sim.utils.logging_setup import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_USAGE = 2

COMMANDS = {
    "rates": rates_command.run,
    "sweep": sweep_command.run,
    "fock": fock_command.run,
    "stream": stream_command.run,
    "validate": validate_command.run,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Scenario file (section.key = value)")
    common.add_argument("--seed", type=int, help="Master seed, overrides run.seed")
    common.add_argument("--out", type=Path, help="Output directory")
    common.add_argument("--format", choices=("csv", "json"), help="Output format")
    common.add_argument("--threads", type=int, help="Worker threads, overrides SFG_SIM_THREADS (0 = auto)")

    parser = argparse.ArgumentParser(
        prog="sfg_sim",
        description="Sum-frequency generation with broadband down-converted light",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    rates = subparsers.add_parser("rates", parents=[common], help="Closed-form rate table")
    rates.add_argument("--n", type=float, nargs="+", help="Spectral photon densities")

    sweep = subparsers.add_parser("sweep", parents=[common], help="Pump-scaling or attenuation sweep")
    sweep.add_argument("--engine", choices=("analytic", "fock", "stream"))
    sweep.add_argument("--mode", choices=("pump", "atten"))

    fock = subparsers.add_parser("fock", parents=[common], help="Fock-space rates, N² gain and loss tables")
    fock.add_argument("--n", type=float, help="Spectral photon density")
    fock.add_argument("--num-pairs", type=int, help="Mode pairs N")
    fock.add_argument("--cutoff", type=int, help="Photons per mode")

    stream = subparsers.add_parser("stream", parents=[common], help="Monte Carlo event stream and SFG counts")
    stream.add_argument("--n", type=float, help="Spectral photon density")
    stream.add_argument("--transmission", type=float, help="Photon survival probability")

    subparsers.add_parser("validate", parents=[common], help="Invariant suite and engine cross-validation")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        settings = Settings()
        if args.threads is not None:
            settings = Settings(**{**settings.model_dump(), "THREADS": args.threads})
        configure_logging(settings.LOG_LEVEL)
    except ValueError as e:
        print(f"error: settings: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.info(f"Running {args.command}")
    try:
        return COMMANDS[args.command](args, settings)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        # engine, fit and value-type errors
        print(f"error: {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
