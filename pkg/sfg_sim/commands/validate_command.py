import argparse
import logging

from sfg_sim.commands.common import load_scenario, resolve_seed
from sfg_sim.config.settings import Settings
from sfg_sim.services.validation_service import ValidationService
from sfg_sim.utils.reports import to_json, write_json

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace, settings: Settings) -> int:
    """Invariant suite plus engine cross-validation; exit 0 only if every check passes"""
    scenario = load_scenario(args)
    seed = resolve_seed(args, scenario)
    report = ValidationService(settings).run(seed)

    payload = report.model_dump(mode="json")
    payload["passed"] = report.passed
    print(to_json(payload))
    if args.out is not None:
        path = write_json(payload, args.out / "validation.json")
        logger.info(f"Wrote {path}")
    return 0 if report.passed else 1
