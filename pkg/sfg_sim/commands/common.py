import argparse
import csv
import io
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from sfg_sim.config.scenario import ScenarioConfig, parse_scenario
from sfg_sim.config.settings import Settings
from sfg_sim.errors import ConfigError
from sfg_sim.utils.rng import MAX_SEED, derive_seed


def load_scenario(args: argparse.Namespace) -> ScenarioConfig:
    if args.config is None:
        return ScenarioConfig()
    return parse_scenario(args.config)


def resolve_seed(args: argparse.Namespace, scenario: ScenarioConfig) -> int:
    """--seed wins over run.seed; a stochastic command without either is an error"""
    seed = args.seed if args.seed is not None else scenario.run.seed
    if seed is None:
        raise ConfigError(f"{args.command} needs a seed: pass --seed or set run.seed")
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"seed must be in [0, 2^64), got {seed}")
    return seed


def run_seeds(seed: int, count: int) -> List[int]:
    return [derive_seed(seed, "run-seed", k) for k in range(count)]


def output_dir(args: argparse.Namespace, scenario: ScenarioConfig, settings: Settings) -> Path:
    if args.out is not None:
        return Path(args.out)
    if scenario.output.dir:
        return Path(scenario.output.dir)
    return Path(settings.OUTPUT_DIR)


def output_format(args: argparse.Namespace, scenario: ScenarioConfig) -> str:
    return args.format or scenario.output.format


def csv_text(rows: Sequence[Dict[str, object]], columns: Optional[Sequence[str]] = None) -> str:
    """Rows as CSV; floats via repr so the text round-trips"""
    columns = list(columns or (rows[0].keys() if rows else []))
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in (row[c] for c in columns)])
    return buffer.getvalue()
