import argparse
import logging

from sfg_sim.commands.common import csv_text, load_scenario, output_dir, output_format
from sfg_sim.config.settings import Settings
from sfg_sim.errors import UndefinedRatioError
from sfg_sim.models.schemas import OperatingPoint
from sfg_sim.services import analytic_service as analytic
from sfg_sim.utils.reports import to_json, write_json
from sfg_sim.utils.units import flux_to_power

logger = logging.getLogger(__name__)

UNDEFINED = "undefined"


def rate_rows(config, n_values, alpha):
    rows = []
    for n in n_values:
        op = OperatingPoint.from_density(config, n)
        prediction = analytic.predict_rates(config, op, alpha)
        try:
            report = analytic.rate_ratio(config, n)
            ratio, bound = report.ratio, report.bound
        except UndefinedRatioError:
            ratio = bound = UNDEFINED
        rows.append({
            "n": float(n),
            "flux": op.flux,
            "power_w": flux_to_power(op.flux, config.dc_center_wavelength),
            "correlated": prediction.correlated,
            "uncorrelated": prediction.uncorrelated,
            "ratio": ratio,
            "bound": bound,
        })
    return rows


def run(args: argparse.Namespace, settings: Settings) -> int:
    """Closed-form rate table for the scenario's n values"""
    scenario = load_scenario(args)
    config = scenario.spectral_config()
    n_values = args.n if args.n else scenario.operating.n_values
    rows = rate_rows(config, n_values, scenario.operating.alpha)
    payload = {
        "crossover_flux": analytic.crossover_flux(config),
        "crossover_power_w": analytic.crossover_power(config),
        "num_mode_pairs": config.num_mode_pairs,
        "classical_gain": analytic.classical_gain(config),
        "alpha": scenario.operating.alpha,
        "rows": rows,
    }

    if output_format(args, scenario) == "json":
        print(to_json(payload))
    else:
        print(f"# crossover_flux={payload['crossover_flux']!r} crossover_power_w={payload['crossover_power_w']!r}")
        print(csv_text(rows), end="")

    if args.out is not None:
        path = write_json(payload, output_dir(args, scenario, settings) / "rates.json")
        logger.info(f"Wrote {path}")
    return 0
