import argparse
import logging

import numpy as np

from sfg_sim.commands.common import load_scenario, output_dir, output_format, resolve_seed, run_seeds
from sfg_sim.config.scenario import MODE_ALIASES
from sfg_sim.config.settings import Settings
from sfg_sim.errors import SfgSimError
from sfg_sim.models.schemas import Engine, SweepMode
from sfg_sim.services.experiment_service import ExperimentService
from sfg_sim.utils.reports import to_json, write_curve_csv, write_json, write_summary_json
from sfg_sim.utils.svg_plot import write_svg

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace, settings: Settings) -> int:
    """Run one sweep and write data, summary and plot under the output directory"""
    scenario = load_scenario(args)
    seed = resolve_seed(args, scenario)
    config = scenario.spectral_config()
    engine = Engine(args.engine) if args.engine else scenario.run.engine
    mode = MODE_ALIASES[args.mode] if args.mode else scenario.run.mode
    operating = scenario.operating

    if mode is SweepMode.PUMP_SCALING:
        drives = np.geomspace(operating.sweep_n_min, operating.sweep_n_max, operating.sweep_points)
    else:
        drives = operating.transmissions

    service = ExperimentService(settings)
    try:
        curve = service.run_sweep(
            config,
            mode,
            drives,
            engine,
            detector=scenario.detector.to_model(),
            seeds=run_seeds(seed, scenario.run.num_seeds),
            alpha=operating.alpha,
            fixed_n=operating.fixed_n,
            fock_options=scenario.fock.to_options(),
            stream_options=scenario.stream.to_options(),
        )
    except SfgSimError as e:
        raise type(e)(f"{engine.value} {mode.value} sweep: {e}") from e

    out = output_dir(args, scenario, settings)
    stem = f"sweep_{mode.value}_{engine.value}"
    if output_format(args, scenario) == "json":
        data_path = write_json({"points": [p.model_dump() for p in curve.points]}, out / f"{stem}.json")
    else:
        data_path = write_curve_csv(curve, out / f"{stem}.csv")
    checks = service.slope_checks(curve)
    summary_path = write_summary_json(curve, checks, out / f"{stem}_summary.json")
    plot_path = write_svg([curve], out / f"{stem}.svg", title=f"{mode.value} sweep ({engine.value})")
    logger.info(f"Wrote {data_path}, {summary_path}, {plot_path}")

    print(to_json({
        "data": str(data_path),
        "summary": str(summary_path),
        "plot": str(plot_path),
        "fitted_slope": curve.fitted_slope,
        "endpoint_slopes": curve.endpoint_slopes,
        "fitted_alpha": curve.fitted_alpha,
        "passed": all(check.passed for check in checks),
    }))
    return 0
