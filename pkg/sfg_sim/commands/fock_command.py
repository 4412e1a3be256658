import argparse
import logging

from sfg_sim.commands.common import csv_text, load_scenario, output_dir, output_format, resolve_seed
from sfg_sim.config.settings import Settings
from sfg_sim.models.schemas import AmplitudeLaw, LossChannel
from sfg_sim.services import fock_service as fock
from sfg_sim.utils.reports import to_json, write_json
from sfg_sim.utils.rng import derive_seed

logger = logging.getLogger(__name__)

GAIN_PAIRS = (1, 2, 3, 4)


def state_report(n: float, num_pairs: int, cutoff: int, law: AmplitudeLaw) -> dict:
    state = fock.build_state(n, num_pairs, cutoff, law=law)
    return {
        "n": n,
        "num_pairs": num_pairs,
        "cutoff": cutoff,
        "law": law.value,
        "dim": state.dim,
        "truncation_deficit": state.truncation_deficit,
        "correlated": fock.sfg_rate_correlated(state),
        "coherent": fock.sfg_rate_coherent(state),
        "uncorrelated": fock.sfg_rate_uncorrelated(state) if num_pairs >= 2 else 0.0,
    }


def gain_table(n: float, samples: int, seed: int) -> list:
    """Rates of N mode pairs over the N = 1 rate, at cutoff 1"""
    single = fock.build_state(n, 1, 1)
    base_correlated = fock.sfg_rate_correlated(single)
    base_coherent = fock.sfg_rate_coherent(single)
    rows = []
    for num_pairs in GAIN_PAIRS:
        state = fock.build_state(n, num_pairs, 1)
        dephased = fock.dephased_rates(state, samples, derive_seed(seed, "fock-gain", num_pairs))
        rows.append({
            "num_pairs": num_pairs,
            "correlated_gain": fock.sfg_rate_correlated(state) / base_correlated,
            "coherent_gain": fock.sfg_rate_coherent(state) / base_coherent,
            "dephased_gain": dephased.correlated_mean / base_correlated,
            "dephased_gain_sem": dephased.correlated_sem / base_correlated,
        })
    return rows


def loss_table(n: float, num_pairs: int, cutoff: int, law: AmplitudeLaw, transmissions) -> list:
    state = fock.build_state(n, num_pairs, cutoff, law=law)
    correlated = fock.sfg_rate_correlated(state)
    coherent = fock.sfg_rate_coherent(state)
    rows = []
    for t in transmissions:
        lossy = fock.apply_loss(state, LossChannel(transmissivity=t))
        rows.append({
            "transmissivity": t,
            "expected": t**2,
            "correlated_ratio": fock.sfg_rate_correlated(lossy) / correlated,
            "coherent_ratio": fock.sfg_rate_coherent(lossy) / coherent,
        })
    return rows


def run(args: argparse.Namespace, settings: Settings) -> int:
    """Fock-engine rates, N² gain table and loss table"""
    scenario = load_scenario(args)
    seed = resolve_seed(args, scenario)
    section = scenario.fock
    n = args.n if args.n is not None else section.density
    num_pairs = args.num_pairs or section.num_pairs
    cutoff = args.cutoff or section.cutoff
    if n <= 0:
        raise ValueError("the fock report needs n > 0")

    logger.info("=== Fock engine report ===")
    payload = {
        "state": state_report(n, num_pairs, cutoff, section.law),
        "gain": gain_table(n, section.dephase_samples, seed),
        "loss": loss_table(n, num_pairs, cutoff, section.law, scenario.operating.transmissions),
        "seed": seed,
    }

    if output_format(args, scenario) == "json":
        print(to_json(payload))
    else:
        print(csv_text([payload["state"]]))
        print(csv_text(payload["gain"]))
        print(csv_text(payload["loss"]), end="")

    if args.out is not None:
        path = write_json(payload, output_dir(args, scenario, settings) / "fock.json")
        logger.info(f"Wrote {path}")
    return 0
