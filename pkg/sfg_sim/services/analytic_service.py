"""Closed-form SFG rate laws for broadband down-converted light.

All functions are pure. Rates share one dimensionless efficiency ``alpha``
so that the correlated/uncorrelated ratio is free of unknown constants.
"""
import logging
from typing import Tuple

import numpy as np

from sfg_sim.errors import UndefinedRatioError
from sfg_sim.models.schemas import (
    AlphaFit,
    LinearQuadraticFit,
    OperatingPoint,
    RatePrediction,
    RatioReport,
    SpectralConfig,
    SweepCurve,
)
from sfg_sim.utils.fitting import fit_linear_quadratic as _fit_linear_quadratic
from sfg_sim.utils.fitting import fit_proportional
from sfg_sim.utils.units import bandwidth_nm_to_hz, flux_to_power, power_to_flux  # noqa: F401

logger = logging.getLogger(__name__)


def _check_alpha(alpha: float) -> None:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")


def crossover_flux(config: SpectralConfig) -> float:
    """Photon flux (s⁻¹) at n = 1, where distinct pairs start to overlap"""
    return config.dc_bandwidth


def crossover_power(config: SpectralConfig) -> float:
    return flux_to_power(crossover_flux(config), config.dc_center_wavelength)


def correlated_rate(config: SpectralConfig, op: OperatingPoint, alpha: float) -> float:
    """α·Δ_DC·(n² + n): SFG from photons born in the same pump mode"""
    _check_alpha(alpha)
    return alpha * config.dc_bandwidth * (op.n**2 + op.n)


def uncorrelated_rate(config: SpectralConfig, op: OperatingPoint, alpha: float) -> float:
    """α·δ_UC·n²: accidental SFG falling inside the up-conversion band"""
    _check_alpha(alpha)
    return alpha * config.uc_bandwidth * op.n**2


def classical_correlated_rate(config: SpectralConfig, op: OperatingPoint, alpha: float) -> float:
    """Correlated rate of phase-shaped classical fields: no linear term"""
    _check_alpha(alpha)
    return alpha * config.dc_bandwidth * op.n**2


def predict_rates(config: SpectralConfig, op: OperatingPoint, alpha: float) -> RatePrediction:
    return RatePrediction(
        n=op.n,
        correlated=correlated_rate(config, op, alpha),
        uncorrelated=uncorrelated_rate(config, op, alpha),
        alpha=alpha,
    )


def rate_ratio(config: SpectralConfig, n: float) -> RatioReport:
    """Correlated over uncorrelated rate, (Δ_DC/δ_UC)·(n+1)/n.

    The bound N·(n+1)/n with N = Δ_DC/δ_p is reached only when δ_UC = δ_p.
    """
    if n <= 0:
        raise UndefinedRatioError(f"rate ratio diverges at n = {n}")
    excess = (n + 1.0) / n
    ratio = (config.dc_bandwidth / config.uc_bandwidth) * excess
    bound = config.num_mode_pairs * excess
    return RatioReport(n=n, ratio=ratio, bound=bound, within_bound=ratio <= bound * (1 + 1e-12))


def classical_gain(config: SpectralConfig) -> float:
    """Spread-spectrum gain of correlated over uncorrelated SFG, Δ_DC/δ_UC"""
    return config.dc_bandwidth / config.uc_bandwidth


def quantum_gain(config: SpectralConfig, n: float) -> float:
    return rate_ratio(config, n).ratio


def loglog_slope(n: float) -> float:
    """Local slope d ln(n² + n)/d ln n = (1 + 2n)/(1 + n)"""
    if n <= 0:
        raise ValueError("loglog_slope requires n > 0")
    return (1.0 + 2.0 * n) / (1.0 + n)


def fit_alpha(curve: SweepCurve, config: SpectralConfig, weighted: bool = False) -> AlphaFit:
    """Fit counts = α·Δ_DC·(n + n²) to a pump-scaling curve.

    Unweighted least squares by default; ``weighted`` uses Poisson weights
    1/max(counts, 1).
    """
    n = np.asarray(curve.drives, dtype=float)
    counts = np.asarray(curve.means, dtype=float)
    model = config.dc_bandwidth * (n + n**2)
    weights = 1.0 / np.maximum(counts, 1.0) if weighted else None
    alpha, residual = fit_proportional(model, counts, weights)
    logger.info(f"Fitted alpha={alpha:.6g} (residual {residual:.3g}, weighted={weighted})")
    return AlphaFit(alpha=alpha, residual=residual, weighted=weighted)


def fit_linear_quadratic(n, counts, sigma=None) -> LinearQuadraticFit:
    """Free fit of counts = c1·n + c2·n²"""
    c1, c2, c1_err, c2_err = _fit_linear_quadratic(n, counts, sigma)
    return LinearQuadraticFit(c1=c1, c2=c2, c1_err=c1_err, c2_err=c2_err)


def density_for_power(config: SpectralConfig, power: float) -> float:
    """Spectral density n for a measured down-converted power (W)"""
    return power_to_flux(power, config.dc_center_wavelength) / config.dc_bandwidth


def rates_table(config: SpectralConfig, n_values, alpha: float) -> Tuple[RatePrediction, ...]:
    return tuple(predict_rates(config, OperatingPoint.from_density(config, n), alpha) for n in n_values)
