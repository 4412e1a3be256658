"""Least-squares helpers shared by the analytic, experiment and validation code."""
from typing import Optional, Sequence, Tuple

import numpy as np

from sfg_sim.errors import DegenerateFitError


def _as_positive_pairs(x: Sequence[float], y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateFitError("x and y must be 1-D arrays of equal length")
    if np.unique(x).size < 2:
        raise DegenerateFitError("need at least two distinct drive values")
    return x, y


def fit_proportional(
    x: Sequence[float],
    y: Sequence[float],
    weights: Optional[Sequence[float]] = None,
) -> Tuple[float, float]:
    """Fit y = s·x. Returns (s, normalized RMS residual).

    The residual is sqrt(Σw(y − s·x)² / Σw·y²), i.e. the share of the data
    the model leaves unexplained.
    """
    x, y = _as_positive_pairs(x, y)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    root_w = np.sqrt(w)
    solution, *_ = np.linalg.lstsq((root_w * x)[:, None], root_w * y, rcond=None)
    scale = float(solution[0])
    norm = float(np.sum(w * y**2))
    if norm == 0:
        raise DegenerateFitError("all counts are zero")
    residual = float(np.sqrt(np.sum(w * (y - scale * x) ** 2) / norm))
    return scale, residual


def fit_linear_quadratic(
    n: Sequence[float],
    counts: Sequence[float],
    sigma: Optional[Sequence[float]] = None,
) -> Tuple[float, float, float, float]:
    """Fit counts = c1·n + c2·n². Returns (c1, c2, err(c1), err(c2)).

    With ``sigma`` the fit is weighted and the errors come from the stated
    uncertainties; otherwise they are scaled by the residual variance.
    """
    n, counts = _as_positive_pairs(n, counts)
    if n.size < 3:
        raise DegenerateFitError("need at least three points for a two-parameter fit")
    design = np.column_stack([n, n**2])
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=float)
        if np.any(sigma <= 0):
            raise ValueError("sigma must be positive")
        design_w = design / sigma[:, None]
        counts_w = counts / sigma
    else:
        design_w, counts_w = design, counts
    coeffs, *_ = np.linalg.lstsq(design_w, counts_w, rcond=None)
    cov = np.linalg.inv(design_w.T @ design_w)
    if sigma is None:
        dof = n.size - 2
        rss = float(np.sum((counts_w - design_w @ coeffs) ** 2))
        cov = cov * (rss / dof)
    errors = np.sqrt(np.diag(cov))
    return float(coeffs[0]), float(coeffs[1]), float(errors[0]), float(errors[1])


def fit_loglog_slope(drives: Sequence[float], values: Sequence[float]) -> float:
    """Ordinary least-squares slope of ln(values) against ln(drives)"""
    drives, values = _as_positive_pairs(drives, values)
    if np.any(drives <= 0) or np.any(values <= 0):
        raise DegenerateFitError("log-log fit needs strictly positive drives and values")
    slope, _ = np.polyfit(np.log(drives), np.log(values), 1)
    return float(slope)


def endpoint_slopes(drives: Sequence[float], values: Sequence[float]) -> Tuple[float, float]:
    """Two-point log-log slopes at the low and high ends of a curve"""
    drives, values = _as_positive_pairs(drives, values)
    if np.any(drives <= 0) or np.any(values <= 0):
        raise DegenerateFitError("log-log slopes need strictly positive drives and values")
    if drives[1] == drives[0] or drives[-1] == drives[-2]:
        raise DegenerateFitError("endpoint slopes need distinct first and last two drives")
    log_d = np.log(drives)
    log_v = np.log(values)
    low = (log_v[1] - log_v[0]) / (log_d[1] - log_d[0])
    high = (log_v[-1] - log_v[-2]) / (log_d[-1] - log_d[-2])
    return float(low), float(high)
