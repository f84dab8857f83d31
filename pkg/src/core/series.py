"""
Numerical helpers for growth rates and for deciding whether a positive
series converges from finitely many terms.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp
from scipy.stats import linregress

from config.config import Config
from contracts.estimates import SeriesFit

logger = logging.getLogger(__name__)

# log-log slope of the terms below which a series is declared convergent
POWER_DECAY_THRESHOLD = -1.25


def log_sum_exp(values: Sequence[float]) -> float:
    """log Σ e^{v}; -inf for an empty sequence or all -inf entries."""
    array = np.asarray(list(values), dtype=float)
    if array.size == 0 or np.all(np.isneginf(array)):
        return -math.inf
    return float(logsumexp(array))


def window_regression(
    ns: Sequence[float], ys: Sequence[float], fraction: float = 1.0 / 3.0
) -> Tuple[float, float, float, Tuple[int, int]]:
    """
    Least-squares slope of ys against ns over the final ``fraction`` of the data.

    Non-finite ys are dropped first. Returns (slope, intercept, stderr, window).
    """
    pairs = [(n, y) for n, y in zip(ns, ys) if math.isfinite(y)]
    if len(pairs) < 2:
        raise ValueError("window regression needs at least two finite values")
    size = max(2, int(math.ceil(len(pairs) * fraction)))
    if size < 3 and len(pairs) >= 3:
        size = 3
    window = pairs[-size:]
    xs = np.array([p[0] for p in window], dtype=float)
    vs = np.array([p[1] for p in window], dtype=float)
    fit = linregress(xs, vs)
    stderr = float(fit.stderr)
    if len(window) < 3 or not math.isfinite(stderr):
        stderr = 0.0
    return float(fit.slope), float(fit.intercept), stderr, (int(xs[0]), int(xs[-1]))


def fit_exponential_rate(
    ns: Sequence[int], values: Sequence[float]
) -> Tuple[float, float]:
    """
    Decay rate r of values ≈ C e^{-r n}, fitted on the positive entries.

    Returns (rate, r_squared).
    """
    pairs = [(n, math.log(v)) for n, v in zip(ns, values) if v > 0]
    if len(pairs) < 2:
        raise ValueError("need at least two positive values to fit a rate")
    fit = linregress([p[0] for p in pairs], [p[1] for p in pairs])
    return -float(fit.slope), float(fit.rvalue**2)


def _relative_residual(xs: np.ndarray, ys: np.ndarray) -> Tuple[float, float, float]:
    fit = linregress(xs, ys)
    predicted = fit.intercept + fit.slope * xs
    scale = max(float(np.mean(np.abs(ys))), 1e-300)
    residual = float(np.sqrt(np.mean((ys - predicted) ** 2))) / scale
    return float(fit.slope), float(fit.intercept), residual


def fit_growth(ns: Sequence[int], partial_sums: Sequence[float]) -> SeriesFit:
    """
    Fit S_N ≈ a·log N + c and S_N ≈ a·N + c on the last half of the window and
    keep the better of the two models with positive rate.
    """
    ns_arr = np.asarray(ns, dtype=float)
    sums = np.asarray(partial_sums, dtype=float)
    half = max(3, len(ns_arr) // 2)
    xs, ys = ns_arr[-half:], sums[-half:]
    best: Optional[SeriesFit] = None
    if len(xs) >= 2 and np.ptp(ys) > 0:
        for model, abscissa in (("log", np.log(xs)), ("linear", xs)):
            slope, intercept, residual = _relative_residual(abscissa, ys)
            if slope <= 0:
                continue
            if best is None or residual < best.residual:
                best = SeriesFit(
                    verdict="undetermined",
                    model=model,
                    rate=slope,
                    intercept=intercept,
                    residual=residual,
                    partial_sums=[float(s) for s in partial_sums],
                )
    if best is None:
        return SeriesFit(
            verdict="undetermined",
            model="bounded",
            partial_sums=[float(s) for s in partial_sums],
        )
    return best


def classify_series(
    terms: Sequence[float],
    ns: Optional[Sequence[int]] = None,
    ceiling: Optional[float] = None,
    residual_tolerance: Optional[float] = None,
) -> SeriesFit:
    """
    Decide convergence of Σ terms from a finite prefix.

    Policy, in order: a partial sum above the ceiling means divergent; terms
    that vanish or decay faster than n^{-1.25} on the last half mean
    convergent; a log or linear fit of the partial sums with positive rate
    and relative residual below the tolerance means divergent; anything else
    is undetermined.
    """
    ceiling = Config.DIVERGENCE_CEILING if ceiling is None else ceiling
    residual_tolerance = (
        Config.FIT_RESIDUAL if residual_tolerance is None else residual_tolerance
    )
    values = np.asarray(terms, dtype=float)
    if np.any(values < 0):
        raise ValueError("series classification expects nonnegative terms")
    ns = list(range(1, len(values) + 1)) if ns is None else list(ns)
    partial = np.cumsum(values)
    partial_list = [float(s) for s in partial]

    if np.any(np.isinf(values)) or (partial.size and partial[-1] > ceiling):
        return SeriesFit(
            verdict="divergent", model="exceeds_ceiling", partial_sums=partial_list
        )

    half = max(3, len(values) // 2)
    tail_terms = values[-half:]
    tail_ns = np.asarray(ns[-half:], dtype=float)
    if partial.size == 0 or np.all(tail_terms == 0):
        return SeriesFit(
            verdict="convergent", model="bounded", partial_sums=partial_list
        )
    if np.all(tail_terms > 0) and len(tail_terms) >= 2:
        slope = linregress(np.log(tail_ns), np.log(tail_terms)).slope
        if slope < POWER_DECAY_THRESHOLD:
            ratio = tail_terms[-1] / tail_terms[-2]
            model = "geometric" if ratio < 0.9 else "power"
            return SeriesFit(
                verdict="convergent",
                model=model,
                rate=float(-slope),
                partial_sums=partial_list,
            )

    growth = fit_growth(ns, partial_list)
    if growth.model in ("log", "linear") and growth.residual < residual_tolerance:
        return growth.model_copy(update={"verdict": "divergent"})
    logger.debug(
        f"series undetermined: model={growth.model} residual={growth.residual:.3g}"
    )
    return growth.model_copy(update={"verdict": "undetermined"})
