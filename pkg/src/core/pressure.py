"""
Pressure estimators: topological pressure from cylinder sups, Gurevich
pressure from periodic orbits through a reference cylinder, recurrence
classification and the supporting partition functions.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.config import Config
from contracts.estimates import (
    Enclosure,
    PeriodicFreeEnergy,
    PressureEstimate,
    RecurrenceReport,
    VariationalGapReport,
    ZnLowerBoundReport,
)
from core.exceptions import ComputationRefused, ConvergenceError
from core.interval_map import (
    Interval,
    PiecewiseMonotoneMap,
    periodic_points,
    topological_entropy,
)
from core.potential import Potential, beta_n, bounded_range_margin, orbit_images
from core.profiler import Profiler
from core.series import classify_series, log_sum_exp, window_regression

logger = logging.getLogger(__name__)

SUCCESSOR_TOLERANCE = 1e-7


# -- topological pressure ----------------------------------------------------


def _cylinder_sums(
    phi: Potential, fmap: PiecewiseMonotoneMap, m: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Per m-cylinder: Σ sup φ on f^k(C), Σ inf φ on f^k(C), φ_m(midpoint) and
    the full flag.
    """
    cache: Dict[Tuple, Tuple[float, float, float]] = {}
    sups, infs, mids, full = [], [], [], []
    tol = fmap.tolerance
    for cylinder in fmap.refine(m):
        sup_terms, inf_terms = [], []
        for image in orbit_images(fmap, cylinder.word, cylinder.interval):
            key = (image.left, image.right)
            if key not in cache:
                cache[key] = phi.bounds(image)
            inf, sup, err = cache[key]
            sup_terms.append(sup + err)
            inf_terms.append(inf - err)
        sups.append(math.fsum(sup_terms))
        infs.append(math.fsum(inf_terms))
        point = cylinder.interval.midpoint
        values = []
        for index in cylinder.word:
            values.append(phi.evaluate(point))
            point = fmap.branches[index].eval(point)
        mids.append(math.fsum(values))
        full.append(cylinder.image.left <= tol and cylinder.image.right >= 1 - tol)
    return np.array(sups), np.array(infs), np.array(mids), np.array(full, dtype=bool)


@Profiler.profile
def z_top(fmap: PiecewiseMonotoneMap, phi: Potential, m: int) -> Enclosure:
    """
    Z^top_m = Σ_{C ∈ P_m} exp(sup_C φ_m).

    The value uses the sums of sups of φ along f^k(C); the lower bound uses
    φ_m at the cylinder midpoints.
    """
    sups, _, mids, _ = _cylinder_sums(phi, fmap, m)
    upper = math.exp(log_sum_exp(sups))
    lower = math.exp(log_sum_exp(mids))
    return Enclosure(value=upper, lower=min(lower, upper), upper=upper)


@Profiler.profile
def p_top(fmap: PiecewiseMonotoneMap, phi: Potential, m_max: int) -> PressureEstimate:
    """
    Enclose P_top(φ).

    upper = min_m (1/m) log Z^top_m; lower is the best horseshoe bound
    (1/m) log Σ_{full C} e^{inf_C φ_m}; the value is the regression slope of
    log Z^top_m over the final third of the window.
    """
    if m_max < 2:
        raise ValueError("m_max must be at least 2")
    ms = list(range(1, m_max + 1))
    log_z, horseshoe = [], []
    for m in ms:
        sups, infs, _, full = _cylinder_sums(phi, fmap, m)
        log_z.append(log_sum_exp(sups))
        if full.any():
            horseshoe.append(log_sum_exp(infs[full]) / m)
    rates = [v / m for m, v in zip(ms, log_z)]
    upper = min(rates)
    flags = []
    if horseshoe:
        lower = min(max(horseshoe), upper)
    else:
        lower = -math.inf
        flags.append("no_horseshoe")
    if not math.isfinite(upper):
        flags.append("unbounded")
        return PressureEstimate(
            value=upper, lower=lower, upper=upper, window=(1, m_max),
            diagnostics=list(zip(ms, rates)), flags=flags,
        )
    slope, _, stderr, window = window_regression(ms, log_z)
    value = min(max(slope, lower), upper)
    logger.info(
        f"P_top({phi.name}) in [{lower:.10f}, {upper:.10f}], estimate {value:.10f}"
    )
    return PressureEstimate(
        value=value,
        lower=lower,
        upper=upper,
        window=window,
        diagnostics=list(zip(ms, rates)),
        stderr=stderr,
        flags=flags,
    )


# -- periodic orbits ---------------------------------------------------------


def _orbit_table(fmap: PiecewiseMonotoneMap, n: int) -> Tuple[List, np.ndarray]:
    """Periodic points of period n and the index of f(p) for each of them."""
    if n in fmap._orbits:
        return fmap._orbits[n]
    points = [p for _, p in periodic_points(fmap, n)]
    successors = np.empty(len(points), dtype=np.int64)
    if fmap.exact:
        index = {p: i for i, p in enumerate(points)}
        for i, p in enumerate(points):
            q = fmap(p)
            if fmap.circle and q == 1:
                q = fmap.coerce(0)
            if q not in index:
                raise ConvergenceError(f"f({p}) = {q} is not a point of period {n}")
            successors[i] = index[q]
    else:
        array = np.array([float(p) for p in points])
        for i, p in enumerate(points):
            q = float(fmap(p))
            if fmap.circle and abs(q - 1) <= SUCCESSOR_TOLERANCE:
                q = 0.0
            j = int(np.argmin(np.abs(array - q)))
            if abs(array[j] - q) > SUCCESSOR_TOLERANCE:
                raise ConvergenceError(f"f({p}) = {q} is not a point of period {n}")
            successors[i] = j
    fmap._orbits[n] = (points, successors)
    return points, successors


def _periodic_sums(
    fmap: PiecewiseMonotoneMap, phi: Potential, n: int
) -> Tuple[List, np.ndarray, np.ndarray]:
    points, successors = _orbit_table(fmap, n)
    values = np.array([phi.evaluate(p) for p in points], dtype=float)
    sums = values.copy()
    current = successors.copy()
    for _ in range(n - 1):
        sums += values[current]
        current = successors[current]
    return points, successors, sums


def _membership(points: Sequence, region: Optional[Interval]) -> np.ndarray:
    if region is None:
        return np.ones(len(points), dtype=bool)
    return np.array([region.contains(p) for p in points], dtype=bool)


def log_z_n(
    fmap: PiecewiseMonotoneMap, phi: Potential, region: Optional[Interval], n: int
) -> float:
    points, _, sums = _periodic_sums(fmap, phi, n)
    mask = _membership(points, region)
    return log_sum_exp(sums[mask])


def z_n(
    fmap: PiecewiseMonotoneMap, phi: Potential, region: Optional[Interval], n: int
) -> float:
    """Z_n(φ, C) = Σ_{f^n p = p, p ∈ C} e^{φ_n(p)}; C=None means the whole interval."""
    return math.exp(log_z_n(fmap, phi, region, n))


def log_z_n_star(
    fmap: PiecewiseMonotoneMap, phi: Potential, region: Optional[Interval], n: int
) -> float:
    points, successors, sums = _periodic_sums(fmap, phi, n)
    inside = _membership(points, region)
    keep = inside.copy()
    current = successors.copy()
    for _ in range(n - 1):
        keep &= ~inside[current]
        current = successors[current]
    return log_sum_exp(sums[keep])


def z_n_star(
    fmap: PiecewiseMonotoneMap, phi: Potential, region: Optional[Interval], n: int
) -> float:
    """Like z_n, restricted to points whose orbit first returns to C at time n."""
    return math.exp(log_z_n_star(fmap, phi, region, n))


@Profiler.profile
def gurevich_pressure(
    fmap: PiecewiseMonotoneMap,
    phi: Potential,
    region: Optional[Interval] = None,
    n_max: int = 14,
    alternate_region: Optional[Interval] = None,
) -> PressureEstimate:
    """
    P_G(φ) = lim (1/n) log Z_n(φ, C), estimated by regression over the final
    third of n = 1..n_max.
    """
    ns = list(range(1, n_max + 1))
    logs = [log_z_n(fmap, phi, region, n) for n in ns]
    diagnostics = [(n, v / n) for n, v in zip(ns, logs)]
    finite = [v for v in logs if math.isfinite(v)]
    if len(finite) < 2:
        return PressureEstimate(
            value=-math.inf, lower=-math.inf, upper=-math.inf, window=(1, n_max),
            diagnostics=diagnostics, flags=["undetermined"],
        )
    slope, _, stderr, window = window_regression(ns, logs)
    estimate = PressureEstimate(
        value=slope,
        lower=slope - 2 * stderr,
        upper=slope + 2 * stderr,
        window=window,
        diagnostics=diagnostics,
        stderr=stderr,
    )
    if alternate_region is not None:
        other = gurevich_pressure(fmap, phi, alternate_region, n_max)
        estimate = estimate.model_copy(update={"alternate": other.value})
        logger.info(
            f"P_G through two cylinders: {slope:.6f} vs {other.value:.6f}"
        )
    return estimate


def periodic_free_energy(
    fmap: PiecewiseMonotoneMap, phi: Potential, n_max: int = None
) -> PeriodicFreeEnergy:
    """max over periodic points p of period <= n_max of φ_n(p)/n."""
    n_max = n_max or Config.PERIODIC_BRACKET_PERIOD
    best = PeriodicFreeEnergy(value=-math.inf, period=0, point=0.0)
    for n in range(1, n_max + 1):
        points, _, sums = _periodic_sums(fmap, phi, n)
        if len(points) == 0:
            continue
        i = int(np.argmax(sums))
        if sums[i] / n > best.value:
            best = PeriodicFreeEnergy(
                value=float(sums[i] / n), period=n, point=float(points[i])
            )
    return best


# -- recurrence --------------------------------------------------------------


@Profiler.profile
def recurrence_classify(
    fmap: PiecewiseMonotoneMap,
    phi: Potential,
    region: Interval,
    lam: float,
    n_max: int = 14,
    return_region: Optional[Interval] = None,
) -> RecurrenceReport:
    """
    Classify φ against λ from Σ λ^{-n} Z_n(φ, C) and Σ n λ^{-n} Z*_n(φ, C').

    ``return_region`` is the cylinder used for first returns (defaults to
    ``region``).
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    ns = list(range(1, n_max + 1))
    log_lam = math.log(lam)
    first_terms = [math.exp(log_z_n(fmap, phi, region, n) - n * log_lam) for n in ns]
    first = classify_series(first_terms, ns)
    second = None
    if first.verdict == "divergent":
        star_region = return_region or region
        second_terms = [
            n * math.exp(log_z_n_star(fmap, phi, star_region, n) - n * log_lam)
            for n in ns
        ]
        second = classify_series(second_terms, ns)
        if second.verdict == "convergent":
            classification = "positive_recurrent"
        elif second.verdict == "divergent":
            classification = "null_recurrent"
        else:
            classification = "recurrent"
    elif first.verdict == "convergent":
        classification = "transient"
    else:
        classification = "undetermined"
    logger.info(f"{phi.name} at lambda={lam:.6g}: {classification}")
    return RecurrenceReport(
        classification=classification, lam=lam, first=first, second=second
    )


@Profiler.profile
def znlowerbound_check(
    fmap: PiecewiseMonotoneMap,
    phi: Potential,
    n_min: int = 4,
    n_max: int = 14,
    pressure: Optional[float] = None,
) -> ZnLowerBoundReport:
    """
    η_n = Z_n(φ) e^{β_n(φ)} e^{-nP} on [n_min, n_max] and its running minimum.

    Raises:
        ComputationRefused: Without a positive bounded-range margin.
    """
    h_top = topological_entropy(fmap, n_max).value
    margin = bounded_range_margin(phi, h_top)
    if not margin.holds:
        raise ComputationRefused(
            "the lower bound for Z_n needs sup φ - inf φ < h_top",
            {"margin": margin.margin, "h_top": h_top},
        )
    if pressure is None:
        pressure = p_top(fmap, phi, n_max).value
    etas, running = [], []
    current_min = math.inf
    for n in range(n_min, n_max + 1):
        log_eta = (
            log_z_n(fmap, phi, None, n) + beta_n(phi, fmap, n).upper - n * pressure
        )
        eta = math.exp(log_eta)
        etas.append((n, eta))
        current_min = min(current_min, eta)
        running.append((n, current_min))
    first, last = running[0][1], running[-1][1]
    stable = first > 0 and (first - last) / first < 0.5
    return ZnLowerBoundReport(
        window=(n_min, n_max),
        pressure=pressure,
        eta_values=etas,
        running_min=running,
        eta=last,
        stable=stable,
        positive=last > 0,
    )


def variational_gap(
    fmap: PiecewiseMonotoneMap,
    phi: Potential,
    n_max: int = 14,
    region: Optional[Interval] = None,
    slack: float = 0.05,
) -> VariationalGapReport:
    """|P_top(φ) - P_G(φ)|; the two agree when φ has a positive range margin."""
    top = p_top(fmap, phi, n_max)
    gurevich = gurevich_pressure(fmap, phi, region, n_max)
    gap = abs(top.value - gurevich.value)
    return VariationalGapReport(
        p_top=top, p_gurevich=gurevich, gap=gap, consistent=gap <= slack
    )


# -- induced partition function ---------------------------------------------


def z0(induced) -> Enclosure:
    """
    Z_0(Φ) = Σ_i exp(sup_{X_i} Φ) over enumerated branches plus the tail model.
    """
    head = math.exp(log_sum_exp(induced.sups))
    if induced.tail is None:
        return Enclosure(value=head, lower=head, upper=head)
    lo, hi = induced.tail.enclosure(induced.scheme.horizon, induced.tail_shift, 0)
    finite = math.isfinite(hi)
    return Enclosure(
        value=head + (lo + hi) / 2 if finite else math.inf,
        lower=head + lo,
        upper=head + hi,
        finite=finite,
    )
