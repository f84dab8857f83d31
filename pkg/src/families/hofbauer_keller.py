"""
The Hofbauer–Keller potentials φ_{b,K} on the doubling map: closed-form
series, the critical parameter b_K, the phase table and the periodic cycles
behind null recurrence.
"""
import logging
import math
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import polygamma

from abstractions.tail_model import TailModel
from contracts.equilibrium import PhaseRow, SeriesEnclosure
from core.exceptions import ConvergenceError, MapDefinitionError
from core.inducing import (
    InducedPotential,
    InducingScheme,
    doubling_scheme,
    induced_potential,
)
from core.interval_map import PiecewiseMonotoneMap
from core.map_families import doubling
from core.potential import Potential, hofbauer_keller
from core.tails import DIVERGENT, GeometricTail, PowerLawTail

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
SERIES_TERMS = 1000
BOUNDARY_TOLERANCE = 1e-8
# explicit summation of shifted series stops below this term size
SHIFTED_CUTOFF = 1e-18


class HKFamily:
    """
    a_k = b for k < K and 2 log((k+1)/(k+2)) for k >= K; s_n = Σ_{k<n} a_k.
    ``K=None`` is the K = ∞ member (a_k = b for all k); K = 0 is the pure
    log-ratio potential.
    """

    def __init__(self, b: float, K: Optional[int] = 2):
        if b >= 0:
            raise MapDefinitionError(f"b must be negative, got {b}")
        if K is not None and K < 0:
            raise MapDefinitionError(f"K must be a nonnegative integer, got {K}")
        self.b = float(b)
        self.K = K

    @property
    def infinite(self) -> bool:
        return self.K is None

    def a(self, k: int) -> float:
        if self.K is None or k < self.K:
            return self.b
        return 2.0 * math.log((k + 1) / (k + 2))

    def s(self, n: int) -> float:
        if self.K is None or n <= self.K:
            return n * self.b
        return self.K * self.b + 2.0 * math.log((self.K + 1) / (n + 1))

    def log_tail_constant(self) -> float:
        """e^{s_n} = e^{this} (n+1)^{-2} for n > K."""
        return self.K * self.b + 2.0 * math.log(self.K + 1)

    def series(self, n_trunc: int = SERIES_TERMS) -> SeriesEnclosure:
        """
        Σ_{n>=1} e^{s_n}: exact head up to ``n_trunc`` and the tail
        e^{Kb}(K+1)^2 Σ_{n>N} (n+1)^{-2}, bracketed by [1/(N+2), 1/(N+1)] and
        evaluated with the trigamma function.
        """
        if self.K is None:
            value = math.exp(self.b) / -math.expm1(self.b)
            return SeriesEnclosure(
                value=value, lower=value, upper=value, terms_summed=0
            )
        n_trunc = max(n_trunc, self.K)
        head = math.fsum(math.exp(self.s(n)) for n in range(1, n_trunc + 1))
        c = math.exp(self.log_tail_constant())
        exact_tail = c * float(polygamma(1, n_trunc + 2))
        return SeriesEnclosure(
            value=head + exact_tail,
            lower=head + c / (n_trunc + 2),
            upper=head + c / (n_trunc + 1),
            terms_summed=n_trunc,
        )

    def upper_bound(self) -> float:
        """e^b (1 - e^{bK})/(1 - e^b) + e^{bK}(K+1)."""
        if self.K is None:
            return self.series().value
        return (
            math.exp(self.b) * -math.expm1(self.b * self.K) / -math.expm1(self.b)
            + math.exp(self.b * self.K) * (self.K + 1)
        )

    def moment_finite(self) -> bool:
        """Σ (k+1) e^{s_k} < ∞; only the K = ∞ member converges."""
        return self.K is None

    def a_sum_finite(self) -> bool:
        """Σ a_k converges; never for b < 0."""
        return False

    def potential(self) -> Potential:
        return hofbauer_keller(self.b, self.K)

    def tail(self) -> TailModel:
        if self.K is None:
            return GeometricTail(self.b, 1)
        return HKTail(self.b, self.K)

    def __repr__(self) -> str:
        return f"HKFamily(b={self.b}, K={'inf' if self.K is None else self.K})"


class HKTail(PowerLawTail):
    """
    Exact tail e^{s_n} = e^{Kb}(K+1)^2 (n+1)^{-2} of the doubling scheme,
    with the n <= K terms added explicitly when the horizon is below K.
    """

    def __init__(self, b: float, K: int):
        self.family = HKFamily(b, K)
        log_c = self.family.log_tail_constant()
        super().__init__(log_c, log_c, exponent=2.0, offset=1.0)

    def log_weight(self, n: int) -> float:
        return self.family.s(n)

    def enclosure(
        self, horizon: int, shift: float = 0.0, moment: int = 0
    ) -> Tuple[float, float]:
        K = self.family.K
        if horizon >= K:
            return super().enclosure(horizon, shift, moment)
        lo, hi = super().enclosure(K, shift, moment)
        if not math.isfinite(hi):
            return DIVERGENT
        head = math.fsum(
            n**moment * math.exp(self.family.s(n) - shift * n)
            for n in range(horizon + 1, K + 1)
        )
        return lo + head, hi + head

    def __repr__(self) -> str:
        return f"HKTail(b={self.family.b}, K={self.family.K})"


def hk_series(
    b: float, K: Optional[int], n_trunc: int = SERIES_TERMS
) -> SeriesEnclosure:
    return HKFamily(b, K).series(n_trunc)


def hk_critical_b(K: int, tol: float = 1e-14) -> float:
    """
    The b_K < -log 2 with Σ e^{s_n} = 1.

    Raises:
        ConvergenceError: If the bracket [-10, -log 2] does not contain the root.
    """
    if K < 2:
        raise MapDefinitionError(f"b_K is defined for K >= 2, got {K}")

    def excess(b: float) -> float:
        return hk_series(b, K).value - 1.0

    lo, hi = -10.0, -LOG2
    if excess(lo) >= 0 or excess(hi) <= 0:
        raise ConvergenceError(
            f"no sign change of Σe^(s_n) - 1 on [{lo}, {hi}] for K={K}"
        )
    root = brentq(excess, lo, hi, xtol=tol, rtol=8.9e-16)
    if not root < -LOG2:
        raise ConvergenceError(f"b_{K} = {root} is not below -log 2")
    logger.debug(f"b_{K} = {root:.15f}")
    return root


PHASE_TABLE = {
    "supercritical_summable": (True, True, True),
    "supercritical": (True, False, True),
    "critical_positive_recurrent": (False, False, False),
    "critical_null_recurrent": (False, False, True),
    "subcritical": (False, False, True),
}


def classify_phase(
    series: SeriesEnclosure,
    a_sum_finite: bool,
    moment_finite: bool,
    tolerance: float = BOUNDARY_TOLERANCE,
) -> PhaseRow:
    """
    Row of the phase table: compares Σ e^{s_k} with 1, then consults Σ a_k
    (above 1) or Σ (k+1) e^{s_k} (at 1).

    The scheme sees the equilibrium state exactly when the pressure is
    positive.
    """
    if abs(series.value - 1.0) <= tolerance:
        if moment_finite:
            regime = "critical_positive_recurrent"
        else:
            regime = "critical_null_recurrent"
        boundary = True
    elif series.value > 1.0:
        regime = "supercritical_summable" if a_sum_finite else "supercritical"
        boundary = False
    else:
        regime = "subcritical"
        boundary = False
    pressure_positive, gibbs, unique = PHASE_TABLE[regime]
    return PhaseRow(
        regime=regime,
        pressure_positive=pressure_positive,
        gibbs=gibbs,
        unique=unique,
        accessible=pressure_positive,
        boundary=boundary,
    )


def hk_phase(
    b: float, K: Optional[int], tolerance: float = BOUNDARY_TOLERANCE
) -> PhaseRow:
    family = HKFamily(b, K)
    return classify_phase(
        family.series(), family.a_sum_finite(), family.moment_finite(), tolerance
    )


def hk_cycle(n: int) -> List[Fraction]:
    """
    The n-cycle p_n^k = 2^{n-k}/(2^n - 1), k = 1..n, of the doubling map, with
    f(p^k) = p^{k-1} and f(p^1) = p^n. For n = 1 this is {1}, identified with
    the fixed point 0 on the circle.
    """
    if n < 1:
        raise ValueError(f"cycle length must be positive, got {n}")
    denominator = 2**n - 1
    return [Fraction(2 ** (n - k), denominator) for k in range(1, n + 1)]


def hk_cycle_lower_bound(b: float, K: Optional[int], n: int) -> float:
    """n e^{s_n}, the contribution of the n-cycle to Z_n(φ, C_0)."""
    return n * math.exp(HKFamily(b, K).s(n))


def hk_shifted_series(b: float, K: Optional[int], S: float) -> SeriesEnclosure:
    """Σ_n e^{s_n - nS}; divergent for S < 0."""
    family = HKFamily(b, K)
    if S == 0:
        return family.series()
    if S < 0:
        return SeriesEnclosure(
            value=math.inf,
            lower=math.inf,
            upper=math.inf,
            terms_summed=0,
            finite=False,
        )
    terms = []
    n = 1
    while True:
        term = math.exp(family.s(n) - n * S)
        terms.append(term)
        if (family.K is None or n > family.K) and term < SHIFTED_CUTOFF:
            break
        n += 1
    head = math.fsum(terms)
    # e^{s_m} is nonincreasing beyond K, so the tail is below a geometric series
    remainder = math.exp(family.s(n + 1) - (n + 1) * S) / -math.expm1(-S)
    return SeriesEnclosure(
        value=head + remainder / 2,
        lower=head,
        upper=head + remainder,
        terms_summed=n,
    )


def hk_induced(
    b: float,
    K: Optional[int],
    n_max: int = 40,
    fmap: Optional[PiecewiseMonotoneMap] = None,
) -> Tuple[PiecewiseMonotoneMap, InducingScheme, InducedPotential]:
    """
    Doubling map, its first return to [1/2, 1] and Φ = φ_{b,K} induced with
    the exact tail.
    """
    family = HKFamily(b, K)
    fmap = fmap or doubling()
    scheme = doubling_scheme(fmap, n_max)
    return fmap, scheme, induced_potential(family.potential(), scheme, family.tail())


def phase_scan(
    K: int, b_grid: np.ndarray, tolerance: float = BOUNDARY_TOLERANCE
) -> Tuple[float, List[Tuple[float, PhaseRow]]]:
    """Phase rows over a b-grid at fixed K together with b_K."""
    b_K = hk_critical_b(K)
    rows = [(float(b), hk_phase(float(b), K, tolerance)) for b in b_grid]
    rows.append((b_K, hk_phase(b_K, K, tolerance)))
    rows.sort(key=lambda r: r[0])
    return b_K, rows
