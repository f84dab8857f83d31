"""
Tail models for inducing schemes whose branches are enumerated only up to a
finite inducing time.
"""
import math
from typing import Tuple

import numpy as np
from scipy.special import zeta

from abstractions.tail_model import TailModel

# explicit summation stops once e^{-S n} falls below e^{-EXPLICIT_DECAY}
EXPLICIT_DECAY = 60.0
MAX_EXPLICIT_TERMS = 5_000_000

DIVERGENT = (math.inf, math.inf)


class GeometricTail(TailModel):
    """
    ``multiplicity`` branches per inducing time with Φ = c·n on each.
    """

    def __init__(self, c: float, multiplicity: int = 1):
        self.c = float(c)
        self.multiplicity = multiplicity

    def log_weight(self, n: int) -> float:
        return math.log(self.multiplicity) + self.c * n

    def branch_count(self, n: int) -> int:
        return self.multiplicity

    def critical_shift(self) -> float:
        return self.c

    def enclosure(
        self, horizon: int, shift: float = 0.0, moment: int = 0
    ) -> Tuple[float, float]:
        r = math.exp(self.c - shift)
        if r >= 1:
            return DIVERGENT
        start = horizon + 1
        if moment == 0:
            total = r**start / (1 - r)
        elif moment == 1:
            total = r**start * (start - horizon * r) / (1 - r) ** 2
        else:
            count = int(EXPLICIT_DECAY / -math.log(r)) + 2
            ns = np.arange(start, start + count, dtype=float)
            total = float(np.sum(ns**moment * r**ns))
        total *= self.multiplicity
        return total, total

    def __repr__(self) -> str:
        return f"GeometricTail(c={self.c}, multiplicity={self.multiplicity})"


class PowerLawTail(TailModel):
    """
    weight(n) = C·(n + offset)^{-p} with log C in [log_c_lower, log_c_upper].
    """

    def __init__(
        self,
        log_c_lower: float,
        log_c_upper: float,
        exponent: float,
        offset: float = 0.0,
    ):
        if log_c_lower > log_c_upper:
            raise ValueError("log_c_lower must not exceed log_c_upper")
        self.log_c_lower = float(log_c_lower)
        self.log_c_upper = float(log_c_upper)
        self.exponent = float(exponent)
        self.offset = float(offset)

    def log_weight(self, n: int) -> float:
        log_c = 0.5 * (self.log_c_lower + self.log_c_upper)
        return log_c - self.exponent * math.log(n + self.offset)

    def critical_shift(self) -> float:
        return 0.0

    def _unit_sum(self, horizon: int, shift: float, moment: int) -> Tuple[float, float]:
        """Σ_{n>horizon} n^moment (n+offset)^{-p} e^{-shift n}."""
        p, q = self.exponent, horizon + 1 + self.offset
        if shift < 0:
            return DIVERGENT
        if shift == 0:
            if p - moment <= 1:
                return DIVERGENT
            if moment == 0:
                total = float(zeta(p, q))
                return total, total
            if moment == 1:
                total = float(zeta(p - 1, q) - self.offset * zeta(p, q))
                return total, total
        count = MAX_EXPLICIT_TERMS
        if shift > 0:
            count = min(count, int(EXPLICIT_DECAY / shift) + 2)
        ns = np.arange(horizon + 1, horizon + 1 + count, dtype=float)
        terms = ns**moment * (ns + self.offset) ** -p * np.exp(-shift * ns)
        head = float(np.sum(terms))
        last = ns[-1] + 1
        if shift > 0:
            remainder = (
                last**moment
                * (last + self.offset) ** -p
                * math.exp(-shift * last)
                / -math.expm1(-shift)
            )
        else:
            remainder = (
                float(zeta(p - moment, last + self.offset))
                * (1 + self.offset) ** moment
            )
        return head, head + remainder

    def enclosure(
        self, horizon: int, shift: float = 0.0, moment: int = 0
    ) -> Tuple[float, float]:
        lo, hi = self._unit_sum(horizon, shift, moment)
        if not math.isfinite(hi):
            return DIVERGENT
        return math.exp(self.log_c_lower) * lo, math.exp(self.log_c_upper) * hi

    def __repr__(self) -> str:
        return (
            f"PowerLawTail(C in [e^{self.log_c_lower:.4g}, e^{self.log_c_upper:.4g}], "
            f"p={self.exponent}, offset={self.offset})"
        )


TAIL_CLASSES = {
    "geometric": GeometricTail,
    "power_law": PowerLawTail,
}
