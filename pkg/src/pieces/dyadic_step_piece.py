import math
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

from abstractions.potential_piece import PotentialPiece

# levels enumerated explicitly before the monotone tail takes over
MAX_EXPLICIT_LEVELS = 4096


def dyadic_level(x) -> int:
    """The k with 2^{-k-1} < x <= 2^{-k}, for 0 < x <= 1."""
    q = Fraction(x)
    if q <= 0:
        raise ValueError("dyadic level is defined on (0, 1]")
    return (q.denominator // q.numerator).bit_length() - 1


def _is_power_of_two(x) -> bool:
    q = Fraction(x)
    return q.numerator == 1 and q.denominator & (q.denominator - 1) == 0


class DyadicStepPiece(PotentialPiece):
    """
    Step function constant on each dyadic level (2^{-k-1}, 2^{-k}].

    ``level_value(k)`` gives the value on level k. From ``tail_start`` on the
    values increase towards ``tail_limit``, which is the one-sided limit at 0.
    """

    def __init__(
        self,
        level_value: Callable[[int], float],
        tail_start: int,
        tail_limit: float,
    ):
        self.level_value = level_value
        self.tail_start = int(tail_start)
        self.tail_limit = float(tail_limit)

    def evaluate(self, x: float) -> float:
        if x == 0:
            return self.tail_limit
        return self.level_value(dyadic_level(x))

    def _level_range(self, a, b) -> Tuple[int, Optional[int]]:
        low = dyadic_level(b)
        if a == 0:
            return low, None
        high = dyadic_level(a)
        if _is_power_of_two(a):
            high -= 1
        return low, max(low, high)

    def bounds(self, a: float, b: float) -> Tuple[float, float, float]:
        if a == b:
            value = self.evaluate(a)
            return value, value, 0.0
        low, high = self._level_range(a, b)
        explicit_end = max(low, self.tail_start)
        if high is not None:
            explicit_end = min(explicit_end, high)
        explicit_end = min(explicit_end, low + MAX_EXPLICIT_LEVELS)
        values = [self.level_value(k) for k in range(low, explicit_end + 1)]
        if high is None:
            values.append(self.tail_limit)
        elif high > explicit_end:
            values.append(self.level_value(high))
        return min(values), max(values), 0.0

    def breakpoints(self, a: float, b: float, resolution: float) -> List[float]:
        points = []
        k = 0
        while True:
            point = 2.0**-k
            if point <= max(float(a), resolution):
                break
            if point < float(b):
                points.append(point)
            k += 1
        return points

    def __repr__(self) -> str:
        return f"DyadicStepPiece(tail_start={self.tail_start}, limit={self.tail_limit})"
