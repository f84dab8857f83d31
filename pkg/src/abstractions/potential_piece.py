from abc import ABC, abstractmethod
from typing import List, Optional, Tuple


class PotentialPiece(ABC):
    """
    Abstract base class for one closed-form (or sampled) piece of a potential.
    Implementations evaluate pointwise and enclose inf/sup on sub-intervals.
    """

    #: "increasing", "decreasing" or None
    monotone: Optional[str] = None
    bounded: bool = True

    @abstractmethod
    def evaluate(self, x: float) -> float:
        """
        Value of the piece at x.

        Args:
            x (float): A point of the piece's interval.

        Returns:
            float: φ(x).
        """

    @abstractmethod
    def bounds(self, a: float, b: float) -> Tuple[float, float, float]:
        """
        Enclose inf and sup on the closure of (a, b), one-sided limits included.

        Args:
            a (float): Left endpoint.
            b (float): Right endpoint, b >= a.

        Returns:
            Tuple[float, float, float]: (inf, sup, err). The true infimum lies
            in [inf - err, inf] and the true supremum in [sup, sup + err].
        """

    def oscillation(self, a: float, b: float) -> Tuple[float, float]:
        """
        Lower and upper bounds for sup - inf on the closure of (a, b).
        """
        inf, sup, err = self.bounds(a, b)
        return sup - inf, sup - inf + 2 * err

    def constant_value(self) -> Optional[float]:
        """The value when the piece is constant, else None."""
        return None

    def breakpoints(self, a: float, b: float, resolution: float) -> List[float]:
        """Interior discontinuities in (a, b) spaced at least ``resolution`` apart."""
        return []
