import math
from abc import ABC, abstractmethod
from typing import Tuple


class TailModel(ABC):
    """
    Abstract base class for the asymptotic weights of an inducing scheme beyond
    its enumeration horizon. A tail model knows #{τ_i = n}·e^{sup Φ|τ=n}.
    """

    @abstractmethod
    def log_weight(self, n: int) -> float:
        """
        log of the total weight of the branches with inducing time n.

        Args:
            n (int): Inducing time.

        Returns:
            float: log(#{τ_i = n} · e^{sup Φ_n}).
        """

    @abstractmethod
    def enclosure(
        self, horizon: int, shift: float = 0.0, moment: int = 0
    ) -> Tuple[float, float]:
        """
        Bracket Σ_{n > horizon} n^moment · weight(n) · e^{-shift·n}.

        Args:
            horizon (int): Last enumerated inducing time.
            shift (float): S in Φ - S·τ.
            moment (int): Power of n in the summand (1 for Σ τ_i μ(X_i)).

        Returns:
            Tuple[float, float]: (lower, upper); (inf, inf) when the tail diverges.
        """

    @abstractmethod
    def critical_shift(self) -> float:
        """Infimum of the shifts S for which the tail sum is finite."""

    def branch_count(self, n: int) -> int:
        """#{τ_i = n}, when the model tracks it."""
        return 1

    def finite(self, shift: float = 0.0, moment: int = 0, horizon: int = 0) -> bool:
        return math.isfinite(self.enclosure(horizon, shift, moment)[1])
