from typing import Tuple

from abstractions.potential_piece import PotentialPiece


class PowerPiece(PotentialPiece):
    """
    φ(x) = c·x^α on a sub-interval of [0, 1], α > 0.
    """

    def __init__(self, coefficient: float, exponent: float):
        if exponent <= 0:
            raise ValueError(f"exponent must be positive, got {exponent}")
        self.coefficient = float(coefficient)
        self.exponent = float(exponent)
        self.monotone = "decreasing" if self.coefficient < 0 else "increasing"

    def evaluate(self, x: float) -> float:
        return self.coefficient * float(x) ** self.exponent

    def bounds(self, a: float, b: float) -> Tuple[float, float, float]:
        ya, yb = self.evaluate(a), self.evaluate(b)
        return min(ya, yb), max(ya, yb), 0.0

    def __repr__(self) -> str:
        return f"PowerPiece({self.coefficient}·x^{self.exponent})"
