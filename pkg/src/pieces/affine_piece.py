from typing import Optional, Tuple

from abstractions.potential_piece import PotentialPiece


class AffinePiece(PotentialPiece):
    """
    φ(x) = slope·x + intercept.
    """

    def __init__(self, slope: float, intercept: float):
        self.slope = float(slope)
        self.intercept = float(intercept)
        self.monotone = "decreasing" if self.slope < 0 else "increasing"

    @classmethod
    def through(cls, x0: float, y0: float, x1: float, y1: float) -> "AffinePiece":
        slope = (y1 - y0) / (x1 - x0)
        return cls(slope, y0 - slope * x0)

    def evaluate(self, x: float) -> float:
        return self.slope * float(x) + self.intercept

    def bounds(self, a: float, b: float) -> Tuple[float, float, float]:
        ya, yb = self.evaluate(a), self.evaluate(b)
        return min(ya, yb), max(ya, yb), 0.0

    def constant_value(self) -> Optional[float]:
        return self.intercept if self.slope == 0 else None

    def __repr__(self) -> str:
        return f"AffinePiece({self.slope}·x + {self.intercept})"
