from typing import Optional, Tuple

from abstractions.potential_piece import PotentialPiece


class ConstantPiece(PotentialPiece):
    """
    φ ≡ c on the piece.
    """

    monotone = "increasing"

    def __init__(self, value: float):
        self.value = float(value)

    def evaluate(self, x: float) -> float:
        return self.value

    def bounds(self, a: float, b: float) -> Tuple[float, float, float]:
        return self.value, self.value, 0.0

    def constant_value(self) -> Optional[float]:
        return self.value

    def __repr__(self) -> str:
        return f"ConstantPiece({self.value})"
