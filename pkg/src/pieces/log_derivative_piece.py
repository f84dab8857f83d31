import math
from typing import Callable, Optional, Tuple

import numpy as np

from abstractions.potential_piece import PotentialPiece
from config.config import Config

MONOTONE_SAMPLES = 17


class LogDerivativePiece(PotentialPiece):
    """
    φ(x) = -t·log|Df(x)| on one branch domain.

    When |Df| is monotone on the domain the bounds are exact endpoint values;
    a vanishing derivative makes the piece unbounded.
    """

    def __init__(self, deriv: Callable[[float], float], t: float, a: float, b: float):
        self.deriv = deriv
        self.t = float(t)
        samples = np.linspace(float(a), float(b), MONOTONE_SAMPLES)
        magnitudes = np.abs([deriv(float(x)) for x in samples])
        self.bounded = bool(np.all(magnitudes > 0)) or self.t == 0
        self._constant: Optional[float] = None
        if magnitudes[0] > 0 and np.all(magnitudes == magnitudes[0]):
            self._constant = -self.t * math.log(magnitudes[0])
        steps = np.diff(magnitudes)
        if np.all(steps >= 0) or np.all(steps <= 0):
            increasing_df = bool(np.all(steps >= 0))
            if increasing_df == (self.t > 0):
                self.monotone = "decreasing"
            else:
                self.monotone = "increasing"
        else:
            self.monotone = None

    def evaluate(self, x: float) -> float:
        magnitude = abs(self.deriv(float(x)))
        if magnitude == 0:
            return math.inf if self.t > 0 else (-math.inf if self.t < 0 else 0.0)
        return -self.t * math.log(magnitude)

    def bounds(self, a: float, b: float) -> Tuple[float, float, float]:
        if self.monotone is not None or a == b:
            ya, yb = self.evaluate(a), self.evaluate(b)
            return min(ya, yb), max(ya, yb), 0.0
        xs = np.linspace(float(a), float(b), Config.SAMPLES_PER_PIECE)
        ys = [self.evaluate(x) for x in xs]
        return min(ys), max(ys), 0.0

    def constant_value(self) -> Optional[float]:
        return self._constant

    def __repr__(self) -> str:
        return f"LogDerivativePiece(t={self.t})"
