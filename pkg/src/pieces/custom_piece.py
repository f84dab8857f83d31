import logging
from typing import Callable, Optional, Tuple

import numpy as np

from abstractions.potential_piece import PotentialPiece
from config.config import Config

logger = logging.getLogger(__name__)


class CustomPiece(PotentialPiece):
    """
    Pointwise callable. Bounds come from endpoint evaluation when the caller
    declares the piece monotone, otherwise from a uniform sample widened by a
    Lipschitz bound when one is supplied.
    """

    def __init__(
        self,
        func: Callable[[float], float],
        lipschitz: Optional[float] = None,
        monotone: Optional[str] = None,
        samples: Optional[int] = None,
        label: str = "custom",
    ):
        self.func = func
        self.lipschitz = lipschitz
        self.monotone = monotone
        self.samples = samples or Config.SAMPLES_PER_PIECE
        self.label = label

    def evaluate(self, x: float) -> float:
        return float(self.func(float(x)))

    def bounds(self, a: float, b: float) -> Tuple[float, float, float]:
        a, b = float(a), float(b)
        if self.monotone is not None or a == b:
            ya, yb = self.evaluate(a), self.evaluate(b)
            return min(ya, yb), max(ya, yb), 0.0
        xs = np.linspace(a, b, self.samples)
        ys = np.array([self.evaluate(x) for x in xs])
        err = 0.0
        if self.lipschitz is not None:
            err = self.lipschitz * (b - a) / (self.samples - 1) / 2
        return float(ys.min()), float(ys.max()), err

    def oscillation(self, a: float, b: float) -> Tuple[float, float]:
        lower, upper = super().oscillation(a, b)
        if self.lipschitz is not None:
            upper = min(upper, self.lipschitz * (float(b) - float(a)))
        return lower, max(lower, upper)

    def __repr__(self) -> str:
        return f"CustomPiece({self.label})"
