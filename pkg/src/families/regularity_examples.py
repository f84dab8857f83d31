"""
Two potentials on the doubling map separating summable variations from
bounded variation.
"""
import math
from fractions import Fraction

from core.interval_map import Interval
from core.potential import Potential
from pieces import ConstantPiece, CustomPiece

# dyadic blocks [2^{-n}, 2^{-n+1}] carried explicitly by example2
EXAMPLE2_BLOCKS = 40


def example1() -> Potential:
    """
    φ(0) = 0, φ(x) = -1/log x on (0, 1/2), φ = 1/log 2 on [1/2, 1].
    Increasing and bounded with ‖φ‖_BV = 1/log 2, but V_n(φ) >= 1/(n log 2).
    """
    half = Fraction(1, 2)
    return Potential(
        [
            (
                Interval(Fraction(0), half),
                CustomPiece(
                    lambda x: -1.0 / math.log(x) if x > 0 else 0.0,
                    monotone="increasing",
                    label="-1/log x",
                ),
            ),
            (Interval(half, Fraction(1)), ConstantPiece(1.0 / math.log(2.0))),
        ],
        overrides={Fraction(0): 0.0},
        name="example1",
    )


def example2(amplitude_base: int = 4) -> Potential:
    """
    ψ = Σ_n base^{-n} sin(4^{n+1} π x) on [2^{-n}, 2^{-n+1}].

    With base 4 every block has variation 2^{3-n} and V_n(ψ) <= 4π·2^{-n};
    base 2 keeps the frequencies but the block variations no longer sum.
    """
    if amplitude_base <= 1:
        raise ValueError(f"amplitude base must exceed 1, got {amplitude_base}")
    first = Interval(Fraction(0), Fraction(1, 2**EXAMPLE2_BLOCKS))
    pieces = [(first, ConstantPiece(0.0))]
    for n in range(EXAMPLE2_BLOCKS, 0, -1):
        amplitude = float(amplitude_base) ** -n
        frequency = 4.0 ** (n + 1) * math.pi
        pieces.append(
            (
                Interval(Fraction(1, 2**n), Fraction(1, 2 ** (n - 1))),
                CustomPiece(
                    lambda x, a=amplitude, w=frequency: a * math.sin(w * x),
                    lipschitz=amplitude * frequency,
                    label=f"block{n}",
                ),
            )
        )
    return Potential(pieces, name=f"example2(base={amplitude_base})")
