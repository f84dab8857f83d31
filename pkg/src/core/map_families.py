"""
Constructors for the maps used by the toolkit: full-branch linear maps, the
Manneville–Pomeau family and piecewise-linear maps from breakpoint or branch
tables.
"""
import logging
from fractions import Fraction
from numbers import Rational
from typing import Dict, List, Sequence

from scipy.optimize import brentq

from core.exceptions import MapDefinitionError
from core.interval_map import Branch, Interval, Number, PiecewiseMonotoneMap

logger = logging.getLogger(__name__)


def _is_exact(values: Sequence) -> bool:
    return all(isinstance(v, Rational) for v in values)


def affine_branch(
    left: Number, right: Number, slope: Number, intercept: Number, exact: bool
) -> Branch:
    """Branch x ↦ slope·x + intercept on [left, right]."""
    if slope == 0:
        raise MapDefinitionError(f"branch on [{left}, {right}] is constant")
    if exact:
        left, right = Fraction(left), Fraction(right)
        slope, intercept = Fraction(slope), Fraction(intercept)
    else:
        left, right = float(left), float(right)
        slope, intercept = float(slope), float(intercept)
    magnitude = abs(float(slope))
    return Branch(
        domain=Interval(left, right),
        increasing=slope > 0,
        eval=lambda x: slope * x + intercept,
        deriv=lambda x: float(slope),
        inverse=lambda y: (y - intercept) / slope,
        expansion_bounds=(magnitude, magnitude),
        affine=True,
        exact=exact,
    )


def full_linear(k: int) -> PiecewiseMonotoneMap:
    """x ↦ kx mod 1 with exact dyadic (k-adic) arithmetic."""
    if k < 2:
        raise MapDefinitionError(f"full linear map needs k >= 2, got {k}")
    branches = [
        affine_branch(Fraction(i, k), Fraction(i + 1, k), k, -i, exact=True)
        for i in range(k)
    ]
    return PiecewiseMonotoneMap(
        branches,
        circle=True,
        mixing_asserted=True,
        name="doubling" if k == 2 else f"times{k}",
    )


def doubling() -> PiecewiseMonotoneMap:
    return full_linear(2)


def manneville_pomeau(alpha: float) -> PiecewiseMonotoneMap:
    """
    f(x) = x + x^{1+α} mod 1, with a neutral fixed point at 0.
    """
    if not 0 < alpha < 1:
        raise MapDefinitionError(f"alpha must lie in (0, 1), got {alpha}")
    split = brentq(
        lambda x: x + x ** (1 + alpha) - 1, 0.0, 1.0, xtol=1e-16, rtol=8.9e-16
    )

    def deriv(x: float) -> float:
        return 1 + (1 + alpha) * x**alpha

    top = deriv(split)
    left = Branch(
        domain=Interval(0.0, split),
        increasing=True,
        eval=lambda x: min(float(x) + float(x) ** (1 + alpha), 1.0),
        deriv=deriv,
        expansion_bounds=(1.0, top),
    )
    right = Branch(
        domain=Interval(split, 1.0),
        increasing=True,
        eval=lambda x: max(float(x) + float(x) ** (1 + alpha) - 1, 0.0),
        deriv=deriv,
        expansion_bounds=(top, deriv(1.0)),
    )
    fmap = PiecewiseMonotoneMap(
        [left, right], circle=True, mixing_asserted=True, name=f"mp(alpha={alpha:g})"
    )
    fmap.alpha = alpha
    fmap.split = split
    return fmap


def piecewise_linear(
    breakpoints: Sequence[Number], slopes: Sequence[Number], start: Number = 0
) -> PiecewiseMonotoneMap:
    """
    Continuous piecewise-linear map with f(breakpoints[0]) = start.
    """
    if len(breakpoints) != len(slopes) + 1:
        raise MapDefinitionError("need exactly one slope per branch")
    exact = _is_exact(list(breakpoints) + list(slopes) + [start])
    branches: List[Branch] = []
    value = start
    for (a, b), slope in zip(zip(breakpoints, breakpoints[1:]), slopes):
        branches.append(affine_branch(a, b, slope, value - slope * a, exact))
        value = value + slope * (b - a)
    return PiecewiseMonotoneMap(branches, name=f"pl{tuple(float(s) for s in slopes)}")


def from_branch_table(
    rows: Sequence[Dict[str, Number]], circle: bool = False, name: str = "table"
) -> PiecewiseMonotoneMap:
    """
    Affine branches given as rows {left, right, slope, intercept}.
    """
    required = {"left", "right", "slope", "intercept"}
    for row in rows:
        missing = required - set(row)
        if missing:
            raise MapDefinitionError(f"branch row {row} lacks {sorted(missing)}")
    exact = _is_exact([row[key] for row in rows for key in required])
    branches = [
        affine_branch(row["left"], row["right"], row["slope"], row["intercept"], exact)
        for row in rows
    ]
    return PiecewiseMonotoneMap(branches, circle=circle, name=name)


MAP_FAMILIES = {
    "doubling": doubling,
    "full_linear": full_linear,
    "manneville_pomeau": manneville_pomeau,
    "piecewise_linear": piecewise_linear,
    "branch_table": from_branch_table,
}
