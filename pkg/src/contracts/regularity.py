from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel

from contracts.estimates import Enclosure, SeriesFit


class BVEstimate(BaseModel):
    """
    Lower bound for the total variation of a potential from nested grids.
    """

    grid_size: int
    value: float
    # (points in grid, variation on that grid)
    levels: List[Tuple[int, float]]
    diverging: bool
    fit: Optional[SeriesFit] = None


class RangeMargin(BaseModel):
    """margin = h - (sup φ - inf φ); unbounded potentials report margin = -inf."""

    h: float
    sup: float
    inf: float
    margin: float
    unbounded: bool = False

    @property
    def holds(self) -> bool:
        return self.margin > 0


class RegularityReport(BaseModel):
    n: int
    variation: Enclosure
    beta: Enclosure
    bv: Optional[BVEstimate] = None


class SufficientConditionReport(BaseModel):
    """Outcome of one of the summable-variation sufficient conditions."""

    condition: Literal["variations", "images"]
    terms: List[float]
    partial_sums: List[float]
    fit: SeriesFit
    satisfied: Literal["yes", "no", "undetermined"]


class SVIReport(BaseModel):
    """
    Variations V_n(Φ) of an induced potential and the geometric fit V_n ≈ C γ^n.
    """

    variations: List[Enclosure]
    C: float
    gamma: float
    r_squared: float
    weakly_holder: bool
    branches_used: int
    notes: List[str] = []
