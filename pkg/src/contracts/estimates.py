import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field


class PressureEstimate(BaseModel):
    """
    Enclosure of a growth rate (entropy or pressure) with its diagnostics.
    """

    value: float
    lower: float
    upper: float
    window: Tuple[int, int] = (0, 0)
    # (n, (1/n) log S_n) for every computed n
    diagnostics: List[Tuple[int, float]] = []
    stderr: float = 0.0
    flags: List[str] = []
    # estimate from a second reference cylinder, when one was requested
    alternate: Optional[float] = None

    @property
    def lam(self) -> float:
        return math.exp(self.value)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack


class Enclosure(BaseModel):
    """A scalar with lower and upper bounds."""

    value: float
    lower: float
    upper: float
    finite: bool = True


class SeriesFit(BaseModel):
    """
    Verdict of the series classifier and the growth model it settled on.
    """

    verdict: Literal["divergent", "convergent", "undetermined"]
    model: Literal[
        "bounded", "log", "linear", "geometric", "power", "exceeds_ceiling", "none"
    ] = "none"
    rate: float = 0.0
    intercept: float = 0.0
    residual: float = math.inf
    partial_sums: List[float] = []


class RecurrenceReport(BaseModel):
    """
    Classification of a potential against a reference growth rate λ.
    """

    classification: Literal[
        "positive_recurrent", "null_recurrent", "recurrent", "transient", "undetermined"
    ] = Field(alias="class")
    lam: float
    first: SeriesFit
    second: Optional[SeriesFit] = None

    model_config = {"populate_by_name": True}


class ZnLowerBoundReport(BaseModel):
    """
    η_n = Z_n e^{β_n} e^{-nP} over a window, with its running minimum.
    """

    window: Tuple[int, int]
    pressure: float
    eta_values: List[Tuple[int, float]]
    running_min: List[Tuple[int, float]]
    eta: float
    stable: bool
    positive: bool


class PeriodicFreeEnergy(BaseModel):
    """Largest free energy (1/n) φ_n(p) of a periodic orbit with period <= n_max."""

    value: float
    period: int
    point: float


class VariationalGapReport(BaseModel):
    p_top: PressureEstimate
    p_gurevich: PressureEstimate
    gap: float
    consistent: bool
