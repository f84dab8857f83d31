from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from contracts.estimates import Enclosure, SeriesFit


class TailRow(BaseModel):
    n: int
    count: int
    sup_phi: float
    weight: float


class TailTable(BaseModel):
    """
    #{τ_i = n} and sup Φ on level n, with the fitted decay of the weights.
    """

    rows: List[TailRow]
    model: Literal["exponential", "polynomial", "none"]
    rate: float
    r_squared: float


class DiscriminantReport(BaseModel):
    p_star: float
    value: float
    positive: bool
    finite_scheme: bool = False
    # (S, P_G(Ψ - Sτ)) over the grid
    sweep: List[Tuple[float, float]] = []


class GibbsCheck(BaseModel):
    """Ratios μ(C_w) / exp(Ψ(x) - n P_G) for sampled points of F-cylinders."""

    K: float
    min_ratio: float
    max_ratio: float
    depth: int
    words_checked: int
    holds: bool


class EquilibriumResult(BaseModel):
    """
    Outcome of the inducing pipeline for one potential.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    status: Literal["projected", "not_projectable"]
    pressure: float
    pressure_bracket: Tuple[float, float]
    induced_pressure: float
    Lambda: Optional[float] = None
    entropy: Optional[float] = None
    integral_phi: Optional[float] = None
    lyapunov: Optional[float] = None
    condition_a: Optional[bool] = None
    K: Optional[float] = None
    weights_head: List[float] = []
    growth_fit: Optional[SeriesFit] = None
    notes: List[str] = []
    state: Optional[object] = Field(default=None, exclude=True)


class CurveSample(BaseModel):
    t: float
    pressure: float
    derivative: Optional[float] = None
    second_derivative: Optional[float] = None
    status: str
    z0_finite: bool
    tail_gate: bool


class PressureCurve(BaseModel):
    samples: List[CurveSample]
    # parameters where the status changes, located by bisection
    transitions: List[Tuple[float, str, str]]
    kinks: List[float]


class SeriesEnclosure(BaseModel):
    """Partial sum of a positive series with a bracket for the tail."""

    value: float
    lower: float
    upper: float
    terms_summed: int
    finite: bool = True


class PhaseRow(BaseModel):
    """One row of the phase-transition table."""

    regime: str
    pressure_positive: Optional[bool]
    gibbs: Optional[bool]
    unique: Optional[bool]
    accessible: Optional[bool] = None
    boundary: bool = False


class BackwardOrbitRow(BaseModel):
    n: int
    y: float
    residual: float


class MPConfiguration(BaseModel):
    """Parameters of the flat-pressure potential on the Manneville–Pomeau map."""

    alpha: float
    b: float
    N: int
    K: int
    p1: float
    p2: float
    series: SeriesEnclosure
    B: float
    pressure_zero: bool


class MPVerdict(BaseModel):
    status: Literal["projected", "not_projectable"]
    Lambda_fit: SeriesFit
    harmonic_residual: float
    configuration: MPConfiguration


class InducingGrowthFit(BaseModel):
    """Σ_{n<=N} n p_n against c log N + d and the harmonic numbers."""

    log_fit: SeriesFit
    harmonic_residual: float
    divergent: bool


__all__ = [
    "BackwardOrbitRow",
    "CurveSample",
    "DiscriminantReport",
    "Enclosure",
    "EquilibriumResult",
    "GibbsCheck",
    "InducingGrowthFit",
    "MPConfiguration",
    "MPVerdict",
    "PhaseRow",
    "PressureCurve",
    "SeriesEnclosure",
    "SeriesFit",
    "TailRow",
    "TailTable",
]
