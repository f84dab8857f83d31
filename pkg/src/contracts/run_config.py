from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class MapSpec(BaseModel):
    """
    Map family name from MAP_FAMILIES and its keyword arguments. Rational
    parameters may be written as strings such as "1/3".
    """

    model_config = ConfigDict(extra="forbid")

    family: str = "doubling"
    params: Dict[str, Any] = {}


class PotentialSpec(BaseModel):
    """Named built-in potential and its keyword arguments."""

    model_config = ConfigDict(extra="forbid")

    name: str = "constant"
    params: Dict[str, Any] = {}


class SchemeSpec(BaseModel):
    """
    Inducing scheme used by induce / gibbs / equilibrium / pressure-curve.

    ``doubling`` is the closed-form return to [1/2, 1], ``first_return`` the
    enumerated first return to ``interval``, ``mp`` the Manneville–Pomeau
    return to [y_1, 1].
    """

    model_config = ConfigDict(extra="forbid")

    kind: Literal["doubling", "first_return", "mp"] = "doubling"
    n_max: int = Field(default=40, ge=1)
    interval: Tuple[float, float] = (0.5, 1.0)


class RunConfig(BaseModel):
    """
    Everything one CLI command needs. Unknown keys are rejected so that a
    typo never silently falls back to a default.
    """

    model_config = ConfigDict(extra="forbid")

    map: MapSpec = MapSpec()
    potential: PotentialSpec = PotentialSpec()
    scheme: SchemeSpec = SchemeSpec()

    n_max: int = Field(default=14, ge=1)
    n_min: int = Field(default=4, ge=1)
    m_max: int = Field(default=10, ge=1)
    depth: int = Field(default=1, ge=1)
    # tower level cap R and cylinder length k of the tail-gap graph
    R: int = Field(default=6, ge=1)
    k: int = Field(default=3, ge=1)

    region: Optional[Tuple[float, float]] = None
    return_region: Optional[Tuple[float, float]] = None
    x_interval: Tuple[float, float] = (0.5, 1.0)
    lam: Optional[float] = Field(default=None, gt=0)
    pressure: Optional[float] = None

    tolerance: float = Field(default=1e-12, gt=0)
    root_tolerance: float = Field(default=1e-12, gt=0)
    boundary_tolerance: float = Field(default=1e-8, gt=0)

    S_grid: Optional[List[float]] = None
    t_grid: Optional[List[float]] = None
    # potential parameter swept by pressure-curve
    curve_param: str = "t"
    b_grid: Optional[List[float]] = None
    K: int = Field(default=2, ge=2)
    alphas: List[float] = [0.3]
    bs: List[float] = [-1.0]
    N_search: int = Field(default=40, ge=1)

    graph: Optional[str] = None
    rome: Optional[List[Any]] = None

    output_dir: Optional[str] = None
    format: Literal["csv", "json", "both"] = "both"

    @model_validator(mode="after")
    def _check_windows(self) -> "RunConfig":
        if self.n_min > self.n_max:
            raise ValueError(f"n_min={self.n_min} exceeds n_max={self.n_max}")
        for name in ("region", "return_region", "x_interval"):
            bounds = getattr(self, name)
            if bounds is not None and not 0 <= bounds[0] < bounds[1] <= 1:
                raise ValueError(
                    f"{name} must satisfy 0 <= left < right <= 1, got {bounds}"
                )
        return self
