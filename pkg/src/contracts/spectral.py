from typing import List

from pydantic import BaseModel


class SpectralResult(BaseModel):
    """
    Spectral radius of a nonnegative matrix with its positive left eigenvector.
    """

    rho: float
    left_vector: List[float]
    iterations: int
    residual: float
    irreducible: bool = True
    components: int = 1


class IdentitySample(BaseModel):
    x: str
    lhs: str
    rhs: str
    equal: bool


class IdentityReport(BaseModel):
    """det(W - xI) against (-x)^{#G-#R} det(A(x) - xI) on sample points."""

    vertices: int
    rome_size: int
    samples: List[IdentitySample]

    @property
    def all_equal(self) -> bool:
        return all(s.equal for s in self.samples)


class PerturbationRow(BaseModel):
    n: int
    rho_u: float
    rho_uv: float
    ratio: float
    eta_tilde: float
    bound_holds: bool


class PerturbationReport(BaseModel):
    M: float
    tau: float
    etas: List[float]
    rows: List[PerturbationRow]
    ratio_nonincreasing: bool
    final_gap: float


class TailGapReport(BaseModel):
    """
    Spectral gap γ = log ρ_0 - log ρ_1 between G_0 (rome plus X̂) and G_1
    (rome closed up with artificial paths).
    """

    k: int
    level_cap: int
    vertices: int
    x_hat_vertices: int
    artificial_vertices: int
    rho_0: float
    rho_1: float
    # leading eigenvalue of the rome alone, the estimate of e^{P*_G}
    rho_rome: float
    gamma: float
    distortion: float
    eigenvector_ratio: float
    margin: float
    margin_star: float
    h_star: float
    rome_size: int
    # the rome reduces G_1; G_0 only when X̂ has no cycle
    rome_valid: bool
    rome_valid_g0: bool
    warnings: List[str] = []
