"""
The Manneville–Pomeau family f(x) = x + x^{1+α} mod 1 with the three-piece
potential that keeps the pressure flat at 0 while the induced Gibbs state has
infinite mean return time.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from contracts.equilibrium import (
    BackwardOrbitRow,
    MPConfiguration,
    MPVerdict,
    SeriesEnclosure,
)
from core.exceptions import ComputationRefused, ConvergenceError, MapDefinitionError
from core.gibbs import inducing_time_growth, solve_equilibrium
from core.inducing import (
    InducedPotential,
    InducingScheme,
    SchemeBranch,
    induced_potential,
)
from core.interval_map import Interval, PiecewiseMonotoneMap
from core.map_families import manneville_pomeau
from core.potential import Potential
from core.pressure import periodic_free_energy
from core.tails import PowerLawTail
from pieces import AffinePiece, ConstantPiece, PowerPiece

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
ORBIT_TOLERANCE = 1e-13
DEFAULT_HORIZON = 240


@dataclass
class BackwardOrbit:
    """
    y_0 = 1 > y_1 > y_2 > ... with f(y_{n+1}) = y_n on the left branch, and
    u_n = y_n^{-α}.
    """

    alpha: float
    ys: np.ndarray
    residuals: np.ndarray

    @property
    def us(self) -> np.ndarray:
        return self.ys[1:] ** -self.alpha

    def y(self, n: int) -> float:
        return float(self.ys[n])

    def asymptotic_residual(self) -> np.ndarray:
        """u_n - αn - (α(α+1)/2) log n for n = 1..N."""
        ns = np.arange(1, len(self.ys), dtype=float)
        a = self.alpha
        return self.us - a * ns - 0.5 * a * (a + 1) * np.log(ns)

    def rows(self) -> List[BackwardOrbitRow]:
        return [
            BackwardOrbitRow(
                n=n, y=float(self.ys[n]), residual=float(self.residuals[n - 1])
            )
            for n in range(1, len(self.ys))
        ]


def mp_backward_orbit(alpha: float, N: int) -> BackwardOrbit:
    """
    y_1..y_N by root finding on the increasing left branch.

    Raises:
        ConvergenceError: If a step misses f(y_{n+1}) = y_n by more than the
            orbit tolerance.
    """
    if not 0 < alpha < 1:
        raise MapDefinitionError(f"alpha must lie in (0, 1), got {alpha}")
    ys = np.empty(N + 1)
    residuals = np.empty(N)
    ys[0] = 1.0
    for n in range(1, N + 1):
        target = ys[n - 1]
        y = brentq(
            lambda x: x + x ** (1 + alpha) - target,
            0.0,
            target,
            xtol=1e-300,
            rtol=8.9e-16,
        )
        residual = abs(y + y ** (1 + alpha) - target)
        limit = ORBIT_TOLERANCE * max(target, 1e-300)
        if residual > limit and residual > ORBIT_TOLERANCE:
            raise ConvergenceError(f"backward orbit step {n} misses by {residual:.3g}")
        ys[n] = y
        residuals[n - 1] = residual
    return BackwardOrbit(alpha, ys, residuals)


def mp_potential(alpha: float, p1: float, p2: float, b: float) -> Potential:
    """
    -2α x^α on [0, p1], affine on (p1, p2], b on (p2, 1]; continuous at p1 and p2.
    """
    if not 0 < p1 < p2 < 1:
        raise MapDefinitionError(f"need 0 < p1 < p2 < 1, got p1={p1}, p2={p2}")
    if b >= -LOG2:
        logger.warning(
            f"b={b} >= -log 2: the potential satisfies the bounded-range condition"
        )
    at_p1 = -2 * alpha * p1**alpha
    pieces = [
        (Interval(0.0, p1), PowerPiece(-2 * alpha, alpha)),
        (Interval(p1, p2), AffinePiece.through(p1, at_p1, p2, b)),
        (Interval(p2, 1.0), ConstantPiece(b)),
    ]
    return Potential(pieces, endpoint_rule="right", name=f"mp(a={alpha:g},b={b:g})")


def mp_scheme(
    alpha: float,
    n_max: int,
    fmap: Optional[PiecewiseMonotoneMap] = None,
    orbit: Optional[BackwardOrbit] = None,
) -> InducingScheme:
    """
    First return to X = [y_1, 1]: X_n = [x_n, x_{n-1}] with τ = n, where x_n is
    the right-branch preimage of y_n (x_0 = 1).
    """
    fmap = fmap or manneville_pomeau(alpha)
    if orbit is None or len(orbit.ys) <= n_max:
        orbit = mp_backward_orbit(alpha, n_max)
    split = orbit.y(1)
    xs = [1.0]
    for n in range(1, n_max + 1):
        target = orbit.y(n)
        xs.append(
            brentq(
                lambda x: x + x ** (1 + alpha) - 1 - target,
                split,
                1.0,
                xtol=1e-300,
                rtol=8.9e-16,
            )
        )
    branches = [
        SchemeBranch(Interval(xs[n], xs[n - 1], True, True), n, (1,) + (0,) * (n - 1))
        for n in range(1, n_max + 1)
    ]
    base = Interval(split, 1.0, True, True)
    return InducingScheme(fmap, base, branches, n_max, tail_multiplicity=1)


class MPTail(PowerLawTail):
    """
    Φ_n + 2 log n converges, so beyond the horizon e^{Φ_n} = C n^{-2} with
    log C bracketed by the spread of Φ_n + 2 log n over the last quarter of the
    enumerated times.
    """

    @classmethod
    def from_induced(cls, induced: InducedPotential) -> "MPTail":
        taus = induced.taus
        quarter = max(3, len(taus) // 4)
        tail_taus = taus[-quarter:]
        sup_c = induced.sups[-quarter:] + 2 * np.log(tail_taus)
        inf_c = induced.infs[-quarter:] + 2 * np.log(tail_taus)
        spread = float(sup_c.max() - sup_c.min())
        return cls(
            float(inf_c.min()) - spread, float(sup_c.max()) + spread, exponent=2.0
        )


def _flat_series(induced: InducedPotential) -> SeriesEnclosure:
    head = math.fsum(np.exp(induced.sups))
    lo, hi = induced.tail.enclosure(induced.scheme.horizon, induced.tail_shift, 0)
    return SeriesEnclosure(
        value=head + 0.5 * (lo + hi),
        lower=head + lo,
        upper=head + hi,
        terms_summed=len(induced.sups),
    )


def _build(
    alpha: float,
    b: float,
    N: int,
    K: int,
    horizon: int,
    orbit: Optional[BackwardOrbit] = None,
):
    if orbit is None or len(orbit.ys) <= max(K, horizon):
        orbit = mp_backward_orbit(alpha, max(K, horizon))
    fmap = manneville_pomeau(alpha)
    phi = mp_potential(alpha, orbit.y(K), orbit.y(N), b)
    scheme = mp_scheme(alpha, horizon, fmap, orbit)
    induced = induced_potential(phi, scheme)
    induced.tail = MPTail.from_induced(induced)
    induced.tail_shift = -phi.offset
    return fmap, phi, scheme, induced


def _residual_constant(
    alpha: float, b: float, N: int, induced: InducedPotential
) -> float:
    """B = s_n - (Nb - 2 Σ_{k=N}^{n-1} 1/k) at the horizon."""
    n = int(induced.taus[-1])
    harmonic = math.fsum(1.0 / k for k in range(N, n))
    return float(induced.sups[-1]) - (N * b - 2 * harmonic)


def mp_configuration(
    alpha: float,
    b: float,
    N: int,
    K: Optional[int] = None,
    horizon: int = DEFAULT_HORIZON,
) -> MPConfiguration:
    """
    The configuration p2 = y_N, p1 = y_K (K = 2N by default) without the
    flat-pressure search.
    """
    K = K or 2 * N
    if K <= N:
        raise MapDefinitionError(f"need K > N, got K={K}, N={N}")
    horizon = max(horizon, 2 * K)
    orbit = mp_backward_orbit(alpha, horizon)
    _, _, _, induced = _build(alpha, b, N, K, horizon, orbit)
    series = _flat_series(induced)
    return MPConfiguration(
        alpha=alpha,
        b=b,
        N=N,
        K=K,
        p1=orbit.y(K),
        p2=orbit.y(N),
        series=series,
        B=_residual_constant(alpha, b, N, induced),
        pressure_zero=series.upper <= 1.0,
    )


def mp_configure_flat_pressure(
    alpha: float, b: float, N_search: int = 40, horizon: int = DEFAULT_HORIZON
) -> MPConfiguration:
    """
    Smallest N <= N_search for which Σ e^{s_n} <= 1 with tail enclosure, so
    that P(φ) = 0.

    Raises:
        ComputationRefused: Outside α < log(2)/2, b < -log 2, or when no N is found.
    """
    if not 0 < alpha < LOG2 / 2:
        raise ComputationRefused("alpha must lie in (0, log(2)/2)", {"alpha": alpha})
    if b >= -LOG2:
        raise ComputationRefused("b must be below -log 2", {"b": b, "margin": b + LOG2})
    orbit = mp_backward_orbit(alpha, max(2 * N_search, horizon))
    for N in range(1, N_search + 1):
        K = 2 * N
        _, _, _, induced = _build(alpha, b, N, K, max(horizon, 2 * K), orbit)
        series = _flat_series(induced)
        if series.upper <= 1.0:
            B = _residual_constant(alpha, b, N, induced)
            logger.info(
                f"flat pressure for alpha={alpha}, b={b}: N={N}, "
                f"Σe^(s_n) <= {series.upper:.6f}, B={B:.4g}"
            )
            return MPConfiguration(
                alpha=alpha,
                b=b,
                N=N,
                K=K,
                p1=orbit.y(K),
                p2=orbit.y(N),
                series=series,
                B=B,
                pressure_zero=True,
            )
    raise ComputationRefused(
        "no N gives Σ e^(s_n) <= 1", {"alpha": alpha, "b": b, "N_search": N_search}
    )


def mp_inducing_verdict(
    config: MPConfiguration, horizon: int = DEFAULT_HORIZON
) -> MPVerdict:
    """
    Run the pipeline on the X = [y_1, 1] scheme: a finite Z_0 with Σ n p_n
    growing like the harmonic series means the equilibrium state is not
    accessible from the scheme.
    """
    fmap, phi, scheme, induced = _build(
        config.alpha, config.b, config.N, config.K, max(horizon, 2 * config.K)
    )
    lower = periodic_free_energy(fmap, phi).value
    upper = LOG2 + phi.global_bounds()[1]
    result = solve_equilibrium(
        fmap, phi, scheme, induced=induced, pressure_bounds=(lower, upper)
    )
    growth = inducing_time_growth(result.state)
    logger.info(
        f"MP verdict alpha={config.alpha}, b={config.b}: "
        f"{result.status}, P={result.pressure:.10f}"
    )
    return MPVerdict(
        status=result.status,
        Lambda_fit=growth.log_fit,
        harmonic_residual=growth.harmonic_residual,
        configuration=config,
    )


def mp_scan(
    alphas, bs, N_search: int = 40
) -> List[Tuple[float, float, Optional[MPConfiguration]]]:
    """Flat-pressure configurations over an (α, b) grid; None where refused."""
    rows = []
    for alpha in alphas:
        for b in bs:
            try:
                config = mp_configure_flat_pressure(float(alpha), float(b), N_search)
                rows.append((float(alpha), float(b), config))
            except ComputationRefused as e:
                logger.info(f"mp-scan: alpha={alpha}, b={b} refused: {e}")
                rows.append((float(alpha), float(b), None))
    return rows
