"""
Gibbs states of induced full shifts and the equilibrium-state pipeline:
solve P_G(Φ - P·τ) = 0, build the Gibbs state at the root and project it
back to the interval when Λ = Σ τ_i μ(X_i) is finite.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.stats import linregress

from abstractions.tail_model import TailModel
from config.config import Config
from contracts.equilibrium import (
    CurveSample,
    DiscriminantReport,
    EquilibriumResult,
    GibbsCheck,
    InducingGrowthFit,
    PressureCurve,
    TailRow,
    TailTable,
)
from contracts.estimates import PressureEstimate
from core.exceptions import (
    ComputationRefused,
    ConvergenceError,
    MapDefinitionError,
)
from core.inducing import (
    InducedPotential,
    InducingScheme,
    f_cylinders,
    induced_potential,
    project_integral,
    svi_report,
)
from core.interval_map import PiecewiseMonotoneMap, topological_entropy
from core.potential import Potential
from core.pressure import p_top, periodic_free_energy
from core.profiler import Profiler
from core.series import fit_exponential_rate, fit_growth, log_sum_exp

logger = logging.getLogger(__name__)

HEAD_BRANCHES = 12
TAIL_TERMS = 20000
GIBBS_SLACK = 1e-9
BRACKET_EXTENSIONS = 8


def _tail_bounds(induced: InducedPotential, moment: int = 0) -> Tuple[float, float]:
    if induced.tail is None:
        return 0.0, 0.0
    return induced.tail.enclosure(induced.scheme.horizon, induced.tail_shift, moment)


def _log_add(log_head: float, extra: float) -> float:
    if extra <= 0:
        return log_head
    return log_sum_exp([log_head, math.log(extra)])


def _cylinder_bounds(
    induced: InducedPotential, head: Sequence[int], depth: int
) -> Tuple[np.ndarray, np.ndarray]:
    """inf/sup of Ψ_depth on every depth-cylinder spelled with ``head`` letters."""
    scheme = induced.scheme
    fmap = scheme.map
    level: Dict[Tuple[int, ...], Tuple[object, float, float]] = {
        (i,): (scheme.branches[i].domain, induced.infs[i], induced.sups[i])
        for i in head
    }
    for _ in range(depth - 1):
        following = {}
        for i in head:
            branch = scheme.branches[i]
            for word, (interval, lo, hi) in level.items():
                pulled = fmap.pullback(branch.word, interval)
                inside = (
                    pulled.overlap(branch.domain, fmap.tolerance) if pulled else None
                )
                if inside is None:
                    continue
                block_lo, block_hi = induced.block_bounds(i, inside)
                following[(i,) + word] = (inside, block_lo + lo, block_hi + hi)
        level = following
    infs = np.array([v[1] for v in level.values()], dtype=float)
    sups = np.array([v[2] for v in level.values()], dtype=float)
    return infs, sups


@Profiler.profile
def full_shift_pressure(
    induced: InducedPotential, depth: int = 1, max_branches: int = HEAD_BRANCHES
) -> PressureEstimate:
    """
    P_G(Ψ) of the induced full shift.

    Branchwise constant Ψ gives log(Σ e^{Ψ_i} + tail) directly. Otherwise
    (1/m) log of the inf/sup partition functions over m-cylinders bracket the
    pressure; words using branches beyond the head are bounded by
    Z_0^m - Z_head^m.
    """
    head_sup = log_sum_exp(induced.sups)
    lo_tail, hi_tail = _tail_bounds(induced)
    flags = [] if induced.tail is not None else ["head_only"]
    if not math.isfinite(hi_tail) or head_sup == math.inf:
        lower = _log_add(
            log_sum_exp(induced.infs), lo_tail if math.isfinite(lo_tail) else 0.0
        )
        return PressureEstimate(
            value=math.inf,
            lower=lower,
            upper=math.inf,
            window=(1, 1),
            flags=flags + ["divergent"],
        )
    if induced.branchwise_constant():
        return PressureEstimate(
            value=_log_add(head_sup, 0.5 * (lo_tail + hi_tail)),
            lower=_log_add(head_sup, lo_tail),
            upper=_log_add(head_sup, hi_tail),
            window=(1, 1),
            flags=flags,
        )

    lower = _log_add(log_sum_exp(induced.infs), lo_tail)
    upper = _log_add(head_sup, hi_tail)
    head = list(range(min(max_branches, len(induced.scheme))))
    log_head = log_sum_exp(induced.sups[head])
    diagnostics = [(1, upper)]
    for m in range(2, depth + 1):
        infs, sups = _cylinder_bounds(induced, head, m)
        lower = max(lower, log_sum_exp(infs) / m)
        # log(Z_0^m - Z_head^m)
        gap = m * (log_head - upper)
        remainder = m * upper + math.log(-math.expm1(gap)) if gap < 0 else -math.inf
        rate = log_sum_exp([log_sum_exp(sups), remainder]) / m
        upper = min(upper, rate)
        diagnostics.append((m, rate))
    value = 0.5 * (lower + upper) if math.isfinite(lower) else upper
    return PressureEstimate(
        value=value,
        lower=lower,
        upper=upper,
        window=(1, depth),
        diagnostics=diagnostics,
        flags=flags,
    )


@dataclass
class GibbsState:
    """
    Gibbs measure of the induced potential: weights μ(X_i) of the enumerated
    branches plus the mass and τ-moment of the tail.
    """

    induced: InducedPotential
    pressure: float
    estimate: PressureEstimate
    weights: np.ndarray
    tail_mass: float
    tail_tau_mass: float
    K: float
    exact: bool
    depth: int
    # μ(X_i) = norm · e^{Ψ_i - P}
    norm: float = 1.0

    @property
    def scheme(self) -> InducingScheme:
        return self.induced.scheme

    @property
    def Lambda(self) -> float:
        return math.fsum(self.weights * self.scheme.taus) + self.tail_tau_mass

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights) + self.tail_mass

    def cylinder_measure(self, word: Sequence[int]) -> float:
        return float(np.prod(self.weights[list(word)]))

    def tail_level_weights(self, ns: np.ndarray) -> np.ndarray:
        """μ{τ = n} for inducing times beyond the horizon, from the tail model."""
        tail = self.induced.tail
        if tail is None:
            return np.zeros(len(ns))
        logs = np.array([tail.log_weight(int(n)) for n in ns], dtype=float)
        return self.norm * np.exp(logs - self.induced.tail_shift * ns - self.pressure)

    def level_weights(self, n_max: int) -> np.ndarray:
        """μ{τ = n} for n = 1..n_max."""
        levels = np.zeros(n_max)
        for weight, tau in zip(self.weights, self.scheme.taus):
            if tau <= n_max:
                levels[tau - 1] += weight
        horizon = self.scheme.horizon
        if n_max > horizon:
            ns = np.arange(horizon + 1, n_max + 1, dtype=float)
            levels[horizon:] = self.tail_level_weights(ns)
        return levels

    def induced_integral(self) -> float:
        """∫Ψ dμ_Ψ, tail included through explicit summation of the tail model."""
        ind = self.induced
        values = ind.sups if self.exact else 0.5 * (ind.sups + ind.infs)
        total = math.fsum(self.weights * values)
        if ind.tail is not None and self.tail_mass > 0:
            horizon = self.scheme.horizon
            ns = np.arange(horizon + 1, horizon + 1 + TAIL_TERMS, dtype=float)
            masses = self.tail_level_weights(ns)
            counts = np.array([ind.tail.branch_count(int(n)) for n in ns], dtype=float)
            logs = np.array([ind.tail.log_weight(int(n)) for n in ns], dtype=float)
            per_branch = logs - np.log(counts) - ind.tail_shift * ns
            total += math.fsum(masses * per_branch)
        return total

    def integrate(
        self, g: Callable[[float], float], profile: str = "bernoulli"
    ) -> float:
        """∫ g dμ of the projected measure."""
        return project_integral(
            self.scheme,
            self.weights,
            g,
            profile=profile,
            tail_mass=self.tail_mass,
            tail_tau_mass=self.tail_tau_mass,
        )


@Profiler.profile
def gibbs_state(induced: InducedPotential, depth: int = 1) -> GibbsState:
    """
    Gibbs state of Ψ. Branchwise-constant potentials give the exact Bernoulli
    weights e^{Ψ_i - P_G}; otherwise branch midpoints are used and K absorbs
    the variations up to ``depth`` and the width of the pressure bracket.

    Raises:
        ComputationRefused: If P_G(Ψ) is infinite.
    """
    estimate = full_shift_pressure(induced, max(depth, 1))
    if not math.isfinite(estimate.value):
        raise ComputationRefused(
            "P_G(Ψ) is infinite; Z_0 diverges", {"lower": estimate.lower}
        )
    P = estimate.value
    exact = induced.branchwise_constant()
    values = induced.sups if exact else 0.5 * (induced.sups + induced.infs)
    weights = np.exp(values - P)
    lo_tail, hi_tail = _tail_bounds(induced)
    mid_tail = 0.5 * (lo_tail + hi_tail)
    tail_mass = mid_tail * math.exp(-P)
    norm = 1.0
    if exact:
        head = math.fsum(np.exp(induced.sups))
        K = max(
            (head + hi_tail) / (head + mid_tail), (head + mid_tail) / (head + lo_tail)
        )
    else:
        total = math.fsum(weights) + tail_mass
        norm = 1.0 / total
        weights = weights * norm
        tail_mass *= norm
        report = svi_report(induced, n_max=max(depth, 2))
        spread = math.fsum(v.upper for v in report.variations[: max(depth, 1)])
        K = math.exp(2 * spread + depth * (estimate.upper - estimate.lower))
    lo_tau, hi_tau = _tail_bounds(induced, moment=1)
    if math.isfinite(hi_tau):
        tail_tau_mass = 0.5 * (lo_tau + hi_tau) * math.exp(-P) * norm
    else:
        tail_tau_mass = math.inf
    state = GibbsState(
        induced, P, estimate, weights, tail_mass, tail_tau_mass, K, exact, depth, norm
    )
    logger.info(
        f"Gibbs state of {induced}: P_G={P:.12f}, "
        f"mass={state.total_mass:.12f}, K={K:.6g}"
    )
    return state


@Profiler.profile
def verify_gibbs_property(
    state: GibbsState, depth: int = 6, max_branches: int = 4
) -> GibbsCheck:
    """
    Ratios μ(C_w)/e^{Ψ_n(x) - nP_G} at the midpoint of every F-cylinder of
    length <= depth over the first ``max_branches`` branches.
    """
    induced = state.induced
    scheme = state.scheme
    head = list(range(min(max_branches, len(scheme))))
    ratios = []
    for n in range(1, depth + 1):
        for word, interval in f_cylinders(scheme, head, n):
            x = interval.midpoint
            values = []
            for index in word:
                values.append(induced.evaluate(x, index))
                x = scheme.orbit_point(index, x, scheme.branches[index].tau)
            exponent = math.fsum(values) - n * state.pressure
            ratios.append(state.cylinder_measure(word) / math.exp(exponent))
    low, high = min(ratios), max(ratios)
    observed = max(high, 1.0 / low)
    holds = 1.0 / state.K - GIBBS_SLACK <= low and high <= state.K + GIBBS_SLACK
    if not holds:
        logger.warning(f"Gibbs ratios [{low:.6g}, {high:.6g}] exceed K={state.K:.6g}")
    return GibbsCheck(
        K=observed,
        min_ratio=low,
        max_ratio=high,
        depth=depth,
        words_checked=len(ratios),
        holds=holds,
    )


def tail_table(state: GibbsState, n_max: Optional[int] = None) -> TailTable:
    """
    μ_Ψ{τ > n} per n with the closed-form tail included, and the better of
    an exponential and a polynomial fit on the last half.
    """
    scheme = state.scheme
    n_max = min(n_max or scheme.horizon, scheme.horizon)
    taus = scheme.taus
    counts = scheme.count_by_tau()
    rows = []
    for n in range(1, n_max + 1):
        level = state.induced.sups[taus == n]
        rows.append(
            TailRow(
                n=n,
                count=counts.get(n, 0),
                sup_phi=float(level.max()) if level.size else -math.inf,
                weight=math.fsum(state.weights[taus > n]) + state.tail_mass,
            )
        )
    points = [(r.n, r.weight) for r in rows if r.weight > 0]
    half = points[len(points) // 2 :]
    if len(half) < 3:
        return TailTable(rows=rows, model="none", rate=0.0, r_squared=1.0)
    ns = [p[0] for p in half]
    weights = [p[1] for p in half]
    rate, r2_exp = fit_exponential_rate(ns, weights)
    poly = linregress(np.log(ns), np.log(weights))
    r2_poly = float(poly.rvalue**2)
    if r2_exp >= r2_poly:
        return TailTable(rows=rows, model="exponential", rate=rate, r_squared=r2_exp)
    return TailTable(
        rows=rows, model="polynomial", rate=-float(poly.slope), r_squared=r2_poly
    )


def _finite_from(g: Callable[[float], float], lo: float, hi: float) -> float:
    """Bisect for the left end of the region where g is finite; g(hi) must be finite."""
    for _ in range(200):
        if hi - lo <= Config.ROOT_TOLERANCE * (1 + abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if math.isfinite(g(mid)):
            hi = mid
        else:
            lo = mid
    return hi


@Profiler.profile
def discriminant(
    induced: InducedPotential, S_grid: Optional[Sequence[float]] = None
) -> DiscriminantReport:
    """
    p* = inf{S: P_G(Ψ - Sτ) < ∞} and sup of P_G(Ψ - Sτ) over S > p*.

    Raises:
        ComputationRefused: If the finiteness transition lies outside the grid.
    """
    grid = sorted(S_grid) if S_grid is not None else list(np.linspace(-5.0, 5.0, 41))

    def pressure(S: float) -> float:
        return full_shift_pressure(induced.shifted(S)).value

    sweep = [(float(S), pressure(S)) for S in grid]
    values = [v for _, v in sweep]
    if induced.tail is None:
        return DiscriminantReport(
            p_star=-math.inf,
            value=math.inf,
            positive=True,
            finite_scheme=True,
            sweep=sweep,
        )
    finite = [math.isfinite(v) for v in values]
    if all(finite) or not any(finite):
        raise ComputationRefused(
            "finiteness transition of P_G(Ψ - Sτ) lies outside the grid",
            {"grid": (grid[0], grid[-1]), "finite_at_left": finite[0]},
        )
    first = finite.index(True)
    p_star = _finite_from(pressure, grid[first - 1], grid[first])
    value = pressure(p_star)
    increasing = [
        b for a, b in zip(values, values[1:]) if math.isfinite(a) and b > a + 1e-12
    ]
    if increasing:
        logger.warning("P_G(Ψ - Sτ) increased along the sweep")
    logger.info(f"discriminant: p* = {p_star:.10f}, D = {value:.10f}")
    return DiscriminantReport(
        p_star=p_star, value=value, positive=value > 0, sweep=sweep
    )


def inducing_time_growth(
    state: GibbsState, checkpoints: Optional[Sequence[int]] = None
) -> InducingGrowthFit:
    """
    Σ_{n<=N} n μ{τ = n} at the checkpoints, fitted against c log N + d and
    against the harmonic numbers Σ_{n<=N} 1/(n+1).
    """
    if checkpoints is None:
        checkpoints = np.unique(np.logspace(3, 5, 21).astype(int))
    if state.induced.tail is None:
        checkpoints = [c for c in checkpoints if c <= state.scheme.horizon]
    checkpoints = [int(c) for c in checkpoints]
    if len(checkpoints) < 3:
        raise ValueError("need at least three checkpoints")
    n_max = max(checkpoints)
    ns = np.arange(1, n_max + 1, dtype=float)
    partial = np.cumsum(ns * state.level_weights(n_max))
    sums = partial[np.array(checkpoints) - 1]
    log_fit = fit_growth(checkpoints, sums)
    harmonic = np.cumsum(1.0 / (ns + 1))[np.array(checkpoints) - 1]
    fit = linregress(harmonic, sums)
    predicted = fit.intercept + fit.slope * harmonic
    scale = max(np.mean(np.abs(sums)), 1e-300)
    residual = float(np.sqrt(np.mean((sums - predicted) ** 2)) / scale)
    divergent = (
        log_fit.model in ("log", "linear") and log_fit.residual < Config.FIT_RESIDUAL
    )
    if divergent:
        log_fit = log_fit.model_copy(update={"verdict": "divergent"})
    return InducingGrowthFit(
        log_fit=log_fit, harmonic_residual=residual, divergent=divergent
    )


def _pressure_bracket(
    fmap: PiecewiseMonotoneMap, phi: Potential, m_max: int
) -> Tuple[float, float]:
    lower = periodic_free_energy(fmap, phi).value
    upper = p_top(fmap, phi, m_max).upper
    return lower, max(lower, upper)


@Profiler.profile
def solve_equilibrium(
    fmap: PiecewiseMonotoneMap,
    phi: Potential,
    scheme: InducingScheme,
    tail: Optional[TailModel] = None,
    induced: Optional[InducedPotential] = None,
    depth: int = 1,
    pressure_bounds: Optional[Tuple[float, float]] = None,
    m_max: int = 10,
) -> EquilibriumResult:
    """
    Solve P_G(Φ - P·τ) = 0 between the periodic free energy and P_top(φ),
    build the Gibbs state at the root and project it when Λ is finite.

    A potential whose induced pressure is already non-positive at the lower
    bracket has its pressure carried by measures the scheme does not see;
    the result is then not_projectable, with Λ reported when it is finite.
    """
    induced = induced or induced_potential(phi, scheme, tail)
    lower, upper = pressure_bounds or _pressure_bracket(fmap, phi, m_max)
    notes: List[str] = []

    def g(P: float) -> float:
        return full_shift_pressure(induced.shifted(P), depth).value

    for _ in range(BRACKET_EXTENSIONS):
        if g(upper) < 0:
            break
        upper += max(1.0, abs(upper))
    else:
        raise ConvergenceError(f"P_G(Φ - Pτ) stays nonnegative up to P = {upper}")
    g_lower = g(lower)
    if not math.isfinite(g_lower):
        lower = _finite_from(g, lower, upper)
        g_lower = g(lower)
        notes.append(f"lower bracket raised to the finiteness threshold {lower:.12g}")

    on_root = g_lower > 0
    if on_root:
        P = brentq(g, lower, upper, xtol=Config.ROOT_TOLERANCE, rtol=8.9e-16)
    else:
        P = lower
        notes.append(
            f"P_G(Φ - Pτ) = {g_lower:.6g} <= 0 at the lower bracket P = {lower:.12g}"
        )
    state = gibbs_state(induced.shifted(P), depth)
    Lam = state.Lambda
    head_a = math.fsum(state.scheme.taus * np.exp(state.induced.sups))
    condition_a = math.isfinite(head_a + _tail_bounds(state.induced, moment=1)[1])
    result = dict(
        pressure=P,
        pressure_bracket=(lower, upper),
        induced_pressure=state.pressure,
        Lambda=Lam if math.isfinite(Lam) else None,
        condition_a=condition_a,
        K=state.K,
        weights_head=[float(w) for w in state.weights[:10]],
        state=state,
    )
    if not math.isfinite(Lam):
        growth = inducing_time_growth(state) if state.induced.tail is not None else None
        notes.append("Λ = Σ τ_i μ(X_i) diverges; the Gibbs state does not project")
        logger.info(f"equilibrium for {phi.name}: P={P:.12f}, not projectable")
        return EquilibriumResult(
            status="not_projectable",
            growth_fit=growth.log_fit if growth else None,
            notes=notes,
            **result,
        )
    if not on_root:
        notes.append(
            "the pressure is carried by measures the scheme does not see; "
            "the Gibbs state does not project"
        )
        logger.info(
            f"equilibrium for {phi.name}: P={P:.12f}, not projectable (off the scheme)"
        )
        return EquilibriumResult(status="not_projectable", notes=notes, **result)

    integral_phi = state.integrate(phi.evaluate)
    entropy = (state.pressure - state.induced_integral()) / Lam
    lyapunov = None
    try:
        lyapunov = state.integrate(lambda x: math.log(abs(fmap.derivative(x))))
    except (MapDefinitionError, ValueError, TypeError):
        notes.append("no derivative available for the Lyapunov exponent")
    defect = entropy + integral_phi - P
    notes.append(f"h + ∫φ dμ - P = {defect:.3g}")
    logger.info(
        f"equilibrium for {phi.name}: P={P:.12f}, Λ={Lam:.6g}, h={entropy:.10f}"
    )
    return EquilibriumResult(
        status="projected",
        entropy=entropy,
        integral_phi=integral_phi,
        lyapunov=lyapunov,
        notes=notes,
        **result,
    )


def _tail_gate(scheme: InducingScheme, h_top: float) -> bool:
    """e^{-n h_top} #{τ_i = n} <= C e^{-ηn} for some η > 0 over enumerated times."""
    counts = scheme.count_by_tau()
    ns = sorted(counts)
    if len(ns) < 2:
        return True
    values = [math.log(counts[n]) - n * h_top for n in ns]
    return float(linregress(ns, values).slope) < 0


@Profiler.profile
def pressure_curve(
    fmap: PiecewiseMonotoneMap,
    family: Callable[[float], Potential],
    t_grid: Sequence[float],
    scheme: InducingScheme,
    tail_factory: Optional[Callable[[float], Optional[TailModel]]] = None,
    depth: int = 1,
    bisection_steps: int = 30,
    h_top: Optional[float] = None,
    m_max: int = 10,
) -> PressureCurve:
    """
    P(t) for φ_t over a grid with finite-difference derivatives, the finiteness
    gates of the analyticity argument, and status changes located by bisection.
    """
    h = h_top if h_top is not None else topological_entropy(fmap, 12).value
    gate = _tail_gate(scheme, h)

    def run(t: float) -> Tuple[float, str, bool]:
        phi = family(t)
        tail = tail_factory(t) if tail_factory else None
        induced = induced_potential(phi, scheme, tail)
        z0_finite = math.isfinite(full_shift_pressure(induced.shifted(h)).upper)
        try:
            result = solve_equilibrium(
                fmap, phi, scheme, induced=induced, depth=depth, m_max=m_max
            )
        except (ConvergenceError, ComputationRefused) as e:
            logger.warning(f"pressure curve: solve failed at t={t}: {e}")
            return math.nan, "failed", z0_finite
        return result.pressure, result.status, z0_finite

    grid = sorted(float(t) for t in t_grid)
    runs = [run(t) for t in grid]
    pressures = np.array([r[0] for r in runs])
    first = second = [None] * len(grid)
    if len(grid) >= 3 and np.all(np.isfinite(pressures)):
        d1 = np.gradient(pressures, grid)
        d2 = np.gradient(d1, grid)
        first, second = [float(v) for v in d1], [float(v) for v in d2]
    samples = [
        CurveSample(
            t=t, pressure=float(p), derivative=d, second_derivative=dd,
            status=status, z0_finite=z0, tail_gate=gate,
        )
        for t, (p, status, z0), d, dd in zip(grid, runs, first, second)
    ]

    transitions = []
    for left, right in zip(samples, samples[1:]):
        if left.status == right.status:
            continue
        a, b = left.t, right.t
        for _ in range(bisection_steps):
            mid = 0.5 * (a + b)
            if run(mid)[1] == left.status:
                a = mid
            else:
                b = mid
        where = 0.5 * (a + b)
        transitions.append((where, left.status, right.status))
        logger.info(
            f"status changes from {left.status} to {right.status} near t={where:.10f}"
        )
    return PressureCurve(
        samples=samples, transitions=transitions, kinks=[t for t, _, _ in transitions]
    )
