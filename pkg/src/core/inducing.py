"""
Inducing schemes: first-return maps to an interval (or to a tower set X̂),
induced potentials Φ = φ_τ, summable-variation checks, projection of
integrals back to the base and the associated Young tower.
"""
import bisect
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from abstractions.tail_model import TailModel
from config.config import Config
from contracts.estimates import Enclosure
from contracts.regularity import SufficientConditionReport, SVIReport
from core.exceptions import ComputationRefused, ResolutionLimitError
from core.hofbauer import TowerGraph
from core.interval_map import UNIT_INTERVAL, Interval, Number, PiecewiseMonotoneMap
from core.potential import Potential, orbit_images, variation_n
from core.profiler import Profiler
from core.series import classify_series, fit_growth
from core.tails import GeometricTail

logger = logging.getLogger(__name__)

QUADRATURE_NODES = 16


@dataclass(frozen=True)
class SchemeBranch:
    """X_i with its inducing time and the branch word of f^{τ_i} on it."""

    domain: Interval
    tau: int
    word: Tuple[int, ...]

    @property
    def width(self) -> float:
        return float(self.domain.width)


class InducingScheme:
    """
    Countable full-branch induced map F = f^τ on a base interval, enumerated
    up to ``horizon``.

    Args:
        fmap: The underlying map.
        base: X (or π(X̂) for tower schemes).
        branches: Enumerated branches.
        horizon: Largest inducing time enumerated.
        tail_multiplicity: Branches per inducing time beyond the horizon when
            known (1 for the doubling and Manneville–Pomeau schemes).
        rejected: (word, landing interval) of partial returns.
    """

    def __init__(
        self,
        fmap: PiecewiseMonotoneMap,
        base: Interval,
        branches: Sequence[SchemeBranch],
        horizon: int,
        tail_multiplicity: Optional[int] = None,
        rejected: Sequence[Tuple[Tuple[int, ...], Interval]] = (),
        base_domain: Optional[int] = None,
    ):
        self.map = fmap
        self.base = base
        self.branches: List[SchemeBranch] = sorted(
            branches, key=lambda b: (b.tau, b.domain.left)
        )
        self.horizon = horizon
        self.tail_multiplicity = tail_multiplicity
        self.rejected = list(rejected)
        self.base_domain = base_domain
        self._by_position = sorted(
            range(len(self.branches)), key=lambda i: self.branches[i].domain.left
        )
        self._lefts = [self.branches[i].domain.left for i in self._by_position]

    @property
    def taus(self) -> np.ndarray:
        return np.array([b.tau for b in self.branches], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.branches)

    def count_by_tau(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for branch in self.branches:
            counts[branch.tau] = counts.get(branch.tau, 0) + 1
        return counts

    def branch_at(self, x: Number) -> Optional[int]:
        """Index of the branch whose domain contains x (half-open), or None."""
        position = bisect.bisect_right(self._lefts, x) - 1
        if position < 0:
            return None
        index = self._by_position[position]
        domain = self.branches[index].domain
        if domain.left <= x < domain.right or (x == domain.right == self.base.right):
            return index
        return None

    def orbit_point(self, index: int, x: Number, k: int) -> Number:
        """f^k(x) for x ∈ X_index and k <= τ_index."""
        return self.map.apply_word(self.branches[index].word[:k], x)

    def induced_map(self, x: Number) -> Number:
        index = self.branch_at(x)
        if index is None:
            raise ValueError(f"{x} lies in no enumerated branch")
        return self.orbit_point(index, x, self.branches[index].tau)

    def __repr__(self) -> str:
        return (
            f"InducingScheme(base={self.base}, "
            f"branches={len(self.branches)}, N={self.horizon})"
        )


def _pull_chain(
    fmap: PiecewiseMonotoneMap,
    chain: Sequence[Interval],
    word: Sequence[int],
    target: Interval,
) -> Optional[Interval]:
    tol = fmap.tolerance
    for k in range(len(word) - 1, -1, -1):
        target = fmap.branches[word[k]].preimage_of(target, tol)
        if target is None:
            return None
        target = target.overlap(chain[k], tol)
        if target is None:
            return None
    return Interval(target.left, target.right, True, True)


def _track_returns(
    fmap: PiecewiseMonotoneMap,
    start_state,
    target: Interval,
    n_max: int,
    step: Callable,
) -> Tuple[List[SchemeBranch], List[Tuple[Tuple[int, ...], Interval]]]:
    """
    Follow the pieces of ``target`` forward until they return fully over it.

    ``step(state, index)`` returns (next_state, at_target), where
    ``at_target`` tells whether a landing at that state counts as a return,
    or None when the move leaves the tracked region.
    """
    tol = fmap.tolerance
    branches: List[SchemeBranch] = []
    rejected: List[Tuple[Tuple[int, ...], Interval]] = []
    pieces = [(start_state, (target,), ())]
    for t in range(n_max):
        following = []
        for state, chain, word in pieces:
            current = chain[-1]
            for index, branch in enumerate(fmap.branches):
                part = current.overlap(branch.domain, tol)
                if part is None:
                    continue
                moved = step(state, index)
                if moved is None:
                    continue
                next_state, at_target = moved
                image = branch.image_of(part)
                extended = word + (index,)
                if at_target:
                    inside = image.overlap(target, tol)
                    if inside is not None:
                        if inside.same_as(target, tol):
                            domain = _pull_chain(fmap, chain, extended, target)
                            if domain is not None:
                                branches.append(SchemeBranch(domain, t + 1, extended))
                        else:
                            rejected.append((extended, inside))
                            logger.warning(
                                f"partial return of word {extended} "
                                f"covers only {inside} of {target}"
                            )
                    outside = image.minus(target, tol)
                else:
                    outside = [image]
                for piece in outside:
                    following.append((next_state, chain + (piece,), extended))
        if len(following) > Config.MAX_CYLINDERS:
            raise ResolutionLimitError(
                f"more than {Config.MAX_CYLINDERS} pieces at time {t + 1}"
            )
        pieces = following
    return branches, rejected


@Profiler.profile
def first_return_scheme(
    fmap: PiecewiseMonotoneMap, X: Interval, n_max: int
) -> InducingScheme:
    """
    First-return map to X: branches X_i on which f^{τ_i} maps X_i onto X.
    Partial returns are reported in ``rejected`` and excluded.
    """
    X = Interval(X.left, X.right, True, True)
    branches, rejected = _track_returns(
        fmap, None, X, n_max, lambda state, index: (None, True)
    )
    if not branches:
        raise ComputationRefused(
            "no full first-return branches",
            {"X": str(X), "n_max": n_max, "partial": len(rejected)},
        )
    logger.info(f"first return to {X}: {len(branches)} branches up to time {n_max}")
    return InducingScheme(fmap, X, branches, n_max, rejected=rejected)


@Profiler.profile
def tower_first_return_scheme(
    fmap: PiecewiseMonotoneMap,
    tower: TowerGraph,
    domain_id: int,
    word: Sequence[int],
    n_max: int,
) -> InducingScheme:
    """
    First return to X̂ = D ∩ C_word inside tower domain D.

    Raises:
        ComputationRefused: If X̂ is not compactly contained in D.
    """
    tol = fmap.tolerance
    domain = tower.domains[domain_id].interval
    cylinder = fmap.cylinder_by_word(tuple(word))
    if cylinder is None:
        raise ComputationRefused("unknown cylinder", {"word": tuple(word)})
    base = domain.overlap(cylinder.interval, tol)
    # on a circle map the full-interval domain has no boundary
    whole_circle = fmap.circle and domain.same_as(UNIT_INTERVAL, tol)
    interior = (
        base is not None
        and domain.left + tol < base.left
        and base.right < domain.right - tol
    )
    if base is None or not (interior or whole_circle):
        raise ComputationRefused(
            "X̂ must be compactly contained in its tower domain",
            {"domain": str(domain), "cylinder": str(cylinder.interval)},
        )

    def step(state, index):
        arrow = tower.arrow(state, index)
        if arrow is None:
            return None
        return arrow.target, arrow.target == domain_id

    base = Interval(base.left, base.right, True, True)
    branches, rejected = _track_returns(fmap, domain_id, base, n_max, step)
    if not branches:
        raise ComputationRefused(
            "no full first-return branches",
            {"X": str(base), "n_max": n_max, "partial": len(rejected)},
        )
    logger.info(f"first return to X̂ in domain {domain_id}: {len(branches)} branches")
    return InducingScheme(
        fmap, base, branches, n_max, rejected=rejected, base_domain=domain_id
    )


def doubling_scheme(fmap: PiecewiseMonotoneMap, n_max: int) -> InducingScheme:
    """
    Closed-form first return of the doubling map to [1/2, 1]:
    X_n = [1/2 + 2^{-n-1}, 1/2 + 2^{-n}] with word 1 0^{n-1}.
    """
    half = fmap.coerce(0.5)
    branches = [
        SchemeBranch(
            Interval(half + half / 2**n, half + half / 2 ** (n - 1), True, True),
            n,
            (1,) + (0,) * (n - 1),
        )
        for n in range(1, n_max + 1)
    ]
    base = Interval(half, fmap.coerce(1), True, True)
    return InducingScheme(fmap, base, branches, n_max, tail_multiplicity=1)


# -- induced potentials ------------------------------------------------------


class InducedPotential:
    """
    Φ = φ_τ on the branches of a scheme, enclosed branchwise by sup/inf.

    ``tail_shift`` is the S with which the tail model is consulted; it starts
    at minus the offsets of φ (unless the tail was derived from φ itself) and
    grows with each ``shifted`` call.
    """

    def __init__(
        self,
        scheme: InducingScheme,
        phi: Potential,
        sups: np.ndarray,
        infs: np.ndarray,
        errors: np.ndarray,
        tail: Optional[TailModel] = None,
        tail_shift: float = 0.0,
        shift: float = 0.0,
    ):
        self.scheme = scheme
        self.phi = phi
        self.sups = sups
        self.infs = infs
        self.errors = errors
        self.tail = tail
        self.tail_shift = tail_shift
        self.shift = shift

    @property
    def taus(self) -> np.ndarray:
        return self.scheme.taus

    @property
    def unbounded(self) -> bool:
        return bool(np.any(~np.isfinite(self.sups)) or np.any(~np.isfinite(self.infs)))

    def branchwise_constant(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.sups - self.infs <= tol))

    def shifted(self, S: float) -> "InducedPotential":
        taus = self.taus
        return InducedPotential(
            self.scheme,
            self.phi,
            self.sups - S * taus,
            self.infs - S * taus,
            self.errors,
            self.tail,
            self.tail_shift + S,
            self.shift + S,
        )

    def block_bounds(self, index: int, interval: Interval) -> Tuple[float, float]:
        """inf and sup of Φ on a sub-interval of X_index."""
        branch = self.scheme.branches[index]
        infs, sups = [], []
        for image in orbit_images(self.scheme.map, branch.word, interval):
            inf, sup, _ = self.phi.base_bounds(image)
            infs.append(inf)
            sups.append(sup)
        lo, hi = math.fsum(infs), math.fsum(sups)
        for offset in self.phi.offsets:
            lo += branch.tau * offset
            hi += branch.tau * offset
        return lo - self.shift * branch.tau, hi - self.shift * branch.tau

    def evaluate(self, x: Number, index: Optional[int] = None) -> float:
        """Φ(x) - shift·τ(x); ``index`` selects the branch known to contain x."""
        index = self.scheme.branch_at(x) if index is None else index
        if index is None:
            raise ValueError(f"{x} lies in no enumerated branch")
        branch = self.scheme.branches[index]
        fmap = self.scheme.map
        values = []
        point = x
        for letter in branch.word:
            values.append(self.phi.evaluate(point))
            point = fmap.branches[letter].eval(point)
        return math.fsum(values) - self.shift * branch.tau

    def __repr__(self) -> str:
        return (
            f"InducedPotential({self.phi.name}, "
            f"branches={len(self.sups)}, shift={self.shift})"
        )


@Profiler.profile
def induced_potential(
    phi: Potential, scheme: InducingScheme, tail: Optional[TailModel] = None
) -> InducedPotential:
    """
    sup/inf of Φ = Σ_{k<τ_i} φ∘f^k on every X_i.

    An explicit ``tail`` describes the offset-free φ. Constant potentials on
    schemes with known multiplicity get a geometric tail automatically.
    """
    fmap = scheme.map
    sups, infs, errors = [], [], []
    for branch in scheme.branches:
        s, i, e = [], [], []
        for image in orbit_images(fmap, branch.word, branch.domain):
            inf, sup, err = phi.base_bounds(image)
            s.append(sup)
            i.append(inf)
            e.append(err)
        sup_total, inf_total = math.fsum(s), math.fsum(i)
        for offset in phi.offsets:
            sup_total += branch.tau * offset
            inf_total += branch.tau * offset
        sups.append(sup_total)
        infs.append(inf_total)
        errors.append(math.fsum(e))
    tail_shift = -phi.offset
    if tail is None and scheme.tail_multiplicity:
        value = phi.constant_value()
        if value is not None:
            tail = GeometricTail(value, scheme.tail_multiplicity)
            tail_shift = 0.0
    return InducedPotential(
        scheme,
        phi,
        np.array(sups, dtype=float),
        np.array(infs, dtype=float),
        np.array(errors, dtype=float),
        tail,
        tail_shift,
    )


def shifted_induced(induced: InducedPotential, S: float) -> InducedPotential:
    """Φ - S·τ."""
    return induced.shifted(S)


# -- summable variations -----------------------------------------------------


def f_cylinders(
    scheme: InducingScheme, indices: Sequence[int], depth: int
) -> List[Tuple[Tuple[int, ...], Interval]]:
    """F-cylinders of the given depth whose letters are all among ``indices``."""
    fmap = scheme.map
    level: List[Tuple[Tuple[int, ...], Interval]] = [
        ((i,), scheme.branches[i].domain) for i in indices
    ]
    for _ in range(depth - 1):
        following = []
        for i in indices:
            branch = scheme.branches[i]
            for word, interval in level:
                pulled = fmap.pullback(branch.word, interval)
                if pulled is None:
                    continue
                inside = pulled.overlap(branch.domain, fmap.tolerance)
                if inside is not None:
                    following.append(((i,) + word, inside))
        level = following
    return level


@Profiler.profile
def svi_report(
    induced: InducedPotential, n_max: int = 4, max_branches: int = 6
) -> SVIReport:
    """
    V_n(Φ) for n = 1..n_max over the first ``max_branches`` branches and the
    fit V_n ≈ C γ^n (weakly Hölder when γ < 1).
    """
    scheme = induced.scheme
    phi = induced.phi
    fmap = scheme.map
    notes = []
    count = min(max_branches, len(scheme))
    indices = list(range(count))
    if induced.branchwise_constant():
        zero = Enclosure(value=0.0, lower=0.0, upper=0.0)
        return SVIReport(
            variations=[zero] * n_max,
            C=0.0,
            gamma=0.0,
            r_squared=1.0,
            weakly_holder=True,
            branches_used=count,
            notes=["Φ is constant on every branch"],
        )
    spread = induced.sups - induced.infs + 2 * induced.errors
    first = float(np.max(induced.sups - induced.infs))
    variations = [Enclosure(value=first, lower=first, upper=float(np.max(spread)))]
    for n in range(2, n_max + 1):
        lower = upper = 0.0
        for word, interval in f_cylinders(scheme, indices, n):
            branch = scheme.branches[word[0]]
            images = orbit_images(fmap, branch.word, interval)
            oscillations = [phi.oscillation(image) for image in images]
            upper = max(upper, math.fsum(o[1] for o in oscillations))
            lower = max(lower, max(o[0] for o in oscillations))
        variations.append(Enclosure(value=lower, lower=lower, upper=upper))
    ns = [n for n, v in enumerate(variations, start=1) if v.upper > 0]
    if len(ns) < 2:
        notes.append("too few nonzero variations to fit")
        return SVIReport(
            variations=variations, C=variations[0].upper, gamma=0.0, r_squared=1.0,
            weakly_holder=True, branches_used=count, notes=notes,
        )
    fit = linregress(ns, [math.log(variations[n - 1].upper) for n in ns])
    gamma = math.exp(fit.slope)
    return SVIReport(
        variations=variations,
        C=math.exp(fit.intercept),
        gamma=gamma,
        r_squared=float(fit.rvalue**2),
        weakly_holder=gamma < 1,
        branches_used=count,
        notes=notes,
    )


def svi_sufficient_a(
    phi: Potential, fmap: PiecewiseMonotoneMap, n_max: int = 10
) -> SufficientConditionReport:
    """Σ n V_n(φ) < ∞ implies summable variations for every inducing scheme."""
    if not phi.bounded:
        return SufficientConditionReport(
            condition="variations", terms=[], partial_sums=[],
            fit=classify_series([math.inf]), satisfied="no",
        )
    terms = [n * variation_n(phi, fmap, n).upper for n in range(1, n_max + 1)]
    fit = classify_series(terms)
    verdicts = {"convergent": "yes", "divergent": "no"}
    satisfied = verdicts.get(fit.verdict, "undetermined")
    return SufficientConditionReport(
        condition="variations",
        terms=terms,
        partial_sums=fit.partial_sums,
        fit=fit,
        satisfied=satisfied,
    )


def svi_sufficient_b(scheme: InducingScheme, alpha: float) -> SufficientConditionReport:
    """
    sup_i Σ_{k<τ_i} |f^k(X_i)|^α < ∞, checked on the running maximum over
    inducing times.
    """
    fmap = scheme.map
    by_tau: Dict[int, float] = {}
    for branch in scheme.branches:
        total = math.fsum(
            float(image.width) ** alpha
            for image in orbit_images(fmap, branch.word, branch.domain)
        )
        by_tau[branch.tau] = max(by_tau.get(branch.tau, 0.0), total)
    taus = sorted(by_tau)
    terms = [by_tau[t] for t in taus]
    running = list(np.maximum.accumulate(terms)) if terms else []
    fit = fit_growth(taus, running) if len(taus) >= 3 else classify_series(terms)
    half = len(running) // 2
    if running and half and (running[-1] - running[half]) <= 0.05 * running[-1]:
        satisfied = "yes"
        fit = fit.model_copy(update={"verdict": "convergent", "model": "bounded"})
    elif fit.model in ("log", "linear") and fit.residual < Config.FIT_RESIDUAL:
        satisfied = "no"
        fit = fit.model_copy(update={"verdict": "divergent"})
    else:
        satisfied = "undetermined"
    return SufficientConditionReport(
        condition="images",
        terms=terms,
        partial_sums=[float(r) for r in running],
        fit=fit,
        satisfied=satisfied,
    )


# -- projection --------------------------------------------------------------


def _branch_average(
    scheme: InducingScheme,
    index: int,
    interval: Interval,
    g: Callable[[float], float],
    nodes: int,
) -> float:
    """(1/|J|) ∫_J Σ_{k<τ} g(f^k x) dx for J ⊂ X_index by Gauss–Legendre."""
    fmap = scheme.map
    word = scheme.branches[index].word
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    a, b = interval.as_floats()
    points = 0.5 * (b - a) * xs + 0.5 * (a + b)
    totals = np.zeros(nodes)
    for j, x in enumerate(points):
        values = []
        point = float(x)
        for letter in word:
            values.append(g(point))
            point = float(fmap.branches[letter].eval(point))
        totals[j] = math.fsum(values)
    return float(np.dot(ws, totals) / ws.sum())


@Profiler.profile
def project_integral(
    scheme: InducingScheme,
    weights: np.ndarray,
    g: Callable[[float], float],
    profile: str = "uniform",
    tail_mass: float = 0.0,
    tail_tau_mass: float = 0.0,
    nodes: int = QUADRATURE_NODES,
) -> float:
    """
    ∫ g dμ = (1/Λ) Σ_i ∫_{X_i} Σ_{k<τ_i} g∘f^k dμ_Φ with Λ = Σ τ_i μ_Φ(X_i).

    ``profile`` gives μ_Φ inside a branch: "uniform" spreads μ_Φ(X_i)
    uniformly, "bernoulli" splits X_i into X_{ij} with relative weights p_j.
    Tail mass beyond the horizon uses the orbit average of the last branch.

    Raises:
        ComputationRefused: If Λ is infinite.
    """
    weights = np.asarray(weights, dtype=float)
    taus = scheme.taus
    Lam = math.fsum(weights * taus) + tail_tau_mass
    if not math.isfinite(Lam):
        raise ComputationRefused(
            "Λ = Σ τ_i μ(X_i) diverges; the measure does not project", {"Lambda": Lam}
        )
    if profile not in ("uniform", "bernoulli"):
        raise ValueError(f"unknown profile {profile}")
    contributions = []
    for index, branch in enumerate(scheme.branches):
        if weights[index] == 0:
            continue
        if profile == "uniform":
            average = _branch_average(scheme, index, branch.domain, g, nodes)
            contributions.append(weights[index] * average)
            continue
        parts = []
        norm = 0.0
        for j, other in enumerate(scheme.branches):
            pulled = scheme.map.pullback(branch.word, other.domain)
            if pulled is None:
                continue
            sub = pulled.overlap(branch.domain, scheme.map.tolerance)
            if sub is None:
                continue
            parts.append(weights[j] * _branch_average(scheme, index, sub, g, nodes))
            norm += weights[j]
        contributions.append(weights[index] * math.fsum(parts) / norm)
    total = math.fsum(contributions)
    if tail_tau_mass > 0 and scheme.branches:
        last = len(scheme.branches) - 1
        branch = scheme.branches[last]
        per_step = _branch_average(scheme, last, branch.domain, g, nodes) / branch.tau
        total += tail_tau_mass * per_step
    return total / Lam


# -- Young tower -------------------------------------------------------------


class YoungTower:
    """
    Δ = {(x, i, j): x ∈ X_i, 0 <= j < τ_i}, climbing one floor per step and
    returning to the ground floor through the induced map.
    """

    def __init__(self, scheme: InducingScheme):
        self.scheme = scheme
        self.floors: List[Tuple[int, int]] = [
            (i, j)
            for i, branch in enumerate(scheme.branches)
            for j in range(branch.tau)
        ]

    @property
    def floor_count(self) -> int:
        return len(self.floors)

    def floor_interval(self, i: int, j: int) -> Interval:
        branch = self.scheme.branches[i]
        return self.scheme.map.push(branch.word[:j], branch.domain)

    def step(self, point: Tuple[Number, int, int]) -> Tuple[Number, int, int]:
        """f_Δ on (x, i, j) with x the ground-floor coordinate."""
        x, i, j = point
        if j + 1 < self.scheme.branches[i].tau:
            return x, i, j + 1
        image = self.scheme.orbit_point(i, x, self.scheme.branches[i].tau)
        target = self.scheme.branch_at(image)
        if target is None:
            raise ValueError(f"F({x}) = {image} lies in no enumerated branch")
        return image, target, 0

    def project(self, point: Tuple[Number, int, int]) -> Number:
        """π_Δ(x, i, j) = f^j(x)."""
        x, i, j = point
        return self.scheme.orbit_point(i, x, j)

    def lift(self, phi: Potential) -> Callable[[Tuple[Number, int, int]], float]:
        return lambda point: phi.evaluate(self.project(point))

    @staticmethod
    def abramov_entropy(induced_entropy: float, Lam: float) -> float:
        """h(μ_Δ) = h(μ_F)/Λ."""
        return induced_entropy / Lam


def young_tower(scheme: InducingScheme) -> YoungTower:
    """Tower over the enumerated branches; returns beyond the horizon have no floors."""
    tower = YoungTower(scheme)
    logger.debug(f"Young tower over {len(scheme)} branches: {tower.floor_count} floors")
    return tower
