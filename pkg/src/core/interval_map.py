"""
Piecewise-monotone interval (and circle) maps, their cylinder partitions,
lap numbers, entropy bounds and periodic points.

Maps whose branches carry exact rational coefficients are handled in
``fractions.Fraction`` arithmetic, so cylinders of the doubling map are exact
dyadic intervals. All other maps use floats compared with
``Config.TOLERANCE``.
"""
import bisect
import dataclasses
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from config.config import Config
from contracts.estimates import PressureEstimate
from core.exceptions import (
    BoundaryError,
    ConvergenceError,
    MapDefinitionError,
    ResolutionLimitError,
)
from core.profiler import Profiler
from core.series import window_regression

logger = logging.getLogger(__name__)

Number = Union[Fraction, float]

SPOT_CHECK_POINTS = 17


@dataclass(frozen=True)
class Interval:
    """
    Sub-interval of [0, 1]. Cylinders use the half-open convention [a, b),
    the last cylinder of a partition is closed.
    """

    left: Number
    right: Number
    closed_left: bool = True
    closed_right: bool = False

    @property
    def width(self) -> Number:
        return self.right - self.left

    @property
    def midpoint(self) -> Number:
        return (self.left + self.right) / 2

    def contains(self, x: Number, tol: float = 0.0) -> bool:
        if x < self.left - tol or x > self.right + tol:
            return False
        if abs(x - self.left) <= tol:
            return self.closed_left or (self.width <= tol and self.closed_right)
        if abs(x - self.right) <= tol:
            return self.closed_right
        return True

    def overlap(self, other: "Interval", tol: float = 0.0) -> Optional["Interval"]:
        """Positive-length intersection, or None."""
        lo = max(self.left, other.left)
        hi = min(self.right, other.right)
        if hi - lo <= tol:
            return None
        return Interval(lo, hi)

    def subset_of(self, other: "Interval", tol: float = 0.0) -> bool:
        return other.left - tol <= self.left and self.right <= other.right + tol

    def same_as(self, other: "Interval", tol: float = 0.0) -> bool:
        return (
            abs(self.left - other.left) <= tol and abs(self.right - other.right) <= tol
        )

    def minus(self, other: "Interval", tol: float = 0.0) -> List["Interval"]:
        """Parts of this interval lying outside ``other`` (at most two)."""
        parts = []
        if other.left - self.left > tol:
            parts.append(Interval(self.left, min(other.left, self.right)))
        if self.right - other.right > tol:
            parts.append(Interval(max(other.right, self.left), self.right))
        return [p for p in parts if p.width > tol]

    def as_floats(self) -> Tuple[float, float]:
        return float(self.left), float(self.right)

    def __repr__(self) -> str:
        lb = "[" if self.closed_left else "("
        rb = "]" if self.closed_right else ")"
        return f"{lb}{self.left}, {self.right}{rb}"


UNIT_INTERVAL = Interval(Fraction(0), Fraction(1), True, True)


def _ordered(a: Number, b: Number) -> Interval:
    return Interval(a, b) if a <= b else Interval(b, a)


@dataclass(frozen=True)
class Branch:
    """One monotone piece of a map."""

    domain: Interval
    increasing: bool
    eval: Callable[[Number], Number]
    deriv: Optional[Callable[[float], float]] = None
    inverse: Optional[Callable[[Number], Number]] = None
    expansion_bounds: Optional[Tuple[float, float]] = None
    affine: bool = False
    exact: bool = False

    def image(self) -> Interval:
        return self.image_of(self.domain)

    def image_of(self, interval: Interval) -> Interval:
        return _ordered(self.eval(interval.left), self.eval(interval.right))

    def preimage(self, y: Number) -> Number:
        """Point of the (closed) domain mapped to y."""
        if self.inverse is not None:
            return self.inverse(y)
        lo, hi = float(self.domain.left), float(self.domain.right)
        target = float(y)

        def residual(x):
            return float(self.eval(x)) - target

        r_lo, r_hi = residual(lo), residual(hi)
        if r_lo == 0.0:
            return lo
        if r_hi == 0.0:
            return hi
        if r_lo * r_hi > 0:
            raise BoundaryError(f"{y} is outside the image of branch {self.domain}", y)
        try:
            return brentq(residual, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=400)
        except RuntimeError as e:
            raise ConvergenceError(f"branch inversion failed at y={y}: {e}") from e

    def preimage_of(self, interval: Interval, tol: float = 0.0) -> Optional[Interval]:
        """B ∩ f^{-1}(interval) as a closed interval, or None if it has no interior."""
        target = interval.overlap(self.image(), tol)
        if target is None:
            return None
        return _ordered(self.preimage(target.left), self.preimage(target.right))


@dataclass(frozen=True)
class Cylinder:
    """
    n-cylinder of the refined partition P_n.

    ``image`` is f^n(interval) and ``increasing`` the orientation of f^n on it.
    """

    word: Tuple[int, ...]
    interval: Interval
    image: Interval
    increasing: bool = True

    @property
    def depth(self) -> int:
        return len(self.word)

    @property
    def full(self) -> bool:
        return self.image.left <= 0 and self.image.right >= 1


@dataclass(frozen=True)
class PartitionLevel:
    depth: int
    cylinders: Tuple[Cylinder, ...]

    def __len__(self) -> int:
        return len(self.cylinders)

    def __iter__(self):
        return iter(self.cylinders)


class PiecewiseMonotoneMap:
    """
    A map of [0, 1] given by an ordered table of monotone branches.

    Args:
        branches: Branches whose domains cover [0, 1] left to right.
        circle: Identify 0 and 1 (x ↦ kx mod 1 style maps).
        critical_orders: Optional mapping critical point -> order ℓ_c.
        mixing_asserted: The caller's assertion that the map is topologically
            mixing. It is recorded, never verified.
        name: Label used in logs and exports.
        tolerance: Comparison tolerance for floating maps.
    """

    def __init__(
        self,
        branches: Sequence[Branch],
        circle: bool = False,
        critical_orders: Optional[Dict[float, float]] = None,
        mixing_asserted: bool = False,
        name: str = "map",
        tolerance: Optional[float] = None,
    ):
        self.branches: Tuple[Branch, ...] = tuple(branches)
        self.circle = circle
        self.critical_orders = dict(critical_orders or {})
        self.mixing_asserted = mixing_asserted
        self.name = name
        self.exact = bool(self.branches) and all(b.exact for b in self.branches)
        self.affine = bool(self.branches) and all(b.affine for b in self.branches)
        if self.exact:
            self.tolerance = 0
        else:
            self.tolerance = Config.TOLERANCE if tolerance is None else tolerance
        self._validate()
        self._cuts = [b.domain.left for b in self.branches[1:]]
        self._levels: Dict[int, PartitionLevel] = {}
        self._word_index: Dict[int, Dict[Tuple[int, ...], Cylinder]] = {}
        self._periodic: Dict[int, List[Tuple[Cylinder, Number]]] = {}
        # period -> (points, successor index array), see core.pressure
        self._orbits: Dict[int, tuple] = {}

    def _validate(self) -> None:
        tol = self.tolerance
        if not self.branches:
            raise MapDefinitionError("a map needs at least one branch")
        if abs(self.branches[0].domain.left) > tol:
            raise MapDefinitionError("branch domains must start at 0")
        if abs(self.branches[-1].domain.right - 1) > tol:
            raise MapDefinitionError("branch domains must end at 1")
        for prev, nxt in zip(self.branches, self.branches[1:]):
            if abs(prev.domain.right - nxt.domain.left) > tol:
                raise MapDefinitionError(
                    f"domains {prev.domain} and {nxt.domain} do not share an endpoint"
                )
        for index, branch in enumerate(self.branches):
            if branch.domain.width <= tol:
                raise MapDefinitionError(f"branch {index} has an empty domain")
            self._spot_check(index, branch)
        for point, order in self.critical_orders.items():
            if not math.isfinite(order) or order < 1:
                raise MapDefinitionError(
                    f"critical point {point} is flat (order {order})"
                )

    def _spot_check(self, index: int, branch: Branch) -> None:
        lo, hi = branch.domain.as_floats()
        xs = np.linspace(lo, hi, SPOT_CHECK_POINTS)
        ys = np.array([float(branch.eval(float(x))) for x in xs])
        steps = np.diff(ys)
        if np.allclose(steps, 0.0, atol=1e-15):
            raise MapDefinitionError(
                f"branch {index} is constant (flat critical point)"
            )
        monotone = np.all(steps > 0) if branch.increasing else np.all(steps < 0)
        if not monotone:
            direction = "increasing" if branch.increasing else "decreasing"
            raise MapDefinitionError(
                f"branch {index} is not strictly {direction} on {branch.domain}"
            )
        if ys.min() < -1e-9 or ys.max() > 1 + 1e-9:
            raise MapDefinitionError(f"branch {index} leaves [0, 1]")

    # -- pointwise dynamics -------------------------------------------------

    def coerce(self, x: Number) -> Number:
        if self.exact:
            return x if isinstance(x, Fraction) else Fraction(x)
        return float(x)

    def branch_index(self, x: Number) -> int:
        return bisect.bisect_right(self._cuts, x)

    def is_boundary(self, x: Number) -> bool:
        tol = self.tolerance
        return any(abs(x - c) <= tol for c in self._cuts)

    def __call__(self, x: Number) -> Number:
        x = self.coerce(x)
        y = self.branches[self.branch_index(x)].eval(x)
        if not self.exact:
            y = min(max(y, 0.0), 1.0)
        return y

    def derivative(self, x: Number) -> float:
        branch = self.branches[self.branch_index(self.coerce(x))]
        if branch.deriv is None:
            raise MapDefinitionError(
                f"{self.name} has no derivative on {branch.domain}"
            )
        return branch.deriv(float(x))

    def apply_word(self, word: Sequence[int], x: Number) -> Number:
        """f^len(word)(x) following the given branches (closure semantics)."""
        for index in word:
            x = self.branches[index].eval(x)
        return x

    def push(self, word: Sequence[int], interval: Interval) -> Interval:
        for index in word:
            interval = self.branches[index].image_of(interval)
        return interval

    def pullback(self, word: Sequence[int], interval: Interval) -> Optional[Interval]:
        """Set of points following ``word`` and landing in ``interval``."""
        for index in reversed(word):
            interval = self.branches[index].preimage_of(interval, self.tolerance)
            if interval is None:
                return None
        return interval

    def itinerary(self, x: Number, n: int) -> Tuple[int, ...]:
        """
        Branch indices of x, f(x), ..., f^{n-1}(x).

        Raises:
            BoundaryError: If an iterate lands on an interior branch endpoint.
        """
        x = self.coerce(x)
        word = []
        for step in range(n):
            if self.is_boundary(x):
                raise BoundaryError(
                    f"f^{step}(x) = {x} lies on a partition boundary", x, step
                )
            index = self.branch_index(x)
            word.append(index)
            x = self.branches[index].eval(x)
        return tuple(word)

    # -- partitions ---------------------------------------------------------

    @Profiler.profile
    def refine(self, n: int) -> PartitionLevel:
        """
        The partition P_n = ⋁_{i<n} f^{-i}(P_1), cylinders ordered by position.

        Raises:
            ResolutionLimitError: If a cylinder is narrower than the tolerance
                or the cylinder budget is exceeded.
        """
        if n < 1:
            raise ValueError(f"refinement depth must be >= 1, got {n}")
        if n in self._levels:
            return self._levels[n]
        start = max([d for d in self._levels if d < n], default=0)
        if start == 0:
            level = PartitionLevel(
                1,
                tuple(
                    Cylinder((i,), b.domain, b.image(), b.increasing)
                    for i, b in enumerate(self.branches)
                ),
            )
            self._store(level)
            start = 1
        for depth in range(start + 1, n + 1):
            self._store(self._refine_once(self._levels[depth - 1]))
        return self._levels[n]

    def _refine_once(self, parent_level: PartitionLevel) -> PartitionLevel:
        tol = self.tolerance
        children: List[Cylinder] = []
        for index, branch in enumerate(self.branches):
            branch_image = branch.image()
            for parent in parent_level.cylinders:
                landing = parent.interval.overlap(branch_image, tol)
                if landing is None:
                    continue
                domain = _ordered(
                    branch.preimage(landing.left), branch.preimage(landing.right)
                )
                if domain.width <= tol:
                    raise ResolutionLimitError(
                        f"cylinder {(index,) + parent.word} is narrower than "
                        f"the tolerance {tol}"
                    )
                if landing.same_as(parent.interval):
                    image = parent.image
                else:
                    image = self.push(parent.word, landing)
                children.append(
                    Cylinder(
                        (index,) + parent.word,
                        domain,
                        image,
                        branch.increasing == parent.increasing,
                    )
                )
                if len(children) > Config.MAX_CYLINDERS:
                    raise ResolutionLimitError(
                        f"more than {Config.MAX_CYLINDERS} cylinders at depth "
                        f"{parent_level.depth + 1}"
                    )
        children.sort(key=lambda c: c.interval.left)
        last = children[-1]
        children[-1] = dataclasses.replace(
            last, interval=dataclasses.replace(last.interval, closed_right=True)
        )
        return PartitionLevel(parent_level.depth + 1, tuple(children))

    def _store(self, level: PartitionLevel) -> None:
        if level.depth == 1:
            last = level.cylinders[-1]
            closed = dataclasses.replace(
                last, interval=dataclasses.replace(last.interval, closed_right=True)
            )
            level = PartitionLevel(1, level.cylinders[:-1] + (closed,))
        self._levels[level.depth] = level

    def cylinder_by_word(self, word: Tuple[int, ...]) -> Optional[Cylinder]:
        depth = len(word)
        if depth not in self._word_index:
            self._word_index[depth] = {c.word: c for c in self.refine(depth)}
        return self._word_index[depth].get(tuple(word))

    def __repr__(self) -> str:
        return f"PiecewiseMonotoneMap({self.name}, branches={len(self.branches)})"


def branch_partition(fmap: PiecewiseMonotoneMap) -> PartitionLevel:
    """P_1: the maximal intervals of monotonicity."""
    return fmap.refine(1)


def refine(fmap: PiecewiseMonotoneMap, n: int) -> PartitionLevel:
    return fmap.refine(n)


def lap_number(fmap: PiecewiseMonotoneMap, n: int) -> int:
    """laps(f^n) = #P_n."""
    return len(fmap.refine(n))


def horseshoe_count(fmap: PiecewiseMonotoneMap, n: int) -> int:
    """Number of n-cylinders mapped by f^n onto the whole interval."""
    tol = fmap.tolerance
    return sum(
        1
        for c in fmap.refine(n)
        if c.image.left <= tol and c.image.right >= 1 - tol
    )


def lap_submultiplicativity(
    fmap: PiecewiseMonotoneMap, n_max: int
) -> List[Tuple[int, int]]:
    """Pairs (n, m), n + m <= n_max, violating laps(n+m) <= laps(n)·laps(m)."""
    laps = {n: lap_number(fmap, n) for n in range(1, n_max + 1)}
    return [
        (n, m)
        for n in range(1, n_max)
        for m in range(1, n_max - n + 1)
        if laps[n + m] > laps[n] * laps[m]
    ]


@Profiler.profile
def topological_entropy(fmap: PiecewiseMonotoneMap, n_max: int) -> PressureEstimate:
    """
    Enclose h_top(f).

    The upper bound is inf_n (1/n) log laps(f^n). The lower bound is the
    best horseshoe bound (1/n) log #{full n-cylinders}. The value is the
    window regression slope of log laps, clamped into the enclosure.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    ns = list(range(1, n_max + 1))
    log_laps = [math.log(lap_number(fmap, n)) for n in ns]
    rates = [value / n for n, value in zip(ns, log_laps)]
    upper = min(rates)
    lower = 0.0
    for n in ns:
        full = horseshoe_count(fmap, n)
        if full > 0:
            lower = max(lower, math.log(full) / n)
    lower = min(lower, upper)
    slope, _, stderr, window = window_regression(ns, log_laps)
    value = min(max(slope, lower), upper)
    logger.info(
        f"h_top({fmap.name}) in [{lower:.12f}, {upper:.12f}], estimate {value:.12f}"
    )
    return PressureEstimate(
        value=value,
        lower=lower,
        upper=upper,
        window=window,
        diagnostics=list(zip(ns, rates)),
        stderr=stderr,
    )


def _fixed_point_on(fmap: PiecewiseMonotoneMap, cylinder: Cylinder) -> Number:
    a, b = cylinder.interval.left, cylinder.interval.right
    image = cylinder.image
    if fmap.exact and fmap.affine:
        slope = image.width / (b - a)
        if cylinder.increasing:
            if slope == 1:
                raise ConvergenceError(f"f^n is the identity on {cylinder.interval}")
            return (image.left - slope * a) / (1 - slope)
        return (image.right + slope * a) / (1 + slope)

    def residual(x):
        return float(fmap.apply_word(cylinder.word, x)) - x

    lo, hi = float(a), float(b)
    r_lo, r_hi = residual(lo), residual(hi)
    if abs(r_lo) <= fmap.tolerance:
        return lo
    if abs(r_hi) <= fmap.tolerance:
        return hi
    if r_lo * r_hi > 0:
        raise ConvergenceError(f"no sign change of f^n(x) - x on {cylinder.interval}")
    try:
        return brentq(residual, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=400)
    except RuntimeError as e:
        raise ConvergenceError(f"periodic point bisection failed: {e}") from e


@Profiler.profile
def periodic_points(
    fmap: PiecewiseMonotoneMap, n: int
) -> List[Tuple[Cylinder, Number]]:
    """
    Fixed points of f^n, one per n-cylinder C with C ⊂ f^n(C).

    Circle maps identify 1 with 0. Points are returned sorted and without
    duplicates.
    """
    if n in fmap._periodic:
        return fmap._periodic[n]
    tol = fmap.tolerance
    level = fmap.refine(n)
    last = len(level) - 1
    found: Dict[Number, Cylinder] = {}
    for position, cylinder in enumerate(level.cylinders):
        interval, image = cylinder.interval, cylinder.image
        if image.left > interval.left + tol or image.right < interval.right - tol:
            continue
        point = _fixed_point_on(fmap, cylinder)
        residual = abs(fmap.apply_word(cylinder.word, point) - point)
        if residual > max(tol, 1e-9):
            raise ConvergenceError(f"periodic point residual {residual} at {point}")
        if abs(point - interval.right) <= tol and position != last:
            continue
        if fmap.circle and abs(point - 1) <= tol:
            point = fmap.coerce(0)
            cylinder = level.cylinders[0]
        found.setdefault(point, cylinder)
    points = sorted(found)
    unique: List[Tuple[Cylinder, Number]] = []
    for point in points:
        if unique and abs(point - unique[-1][1]) <= tol:
            continue
        unique.append((found[point], point))
    fmap._periodic[n] = unique
    logger.debug(f"{len(unique)} points of period {n} for {fmap.name}")
    return unique


def cylinder_containing(fmap: PiecewiseMonotoneMap, x: Number, n: int) -> Cylinder:
    """
    The n-cylinder whose interval contains x.

    Raises:
        BoundaryError: If f^k(x) is a branch endpoint for some k < n.
    """
    word = fmap.itinerary(x, n)
    cylinder = fmap.cylinder_by_word(word)
    if cylinder is None:
        raise BoundaryError(f"itinerary {word} of {x} has no cylinder at depth {n}", x)
    return cylinder
