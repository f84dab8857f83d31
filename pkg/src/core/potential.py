"""
Potentials on [0, 1] built from closed-form pieces, and the regularity
quantities used throughout: Birkhoff sums, variations V_n, distortion β_n,
total-variation lower bounds and the bounded-range margin.
"""
import heapq
import logging
import math
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from abstractions.potential_piece import PotentialPiece
from contracts.estimates import Enclosure
from contracts.regularity import BVEstimate, RangeMargin, RegularityReport
from core.exceptions import BoundaryError, ComputationRefused, MapDefinitionError
from core.interval_map import Interval, Number, PiecewiseMonotoneMap
from core.profiler import Profiler
from pieces import ConstantPiece, DyadicStepPiece, LogDerivativePiece

logger = logging.getLogger(__name__)

# cylinders whose Birkhoff sums are sampled for the lower bound of β_n
BETA_SAMPLED_CYLINDERS = 256
BETA_SAMPLE_DEPTH = 12


class Potential:
    """
    A potential φ: [0, 1] → R given by pieces on consecutive intervals.

    Args:
        pieces: (interval, piece) pairs covering [0, 1] left to right.
        overrides: Point values taking precedence over the pieces.
        endpoint_rule: "left" means pieces own [a, b) (the last one closed),
            "right" means pieces own (a, b] (the first one closed).
        offsets: Constants added in order; see ``shifted``.
        name: Label for logs and exports.
    """

    def __init__(
        self,
        pieces: Sequence[Tuple[Interval, PotentialPiece]],
        overrides: Optional[Dict[Number, float]] = None,
        endpoint_rule: str = "left",
        offsets: Sequence[float] = (),
        name: str = "phi",
    ):
        if not pieces:
            raise MapDefinitionError("a potential needs at least one piece")
        if endpoint_rule not in ("left", "right"):
            raise MapDefinitionError(f"unknown endpoint rule {endpoint_rule}")
        self.pieces = tuple(pieces)
        self.overrides = dict(overrides or {})
        self.endpoint_rule = endpoint_rule
        self.offsets = tuple(float(o) for o in offsets)
        self.name = name
        for (left, _), (right, _) in zip(self.pieces, self.pieces[1:]):
            if left.right != right.left:
                raise MapDefinitionError(
                    f"potential pieces {left} and {right} are not adjacent"
                )
        if self.pieces[0][0].left != 0 or self.pieces[-1][0].right != 1:
            raise MapDefinitionError("potential pieces must cover [0, 1]")
        self._edges = [float(iv.left) for iv, _ in self.pieces[1:]]

    @property
    def offset(self) -> float:
        return math.fsum(self.offsets)

    @property
    def bounded(self) -> bool:
        return all(piece.bounded for _, piece in self.pieces) and all(
            math.isfinite(v) for v in self.overrides.values()
        )

    def _add_offsets(self, value: float) -> float:
        for o in self.offsets:
            value += o
        return value

    def shifted(self, c: float) -> "Potential":
        """φ + c, kept as a separate offset so inducing commutes with shifting."""
        return Potential(
            self.pieces,
            self.overrides,
            self.endpoint_rule,
            self.offsets + (float(c),),
            f"{self.name}{c:+g}",
        )

    def constant_value(self) -> Optional[float]:
        values = {piece.constant_value() for _, piece in self.pieces}
        values |= set(self.overrides.values())
        if len(values) == 1 and None not in values:
            return self._add_offsets(values.pop())
        return None

    def breakpoints(self, resolution: float = 0.0) -> List[float]:
        points = set(self._edges)
        for interval, piece in self.pieces:
            lo, hi = interval.as_floats()
            points.update(piece.breakpoints(lo, hi, resolution))
        points.update(float(p) for p in self.overrides)
        return sorted(points)

    def _piece_at(self, x: Number) -> PotentialPiece:
        xf = float(x)
        if self.endpoint_rule == "left":
            index = sum(1 for e in self._edges if e <= xf)
        else:
            index = sum(1 for e in self._edges if e < xf)
        return self.pieces[index][1]

    def evaluate(self, x: Number) -> float:
        if x in self.overrides:
            return self._add_offsets(self.overrides[x])
        return self._add_offsets(self._piece_at(x).evaluate(x))

    __call__ = evaluate

    def _raw_bounds(self, interval: Interval) -> Tuple[float, float, float, int]:
        infs, sups, errs = [], [], []
        touched = 0
        if interval.width == 0:
            value = self.evaluate(interval.left)
            return value, value, 0.0, 1
        for piece_interval, piece in self.pieces:
            part = interval.overlap(piece_interval)
            if part is None:
                continue
            touched += 1
            inf, sup, err = piece.bounds(part.left, part.right)
            infs.append(inf)
            sups.append(sup)
            errs.append(err)
        for point, value in self.overrides.items():
            if interval.contains(point):
                infs.append(value)
                sups.append(value)
        return min(infs), max(sups), max(errs, default=0.0), touched

    def base_bounds(self, interval: Interval) -> Tuple[float, float, float]:
        """Like ``bounds`` but without the offsets."""
        inf, sup, err, _ = self._raw_bounds(interval)
        return inf, sup, err

    def bounds(self, interval: Interval) -> Tuple[float, float, float]:
        """
        (inf, sup, err) of φ on the closure of the interval interior, plus any
        override point the interval contains.
        """
        inf, sup, err, _ = self._raw_bounds(interval)
        return self._add_offsets(inf), self._add_offsets(sup), err

    def oscillation(self, interval: Interval) -> Tuple[float, float]:
        """Lower and upper bounds for sup φ - inf φ on the interval."""
        inf, sup, err, touched = self._raw_bounds(interval)
        if touched == 1 and not any(interval.contains(p) for p in self.overrides):
            piece_interval, piece = next(
                (iv, pc) for iv, pc in self.pieces if interval.overlap(iv) is not None
            )
            part = interval.overlap(piece_interval)
            return piece.oscillation(part.left, part.right)
        return sup - inf, sup - inf + 2 * err

    def global_bounds(self) -> Tuple[float, float]:
        inf, sup, _ = self.bounds(Interval(0.0, 1.0, True, True))
        return inf, sup

    def __repr__(self) -> str:
        return f"Potential({self.name}, pieces={len(self.pieces)})"


# -- named potentials --------------------------------------------------------


def constant(c: float) -> Potential:
    return Potential(
        [(Interval(0, 1, True, True), ConstantPiece(c))], name=f"const({c:g})"
    )


def hofbauer_keller_value(b: float, K: Optional[int]):
    """a_k = b for k < K and 2 log((k+1)/(k+2)) from K on; K=None keeps b."""

    def level_value(k: int) -> float:
        if K is None or k < K:
            return b
        return 2.0 * math.log((k + 1) / (k + 2))

    return level_value


def hofbauer_keller(b: float, K: Optional[int] = 2) -> Potential:
    """
    φ(x) = a_k on (2^{-k-1}, 2^{-k}], φ(0) = 0. ``K=None`` is the K = ∞ member.
    """
    if K is not None and K < 0:
        raise MapDefinitionError(f"K must be a nonnegative integer, got {K}")
    name = f"hk(b={b:g},K={'inf' if K is None else K})"
    if K is None:
        piece: PotentialPiece = ConstantPiece(b)
    else:
        piece = DyadicStepPiece(
            hofbauer_keller_value(b, K), tail_start=K, tail_limit=0.0
        )
    return Potential(
        [(Interval(0, 1, True, True), piece)],
        overrides={Fraction(0): 0.0},
        endpoint_rule="right",
        name=name,
    )


def neg_log_deriv(fmap: PiecewiseMonotoneMap, t: float = 1.0) -> Potential:
    """φ = -t log|Df|, the geometric potential."""
    pieces = []
    for branch in fmap.branches:
        if branch.deriv is None:
            raise MapDefinitionError(f"{fmap.name} does not provide derivatives")
        lo, hi = branch.domain.as_floats()
        pieces.append(
            (Interval(lo, hi), LogDerivativePiece(branch.deriv, t, lo, hi))
        )
    return Potential(pieces, name=f"-{t:g}log|Df|")


# -- dynamical quantities ----------------------------------------------------


def birkhoff_sum(
    phi: Potential, fmap: PiecewiseMonotoneMap, x: Number, n: int
) -> float:
    """
    φ_n(x) = Σ_{k<n} φ(f^k x).

    Raises:
        BoundaryError: If f is applied at a branch endpoint before step n.
    """
    x = fmap.coerce(x)
    values = []
    for step in range(n):
        values.append(phi.evaluate(x))
        if step == n - 1:
            break
        if fmap.is_boundary(x):
            raise BoundaryError(f"orbit hits the partition boundary at {x}", x, step)
        x = fmap(x)
    return math.fsum(values)


def orbit_images(
    fmap: PiecewiseMonotoneMap, word: Sequence[int], interval: Interval
) -> List[Interval]:
    """[J, f(J), ..., f^{len(word)-1}(J)] for J following ``word``."""
    images = [interval]
    for index in word[:-1]:
        images.append(fmap.branches[index].image_of(images[-1]))
    return images


def _image_oscillations(phi: Potential, fmap: PiecewiseMonotoneMap, cylinder) -> float:
    return math.fsum(
        phi.oscillation(image)[1]
        for image in orbit_images(fmap, cylinder.word, cylinder.interval)
    )


@Profiler.profile
def variation_n(phi: Potential, fmap: PiecewiseMonotoneMap, n: int) -> Enclosure:
    """V_n(φ) = sup over n-cylinders of the oscillation of φ."""
    if not phi.bounded:
        return Enclosure(value=math.inf, lower=math.inf, upper=math.inf, finite=False)
    lower = upper = 0.0
    for cylinder in fmap.refine(n):
        lo, hi = phi.oscillation(cylinder.interval)
        lower = max(lower, lo)
        upper = max(upper, hi)
    return Enclosure(value=lower, lower=lower, upper=upper)


def _sample_points(interval: Interval) -> List[Number]:
    a, w = interval.left, interval.width
    points = {a, a + w / 2}
    for j in range(1, BETA_SAMPLE_DEPTH + 1):
        points.add(a + w / 2**j)
        points.add(a + w - w / 2**j)
    if interval.closed_right:
        points.add(interval.right)
    return sorted(points)


@Profiler.profile
def beta_n(phi: Potential, fmap: PiecewiseMonotoneMap, n: int) -> Enclosure:
    """
    β_n(φ) = sup over n-cylinders C of sup_C φ_n - inf_C φ_n.

    The upper bound adds the oscillations of φ along f^k(C); the lower bound
    evaluates φ_n at sample points of the cylinders with the largest upper bound.
    """
    if not phi.bounded:
        return Enclosure(value=math.inf, lower=math.inf, upper=math.inf, finite=False)
    scored = [(_image_oscillations(phi, fmap, c), c) for c in fmap.refine(n)]
    upper = max(score for score, _ in scored)
    lower = 0.0
    largest = heapq.nlargest(BETA_SAMPLED_CYLINDERS, scored, key=lambda s: s[0])
    for _, cylinder in largest:
        sums = []
        for x in _sample_points(cylinder.interval):
            point = x
            values = []
            for index in cylinder.word:
                values.append(phi.evaluate(point))
                point = fmap.branches[index].eval(point)
            sums.append(math.fsum(values))
        lower = max(lower, max(sums) - min(sums))
    lower = min(lower, upper)
    return Enclosure(value=lower, lower=lower, upper=upper)


def regularity_report(
    phi: Potential, fmap: PiecewiseMonotoneMap, n: int, grid_size: Optional[int] = None
) -> RegularityReport:
    return RegularityReport(
        n=n,
        variation=variation_n(phi, fmap, n),
        beta=beta_n(phi, fmap, n),
        bv=bv_lower_bound(phi, grid_size) if grid_size else None,
    )


@Profiler.profile
def bv_lower_bound(phi: Potential, grid_size: int, levels: int = 6) -> BVEstimate:
    """
    Lower bound for ‖φ‖_BV from nested dyadic grids joined with the breakpoints.

    The estimate is nondecreasing in ``grid_size``. ``diverging`` is set when
    the increments between successive grid levels do not form a convergent
    series.
    """
    top = max(1, math.ceil(math.log2(max(grid_size, 2))))
    start = max(1, top - levels + 1)
    resolution = 2.0**-top
    extra = [p for p in phi.breakpoints(resolution) if 0 <= p <= 1]
    rows: List[Tuple[int, float]] = []
    for level in range(start, top + 1):
        grid = np.union1d(np.linspace(0.0, 1.0, 2**level + 1), extra)
        values = np.array([phi.evaluate(Fraction(x) if x == 0 else x) for x in grid])
        rows.append((len(grid), float(np.sum(np.abs(np.diff(values))))))
    increments = [max(0.0, b[1] - a[1]) for a, b in zip(rows, rows[1:])]
    half = len(increments) // 2
    early = float(np.mean(increments[:half])) if half else 0.0
    late = float(np.mean(increments[half:])) if increments else 0.0
    diverging = late > 1e-9 and late >= 0.5 * early
    value = rows[-1][1]
    if diverging:
        logger.warning(
            f"variation of {phi.name} keeps growing with the grid: {value:.4f}"
        )
    return BVEstimate(
        grid_size=grid_size, value=value, levels=rows, diverging=diverging
    )


def bounded_range_margin(phi: Potential, h: float) -> RangeMargin:
    """h - (sup φ - inf φ); -inf for unbounded potentials."""
    if not phi.bounded:
        return RangeMargin(
            h=h, sup=math.inf, inf=-math.inf, margin=-math.inf, unbounded=True
        )
    inf, sup = phi.global_bounds()
    return RangeMargin(h=h, sup=sup, inf=inf, margin=h - (sup - inf))


def lyapunov_lower_bound(phi: Potential, h_top: float) -> float:
    """
    h_top - (sup φ - inf φ).

    Raises:
        ComputationRefused: If φ is unbounded.
    """
    margin = bounded_range_margin(phi, h_top)
    if margin.unbounded:
        raise ComputationRefused(
            "lyapunov lower bound needs a bounded potential", {"potential": phi.name}
        )
    return margin.margin


def lyapunov_exponent(fmap: PiecewiseMonotoneMap, x: Number, n: int) -> float:
    """(1/n) log|Df^n(x)| along the orbit of x."""
    x = fmap.coerce(x)
    logs = []
    for _ in range(n):
        logs.append(math.log(abs(fmap.derivative(x))))
        x = fmap(x)
    return math.fsum(logs) / n


def evaluate_many(phi: Potential, points: Iterable[Number]) -> np.ndarray:
    return np.array([phi.evaluate(p) for p in points], dtype=float)
