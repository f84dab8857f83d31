"""
Hofbauer tower (canonical Markov extension) of a piecewise-monotone map.

Domains are the intervals D = f^n(C_n) for n-cylinders C_n; an arrow
D → D' labelled i exists when D' = f(D ∩ B_i). The tower is grown
breadth first so the level of a domain is the length of its shortest
generating word.
"""
import csv
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import orjson

from config.config import Config
from contracts.estimates import PressureEstimate
from core.exceptions import ComputationRefused, UnrealizableWordError
from core.interval_map import Interval, PiecewiseMonotoneMap
from core.profiler import Profiler
from core.series import window_regression

logger = logging.getLogger(__name__)

BASE = 0


@dataclass(frozen=True)
class TowerDomain:
    id: int
    interval: Interval
    level: int
    word: Tuple[int, ...]


@dataclass(frozen=True)
class TowerArrow:
    source: int
    target: int
    branch: int
    # D ∩ B_i, the part of the source domain that follows this arrow
    transition: Interval


class TowerGraph:
    """
    Domains and arrows of a (possibly truncated) Hofbauer tower.
    """

    def __init__(self, fmap: PiecewiseMonotoneMap, horizon: int, level_cap: int):
        self.map = fmap
        self.horizon = horizon
        self.level_cap = level_cap
        self.domains: Dict[int, TowerDomain] = {}
        self.arrows: List[TowerArrow] = []
        self._out: Dict[int, Dict[int, TowerArrow]] = {}
        # domains whose outgoing arrows have been computed
        self.expanded: Set[int] = set()
        # (source, branch) pairs whose image lies above the level cap
        self.truncated: List[Tuple[int, int]] = []

    def add_domain(self, domain: TowerDomain) -> None:
        self.domains[domain.id] = domain
        self._out.setdefault(domain.id, {})

    def add_arrow(self, arrow: TowerArrow) -> None:
        self.arrows.append(arrow)
        self._out[arrow.source][arrow.branch] = arrow

    @property
    def base(self) -> TowerDomain:
        return self.domains[BASE]

    @property
    def max_level(self) -> int:
        return max(d.level for d in self.domains.values())

    def successors(self, domain_id: int) -> List[TowerArrow]:
        return list(self._out.get(domain_id, {}).values())

    def arrow(self, domain_id: int, branch: int) -> Optional[TowerArrow]:
        return self._out.get(domain_id, {}).get(branch)

    def find(self, interval: Interval, tol: float = 0.0) -> Optional[int]:
        for domain in self.domains.values():
            if domain.interval.same_as(interval, tol):
                return domain.id
        return None

    def to_networkx(self) -> nx.MultiDiGraph:
        graph = nx.MultiDiGraph()
        for domain in self.domains.values():
            graph.add_node(
                domain.id, level=domain.level, interval=domain.interval.as_floats()
            )
        for arrow in self.arrows:
            graph.add_edge(arrow.source, arrow.target, key=arrow.branch)
        return graph

    def to_weighted_digraph(self, phi) -> "WeightedDigraph":
        """
        Arrows weighted by e^{φ(midpoint of the transition interval)}; parallel
        arrows add.
        """
        from core.rome import WeightedDigraph

        graph = WeightedDigraph(vertices=sorted(self.domains))
        for arrow in self.arrows:
            weight = math.exp(phi.evaluate(arrow.transition.midpoint))
            graph.add_edge(arrow.source, arrow.target, weight, accumulate=True)
        return graph

    def to_dict(self) -> dict:
        return {
            "map": self.map.name,
            "horizon": self.horizon,
            "level_cap": self.level_cap,
            "domains": [
                {
                    "id": d.id,
                    "left": float(d.interval.left),
                    "right": float(d.interval.right),
                    "level": d.level,
                    "word": list(d.word),
                }
                for d in sorted(self.domains.values(), key=lambda d: d.id)
            ],
            "arrows": [
                {
                    "source": a.source,
                    "target": a.target,
                    "branch": a.branch,
                    "transition": list(a.transition.as_floats()),
                }
                for a in self.arrows
            ],
        }

    def export_json(self, path: str) -> None:
        with open(path, "wb") as f:
            f.write(orjson.dumps(self.to_dict(), option=orjson.OPT_INDENT_2))
        logger.info(f"Wrote tower ({len(self.domains)} domains) to {path}")

    def export_csv(self, path: str) -> None:
        """One row per arrow with both endpoint domains spelled out."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(
                [
                    "source", "target", "branch", "source_level", "target_level",
                    "source_left", "source_right", "target_left", "target_right",
                ]
            )
            for a in self.arrows:
                s, t = self.domains[a.source], self.domains[a.target]
                writer.writerow(
                    [
                        a.source, a.target, a.branch, s.level, t.level,
                        float(s.interval.left), float(s.interval.right),
                        float(t.interval.left), float(t.interval.right),
                    ]
                )
        logger.info(f"Wrote tower arrows to {path}")

    def __repr__(self) -> str:
        return (
            f"TowerGraph({self.map.name}, domains={len(self.domains)}, "
            f"arrows={len(self.arrows)}, R={self.level_cap})"
        )


@Profiler.profile
def build_tower(
    fmap: PiecewiseMonotoneMap, horizon: int, level_cap: Optional[int] = None
) -> TowerGraph:
    """
    Every domain reachable from the base by a word of length <= horizon whose
    level does not exceed ``level_cap`` (defaults to the horizon).

    Images that agree with an existing domain within IDENTIFICATION_FACTOR
    times the tolerance are identified with it, with a warning unless exact.
    """
    level_cap = horizon if level_cap is None else level_cap
    tol = fmap.tolerance
    identify = tol * Config.IDENTIFICATION_FACTOR
    tower = TowerGraph(fmap, horizon, level_cap)
    tower.add_domain(TowerDomain(BASE, Interval(0, 1, True, True), 0, ()))
    frontier = deque([BASE])
    for depth in range(horizon):
        next_frontier = deque()
        while frontier:
            source = tower.domains[frontier.popleft()]
            tower.expanded.add(source.id)
            for index, branch in enumerate(fmap.branches):
                transition = source.interval.overlap(branch.domain, tol)
                if transition is None:
                    continue
                image = branch.image_of(transition)
                target = tower.find(image, identify)
                if target is not None:
                    existing = tower.domains[target].interval
                    if not existing.same_as(image):
                        logger.warning(
                            f"identified {image} with domain {target} {existing} "
                            f"within tolerance {identify:g}"
                        )
                else:
                    if source.level + 1 > level_cap:
                        tower.truncated.append((source.id, index))
                        continue
                    target = len(tower.domains)
                    tower.add_domain(
                        TowerDomain(
                            target, image, source.level + 1, source.word + (index,)
                        )
                    )
                    next_frontier.append(target)
                tower.add_arrow(TowerArrow(source.id, target, index, transition))
        frontier = next_frontier
        if not frontier:
            break
    logger.info(
        f"tower of {fmap.name}: {len(tower.domains)} domains, "
        f"{len(tower.arrows)} arrows "
        f"(horizon {horizon}, level cap {level_cap})"
    )
    return tower


def truncate(tower: TowerGraph, level_cap: int) -> TowerGraph:
    """The sub-tower Î_R of domains with level <= level_cap."""
    kept = {d.id for d in tower.domains.values() if d.level <= level_cap}
    result = TowerGraph(tower.map, tower.horizon, level_cap)
    for domain_id in sorted(kept):
        result.add_domain(tower.domains[domain_id])
    for arrow in tower.arrows:
        if arrow.source in kept and arrow.target in kept:
            result.add_arrow(arrow)
        elif arrow.source in kept:
            result.truncated.append((arrow.source, arrow.branch))
    result.expanded = tower.expanded & kept
    result.truncated.extend(t for t in tower.truncated if t[0] in kept)
    return result


def _covers_unit_interval(intervals: Iterable[Interval], tol: float) -> bool:
    reach = 0.0
    for interval in sorted(intervals, key=lambda iv: iv.left):
        if interval.left > reach + tol:
            return False
        reach = max(reach, float(interval.right))
    return reach >= 1 - tol


def transitive_part(tower: TowerGraph, require_cover: bool = True) -> Set[int]:
    """
    The largest cyclic strongly connected component of the tower whose
    domains cover [0, 1].

    Raises:
        ComputationRefused: If no such component exists at this horizon.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(tower.domains)
    graph.add_edges_from((a.source, a.target) for a in tower.arrows)
    components = [
        c
        for c in nx.strongly_connected_components(graph)
        if len(c) > 1 or any(graph.has_edge(v, v) for v in c)
    ]
    components.sort(key=len, reverse=True)
    for component in components:
        if not require_cover or _covers_unit_interval(
            (tower.domains[v].interval for v in component),
            max(tower.map.tolerance, 1e-12),
        ):
            return set(component)
    raise ComputationRefused(
        "no strongly connected component of the tower projects onto [0, 1]",
        {"components": len(components), "domains": len(tower.domains)},
    )


def path_for_cylinder(tower: TowerGraph, word: Sequence[int]) -> List[int]:
    """
    Domains visited by the path starting at the base and following ``word``.

    Raises:
        UnrealizableWordError: If an arrow is missing.
    """
    path = [BASE]
    for step, index in enumerate(word):
        arrow = tower.arrow(path[-1], index)
        if arrow is None:
            raise UnrealizableWordError(
                f"word {tuple(word)} leaves the tower at step {step} "
                f"(domain {path[-1]})"
            )
        path.append(arrow.target)
    return path


def path_counts(
    tower: TowerGraph,
    n_max: int,
    avoid_domains: Iterable[int] = (),
    avoid_arrows: Iterable[Tuple[int, int]] = (),
) -> List[int]:
    """
    Number of paths of length n = 1..n_max from the base that never enter an
    avoided domain nor use an avoided (source, branch) arrow.
    """
    avoid_domains = set(avoid_domains)
    avoid_arrows = set(avoid_arrows)
    if BASE in avoid_domains:
        return [0] * n_max
    current: Dict[int, int] = {BASE: 1}
    counts = []
    for _ in range(n_max):
        following: Dict[int, int] = {}
        for domain_id, count in current.items():
            for arrow in tower.successors(domain_id):
                if arrow.target in avoid_domains:
                    continue
                if (domain_id, arrow.branch) in avoid_arrows:
                    continue
                following[arrow.target] = following.get(arrow.target, 0) + count
        counts.append(sum(following.values()))
        current = following
    return counts


def path_growth_rate(
    tower: TowerGraph,
    n_max: Optional[int] = None,
    avoid_domains: Iterable[int] = (),
    avoid_arrows: Iterable[Tuple[int, int]] = (),
) -> PressureEstimate:
    """
    Exponential growth rate of path counts from the base, optionally avoiding
    domains or arrows. Zero counts give -inf with the flag ``no_paths``.
    """
    n_max = n_max or tower.horizon
    counts = path_counts(tower, n_max, avoid_domains, avoid_arrows)
    ns = list(range(1, n_max + 1))
    logs = [math.log(c) if c > 0 else -math.inf for c in counts]
    diagnostics = [(n, v / n) for n, v in zip(ns, logs)]
    if sum(1 for v in logs if math.isfinite(v)) < 2 or counts[-1] == 0:
        return PressureEstimate(
            value=-math.inf,
            lower=-math.inf,
            upper=-math.inf,
            window=(1, n_max),
            diagnostics=diagnostics,
            flags=["no_paths"],
        )
    slope, _, stderr, window = window_regression(ns, logs)
    return PressureEstimate(
        value=slope,
        lower=slope - 2 * stderr,
        upper=slope + 2 * stderr,
        window=window,
        diagnostics=diagnostics,
        stderr=stderr,
    )
