"""
Spectral toolkit for weighted directed graphs: rome reduction, the
characteristic-polynomial identity, spectral radii by power iteration,
vertex splitting, perturbation bounds and the tail gap of a k-cylinder
graph built on the Hofbauer tower.
"""
import logging
import math
from collections import defaultdict
from fractions import Fraction
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import sympy

from config.config import Config
from contracts.spectral import (
    IdentityReport,
    IdentitySample,
    PerturbationReport,
    PerturbationRow,
    SpectralResult,
    TailGapReport,
)
from core.exceptions import ComputationRefused, ConvergenceError, ResolutionLimitError
from core.hofbauer import BASE, TowerGraph, build_tower
from core.interval_map import Interval, PiecewiseMonotoneMap, topological_entropy
from core.potential import Potential, bounded_range_margin, variation_n
from core.profiler import Profiler

logger = logging.getLogger(__name__)

EXACT_VERTEX_LIMIT = 12
SYMBOL = sympy.Symbol("x")


class WeightedDigraph:
    """
    Directed graph with positive arrow weights; no parallel arrows.
    """

    def __init__(self, vertices: Iterable[Hashable] = ()):
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(vertices)

    @classmethod
    def from_matrix(
        cls, matrix, labels: Optional[Sequence[Hashable]] = None
    ) -> "WeightedDigraph":
        source = matrix.tolist() if hasattr(matrix, "tolist") else matrix
        rows = [list(r) for r in source]
        labels = list(labels) if labels is not None else list(range(len(rows)))
        graph = cls(labels)
        for i, row in enumerate(rows):
            for j, weight in enumerate(row):
                if weight != 0:
                    graph.add_edge(labels[i], labels[j], weight)
        return graph

    @classmethod
    def from_edges(
        cls, edges: Iterable[Tuple[Hashable, Hashable, object]], vertices=()
    ) -> "WeightedDigraph":
        graph = cls(vertices)
        for source, target, weight in edges:
            graph.add_edge(source, target, weight)
        return graph

    @classmethod
    def from_edge_list(cls, record: Dict) -> "WeightedDigraph":
        """
        {"vertices": [...], "edges": [[source, target, weight], ...]} with
        weights as numbers or "p/q" strings, read exactly.
        """
        edges = [(s, t, Fraction(str(w))) for s, t, w in record["edges"]]
        return cls.from_edges(edges, record.get("vertices", ()))

    def to_edge_list(self) -> Dict:
        return {
            "vertices": self.vertices,
            "edges": [
                [u, v, str(w) if isinstance(w, Fraction) else float(w)]
                for u, v, w in self.edges()
            ],
        }

    @property
    def vertices(self) -> List[Hashable]:
        return list(self.graph.nodes)

    def add_vertex(self, v: Hashable) -> None:
        self.graph.add_node(v)

    def add_edge(
        self, source: Hashable, target: Hashable, weight, accumulate: bool = False
    ) -> None:
        if weight <= 0:
            raise ValueError(
                f"arrow {source}->{target} needs a positive weight, got {weight}"
            )
        if accumulate and self.graph.has_edge(source, target):
            weight = self.graph[source][target]["weight"] + weight
        self.graph.add_edge(source, target, weight=weight)

    def weight(self, source: Hashable, target: Hashable):
        data = self.graph.get_edge_data(source, target)
        return 0 if data is None else data["weight"]

    def edges(self) -> List[Tuple[Hashable, Hashable, object]]:
        return [(u, v, d["weight"]) for u, v, d in self.graph.edges(data=True)]

    def out_edges(self, v: Hashable) -> List[Tuple[Hashable, object]]:
        return [(t, d["weight"]) for _, t, d in self.graph.out_edges(v, data=True)]

    def to_matrix(self, order: Optional[Sequence[Hashable]] = None) -> np.ndarray:
        order = list(order) if order is not None else self.vertices
        position = {v: i for i, v in enumerate(order)}
        matrix = np.zeros((len(order), len(order)))
        for u, v, w in self.edges():
            if u in position and v in position:
                matrix[position[u], position[v]] = float(w)
        return matrix

    def to_sympy(self, order: Optional[Sequence[Hashable]] = None) -> sympy.Matrix:
        order = list(order) if order is not None else self.vertices
        position = {v: i for i, v in enumerate(order)}
        matrix = sympy.zeros(len(order), len(order))
        for u, v, w in self.edges():
            matrix[position[u], position[v]] = _rational(w)
        return matrix

    def subgraph(self, vertices: Iterable[Hashable]) -> "WeightedDigraph":
        result = WeightedDigraph()
        result.graph = self.graph.subgraph(vertices).copy()
        return result

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    def __repr__(self) -> str:
        arrows = self.graph.number_of_edges()
        return f"WeightedDigraph(vertices={len(self)}, arrows={arrows})"


def _rational(value) -> sympy.Rational:
    if isinstance(value, sympy.Basic):
        return sympy.nsimplify(value) if not value.is_Rational else value
    fraction = Fraction(value)
    return sympy.Rational(fraction.numerator, fraction.denominator)


# -- rome reduction ----------------------------------------------------------


def verify_rome(graph: WeightedDigraph, rome: Iterable[Hashable]) -> bool:
    """True when the graph minus ``rome`` has no cycles (self-loops included)."""
    rest = set(graph.vertices) - set(rome)
    return nx.is_directed_acyclic_graph(graph.graph.subgraph(rest))


class RomeMatrix:
    """
    Entries a_ij(x) = Σ_p w(p) x^{1-ℓ(p)} over simple paths from rome vertex i
    to rome vertex j through non-rome vertices, stored as {length: weight}.
    """

    def __init__(
        self,
        rome: Sequence[Hashable],
        entries: Dict[Tuple[Hashable, Hashable], Dict[int, object]],
    ):
        self.rome = list(rome)
        self.entries = entries

    @property
    def max_length(self) -> int:
        return max((l for terms in self.entries.values() for l in terms), default=1)

    def symbolic(self) -> sympy.Matrix:
        """A(x) with entries Laurent polynomials in ``SYMBOL``."""
        size = len(self.rome)
        position = {v: i for i, v in enumerate(self.rome)}
        matrix = sympy.zeros(size, size)
        for (i, j), terms in self.entries.items():
            matrix[position[i], position[j]] = sympy.Add(
                *(
                    _rational(weight) * SYMBOL ** (1 - length)
                    for length, weight in terms.items()
                )
            )
        return matrix

    def characteristic_polynomial(self, vertices: int) -> sympy.Expr:
        """
        (-x)^{vertices-#R} det(A(x) - xI) reduced to a polynomial, so that
        x = 0 evaluates with the x^0 = 1 convention.
        """
        power = vertices - len(self.rome)
        shifted = self.symbolic() - SYMBOL * sympy.eye(len(self.rome))
        det = shifted.det(method="berkowitz")
        return sympy.cancel((-SYMBOL) ** power * det)


@Profiler.profile
def rome_matrix(
    graph: WeightedDigraph, rome: Sequence[Hashable], path_cap: Optional[int] = None
) -> RomeMatrix:
    """
    Enumerate rome-to-rome paths by a memoised walk through the acyclic rest.

    Raises:
        ValueError: If ``rome`` is not a rome.
        ResolutionLimitError: If more than ``path_cap`` paths are needed.
    """
    path_cap = path_cap or Config.ROME_PATH_CAP
    rome = list(rome)
    if not verify_rome(graph, rome):
        raise ValueError(f"{rome} is not a rome: the remaining graph has a cycle")
    in_rome = set(rome)
    memo: Dict[Hashable, Dict[Hashable, Dict[int, object]]] = {}
    path_total = 0

    def suffixes(v: Hashable) -> Dict[Hashable, Dict[int, object]]:
        nonlocal path_total
        if v in memo:
            return memo[v]
        result: Dict[Hashable, Dict[int, object]] = defaultdict(dict)
        for target, weight in graph.out_edges(v):
            if target in in_rome:
                _accumulate(result[target], 1, weight)
                path_total += 1
            else:
                for end, terms in suffixes(target).items():
                    for length, w in terms.items():
                        _accumulate(result[end], length + 1, weight * w)
                        path_total += 1
            if path_total > path_cap:
                raise ResolutionLimitError(
                    f"rome reduction needs more than {path_cap} paths"
                )
        memo[v] = result
        return result

    entries: Dict[Tuple[Hashable, Hashable], Dict[int, object]] = {}
    for i in rome:
        row: Dict[Hashable, Dict[int, object]] = defaultdict(dict)
        for target, weight in graph.out_edges(i):
            if target in in_rome:
                _accumulate(row[target], 1, weight)
            else:
                for end, terms in suffixes(target).items():
                    for length, w in terms.items():
                        _accumulate(row[end], length + 1, weight * w)
        for j, terms in row.items():
            entries[(i, j)] = dict(terms)
    return RomeMatrix(rome, entries)


def _accumulate(terms: Dict[int, object], length: int, weight) -> None:
    terms[length] = terms.get(length, 0) + weight


@Profiler.profile
def characteristic_identity_check(
    graph: WeightedDigraph,
    rome: Sequence[Hashable],
    samples: Sequence = (0, 1, 2, Fraction(1, 2)),
) -> IdentityReport:
    """
    Compare det(W - xI) with (-x)^{#G-#R} det(A(x) - xI) in exact arithmetic.

    Raises:
        ComputationRefused: For graphs above the exact-arithmetic vertex limit.
    """
    size = len(graph)
    if size > EXACT_VERTEX_LIMIT:
        raise ComputationRefused(
            "exact characteristic polynomial check is limited to small graphs",
            {"vertices": size, "limit": EXACT_VERTEX_LIMIT},
        )
    reduced = rome_matrix(graph, rome)
    W = graph.to_sympy(graph.vertices)
    polynomial = reduced.characteristic_polynomial(size)
    rows = []
    for sample in samples:
        x = _rational(sample)
        lhs = (W - x * sympy.eye(size)).det(method="bareiss")
        rhs = polynomial.subs(SYMBOL, x)
        equal = rhs.is_finite is not False and sympy.simplify(lhs - rhs) == 0
        if not equal:
            logger.warning(f"characteristic identity fails at x={x}: {lhs} != {rhs}")
        rows.append(
            IdentitySample(x=str(x), lhs=str(lhs), rhs=str(rhs), equal=bool(equal))
        )
    return IdentityReport(vertices=size, rome_size=len(reduced.rome), samples=rows)


# -- spectral radius ---------------------------------------------------------


def _power_iteration(
    matrix: np.ndarray, max_iter: int, tolerance: float
) -> Tuple[float, np.ndarray, int, float]:
    size = matrix.shape[0]
    shifted = matrix + np.eye(size)
    v = np.full(size, 1.0 / size)
    rho = 0.0
    for iteration in range(1, max_iter + 1):
        w = v @ shifted
        norm = w.sum()
        w /= norm
        if np.abs(w - v).sum() < tolerance:
            v = w
            rho = norm - 1.0
            residual = float(np.abs(v @ matrix - rho * v).sum())
            return rho, v, iteration, residual
        v = w
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


@Profiler.profile
def spectral_radius(
    graph_or_matrix, max_iter: Optional[int] = None, tolerance: Optional[float] = None
) -> SpectralResult:
    """
    Spectral radius of a nonnegative matrix by power iteration on W + I,
    acting on row vectors with the L1 norm.

    Reducible matrices are handled component by component, with a warning.
    """
    max_iter = max_iter or Config.POWER_MAX_ITER
    tolerance = tolerance or Config.POWER_TOLERANCE
    if isinstance(graph_or_matrix, WeightedDigraph):
        graph = graph_or_matrix
        order = graph.vertices
        matrix = graph.to_matrix(order)
    else:
        matrix = np.asarray(graph_or_matrix, dtype=float)
        graph = WeightedDigraph.from_matrix(matrix)
        order = graph.vertices
    if np.any(matrix < 0):
        raise ValueError("spectral_radius expects a nonnegative matrix")
    size = matrix.shape[0]
    if size == 0:
        return SpectralResult(rho=0.0, left_vector=[], iterations=0, residual=0.0)
    components = [
        sorted(order.index(v) for v in c)
        for c in nx.strongly_connected_components(graph.graph)
    ]
    if len(components) == 1:
        rho, v, iterations, residual = _power_iteration(matrix, max_iter, tolerance)
        return SpectralResult(
            rho=float(rho),
            left_vector=v.tolist(),
            iterations=iterations,
            residual=residual,
        )
    logger.warning(
        f"matrix is reducible ({len(components)} components), using the dominant block"
    )
    best = (0.0, np.full(size, 1.0 / size), 0, 0.0)
    for component in components:
        block = matrix[np.ix_(component, component)]
        if not block.any():
            continue
        rho, v, iterations, residual = _power_iteration(block, max_iter, tolerance)
        if rho > best[0]:
            full = np.zeros(size)
            full[component] = v
            best = (rho, full, iterations, residual)
    rho, v, iterations, residual = best
    return SpectralResult(
        rho=float(rho),
        left_vector=v.tolist(),
        iterations=iterations,
        residual=residual,
        irreducible=False,
        components=len(components),
    )


def vertex_split(graph: WeightedDigraph, v: Hashable) -> WeightedDigraph:
    """
    Replace v by one copy (v, k) per outgoing arrow v → u_k.

    Incoming arrows are duplicated onto every copy; a self-loop v → v becomes
    arrows from its copy to every copy. The spectral radius is unchanged and
    the left eigenvector repeats v's component on each copy.
    """
    outgoing = graph.out_edges(v)
    if not outgoing:
        raise ValueError(f"vertex {v} has no outgoing arrow to split on")
    copies = [(v, k) for k in range(len(outgoing))]
    result = WeightedDigraph([u for u in graph.vertices if u != v] + copies)
    for source, target, weight in graph.edges():
        if source == v or target == v:
            continue
        result.add_edge(source, target, weight)
    for source, target, weight in graph.edges():
        if target == v and source != v:
            for copy in copies:
                result.add_edge(source, copy, weight)
    for copy, (target, weight) in zip(copies, outgoing):
        if target == v:
            for other in copies:
                result.add_edge(copy, other, weight)
        else:
            result.add_edge(copy, target, weight)
    return result


# -- perturbation ------------------------------------------------------------


def _norm(matrix: np.ndarray) -> float:
    """Operator norm of v ↦ vM on row vectors with the L1 norm (max row sum)."""
    return float(np.abs(matrix).sum(axis=1).max())


@Profiler.profile
def perturbation_bound_check(
    U_seq: Sequence[np.ndarray],
    V_seq: Sequence[np.ndarray],
    j_max: int = 8,
    k_max: int = 8,
) -> PerturbationReport:
    """
    Check ‖(U_n + V_n)^j‖ <= (1 + e^{j η̃_n}) ρ(U_n)^j for U_n + V_n with
    ‖V_n‖ <= M τ^n, where η̃_n = n^{-1/4} + η_{⌊n^{1/4}⌋} + n^{-1/4} log M.

    Raises:
        ComputationRefused: If an input is negative or the V_n do not decay.
    """
    if len(U_seq) != len(V_seq) or not U_seq:
        raise ValueError("U_seq and V_seq must be nonempty and of equal length")
    Us = [np.asarray(u, dtype=float) for u in U_seq]
    Vs = [np.asarray(v, dtype=float) for v in V_seq]
    if any(np.any(m < 0) for m in Us + Vs):
        raise ComputationRefused("perturbation bound needs nonnegative matrices")
    M = max(_norm(u) for u in Us)
    ratios = [_norm(v) / M for v in Vs]
    tau = max(
        (r ** (1.0 / n) for n, r in enumerate(ratios, start=1) if r > 0), default=0.0
    )
    if tau >= 1:
        raise ComputationRefused(
            "perturbations do not decay geometrically", {"tau": tau, "M": M}
        )
    rhos = [spectral_radius(u).rho for u in Us]
    etas = []
    for k in range(1, k_max + 1):
        worst = 0.0
        for u, rho in zip(Us, rhos):
            growth = _norm(np.linalg.matrix_power(u, k)) / rho**k
            worst = max(worst, math.log(growth) / k)
        etas.append(worst)
    log_m = math.log(max(M, 1.0))
    rows = []
    for n, (u, v, rho) in enumerate(zip(Us, Vs, rhos), start=1):
        root = n ** -0.25
        eta_index = min(max(int(n**0.25), 1), k_max)
        eta_tilde = root + etas[eta_index - 1] + root * log_m
        holds = all(
            _norm(np.linalg.matrix_power(u + v, j))
            <= (1 + math.exp(j * eta_tilde)) * rho**j * (1 + 1e-12)
            for j in range(1, j_max + 1)
        )
        rho_uv = spectral_radius(u + v).rho
        rows.append(
            PerturbationRow(
                n=n,
                rho_u=rho,
                rho_uv=rho_uv,
                ratio=rho_uv / rho,
                eta_tilde=eta_tilde,
                bound_holds=holds,
            )
        )
    ratios_seq = [r.ratio for r in rows]
    nonincreasing = all(b <= a + 1e-15 for a, b in zip(ratios_seq, ratios_seq[1:]))
    return PerturbationReport(
        M=M,
        tau=tau,
        etas=etas,
        rows=rows,
        ratio_nonincreasing=nonincreasing,
        final_gap=abs(ratios_seq[-1] - 1),
    )


# -- tail gap ----------------------------------------------------------------


@Profiler.profile
def tail_gap(
    fmap: PiecewiseMonotoneMap,
    phi: Potential,
    x_interval: Interval,
    k: int,
    level_cap: int,
    tower: Optional[TowerGraph] = None,
    x_domains: Sequence[int] = (BASE,),
) -> TailGapReport:
    """
    γ = log ρ_0 - log ρ_1 for the k-cylinder graph of the truncated tower.

    Vertices are pairs (domain, k-word) with D ∩ C_w nonempty, arrows follow
    the tower and shift the word, weights are e^{φ} at the midpoint of the
    transition interval. X̂ collects the vertices over ``x_domains`` whose
    cylinder lies in ``x_interval``; the rome is every vertex of level <= R
    outside X̂. G_0 is the rome with the X̂ vertices and their arrows restored.
    G_1 is the rome with every exit above the level cap closed up by an
    artificial path of R - 1 vertices weighted e^{sup φ} per arrow.

    The gate is the range margin against h_top. The margin against h*_top,
    the growth rate of paths avoiding X̂, is reported and warned on.

    Raises:
        ComputationRefused: Without a positive range margin against h_top,
            when the rome does not reduce G_1, or when removing X̂ does not
            lower the spectral radius.
    """
    h_top = topological_entropy(fmap, max(level_cap, 8)).value
    margin = bounded_range_margin(phi, h_top)
    if not margin.holds:
        raise ComputationRefused(
            "tail gap needs sup φ - inf φ < h_top",
            {"margin": margin.margin, "h_top": h_top},
        )
    tower = tower or build_tower(fmap, level_cap + k, level_cap)
    tol = fmap.tolerance
    cylinders = {c.word: c for c in fmap.refine(k)}
    vertices: Dict[Tuple[int, Tuple[int, ...]], Interval] = {}
    for domain in tower.domains.values():
        for word, cylinder in cylinders.items():
            part = domain.interval.overlap(cylinder.interval, tol)
            if part is not None:
                vertices[(domain.id, word)] = part
    x_hat = {
        v
        for v in vertices
        if v[0] in x_domains and cylinders[v[1]].interval.subset_of(x_interval, tol)
    }
    if not x_hat:
        raise ComputationRefused(
            "X̂ has no vertices", {"interval": str(x_interval), "k": k}
        )
    _, sup_phi = phi.global_bounds()

    full = WeightedDigraph(vertices)
    exits: List[Tuple[Tuple[int, Tuple[int, ...]], Interval]] = []
    for (domain_id, word), part in vertices.items():
        first = fmap.branches[word[0]]
        arrow = tower.arrow(domain_id, word[0])
        if arrow is None:
            exits.append(((domain_id, word), first.image_of(part)))
            continue
        image = first.image_of(part)
        for next_word, cylinder in cylinders.items():
            if next_word[:-1] != word[1:]:
                continue
            target = (arrow.target, next_word)
            if target not in vertices:
                continue
            landing = image.overlap(vertices[target], tol)
            if landing is None:
                continue
            transition = first.preimage_of(landing, tol)
            if transition is None:
                continue
            weight = math.exp(phi.evaluate(transition.midpoint))
            full.add_edge((domain_id, word), target, weight)

    rome = [
        v
        for v in vertices
        if v not in x_hat and tower.domains[v[0]].level <= level_cap
    ]
    # arrows into X̂ stay so that G_0 carries the paths passing through X̂
    g_0 = full.subgraph(set(rome) | x_hat)
    rho_0 = spectral_radius(g_0)
    rho_rome = spectral_radius(full.subgraph(rome)).rho

    g_1 = full.subgraph(rome)
    artificial = 0
    for source, image in exits:
        if source in x_hat:
            continue
        terminals = [
            v
            for v in rome
            if v[0] == BASE and vertices[v].overlap(image, tol) is not None
        ]
        if not terminals:
            continue
        previous = source
        for step in range(level_cap - 1):
            node = ("artificial", source, step)
            g_1.add_edge(previous, node, math.exp(sup_phi))
            previous = node
            artificial += 1
        for terminal in terminals:
            g_1.add_edge(previous, terminal, math.exp(sup_phi), accumulate=True)
    if not verify_rome(g_1, rome):
        raise ComputationRefused(
            "vertices outside X̂ do not form a rome of G_1", {"rome": len(rome)}
        )
    rho_1 = spectral_radius(g_1).rho
    if rho_1 >= rho_0.rho:
        raise ComputationRefused(
            "removing X̂ does not lower the spectral radius",
            {"rho_0": rho_0.rho, "rho_1": rho_1},
        )
    gamma = math.log(rho_0.rho) - (math.log(rho_1) if rho_1 > 0 else -math.inf)

    warnings = []
    unweighted = WeightedDigraph(rome)
    for u, v, _ in full.subgraph(rome).edges():
        unweighted.add_edge(u, v, 1.0)
    star_rho = spectral_radius(unweighted).rho if unweighted.edges() else 0.0
    h_star = math.log(star_rho) if star_rho > 0 else -math.inf
    margin_star = h_star - (margin.sup - margin.inf)
    if margin_star <= 0:
        warnings.append(f"h*_top={h_star:.6g} does not exceed the range of φ")
    g_0_rome = verify_rome(g_0, rome)
    if not g_0_rome:
        warnings.append("X̂ contains a cycle, so the rome does not reduce G_0")
    for warning in warnings:
        logger.warning(warning)

    vector = [x for x in rho_0.left_vector if x > 0]
    return TailGapReport(
        k=k,
        level_cap=level_cap,
        vertices=len(vertices),
        x_hat_vertices=len(x_hat),
        artificial_vertices=artificial,
        rho_0=rho_0.rho,
        rho_1=rho_1,
        rho_rome=rho_rome,
        gamma=gamma,
        distortion=variation_n(phi, fmap, k).upper,
        eigenvector_ratio=min(vector) / max(vector) if vector else 0.0,
        margin=margin.margin,
        margin_star=margin_star,
        h_star=h_star,
        rome_size=len(rome),
        rome_valid=True,
        rome_valid_g0=g_0_rome,
        warnings=warnings,
    )
