"""
Batch front end: one command per process, a JSON RunConfig in, CSV/JSON
artifacts and a plain-text summary out.

    python src/cli.py entropy --config configs/doubling.json --output-dir out
"""
import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import orjson
from pydantic import BaseModel, ValidationError

from config.config import Config
from config.logging_config import setup_logging
from contracts.run_config import RunConfig
from core.exceptions import ComputationRefused, ThermoError
from core.factory import RunFactory, interval_from
from core.gibbs import (
    discriminant,
    gibbs_state,
    pressure_curve,
    solve_equilibrium,
    tail_table,
    verify_gibbs_property,
)
from core.hofbauer import build_tower, path_growth_rate, transitive_part
from core.inducing import (
    InducedPotential,
    InducingScheme,
    induced_potential,
    svi_report,
)
from core.interval_map import PiecewiseMonotoneMap, lap_number, topological_entropy
from core.potential import Potential
from core.pressure import (
    gurevich_pressure,
    p_top,
    periodic_free_energy,
    recurrence_classify,
    variational_gap,
    z0,
    znlowerbound_check,
)
from core.profiler import Profiler
from core.rome import (
    WeightedDigraph,
    characteristic_identity_check,
    spectral_radius,
    tail_gap,
    verify_rome,
)
from families.hofbauer_keller import phase_scan
from families.manneville_pomeau import mp_scan

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REFUSED = 3

JSON_OPTIONS = (
    orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS
)


@dataclass
class CommandOutput:
    """Table rows for the CSV, a JSON payload and summary lines."""

    columns: List[str]
    rows: List[Sequence[Any]]
    payload: Dict[str, Any]
    summary: List[str] = field(default_factory=list)


class Run:
    """Lazily built objects shared by the command handlers."""

    def __init__(self, config: RunConfig):
        self.config = config
        # process-wide; the CLI runs one command per process
        Config.ROOT_TOLERANCE = config.root_tolerance

    @cached_property
    def fmap(self) -> PiecewiseMonotoneMap:
        fmap = RunFactory.create_map(self.config.map)
        if not fmap.exact:
            fmap.tolerance = self.config.tolerance
        return fmap

    @cached_property
    def phi(self) -> Potential:
        return RunFactory.create_potential(self.config.potential, self.fmap)

    @cached_property
    def scheme(self) -> InducingScheme:
        return RunFactory.create_scheme(self.config, self.fmap)

    @cached_property
    def induced(self) -> InducedPotential:
        tail = RunFactory.create_tail(self.config.potential)
        return induced_potential(self.phi, self.scheme, tail)

    def prepare(self) -> None:
        """Build map and potential up front so that bad specs fail as config errors."""
        self.fmap
        self.phi


def _rate_rows(diagnostics) -> List[List[float]]:
    return [[n, rate] for n, rate in diagnostics]


def _dump(model: BaseModel) -> Dict[str, Any]:
    return model.model_dump(by_alias=True)


def _enclosure(estimate, digits: int) -> str:
    return (
        f"{estimate.value:.{digits}f} "
        f"in [{estimate.lower:.{digits}f}, {estimate.upper:.{digits}f}]"
    )


def cmd_entropy(run: Run) -> CommandOutput:
    c = run.config
    estimate = topological_entropy(run.fmap, c.n_max)
    rows = [[n, lap_number(run.fmap, n), rate] for n, rate in estimate.diagnostics]
    return CommandOutput(
        ["n", "laps", "log_laps_over_n"],
        rows,
        {"entropy": _dump(estimate)},
        [f"map: {run.fmap.name}", f"h_top = {_enclosure(estimate, 15)}"],
    )


def cmd_pressure(run: Run) -> CommandOutput:
    c = run.config
    estimate = p_top(run.fmap, run.phi, c.m_max)
    free_energy = periodic_free_energy(run.fmap, run.phi)
    return CommandOutput(
        ["m", "log_z_top_over_m"],
        _rate_rows(estimate.diagnostics),
        {"p_top": _dump(estimate), "periodic_free_energy": _dump(free_energy)},
        [
            f"map: {run.fmap.name}, potential: {run.phi.name}",
            f"P_top = {_enclosure(estimate, 12)}",
            f"periodic free energy = {free_energy.value:.12f} "
            f"(period {free_energy.period})",
        ],
    )


def _region(run: Run, bounds) -> Optional[Any]:
    return interval_from(bounds, run.fmap) if bounds is not None else None


def cmd_gurevich(run: Run) -> CommandOutput:
    c = run.config
    region = _region(run, c.region)
    estimate = gurevich_pressure(run.fmap, run.phi, region, c.n_max)
    gap = variational_gap(run.fmap, run.phi, c.n_max, region)
    payload: Dict[str, Any] = {
        "gurevich": _dump(estimate),
        "variational_gap": _dump(gap),
    }
    summary = [
        f"P_G = {estimate.value:.12f} +- {estimate.stderr:.3g}",
        f"flags: {estimate.flags}",
        f"P_top - P_G = {gap.gap:.3g}, consistent: {gap.consistent}",
    ]
    try:
        bound = znlowerbound_check(run.fmap, run.phi, c.n_min, c.n_max, c.pressure)
        payload["zn_lower_bound"] = _dump(bound)
        summary.append(
            f"eta = {bound.eta:.6g} on {bound.window}, stable: {bound.stable}"
        )
    except ComputationRefused as e:
        summary.append(f"Z_n lower bound refused: {e}")
    return CommandOutput(
        ["n", "log_z_n_over_n"], _rate_rows(estimate.diagnostics), payload, summary
    )


def cmd_recurrence(run: Run) -> CommandOutput:
    c = run.config
    region = _region(run, c.region or c.x_interval)
    lam = c.lam
    if lam is None:
        lam = math.exp(gurevich_pressure(run.fmap, run.phi, region, c.n_max).value)
    report = recurrence_classify(
        run.fmap, run.phi, region, lam, c.n_max, _region(run, c.return_region)
    )
    rows = [["Z_n", n, s] for n, s in enumerate(report.first.partial_sums, start=1)]
    if report.second is not None:
        rows += [
            ["nZ*_n", n, s]
            for n, s in enumerate(report.second.partial_sums, start=1)
        ]
    return CommandOutput(
        ["series", "n", "partial_sum"],
        rows,
        {"recurrence": _dump(report)},
        [f"lambda = {lam:.12g}", f"classification: {report.classification}"],
    )


def cmd_tower(run: Run) -> CommandOutput:
    c = run.config
    tower = build_tower(run.fmap, c.n_max, c.R)
    rows = []
    for a in tower.arrows:
        s, t = tower.domains[a.source], tower.domains[a.target]
        lo, hi = a.transition.as_floats()
        rows.append([a.source, a.target, a.branch, s.level, t.level, lo, hi])
    growth = path_growth_rate(tower)
    core = transitive_part(tower, require_cover=False)
    return CommandOutput(
        [
            "source",
            "target",
            "branch",
            "source_level",
            "target_level",
            "t_left",
            "t_right",
        ],
        rows,
        {
            "tower": tower.to_dict(),
            "path_growth": _dump(growth),
            "transitive_part": sorted(core),
        },
        [
            repr(tower),
            f"transitive part: {len(core)} domains",
            f"path growth rate = {growth.value:.12f}",
        ],
    )


def load_graph(path: str) -> Dict[str, Any]:
    """
    {"vertices": [...], "edges": [[source, target, weight], ...], "rome": [...]}
    with weights as numbers or "p/q" strings.
    """
    with open(path, "rb") as f:
        record = orjson.loads(f.read())
    return {"graph": WeightedDigraph.from_edge_list(record), "rome": record.get("rome")}


def cmd_rome_check(run: Run) -> CommandOutput:
    c = run.config
    if c.graph is None:
        raise ValueError("rome-check needs a graph file (field 'graph')")
    loaded = load_graph(c.graph)
    graph = loaded["graph"]
    rome = c.rome or loaded["rome"] or graph.vertices
    if not verify_rome(graph, rome):
        raise ComputationRefused("vertex set is not a rome", {"rome": list(rome)})
    report = characteristic_identity_check(graph, rome)
    spectral = spectral_radius(graph)
    rows = [[s.x, s.lhs, s.rhs, s.equal] for s in report.samples]
    return CommandOutput(
        ["x", "lhs", "rhs", "equal"],
        rows,
        {
            "identity": _dump(report),
            "spectral": _dump(spectral),
            "rome": list(rome),
            "graph": graph.to_edge_list(),
        },
        [
            f"graph: {len(graph)} vertices, rome of size {len(rome)}",
            f"identity holds on all samples: {report.all_equal}",
            f"spectral radius = {spectral.rho:.12f}",
        ],
    )


def cmd_induce(run: Run) -> CommandOutput:
    c = run.config
    induced = run.induced
    scheme = induced.scheme
    rows = []
    for i, branch in enumerate(scheme.branches):
        lo, hi = branch.domain.as_floats()
        inf, sup = float(induced.infs[i]), float(induced.sups[i])
        rows.append([i, branch.tau, lo, hi, inf, sup])
    partition = z0(induced)
    svi = svi_report(induced)
    payload: Dict[str, Any] = {
        "z0": _dump(partition),
        "svi": _dump(svi),
        "rejected": len(scheme.rejected),
    }
    summary = [
        f"scheme: {len(scheme)} branches up to tau = {scheme.horizon}, "
        f"{len(scheme.rejected)} partial returns",
        f"Z_0 = {partition.value:.12g} "
        f"in [{partition.lower:.12g}, {partition.upper:.12g}]",
        f"SVI: weakly Hoelder = {svi.weakly_holder}",
    ]
    try:
        report = discriminant(induced, c.S_grid)
        payload["discriminant"] = _dump(report)
        summary.append(
            f"discriminant = {report.value:.12g} at p* = {report.p_star:.12g}"
        )
    except ComputationRefused as e:
        summary.append(f"discriminant refused: {e}")
    return CommandOutput(
        ["index", "tau", "left", "right", "inf_Phi", "sup_Phi"], rows, payload, summary
    )


def cmd_gibbs(run: Run) -> CommandOutput:
    c = run.config
    state = gibbs_state(run.induced, c.depth)
    check = verify_gibbs_property(state)
    table = tail_table(state)
    rows = [[r.n, r.count, r.sup_phi, r.weight] for r in table.rows]
    return CommandOutput(
        ["n", "count", "sup_Phi", "tail_weight"],
        rows,
        {
            "pressure": _dump(state.estimate),
            "gibbs_check": _dump(check),
            "tail": _dump(table),
            "K": state.K,
        },
        [
            f"P_G(Phi) = {state.pressure:.12f}, Lambda = {state.Lambda:.12g}",
            f"Gibbs constant K = {check.K:.12g}, property holds: {check.holds}",
            f"tail model: {table.model}, rate = {table.rate:.6g}",
        ],
    )


def cmd_equilibrium(run: Run) -> CommandOutput:
    c = run.config
    result = solve_equilibrium(
        run.fmap,
        run.phi,
        run.scheme,
        tail=RunFactory.create_tail(c.potential),
        depth=c.depth,
        m_max=c.m_max,
    )
    taus = run.scheme.taus
    rows = [[i, int(taus[i]), w] for i, w in enumerate(result.weights_head)]
    summary = [f"status: {result.status}", f"P(phi) = {result.pressure:.12f}"]
    if result.Lambda is not None:
        summary.append(f"Lambda = {result.Lambda:.12g}")
    if result.entropy is not None:
        summary.append(
            f"h(mu) = {result.entropy:.12f}, "
            f"integral phi = {result.integral_phi:.12f}"
        )
    summary += result.notes
    return CommandOutput(
        ["index", "tau", "weight"], rows, {"equilibrium": _dump(result)}, summary
    )


def cmd_pressure_curve(run: Run) -> CommandOutput:
    c = run.config
    grid = c.t_grid
    if grid is None:
        grid = [round(t, 10) for t in np.arange(-0.5, 0.51, 0.1)]
    family, tails = RunFactory.potential_family(c.potential, run.fmap, c.curve_param)
    curve = pressure_curve(
        run.fmap, family, grid, run.scheme, tails, c.depth, m_max=c.m_max
    )
    columns = [
        "t",
        "pressure",
        "derivative",
        "second_derivative",
        "status",
        "z0_finite",
        "tail_gate",
    ]
    rows = [
        [
            s.t,
            s.pressure,
            s.derivative,
            s.second_derivative,
            s.status,
            s.z0_finite,
            s.tail_gate,
        ]
        for s in curve.samples
    ]
    return CommandOutput(
        columns,
        rows,
        {"curve": _dump(curve)},
        [
            f"{len(curve.samples)} samples",
            f"transitions: {curve.transitions}",
            f"kinks: {curve.kinks}",
        ],
    )


def cmd_phase_scan(run: Run) -> CommandOutput:
    c = run.config
    grid = c.b_grid if c.b_grid is not None else list(np.linspace(-2.0, -0.3, 18))
    b_K, scanned = phase_scan(c.K, np.asarray(grid, dtype=float), c.boundary_tolerance)
    columns = [
        "b",
        "regime",
        "pressure_positive",
        "gibbs",
        "unique",
        "accessible",
        "boundary",
        "critical",
    ]
    rows = [
        [
            b,
            row.regime,
            row.pressure_positive,
            row.gibbs,
            row.unique,
            row.accessible,
            row.boundary,
            b == b_K,
        ]
        for b, row in scanned
    ]
    return CommandOutput(
        columns,
        rows,
        {"K": c.K, "b_K": b_K, "rows": [{"b": b, **_dump(row)} for b, row in scanned]},
        [f"K = {c.K}: b_K = {b_K:.15f}"],
    )


def cmd_mp_scan(run: Run) -> CommandOutput:
    c = run.config
    scanned = mp_scan(c.alphas, c.bs, c.N_search)
    rows = []
    for alpha, b, config in scanned:
        if config is None:
            rows.append([alpha, b, "refused", None, None, None, None, None, None])
        else:
            rows.append(
                [
                    alpha,
                    b,
                    "configured",
                    config.N,
                    config.K,
                    config.p1,
                    config.p2,
                    config.series.upper,
                    config.B,
                ]
            )
    configured = sum(1 for _, _, conf in scanned if conf is not None)
    records = [
        {"alpha": a, "b": b, "configuration": _dump(conf) if conf else None}
        for a, b, conf in scanned
    ]
    return CommandOutput(
        ["alpha", "b", "status", "N", "K", "p1", "p2", "series_upper", "B"],
        rows,
        {"rows": records},
        [
            f"{configured} of {len(scanned)} (alpha, b) pairs admit "
            "a flat-pressure configuration"
        ],
    )


def cmd_tail_gap(run: Run) -> CommandOutput:
    c = run.config
    x_interval = interval_from(c.x_interval, run.fmap)
    report = tail_gap(run.fmap, run.phi, x_interval, c.k, c.R)
    columns = [
        "k",
        "level_cap",
        "vertices",
        "rome_size",
        "rho_0",
        "rho_1",
        "rho_rome",
        "gamma",
        "distortion",
        "eigenvector_ratio",
        "margin",
        "margin_star",
    ]
    return CommandOutput(
        columns,
        [[getattr(report, name) for name in columns]],
        {"tail_gap": _dump(report)},
        [
            f"rho_0 = {report.rho_0:.12f}, rho_1 = {report.rho_1:.12f}",
            f"gamma = {report.gamma:.12f}",
            f"rome: {report.rome_size} vertices, reduces G_0: {report.rome_valid_g0}",
        ]
        + report.warnings,
    )


COMMANDS: Dict[str, Callable[[Run], CommandOutput]] = {
    "entropy": cmd_entropy,
    "pressure": cmd_pressure,
    "gurevich": cmd_gurevich,
    "recurrence": cmd_recurrence,
    "tower": cmd_tower,
    "rome-check": cmd_rome_check,
    "induce": cmd_induce,
    "gibbs": cmd_gibbs,
    "equilibrium": cmd_equilibrium,
    "pressure-curve": cmd_pressure_curve,
    "phase-scan": cmd_phase_scan,
    "mp-scan": cmd_mp_scan,
    "tail-gap": cmd_tail_gap,
}


def _parse_value(text: str) -> Any:
    try:
        return orjson.loads(text)
    except orjson.JSONDecodeError:
        return text


def apply_overrides(record: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """``--set potential.params.b=-0.5`` style overrides on the raw record."""
    for item in overrides:
        key, sep, text = item.partition("=")
        if not sep:
            raise ValueError(f"override '{item}' is not of the form key=value")
        target = record
        *parents, leaf = key.split(".")
        for name in parents:
            target = target.setdefault(name, {})
            if not isinstance(target, dict):
                raise ValueError(f"override '{item}': {name} is not an object")
        target[leaf] = _parse_value(text)
    return record


def load_config(path: Optional[str], overrides: Sequence[str] = ()) -> RunConfig:
    record: Dict[str, Any] = {}
    if path:
        with open(path, "rb") as f:
            record = orjson.loads(f.read())
    return RunConfig.model_validate(apply_overrides(record, overrides))


def write_artifacts(
    command: str, config: RunConfig, output: CommandOutput, output_dir: str, fmt: str
) -> List[str]:
    os.makedirs(output_dir, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        path = os.path.join(output_dir, f"{command}.csv")
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(output.columns)
            writer.writerows(output.rows)
        written.append(path)
    if fmt in ("json", "both"):
        path = os.path.join(output_dir, f"{command}.json")
        document = {
            "command": command,
            "columns": output.columns,
            "rows": output.rows,
            **output.payload,
        }
        with open(path, "wb") as f:
            f.write(orjson.dumps(document, option=JSON_OPTIONS))
        written.append(path)
    path = os.path.join(output_dir, f"{command}.config.json")
    with open(path, "wb") as f:
        f.write(orjson.dumps(config.model_dump(), option=JSON_OPTIONS))
    written.append(path)
    path = os.path.join(output_dir, f"{command}.summary.txt")
    with open(path, "w") as f:
        f.write("\n".join([command] + output.summary) + "\n")
    written.append(path)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Thermodynamic formalism for piecewise monotone interval maps"
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="RunConfig JSON file")
    parser.add_argument(
        "--output-dir",
        help=(
            "artifact directory "
            f"(default ${{THERMO_OUTPUT_DIR}} or {Config.OUTPUT_DIR})"
        ),
    )
    parser.add_argument(
        "--format", choices=["csv", "json", "both"], help="artifact format"
    )
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING, ...")
    parser.add_argument(
        "--metrics-file", help="write operation timings in prometheus textfile format"
    )
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config field",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)

    try:
        config = load_config(args.config, args.set)
        run = Run(config)
        run.prepare()
    except ValidationError as e:
        for error in e.errors():
            location = ".".join(str(part) for part in error["loc"]) or "<root>"
            logger.error(f"config error at {location}: {error['msg']}")
        return EXIT_CONFIG
    except (OSError, orjson.JSONDecodeError, ValueError) as e:
        logger.error(f"config error: {e}")
        return EXIT_CONFIG

    output_dir = args.output_dir or config.output_dir or Config.OUTPUT_DIR
    fmt = args.format or config.format
    try:
        output = COMMANDS[args.command](run)
    except ComputationRefused as e:
        logger.error(f"{args.command} refused: {e}")
        return EXIT_REFUSED
    except ThermoError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_REFUSED
    except (OSError, ValueError) as e:
        logger.error(f"{args.command} config error: {e}")
        return EXIT_CONFIG

    for path in write_artifacts(args.command, config, output, output_dir, fmt):
        logger.info(f"wrote {path}")
    for line in output.summary:
        print(line)
    if args.metrics_file:
        Profiler.write_metrics(args.metrics_file)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
