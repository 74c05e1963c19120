import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import PreconditionError
from app.graph import (
    RegularGraph,
    build_complete,
    build_hypercubic,
    build_random_regular,
    choose_targets,
    load_graph,
    validate_targets,
    write_graph,
)
from app.hitting import hitting_stats
from app.models import ExperimentConfig, GraphKind, HittingRow, VerificationReport
from app.run_ledger import RunLedgerService
from app.search import SearchConfig, SearchRun, choose_delta, run_search
from app.spectral import (
    eig_adjacency,
    lattice_spectrum,
    lattice_sums,
    multiplicity_report,
    verify_walk_correspondence,
    walk_eigensystem,
)
from app.startup import startup
from app.verification import loglog_slope, resolve_suite, run_suite

logger = logging.getLogger(__name__)

SEARCH_COLUMNS = ["N", "d", "M", "g", "delta", "alpha", "Q", "p_s_at_Q", "D_s", "pwt2"]
LATTICE_COLUMNS = ["lattice_sum1", "lattice_sum2"]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_cell(value) for value in row] for row in rows)
    return path


def write_json(path: Path, payload: Any) -> Path:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def load_config(path: Optional[Path], overrides: Dict[str, Any]) -> ExperimentConfig:
    """JSON config file first, then every flag that was given explicitly."""
    data: Dict[str, Any] = json.loads(Path(path).read_text()) if path is not None else {}
    data.update({key: value for key, value in overrides.items() if value is not None})
    return ExperimentConfig.model_validate(data)


class ExperimentService:
    """Command bodies: build inputs from a config, run the numerics, write artifacts."""

    @staticmethod
    def build_graph(config: ExperimentConfig) -> RegularGraph:
        match config.graph_kind:
            case GraphKind.COMPLETE:
                return build_complete(ExperimentService._require(config.n, "--n"))
            case GraphKind.LATTICE:
                return build_hypercubic(ExperimentService._require(config.side, "--L"), ExperimentService._require(config.dim, "--D"))
            case GraphKind.RANDOM:
                n = ExperimentService._require(config.n, "--n")
                return build_random_regular(n, ExperimentService._require(config.degree, "--d"), config.seed)
            case GraphKind.FILE:
                return load_graph(Path(config.graph_path or ""))

    @staticmethod
    def _require(value: Optional[int], flag: str) -> int:
        if value is None:
            raise PreconditionError(f"this graph kind needs {flag}")
        return value

    @staticmethod
    def resolve_targets(g: RegularGraph, config: ExperimentConfig) -> Tuple[int, ...]:
        if config.targets:
            return validate_targets(g, config.targets)
        return choose_targets(g, config.m, config.seed)

    @staticmethod
    def output_dir(config: ExperimentConfig) -> Path:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        return out

    @staticmethod
    def spectrum(config: ExperimentConfig) -> Tuple[List[Path], List[VerificationReport]]:
        """Adjacency spectrum, W eigenphases, multiplicities and the walk correspondence report."""
        g = ExperimentService.build_graph(config)
        logger.info(f"Spectrum of {g.label}: N={g.n_vertices} d={g.degree}")
        spec = eig_adjacency(g)
        eigensystem = walk_eigensystem(g)
        eigenvalues = eigensystem[0]
        reports = [
            verify_walk_correspondence(g, spec=spec, eigensystem=eigensystem),
            multiplicity_report(g, eigenvalues=eigenvalues),
        ]
        payload: Dict[str, Any] = {
            "graph": g.label,
            "N": g.n_vertices,
            "d": g.degree,
            "g": spec.gap,
            "bipartite": g.is_bipartite,
            "adjacency_eigenvalues": spec.eigenvalues.tolist(),
            "walk_eigenphases": np.sort(np.angle(eigenvalues)).tolist(),
            "reports": [report.to_record() for report in reports],
        }
        if g.lattice is not None:
            closed = np.sort([value for _, value in lattice_spectrum(*g.lattice)])
            payload["closed_form_max_diff"] = float(np.max(np.abs(closed - np.sort(spec.eigenvalues))))
        path = write_json(ExperimentService.output_dir(config) / "spectrum.json", payload)
        ExperimentService._record_reports(config, reports)
        return [path], reports

    @staticmethod
    def run(config: ExperimentConfig) -> Tuple[RegularGraph, SearchRun]:
        g = ExperimentService.build_graph(config)
        targets = ExperimentService.resolve_targets(g, config)
        spec = eig_adjacency(g)
        delta, policy = choose_delta(config.delta, g, spec.gap, len(targets))
        steps = None if config.steps == "auto" else int(config.steps)
        run = run_search(g, SearchConfig(targets=targets, delta=delta, steps=steps, policy=policy), spec=spec)
        return g, run

    @staticmethod
    def search(config: ExperimentConfig) -> List[Path]:
        """Trace CSV, summary JSON and per-vertex marginals at step Q."""
        g, run = ExperimentService.run(config)
        out = ExperimentService.output_dir(config)
        summary = run.summary()
        paths = [
            write_csv(out / "trace.csv", ["step", "p_s"], list(enumerate(run.trace.tolist()))),
            write_json(out / "summary.json", summary.to_record()),
            write_csv(out / "marginals.csv", ["vertex", "probability"], list(enumerate(run.marginals.tolist()))),
        ]
        if config.record:
            startup()
            RunLedgerService.record_search(summary, g.label, config.model_dump())
        return paths

    @staticmethod
    def verify(suite: str, config: ExperimentConfig) -> Tuple[Path, List[VerificationReport]]:
        canonical = resolve_suite(suite)
        reports = run_suite(canonical)
        path = write_json(
            ExperimentService.output_dir(config) / f"verify_{canonical}.json",
            [report.to_record() for report in reports],
        )
        ExperimentService._record_reports(config, reports)
        return path, reports

    @staticmethod
    def _point_config(config: ExperimentConfig, value: float) -> ExperimentConfig:
        match config.axis:
            case "N":
                return config.model_copy(update={"n": int(value)})
            case "L":
                return config.model_copy(update={"side": int(value)})
            case "M":
                return config.model_copy(update={"m": int(value), "targets": None})
            case _:
                return config.model_copy(update={"delta": repr(float(value))})

    @staticmethod
    def _sweep_point(config: ExperimentConfig) -> List[Any]:
        g, run = ExperimentService.run(config)
        record = run.summary().to_record()
        row = [record[key] for key in SEARCH_COLUMNS]
        if g.lattice is not None:
            row.extend(lattice_sums(*g.lattice, power) for power in (1, 2))
        return row

    @staticmethod
    def sweep(config: ExperimentConfig) -> Path:
        """One CSV row per sweep point in sweep order, then one fit line per requested column."""
        if config.axis is None:
            raise PreconditionError("sweep needs --axis")
        if not config.points:
            raise PreconditionError("sweep needs a non-empty --points range")
        points = [ExperimentService._point_config(config, value) for value in config.points]
        logger.info(f"Sweep over {config.axis} with {len(points)} points on {config.jobs} workers")
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(ExperimentService._sweep_point, points))

        header = ["point"] + SEARCH_COLUMNS + (LATTICE_COLUMNS if config.graph_kind == GraphKind.LATTICE else [])
        body = [[value] + row for value, row in zip(config.points, rows)]
        x_column = "N" if config.axis in {"N", "L"} else "point"
        for column in config.fit:
            if column not in header:
                raise PreconditionError(f"cannot fit unknown column '{column}'")
            xs = [row[header.index(x_column)] for row in body]
            ys = [row[header.index(column)] for row in body]
            body.append(["fit", column, "slope_vs", x_column, loglog_slope(np.array(xs), np.array(ys))])
        return write_csv(ExperimentService.output_dir(config) / "sweep.csv", header, body)

    @staticmethod
    def graph(config: ExperimentConfig) -> Path:
        g = ExperimentService.build_graph(config)
        per_component = g.bipartition is not None and g.bipartition.per_component
        logger.info(
            f"{g.label}: connected={g.is_connected} bipartite={g.is_bipartite} coloring_per_component={per_component}"
        )
        path = ExperimentService.output_dir(config) / "graph.edges"
        write_graph(g, path)
        return path

    @staticmethod
    def hitting(config: ExperimentConfig) -> Path:
        """Hitting CSV with one row, or one row per point when sweeping N."""
        configs = [config]
        if config.axis == "N" and config.points:
            configs = [ExperimentService._point_config(config, value) for value in config.points]
        rows: List[HittingRow] = []
        for item in configs:
            g = ExperimentService.build_graph(item)
            targets = ExperimentService.resolve_targets(g, item)
            rows.append(hitting_stats(g, targets, item.trials, item.seed, item.jobs).to_row())
        return write_csv(
            ExperimentService.output_dir(config) / "hitting.csv", HittingRow.COLUMNS, [row.to_row() for row in rows]
        )

    @staticmethod
    def _record_reports(config: ExperimentConfig, reports: List[VerificationReport]) -> None:
        if not config.record:
            return
        startup()
        for report in reports:
            RunLedgerService.record_report(report)

