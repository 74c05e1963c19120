"""Command-line driver: build graphs, run searches and sweeps, verify suites, emit CSV/JSON."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from app.errors import FlipFlopError, VerificationError
from app.experiment_service import ExperimentService, load_config
from app.models import ExperimentConfig, VerificationReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

COMMANDS = ("spectrum", "search", "verify", "sweep", "graph", "hitting")


def _int_list(text: str) -> List[int]:
    return [int(item) for item in text.split(",") if item.strip()]


def _float_list(text: str) -> List[float]:
    return [float(item) for item in text.split(",") if item.strip()]


def _str_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flipflop-search", description=__doc__)
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--quiet", action="store_true", help="warnings and errors only")
    commands = parser.add_subparsers(dest="command", required=True)

    for name in COMMANDS:
        sub = commands.add_parser(name)
        if name == "verify":
            sub.add_argument("suite", help="suite name or alias")
        sub.add_argument("--config", type=Path, default=None, help="JSON config; flags override it")
        sub.add_argument("--graph", default=None, help="complete | lattice | random | file:PATH")
        sub.add_argument("--n", type=int, default=None)
        sub.add_argument("--L", dest="side", type=int, default=None)
        sub.add_argument("--D", dest="dim", type=int, default=None)
        sub.add_argument("--d", dest="degree", type=int, default=None)
        sub.add_argument("--targets", type=_int_list, default=None, help="comma-separated vertex list")
        sub.add_argument("--m", type=int, default=None)
        sub.add_argument("--delta", default=None, help="NUM | auto | zero")
        sub.add_argument("--steps", default=None, help="auto | INT")
        sub.add_argument("--seed", type=int, default=None)
        sub.add_argument("--out", default=None)
        sub.add_argument("--jobs", type=int, default=None)
        sub.add_argument("--trials", type=int, default=None)
        sub.add_argument("--axis", default=None, help="N | L | M | delta")
        sub.add_argument("--points", type=_float_list, default=None, help="comma-separated sweep values")
        sub.add_argument("--fit", type=_str_list, default=None, help="columns to fit against the axis")
        sub.add_argument("--record", action="store_const", const=True, default=None, help="store results in the run ledger")
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    # suppress sqlalchemy engine logs below warning level
    logging.getLogger("sqlalchemy.engine.Engine").setLevel(logging.WARNING)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    keys = set(ExperimentConfig.model_fields) & set(vars(args))
    return {key: getattr(args, key) for key in keys}


def format_reports(reports: Sequence[VerificationReport]) -> str:
    """Fixed-width pass/fail table, one line per report."""
    width = max([len(report.instance) for report in reports] + [8])
    lines = [f"{'suite':<20} {'instance':<{width}} {'result':<6} max_residual"]
    for report in reports:
        verdict = "PASS" if report.passed else "FAIL"
        lines.append(f"{report.suite:<20} {report.instance:<{width}} {verdict:<6} {report.max_residual:.3e}")
        lines.extend(f"    failed: {check.check_name} residual={check.residual}" for check in report.failures())
    return "\n".join(lines) + "\n"


def dispatch(args: argparse.Namespace, config: ExperimentConfig) -> int:
    reports: List[VerificationReport] = []
    match args.command:
        case "spectrum":
            paths, reports = ExperimentService.spectrum(config)
        case "search":
            paths = ExperimentService.search(config)
        case "verify":
            path, reports = ExperimentService.verify(args.suite, config)
            paths = [path]
        case "sweep":
            paths = [ExperimentService.sweep(config)]
        case "graph":
            paths = [ExperimentService.graph(config)]
        case _:
            paths = [ExperimentService.hitting(config)]

    if reports:
        sys.stdout.write(format_reports(reports))
    for path in paths:
        logger.info(f"wrote {path}")
    return EXIT_OK if all(report.passed for report in reports) else EXIT_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        config = load_config(args.config, _overrides(args))
        return dispatch(args, config)
    except VerificationError as e:
        logger.error(f"verification failed: {e}")
        return EXIT_FAILED
    except (FlipFlopError, ValidationError, ValueError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
