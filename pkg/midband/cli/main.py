import argparse
import logging
import re
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from midband.cli.commands import cmd_bands, cmd_coverage, cmd_rfi, cmd_validate
from midband.core.config import load_config, settings
from midband.core.errors import MidbandError
from midband.spectrum.schemas import Proposer
from midband.spectrum.store import load_allocations

logger = logging.getLogger(__name__)

DEFAULT_ALLOCATIONS = Path(__file__).resolve().parents[2] / "data" / "allocations" / "upper_midband_sample.json"

_UNITS = {"hz": 1, "khz": 10**3, "mhz": 10**6, "ghz": 10**9}
_FREQ = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*([kmg]?hz)?\s*$", re.IGNORECASE)


def parse_frequency(text: str, default_unit: str = "mhz") -> int:
    m = _FREQ.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"not a frequency: {text!r}")
    unit = (m.group(2) or default_unit).lower()
    return int(round(float(m.group(1)) * _UNITS[unit]))


def parse_range(text: str) -> Tuple[int, int]:
    """``LOW:HIGH`` with optional units, e.g. ``12.2GHz:13.25GHz`` (MHz when bare)."""
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}")
    low, high = (parse_frequency(p) for p in parts)
    if low >= high:
        raise argparse.ArgumentTypeError(f"range {text!r} is empty or inverted")
    return low, high


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="midband",
        description="Upper-midband coverage, interference and spectrum-allocation studies.",
        epilog="exit codes: 0 ok, 2 config/usage error, 3 data error, 4 compute error",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--output-dir", type=Path, help="override output directory")
    common.add_argument("--workers", type=int, help="worker processes for tracing")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="logging level")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coverage", parents=[common], help="coverage maps and summary per carrier")

    rfi = sub.add_parser("rfi", parents=[common], help="Monte Carlo interference at the incumbent")
    rfi.add_argument("--seed", type=int, help="override rfi.seed")
    rfi.add_argument("--iterations", type=int, help="override rfi.n_iter")
    rfi.add_argument("--threshold", type=float, help="override rfi.threshold_db")

    bands = sub.add_parser("bands", parents=[common], help="query the spectrum allocation registry")
    bands.add_argument("--allocations", type=Path, help="allocation file (default: bundled sample)")
    bands.add_argument("--total", metavar="SERVICE", help="union bandwidth of a service")
    bands.add_argument("--region", default="ITU-R2", choices=["ITU-R2", "FCC", "NTIA"])
    bands.add_argument("--status", default="primary", choices=["primary", "secondary", "any"])
    bands.add_argument("--at", type=parse_range, metavar="LOW:HIGH", help="records intersecting a band")
    bands.add_argument("--candidates", nargs="+", choices=[p.value for p in Proposer], help="bands common to all proposers")
    bands.add_argument("--rank", action="store_true", help="services ranked by allocated bandwidth")
    bands.add_argument("--overlap", nargs=2, metavar=("SERVICE_A", "SERVICE_B"), help="share of B also held by A")

    sub.add_parser("validate", parents=[common], help="lint the config and referenced files")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    if args.output_dir is not None:
        out["output_dir"] = str(args.output_dir)
    if args.workers is not None:
        out["workers"] = args.workers
    if args.log_level is not None:
        out["log_level"] = args.log_level
    rfi = {
        key: value
        for key, value in (
            ("seed", getattr(args, "seed", None)),
            ("n_iter", getattr(args, "iterations", None)),
            ("threshold_db", getattr(args, "threshold", None)),
        )
        if value is not None
    }
    if rfi:
        out["rfi"] = rfi
    return out


def run(args: argparse.Namespace) -> int:
    if args.command == "bands":
        path = args.allocations
        if path is None and args.config is not None:
            path = load_config(args.config).allocations_path
        registry = load_allocations(path or DEFAULT_ALLOCATIONS)
        cmd_bands(
            registry,
            total=args.total,
            region=args.region,
            status=None if args.status == "any" else args.status,
            at=args.at,
            candidates=args.candidates or (),
            rank=args.rank,
            overlap=tuple(args.overlap) if args.overlap else None,
        )
        return 0

    cfg = load_config(args.config, _overrides(args), check_paths=True)
    logging.getLogger().setLevel(cfg.log_level if args.log_level is None else args.log_level)
    logger.info("Running %s with %d carrier(s)", args.command, len(cfg.carriers))
    if args.command == "coverage":
        cmd_coverage(cfg)
    elif args.command == "rfi":
        cmd_rfi(cfg)
    elif args.command == "validate":
        cmd_validate(cfg)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # Configure logging
    logging.basicConfig(
        level=args.log_level or settings.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    try:
        return run(args)
    except MidbandError as e:
        logger.error("%s: %s", type(e).__name__, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
