"""
Command-line entry point for the travel feature pipeline.

    travel-features pipeline --config run.yaml --out runs --rng-seed 1
    travel-features cluster --config run.yaml --min-records 100

Each subcommand runs one stage (plus any upstream stage whose outputs are
missing) inside `<out>/run-<config digest>`.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from .config import LOG_LEVELS, apply_overrides, load_config
from .errors import TravelFeatureError
from .models.plda import ATTRIBUTE_NAMES
from .stages.orchestrator import PipelineOrchestrator

logger = logging.getLogger(__name__)

COMMANDS = {
    "seed": "Mean-Shift POI seeds per label",
    "cluster": "P-KMEANS over trajectory points plus the K-sweep",
    "matrix": "Travel pattern matrix from life circles",
    "lda": "P-LDA per passenger attribute",
    "eval": "80-20 held-out prediction report against ground truth",
    "synth": "Synthetic city, passengers and ground truth",
    "pipeline": "All stages in sequence",
}


def _attribute_list(text: str) -> List[str]:
    names = [a.strip() for a in text.split(",") if a.strip()]
    unknown = [a for a in names if a not in ATTRIBUTE_NAMES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown attributes {unknown}; choose from {', '.join(ATTRIBUTE_NAMES)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON configuration file")
    common.add_argument("--out", help="Output directory (run directories are created inside)")
    common.add_argument("--rng-seed", type=int, help="Seed for every random stream")
    common.add_argument("--min-records", type=int, help="Keep passengers with more than N records (default 100)")
    common.add_argument("--dis-m", type=float, help="Life circle radius DIS in meters (default 500)")
    common.add_argument("--row-total", type=int, help="Pattern matrix row total L (default 1000)")
    common.add_argument("--attributes", type=_attribute_list, help="Comma-separated attributes (default all seven)")
    common.add_argument("--log-level", choices=LOG_LEVELS, help="Logging level (default INFO)")
    common.add_argument("--n-jobs", type=int, help="Parallel attribute fits (joblib n_jobs)")

    parser = argparse.ArgumentParser(
        prog="travel-features",
        description="Mine passenger travel features from bus trajectories and POIs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return the process exit code"""
    args = build_parser().parse_args(argv)

    try:
        config = apply_overrides(
            load_config(args.config),
            out_dir=args.out,
            rng_seed=args.rng_seed,
            min_records=args.min_records,
            dis_m=args.dis_m,
            row_total=args.row_total,
            attributes=args.attributes,
            log_level=args.log_level,
            n_jobs=args.n_jobs,
        )
    except TravelFeatureError as e:
        logging.basicConfig(level=logging.INFO)
        logger.error(f"Configuration error: {e}")
        return e.exit_code

    logging.basicConfig(
        level=getattr(logging, config.logging.level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    orchestrator = PipelineOrchestrator(config)
    result = orchestrator.route_request(args.command)

    if not result.get("success"):
        logger.error(f"{args.command} failed: {result.get('error')}")
        return int(result.get("exit_code", 1))

    summary = {
        "command": args.command,
        "run_dir": str(orchestrator.run_dir),
        "outputs": [str(p) for p in result.get("outputs", [])],
    }
    print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
