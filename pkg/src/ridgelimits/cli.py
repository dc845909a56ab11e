"""Command-line front end over the experiment drivers.

Exit codes: 0 on success, 1 on a configuration problem (bad JSON, schema or
semantic violation, unreadable or unwritable path), 2 on a numerical failure
(the companion solve or a decomposition did not converge).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .exceptions import (
    DecompositionFailureError,
    NoConvergenceError,
    NonFiniteRiskError,
    SingularDerivativeError,
)
from .experiments import PRESETS, parse_config, run_experiment

_MODES = ("risk-curve", "optimal-lambda", "mc-compare", "sweep")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridgelimits",
        description="High-dimensional ridge risk: theory curves, tuned penalties, "
        "simulation cross-checks, figure presets.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument(
        "--out", type=Path, default=Path("."), help="output directory (default: .)"
    )
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument(
        "--threads", type=int, default=1, help="worker threads (default: 1)"
    )
    common.add_argument(
        "--theory-only",
        action="store_true",
        help="drop simulation columns (replications = 0)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in _MODES:
        sub.add_parser(mode, parents=[common], help=f"run a {mode} config")
    fig = sub.add_parser("figure", parents=[common], help="run a figure preset")
    fig.add_argument("name", choices=sorted(PRESETS), help="preset name")
    return parser


def _load_document(args: argparse.Namespace) -> dict:
    if args.config is not None:
        doc = json.loads(args.config.read_text(encoding="utf-8"))
    elif args.command == "figure":
        doc = {"mode": "figure"}
    else:
        raise ValueError(f"{args.command} needs --config")
    if args.command == "figure":
        doc.setdefault("mode", "figure")
        if doc["mode"] != "figure" or doc.get("figure", args.name) != args.name:
            raise ValueError(
                f"config disagrees with the figure subcommand: {doc.get('figure')!r} "
                f"vs {args.name!r}"
            )
        doc["figure"] = args.name
    elif doc.get("mode", args.command) != args.command:
        raise ValueError(
            f"config mode {doc.get('mode')!r} disagrees with subcommand {args.command!r}"
        )
    else:
        doc["mode"] = args.command
    if args.seed is not None or args.theory_only:
        sim = dict(doc.get("simulation", {}))
        if args.seed is not None:
            sim["seed"] = args.seed
        if args.theory_only:
            sim["replications"] = 0
        doc["simulation"] = sim
    return doc


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        doc = _load_document(args)
        config = parse_config(json.dumps(doc))
        paths = run_experiment(config, out_dir=args.out, max_workers=max(1, args.threads))
    except (
        NoConvergenceError,
        NonFiniteRiskError,
        SingularDerivativeError,
        DecompositionFailureError,
    ) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
