"""Command-line interface.

Subcommands:
  run      --config FILE --out DIR [--jobs N]   train the seed matrix, write CSVs
  oracle   --config FILE [--mc-episodes N]      random-policy statistics report
  plotdata --in DIR --out FILE                  merge aggregates for plotting

Exit codes: 0 success, 2 configuration error, 3 runtime abort.
MOHQA_LOG sets the log level (e.g. DEBUG, INFO, WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import load_config
from .errors import ConfigError
from .harness import ExperimentSpec, merge_plotdata, oracle_report, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mohqa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the (agent, seed) experiment matrix")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--jobs", type=int, default=1)

    oracle_p = sub.add_parser("oracle", help="print random-policy statistics")
    oracle_p.add_argument("--config", required=True)
    oracle_p.add_argument("--mc-episodes", type=int, default=None)

    plot_p = sub.add_parser("plotdata", help="merge aggregate CSVs for plotting")
    plot_p.add_argument("--in", dest="in_dir", required=True)
    plot_p.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("MOHQA_LOG", "WARNING").upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)  # fail fast on bad config
            spec = ExperimentSpec(
                config_path=args.config,
                out_dir=args.out,
                agent_kinds=config.run.agent_kind,
                seeds=config.run.seeds,
                jobs=args.jobs,
            )
            by_kind = run_experiment(spec)
            for kind, paths in sorted(by_kind.items()):
                print(f"{kind}: {len(paths)} per-seed CSVs + aggregate in {args.out}")
        elif args.command == "oracle":
            config = load_config(args.config)
            print(oracle_report(config.env, mc_episodes=args.mc_episodes))
        elif args.command == "plotdata":
            rows = merge_plotdata(args.in_dir, args.out)
            print(f"wrote {rows} rows to {args.out}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime abort; partial results stay on disk
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
