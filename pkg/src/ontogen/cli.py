"""Command-line entry point.

Subcommands mirror the pipeline stages (index, features, split, train,
predict, build, export, eval) plus `serve` for the review service. Exit
codes: 0 success, 2 configuration error, 3 missing/stale dependency,
4 stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, DependencyError, OntogenError
from .pipeline import STAGES, PipelineConfig, run_stage
from .review import ReviewService, ReviewState

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEPENDENCY = 3
EXIT_STAGE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontogen",
        description="Build a research-topic ontology from paper metadata.",
    )
    parser.add_argument("--config", required=True, help="path to the pipeline config (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out-dir", default=None, help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    for stage in STAGES:
        sub.add_parser(stage, help=f"run the {stage} stage")

    serve = sub.add_parser("serve", help="serve the review API (loopback by default)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8137)
    serve.add_argument("--ui-dir", default=None, help="static assets for the review UI")
    return parser


def load_config(args) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out_dir is not None:
        config.out_dir = args.out_dir
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        if args.command in STAGES:
            result = run_stage(args.command, config)
            status = "up to date (no-op)" if result.skipped else "done"
            print(f"[{args.command}] {status}")
            for path in sorted(result.outputs):
                print(f"  {path}")
            return EXIT_OK
        if args.command == "serve":
            state = ReviewState.from_artifacts(config.out_dir)
            service = ReviewService(
                state,
                host=args.host,
                port=args.port,
                export_dir=config.out_dir,
                ui_dir=args.ui_dir,
            )
            host, port = service.address
            print(f"review service on http://{host}:{port}/ (Ctrl-C stops)")
            print(json.dumps({"queue_pending": len(state.queue)},))
            try:
                service.serve_forever()
            except KeyboardInterrupt:
                service.shutdown()
            return EXIT_OK
        raise ConfigError(f"unknown command: {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DependencyError as exc:
        print(f"dependency error: {exc}", file=sys.stderr)
        return EXIT_DEPENDENCY
    except OntogenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
