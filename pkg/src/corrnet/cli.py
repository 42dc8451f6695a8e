"""Command-line front end.

Subcommands: ingest, net, clusters, simulate, run, serve.  Exit codes:
0 ok, 1 validation problem, 2 I/O problem, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from corrnet.marketdata import AlignmentError, ParseError, ValidationError
from corrnet.pipeline import Pipeline, PipelineConfig, load_config
from corrnet.splitweights import ConvergenceError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrnet",
        description="Circular correlation networks and cluster-based portfolio simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, required=True, help="INI config file")
        p.add_argument("--out", type=Path, help="override the artifact directory")
        p.add_argument("--seed", type=int, help="override the simulation seed")

    p = sub.add_parser("ingest", help="load and validate the price data")
    common(p)

    p = sub.add_parser("net", help="build the network for one estimation period")
    common(p)
    p.add_argument("--period", required=True)

    p = sub.add_parser("clusters", help="delineate clusters for one period")
    common(p)
    p.add_argument("--period", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--min-size", type=int, dest="min_size")

    p = sub.add_parser("simulate", help="simulate one estimation/evaluation pair")
    common(p)
    p.add_argument("--period", required=True, help="estimation period label")
    p.add_argument("--sizes", help="comma-separated portfolio sizes")
    p.add_argument("--iterations", type=int)

    p = sub.add_parser("run", help="full pipeline over all period pairs")
    common(p)

    p = sub.add_parser("serve", help="serve the JSON API for the UI")
    common(p)
    p.add_argument("--bind", default="127.0.0.1:8000", help="host:port")
    return parser


def _configured(args) -> PipelineConfig:
    config = load_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out.resolve()
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "k", None) is not None:
        overrides["k"] = args.k
    if getattr(args, "min_size", None) is not None:
        overrides["min_size"] = args.min_size
    if getattr(args, "iterations", None) is not None:
        overrides["iterations"] = args.iterations
    if getattr(args, "sizes", None):
        overrides["sizes"] = tuple(int(tok) for tok in args.sizes.split(","))
    return dataclasses.replace(config, **overrides) if overrides else config


def cmd_ingest(args) -> int:
    pipeline = Pipeline(_configured(args))
    series = pipeline.series
    periods = pipeline.periods()
    print(f"loaded {len(series)} tickers, {len(series[0])} observations each")
    for p in periods:
        rm = pipeline.returns(p.label)
        print(f"period {p.label}: {p.start_date}..{p.end_date}, {rm.values.shape[0]} return windows")
    path = pipeline.write_correlation_summary()
    print(f"wrote {path}")
    return EXIT_OK


def cmd_net(args) -> int:
    pipeline = Pipeline(_configured(args))
    for path in pipeline.write_network(args.period):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_clusters(args) -> int:
    pipeline = Pipeline(_configured(args))
    assignment = pipeline.clusters(args.period)
    path = pipeline.write_cluster_csv(args.period)
    sizes = assignment.sizes()
    print(f"{assignment.k} clusters: " + ", ".join(f"#{c}={sizes[c]}" for c in sorted(sizes)))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    pipeline = Pipeline(_configured(args))
    report = pipeline.simulate_pair(args.period)
    path = pipeline.write_report(report)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    pipeline = Pipeline(_configured(args))
    for path in pipeline.run_all():
        print(f"wrote {path}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from corrnet.server import create_app

    host, _, port = args.bind.partition(":")
    app = create_app(_configured(args))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")
    return EXIT_OK


_COMMANDS = {
    "ingest": cmd_ingest,
    "net": cmd_net,
    "clusters": cmd_clusters,
    "simulate": cmd_simulate,
    "run": cmd_run,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, ValidationError, AlignmentError, KeyError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error ({args.command}): {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConvergenceError, ArithmeticError) as exc:
        print(f"numerical failure ({args.command}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
