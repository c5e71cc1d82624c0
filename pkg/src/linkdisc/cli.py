"""Command line entry point.

Subcommands: ``run`` (full experiment from a JSON config), ``metrics``
(evaluate a score file against a positives file), ``correlate`` (grey
correlation across discriminability tables), ``report`` (derived tables
from a results directory) and ``generate`` (synthetic benchmark graphs).

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .discriminability import ExperimentError
from .evaluation import ALL_METRICS, TIE_POLICIES, normalize_metric
from .graph import GraphFormatError, generate_ba, generate_er, graph_to_text
from .harness import (
    ConfigError,
    RunConfig,
    cmd_correlate,
    cmd_metrics,
    cmd_report,
    cmd_run,
    format_value,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkdisc",
        description="Discriminability analysis for link-prediction metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to the JSON run config")
    p_run.add_argument("--workers", type=int, default=None,
                       help="override the config's worker count")
    p_run.add_argument("--output", default=None,
                       help="override the config's output directory")

    p_met = sub.add_parser("metrics", help="evaluate metrics for a score file")
    p_met.add_argument("--scores", required=True,
                       help="score file with 'u v score' lines")
    p_met.add_argument("--positives", required=True,
                       help="file listing the true pairs, one 'u v' per line")
    p_met.add_argument("--metric", action="append", default=None,
                       help="metric id (repeatable; default: all)")
    p_met.add_argument("--tie", choices=TIE_POLICIES, default="average",
                       help="tie handling policy (default: average)")
    p_met.add_argument("--seed", type=int, default=0,
                       help="seed for random tie breaking (default: 0)")

    p_cor = sub.add_parser("correlate",
                           help="grey correlation across discriminability tables")
    p_cor.add_argument("tables", nargs="+", help="discriminability csv files")
    p_cor.add_argument("--rho", type=float, default=0.5,
                       help="distinguishing coefficient in [0, 1] (default: 0.5)")
    p_cor.add_argument("--p-star", type=float, default=None,
                       help="select one p* level from multi-level tables")

    p_rep = sub.add_parser("report", help="derive summary tables from a run")
    p_rep.add_argument("results_dir", help="directory written by 'run'")
    p_rep.add_argument("--out", default=None,
                       help="where to write the report (default: results_dir)")

    p_gen = sub.add_parser("generate", help="write a synthetic benchmark graph")
    p_gen.add_argument("--model", choices=("er", "ba"), required=True)
    p_gen.add_argument("--n", type=int, required=True, help="number of nodes")
    p_gen.add_argument("--m", type=int, required=True,
                       help="er: number of edges; ba: edges per new node")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", default=None,
                       help="output edge list path (default: stdout)")
    return parser


def _do_run(args) -> int:
    config = RunConfig.from_file(args.config)
    out = cmd_run(config, workers=args.workers, output_dir=args.output)
    print(f"results written to {out}")
    return 0


def _do_metrics(args) -> int:
    metrics = ALL_METRICS if not args.metric else tuple(
        normalize_metric(m) for m in args.metric)
    rows = cmd_metrics(args.scores, args.positives, metrics,
                       tie_policy=args.tie, seed=args.seed)
    print("metric,value,params")
    for metric, value, params in rows:
        print(f"{metric},{format_value(float(value))},{params}")
    return 0


def _do_correlate(args) -> int:
    labels, matrix = cmd_correlate(args.tables, rho=args.rho, p_star=args.p_star)
    print("group," + ",".join(labels))
    for label, row in zip(labels, matrix):
        print(label + "," + ",".join(format_value(float(x)) for x in row))
    return 0


def _do_report(args) -> int:
    written = cmd_report(args.results_dir, out_dir=args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def _do_generate(args) -> int:
    if args.model == "er":
        graph = generate_er(args.n, args.m, args.seed)
    else:
        graph = generate_ba(args.n, args.m, args.seed)
    text = graph_to_text(graph)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out} ({graph.n} nodes, {len(graph.edges)} edges)")
    return 0


_HANDLERS = {
    "run": _do_run,
    "metrics": _do_metrics,
    "correlate": _do_correlate,
    "report": _do_report,
    "generate": _do_generate,
}

# errors that mean the inputs were invalid before any computation started
_CONFIG_ERRORS = (ConfigError, GraphFormatError, ValueError)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
