# backend/routers/common.py
"""Flags and output helpers shared by the subcommand routers."""
import argparse
import sys
from typing import Iterable

import pandas as pd
from loguru import logger

from backend.services.rgg_model import GraphInstance, ModelParams, sample_instance
from database.graph_store import load_graph, rows_frame, save_document, write_rows_csv
from database.models.results import ResultRow, ValidationReport


def add_instance_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--graph", help="Read the instance from a graph file instead of sampling it")
    parser.add_argument("--n", type=int, help="Expected number of vertices")
    parser.add_argument("--r", type=float, help="Connection radius")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mode", choices=["binomial", "poisson"], default="binomial")
    parser.add_argument("--metric", choices=["torus", "square"], default="torus")
    add_profile_flag(parser)


def add_profile_flag(parser: argparse.ArgumentParser):
    parser.add_argument("--profile", choices=["paper", "desk"], default="desk")


def add_run_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--max-rounds", type=int, default=200)


def add_output_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--out", help="Write the result document or CSV to this path")
    parser.add_argument("--format", choices=["csv", "text"], default="text")


def instance_from_args(args: argparse.Namespace) -> GraphInstance:
    if args.graph:
        return load_graph(args.graph, profile=args.profile)
    if args.n is None or args.r is None:
        args.parser.error("either --graph or both --n and --r are required")
    params = ModelParams(n=args.n, r=args.r, mode=args.mode, metric=args.metric, seed=args.seed, profile=args.profile)
    return sample_instance(params)


def emit_report(report: ValidationReport, args: argparse.Namespace) -> int:
    """Print ``report``; exit code 1 when any check failed."""
    if args.format == "csv":
        rows = [c.model_dump() for c in report.checks]
        pd.DataFrame(rows, columns=["name", "passed", "measured", "bound", "statistical", "detail"]).to_csv(
            sys.stdout, index=False
        )
    else:
        print(f"📋 {report.title}")
        for c in report.checks:
            mark = "✅" if c.passed else "❌"
            kind = " (statistical)" if c.statistical else ""
            detail = f" [{c.detail}]" if c.detail else ""
            print(f"  {mark} {c.name}: measured {c.measured:.6g} vs bound {c.bound:.6g}{kind}{detail}")
    if args.out:
        save_document(report, args.out)
    if not report.passed:
        logger.error(f"{len(report.failed())} check(s) failed in '{report.title}'")
        return 1
    return 0


def emit_rows(rows: Iterable[ResultRow], args: argparse.Namespace) -> int:
    rows = list(rows)
    if args.out:
        write_rows_csv(rows, args.out)
    frame = rows_frame(rows)
    if args.format == "csv":
        frame.to_csv(sys.stdout, index=False)
    else:
        for row in rows:
            extra = f" ({row.note})" if row.note else ""
            print(f"📊 n={row.n} r={row.r:g} trial={row.trial}: {row.quantity} = {row.value:g}{extra}")
    return 0
