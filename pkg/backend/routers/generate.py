# backend/routers/generate.py
import argparse

from loguru import logger

from backend.routers.common import add_instance_flags, instance_from_args
from database.graph_store import save_graph


def register(subparsers):
    parser = subparsers.add_parser("generate", help="Sample an instance and write it as a graph file")
    add_instance_flags(parser)
    parser.add_argument("--out", required=True, help="Graph file to write")
    parser.set_defaults(handler=generate, parser=parser)


def generate(args: argparse.Namespace) -> int:
    G = instance_from_args(args)
    save_graph(G, args.out)
    print(f"🧭 {G.n} vertices on a {G.side:.6g}-torus, r={G.r:g} -> {args.out}")
    for w in G.warnings:
        logger.warning(w)
    return 0
