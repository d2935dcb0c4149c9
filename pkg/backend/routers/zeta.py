# backend/routers/zeta.py
import argparse
import math

from backend.routers.common import add_instance_flags, add_output_flags, add_run_flags, emit_rows, instance_from_args
from backend.services.experiment_service import zeta_lower, zeta_upper
from backend.services.game_engine import exact_zeta
from backend.services.profiles import get_profile
from backend.services.rng import stream_key
from database.models.results import ResultRow


def register(subparsers):
    for name, handler, text in (
        ("zeta-upper", run_zeta_upper, "Smallest k with which the composite cop wins"),
        ("zeta-lower", run_zeta_lower, "Largest k at which the hiding robber survives"),
        ("exact-zeta", run_exact_zeta, "Exact localization number of a tiny instance"),
    ):
        parser = subparsers.add_parser(name, help=text)
        add_instance_flags(parser)
        add_run_flags(parser)
        add_output_flags(parser)
        parser.set_defaults(handler=handler, parser=parser)


def _instances(args: argparse.Namespace):
    """The instance of trial 0 uses --seed itself; later trials derive their seed from it."""
    for trial in range(args.trials):
        if trial and not args.graph:
            args.seed = stream_key(args.seed, "cli-trial", trial) >> 1
        yield trial, instance_from_args(args)


def _row(G, args, trial: int, quantity: str, value: float, **extra) -> ResultRow:
    log_n = math.log(max(G.n, 2))
    return ResultRow(
        n=G.n, r=G.r, seed=args.seed, trial=trial, quantity=quantity, value=value, profile=args.profile,
        ref_r43=G.r ** (4.0 / 3.0), ref_r2_logn=G.r * G.r / log_n, **extra
    )


def run_zeta_upper(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    rows = []
    for trial, G in _instances(args):
        est = zeta_upper(G, profile, args.max_rounds, args.seed)
        rows.append(_row(G, args, trial, "zeta_upper", est.k, rounds=est.rounds, w_size=est.w_size, k=est.k,
                         note=est.note))
    return emit_rows(rows, args)


def run_zeta_lower(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    rows = []
    for trial, G in _instances(args):
        est = zeta_lower(G, profile, None, args.max_rounds, args.seed)
        rows.append(_row(G, args, trial, "zeta_lower", est.k, k=est.k, note=est.note))
    return emit_rows(rows, args)


def run_exact_zeta(args: argparse.Namespace) -> int:
    rows = [_row(G, args, trial, "exact_zeta", exact_zeta(G)) for trial, G in _instances(args)]
    return emit_rows(rows, args)
