# backend/routers/verify.py
import argparse

from backend.routers.common import add_instance_flags, add_output_flags, emit_report, instance_from_args
from backend.services.distances import check_distance_bound
from backend.services.lemma_checks import (
    chernoff_check,
    poisson_tail_check,
    verify_crown_counts,
    verify_geometry,
    verify_pair_counts,
)
from backend.services.profiles import get_profile
from database.models.results import ValidationReport


def register(subparsers):
    geometry = subparsers.add_parser("verify-geometry", help="Run the geometry invariant suite")
    geometry.add_argument("--trials", type=int, default=200)
    geometry.add_argument("--seed", type=int, default=0)
    add_output_flags(geometry)
    geometry.set_defaults(handler=run_verify_geometry, parser=geometry)

    counts = subparsers.add_parser("verify-counts", help="Check vertex, pair and crown counts on an instance")
    add_instance_flags(counts)
    add_output_flags(counts)
    counts.add_argument("--eps", type=float, nargs="+", default=[0.5, 1.0])
    counts.add_argument("--pairs", type=int, default=200, help="Random pairs for the crown-count check")
    counts.add_argument("--max-squares", type=int, default=None)
    counts.add_argument("--brute-force", action="store_true", help="Cross-check against O(n^2) counting")
    counts.set_defaults(handler=run_verify_counts, parser=counts)

    bound = subparsers.add_parser("verify-distance-bound", help="Compare hop distances with the ceiling bound")
    add_instance_flags(bound)
    add_output_flags(bound)
    bound.add_argument("--pairs", type=int, default=1000)
    bound.set_defaults(handler=run_verify_distance_bound, parser=bound)

    conc = subparsers.add_parser("verify-concentration", help="Chernoff and Poisson tail checks")
    conc.add_argument("--n", type=int, default=10_000)
    conc.add_argument("--p", type=float, default=0.01)
    conc.add_argument("--t", type=float, default=50.0)
    conc.add_argument("--lam", type=float, default=30.0)
    conc.add_argument("--trials", type=int, default=100_000)
    conc.add_argument("--seed", type=int, default=0)
    add_output_flags(conc)
    conc.set_defaults(handler=run_verify_concentration, parser=conc)


def run_verify_geometry(args: argparse.Namespace) -> int:
    return emit_report(verify_geometry(args.trials, args.seed), args)


def run_verify_counts(args: argparse.Namespace) -> int:
    G = instance_from_args(args)
    report = verify_pair_counts(G, args.eps, get_profile(args.profile), args.brute_force, args.max_squares)
    crowns = verify_crown_counts(G, args.pairs, args.seed, args.brute_force)
    report.checks.extend(crowns.checks)
    return emit_report(report, args)


def run_verify_distance_bound(args: argparse.Namespace) -> int:
    G = instance_from_args(args)
    result = check_distance_bound(G, args.pairs, args.seed)
    report = ValidationReport(title=f"distance bound (n={G.n}, r={G.r:g}, {result.pairs_checked} pairs)")
    report.add("pairs above the ceiling", not result.violations, len(result.violations), 0, statistical=True)
    report.add("unreachable pairs", not result.unreachable, len(result.unreachable), 0, statistical=True)
    report.add("pairs with r*d_G < d_T", result.lower_bound_failures == 0, result.lower_bound_failures, 0)
    return emit_report(report, args)


def run_verify_concentration(args: argparse.Namespace) -> int:
    report = chernoff_check(args.n, args.p, args.t, args.trials, args.seed)
    report.checks.extend(poisson_tail_check(args.lam, args.trials, args.seed).checks)
    return emit_report(report, args)
