# backend/routers/scaling.py
import argparse
import sys

from backend.routers.common import add_profile_flag
from backend.services.experiment_service import ExperimentSpec, scaling_study, trend_statistics


def register(subparsers):
    parser = subparsers.add_parser("scaling", help="Estimate zeta over an (n, r) grid and write the rows as CSV")
    parser.add_argument("--n", type=int, nargs="+", required=True)
    parser.add_argument("--r", type=float, nargs="+", default=None,
                        help="Radii; defaults to a geometric grid over [log^1.5 n, sqrt(n)/5]")
    parser.add_argument("--r-points", type=int, default=6)
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0, help="Master seed")
    parser.add_argument("--mode", choices=["binomial", "poisson"], default="binomial")
    parser.add_argument("--metric", choices=["torus", "square"], default="torus")
    parser.add_argument("--max-rounds", type=int, default=200)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--no-lower", action="store_true", help="Skip the robber-side estimate")
    parser.add_argument("--out")
    parser.add_argument("--format", choices=["csv", "text"], default="csv")
    add_profile_flag(parser)
    parser.set_defaults(handler=run_scaling, parser=parser)


def run_scaling(args: argparse.Namespace) -> int:
    spec = ExperimentSpec(
        n_values=args.n,
        r_values=args.r,
        r_points=args.r_points,
        trials=args.trials,
        profile=args.profile,
        master_seed=args.seed,
        mode=args.mode,
        metric=args.metric,
        max_rounds=args.max_rounds,
        lower=not args.no_lower,
        workers=args.workers,
        out=args.out,
    )
    frame = scaling_study(spec)
    if args.format == "csv":
        frame.to_csv(sys.stdout, index=False)
        return 0
    print(frame.to_string(index=False))
    upper = frame[frame["quantity"] == "zeta_upper"]
    if upper["r"].nunique() >= 2 and len(upper) >= 3:
        trend = trend_statistics(frame, seed=args.seed)
        print(f"📈 Spearman rho={trend.rho:.3f}, 95% CI [{trend.ci_low:.3f}, {trend.ci_high:.3f}]")
    return 0
