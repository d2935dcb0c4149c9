# backend/routers/play.py
import argparse
import sys

import pandas as pd

from backend.routers.common import add_instance_flags, add_output_flags, instance_from_args
from backend.services.cop_strategies import composite_cop, flooding_cop, round_robin_cop
from backend.services.game_engine import play
from backend.services.profiles import get_profile
from backend.services.robber_strategies import (
    ball_hider,
    best_hiding_ball,
    max_class_robber,
    site_hider,
    sparse_site_finder,
    special_eps,
)
from database.graph_store import save_document
from database.models.transcript import GameConfig

COPS = ["composite", "round-robin", "flooding"]
ROBBERS = ["max-class", "ball-hider", "site-hider"]


def register(subparsers):
    parser = subparsers.add_parser("play", help="Play one game and print its transcript")
    add_instance_flags(parser)
    add_output_flags(parser)
    parser.add_argument("--k", type=int, required=True, help="Sensors per round")
    parser.add_argument("--max-rounds", type=int, default=200)
    parser.add_argument("--cop", choices=COPS, default="composite")
    parser.add_argument("--robber", choices=ROBBERS, default="max-class")
    parser.set_defaults(handler=run_game, parser=parser)


def _players(G, args):
    profile = get_profile(args.profile)
    ball = family = None
    if args.cop == "flooding" or args.robber == "ball-hider":
        ball, family = best_hiding_ball(G, special_eps(G.n, G.r))

    if args.cop == "composite":
        cop = composite_cop(profile, args.seed)
    elif args.cop == "round-robin":
        cop = round_robin_cop()
    else:
        cop = flooding_cop(G, ball)

    if args.robber == "max-class":
        robber = max_class_robber()
    elif args.robber == "ball-hider":
        robber = ball_hider(G, ball, family)
    else:
        robber = site_hider(sparse_site_finder(G))
    return cop, robber


def run_game(args: argparse.Namespace) -> int:
    G = instance_from_args(args)
    cop, robber = _players(G, args)
    cfg = GameConfig(k=args.k, max_rounds=args.max_rounds, seed=args.seed)
    transcript = play(G, cfg, cop, robber)
    if args.out:
        save_document(transcript, args.out)
    if args.format == "csv":
        pd.DataFrame(
            [
                dict(round=rec.round, phase=rec.phase, classes=len(rec.partition_sizes),
                     chosen_class_size=rec.chosen_class_size, flags=len(rec.flags))
                for rec in transcript.rounds
            ]
        ).to_csv(sys.stdout, index=False)
        return 0
    print(f"🎲 {transcript.cop} vs {transcript.robber}, k={cfg.k}, n={G.n}")
    for rec in transcript.rounds:
        print(f"  round {rec.round:>3} [{rec.phase}] {len(rec.partition_sizes)} classes, robber kept {rec.chosen_class_size}")
    verdict = f"cop wins in round {transcript.win_round}" if transcript.cop_won else "robber survives"
    print(f"🏁 {verdict}" + (f" (required k={transcript.required_k})" if transcript.required_k is not None else ""))
    return 0
