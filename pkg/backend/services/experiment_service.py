# backend/services/experiment_service.py
"""Localization-number estimates and the scaling study built on them."""
import math
from multiprocessing import Pool
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, Field, model_validator
from scipy import stats

from backend.services.cop_strategies import FloodingCop, composite_cop
from backend.services.errors import NoBallClassError, NoEmptyAnnulusError, NoWinAtCapError
from backend.services.game_engine import play
from backend.services.profiles import ConstantsProfile, get_profile
from backend.services.rgg_model import GraphInstance, ModelParams, sample_instance, vertices_in
from backend.services.rng import stream, stream_key
from backend.services.robber_strategies import (
    BallHider,
    SiteHider,
    best_hiding_ball,
    max_class_robber,
    sparse_site_finder,
    special_eps,
)
from database.graph_store import rows_frame, write_rows_csv
from database.models.results import ResultRow
from database.models.transcript import GameConfig, Transcript


class ExperimentSpec(BaseModel):
    n_values: List[int] = Field(..., min_length=1, description="Instance sizes")
    r_values: Optional[List[float]] = Field(
        None, description="Radii; when omitted a geometric grid over [log^1.5 n, sqrt(n)/5] is used"
    )
    r_points: int = Field(6, ge=1, description="Grid size when r_values is omitted")
    trials: int = Field(1, ge=1, description="Instances per (n, r) cell")
    profile: Literal["paper", "desk"] = "desk"
    master_seed: int = 0
    mode: Literal["binomial", "poisson"] = "binomial"
    metric: Literal["torus", "square"] = "torus"
    max_rounds: int = Field(200, ge=1)
    lower: bool = Field(True, description="Also estimate the robber-side value")
    workers: int = Field(1, ge=1, description="Processes running trials in parallel")
    out: Optional[str] = Field(None, description="CSV output path")

    @model_validator(mode="after")
    def _grid_nonempty(self):
        if self.r_values is not None and not self.r_values:
            raise ValueError("r_values must not be empty")
        return self

    def radii(self, n: int) -> List[float]:
        if self.r_values is not None:
            return list(self.r_values)
        log_n = math.log(n)
        lo, hi = log_n ** 1.5, math.sqrt(n) / 5.0
        if hi <= lo:
            return [lo]
        return np.geomspace(lo, hi, self.r_points).tolist()


class ZetaEstimate(BaseModel):
    k: int = Field(..., ge=0, description="Estimated sensor count")
    w_size: Optional[int] = Field(None, description="Distinguishing-set size the cop asked for")
    rounds: Optional[int] = Field(None, description="Rounds of the deciding game")
    games: int = Field(0, description="Games simulated by the search")
    note: str = ""


def _bisect_first(lo: int, hi: int, pred: Callable[[int], bool]) -> int:
    """Smallest k in [lo, hi] with pred(k), assuming pred(hi) and monotonicity."""
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def zeta_upper(G: GraphInstance, profile: ConstantsProfile, max_rounds: int = 200, seed: int = 0) -> ZetaEstimate:
    """Smallest k with which the composite cop catches the max-class robber."""
    games: dict = {}

    def wins(k: int) -> bool:
        cfg = GameConfig(k=k, max_rounds=max_rounds, seed=seed)
        games[k] = play(G, cfg, composite_cop(profile, seed), max_class_robber())
        return games[k].cop_won

    if not wins(G.n):
        raise NoWinAtCapError(f"composite cop cannot win with k=n={G.n} within {max_rounds} rounds")
    k = _bisect_first(0, G.n, wins)
    if k not in games:
        wins(k)
    t: Transcript = games[k]
    flagged = len(t.flags)
    logger.info(f"zeta_upper: k={k} (|W|={t.required_k}, {len(t.rounds)} rounds, {len(games)} games)")
    return ZetaEstimate(
        k=k,
        w_size=t.required_k,
        rounds=len(t.rounds),
        games=len(games),
        note=f"{flagged} flags" if flagged else "",
    )


def _hiding_setup(G: GraphInstance):
    """(robber factory, flooding pool, note) for the regime of G."""
    if G.r >= G.log_n:
        ball, family = best_hiding_ball(G, special_eps(G.n, G.r))
        pool = vertices_in(G, ball).tolist()
        return (lambda: BallHider(G, ball, family)), pool, f"ball-hider, {len(family)} special pairs"
    site = sparse_site_finder(G)
    return (lambda: SiteHider(site)), list(site.occupants), f"site-hider, {len(site.occupants)} occupants"


def zeta_lower(
    G: GraphInstance,
    profile: ConstantsProfile,
    k_upper: Optional[int] = None,
    max_rounds: int = 200,
    seed: int = 0,
) -> ZetaEstimate:
    """Largest k at which the hiding robber survives both the composite and the flooding cop."""
    try:
        make_robber, pool, note = _hiding_setup(G)
    except NoEmptyAnnulusError as e:
        logger.warning(f"zeta_lower: {e}")
        return ZetaEstimate(k=0, note=e.code)
    cap = G.n if k_upper is None else min(k_upper, G.n)
    games = 0

    def survives(k: int) -> bool:
        nonlocal games
        cfg = GameConfig(k=k, max_rounds=max_rounds, seed=seed)
        for cop in (composite_cop(profile, seed), FloodingCop(pool)):
            games += 1
            try:
                if play(G, cfg, cop, make_robber()).cop_won:
                    return False
            except NoBallClassError:
                return False
        return True

    if not survives(0):
        return ZetaEstimate(k=0, games=games, note=f"{note}; no survival at k=0")
    # largest surviving k == (smallest failing k) - 1
    if survives(cap):
        k = cap
    else:
        k = _bisect_first(1, cap, lambda k: not survives(k)) - 1
    logger.info(f"zeta_lower: k={k} ({note}, {games} games)")
    return ZetaEstimate(k=k, games=games, note=note)


def _trial(task: Tuple[dict, int, float, int]) -> List[ResultRow]:
    spec_data, n, r, trial = task
    spec = ExperimentSpec(**spec_data)
    seed = stream_key(spec.master_seed, f"cell-{n}-{r:.6g}", trial) >> 1
    profile = get_profile(spec.profile)
    G = sample_instance(ModelParams(n=n, r=r, mode=spec.mode, metric=spec.metric, seed=seed, profile=spec.profile))
    log_n = math.log(max(n, 2))
    common = dict(n=n, r=r, seed=seed, trial=trial, profile=spec.profile,
                  ref_r43=r ** (4.0 / 3.0), ref_r2_logn=r * r / log_n)
    rows = []
    try:
        upper = zeta_upper(G, profile, spec.max_rounds, seed)
    except NoWinAtCapError as e:
        rows.append(ResultRow(quantity="zeta_upper", value=float("nan"), note=e.code, **common))
        return rows
    rows.append(ResultRow(quantity="zeta_upper", value=upper.k, rounds=upper.rounds, w_size=upper.w_size,
                          k=upper.k, note=upper.note, **common))
    if upper.w_size is not None:
        rows.append(ResultRow(quantity="w_size", value=upper.w_size, k=upper.k, **common))
    if spec.lower:
        lower = zeta_lower(G, profile, upper.k, spec.max_rounds, seed)
        rows.append(ResultRow(quantity="zeta_lower", value=lower.k, k=lower.k, note=lower.note, **common))
    return rows


def scaling_study(spec: ExperimentSpec) -> pd.DataFrame:
    """One row per measured quantity per trial, in (n, r, trial) order."""
    tasks = [
        (spec.model_dump(), n, float(r), t)
        for n in spec.n_values
        for r in spec.radii(n)
        for t in range(spec.trials)
    ]
    logger.info(f"scaling study: {len(tasks)} trials on {spec.workers} worker(s)")
    if spec.workers > 1:
        with Pool(processes=spec.workers) as pool:
            batches = pool.map(_trial, tasks)
    else:
        batches = [_trial(task) for task in tasks]
    rows = [row for batch in batches for row in batch]
    if spec.out:
        write_rows_csv(rows, spec.out)
    return rows_frame(rows)


class TrendResult(BaseModel):
    rho: float = Field(..., description="Spearman rank correlation of value against r")
    ci_low: float
    ci_high: float
    samples: int

    @property
    def increasing(self) -> bool:
        return self.ci_low > 0


def trend_statistics(
    frame: pd.DataFrame, quantity: str = "zeta_upper", iters: int = 1000, alpha: float = 0.05, seed: int = 0
) -> TrendResult:
    """Spearman correlation of ``quantity`` against r with a percentile bootstrap interval."""
    sub = frame[frame["quantity"] == quantity].dropna(subset=["value"])
    r = sub["r"].to_numpy(dtype=float)
    v = sub["value"].to_numpy(dtype=float)
    if len(sub) < 3:
        raise ValueError(f"need at least 3 rows of {quantity}, got {len(sub)}")
    rho = float(stats.spearmanr(r, v)[0])
    rng = stream(seed, "trend-bootstrap")
    boot = []
    for _ in range(iters):
        idx = rng.integers(0, len(sub), size=len(sub))
        if np.unique(r[idx]).size < 2 or np.unique(v[idx]).size < 2:
            continue
        boot.append(stats.spearmanr(r[idx], v[idx])[0])
    if not boot:
        return TrendResult(rho=rho, ci_low=rho, ci_high=rho, samples=0)
    low, high = np.quantile(boot, [alpha / 2.0, 1.0 - alpha / 2.0])
    return TrendResult(rho=rho, ci_low=float(low), ci_high=float(high), samples=len(boot))
