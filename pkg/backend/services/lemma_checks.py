# backend/services/lemma_checks.py
"""Empirical validators for the counting, concentration and geometry claims.

Every validator returns a ``ValidationReport`` whose checks carry the
measured value next to the bound it was held against.
"""
import math
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from scipy.spatial import cKDTree

from backend.services.cop_strategies import epsilon_critical, family_squares, internal_square
from backend.services.errors import DegenerateTangencyError, EmptyIntersectionError
from backend.services.geometry import (
    Ball,
    Point,
    Square,
    TorusBox,
    boundary_arcs,
    boundary_components,
    crown_pair_strip,
    mc_area,
    symdiff_area,
)
from backend.services.profiles import ConstantsProfile
from backend.services.rgg_model import GraphInstance, vertices_in
from backend.services.rng import stream
from database.models.results import ValidationReport

STRIP_WIDTH_CONSTANT = 0.242
BRUTE_FORCE_MAX_VERTICES = 2000


def _sigma_slack(bound: float, trials: int) -> float:
    return 3.0 * math.sqrt(max(bound * (1.0 - bound), 0.0) / trials)


def _close_pairs(G: GraphInstance, square: Square, members: np.ndarray, eps: float) -> int:
    if members.size < 2:
        return 0
    if square.side >= G.side:
        tree = cKDTree(G.positions[members], boxsize=G.side if G.box.wrap else None)
    else:
        tree = cKDTree(square.local(G.positions[members], box=G.box))
    return len(tree.query_pairs(eps * (1 + 1e-12)))


def _close_pairs_brute(G: GraphInstance, members: np.ndarray, eps: float) -> int:
    count = 0
    pts = G.positions[members]
    for i in range(len(members) - 1):
        d = G.box.distances(pts[i], pts[i + 1:])
        count += int(np.count_nonzero(d <= eps))
    return count


def verify_pair_counts(
    G: GraphInstance,
    eps_list: Sequence[float],
    profile: ConstantsProfile,
    brute_force: bool = False,
    max_squares: Optional[int] = None,
) -> ValidationReport:
    """Vertex counts of the family squares and eps-close pair counts in their internal squares."""
    report = ValidationReport(title=f"pair counts (n={G.n}, r={G.r:g}, profile={profile.name})")
    if brute_force and G.n > BRUTE_FORCE_MAX_VERTICES:
        raise ValueError(f"brute force is limited to {BRUTE_FORCE_MAX_VERTICES} vertices, got {G.n}")
    squares = family_squares(G, profile)
    if max_squares is not None:
        squares = squares[:max_squares]
    log_n = math.log(max(G.n, 2))
    worst_count = 0.0
    worst_pairs = {eps: 0.0 for eps in eps_list}
    mismatches = 0
    for square in squares:
        area = min(square.side, G.side) ** 2
        count = vertices_in(G, square).size
        worst_count = max(worst_count, count / (2.0 * area))
        inner = internal_square(G, square)
        members = vertices_in(G, inner)
        for eps in eps_list:
            pairs = _close_pairs(G, inner, members, eps)
            worst_pairs[eps] = max(worst_pairs[eps], pairs / max(200.0 * area * eps * eps, 1e-300))
            if brute_force and pairs != _close_pairs_brute(G, members, eps):
                mismatches += 1
            if profile.name == "paper":
                report.add(
                    f"log-budget pairs eps={eps:g}",
                    pairs <= 1e16 * log_n ** 2,
                    pairs,
                    1e16 * log_n ** 2,
                    statistical=True,
                )
    report.add("vertices per square / 2*area", worst_count <= 1.0, worst_count, 1.0, statistical=True)
    for eps, ratio in worst_pairs.items():
        report.add(f"close pairs / 200*area*eps^2 (eps={eps:g})", ratio <= 1.0, ratio, 1.0, statistical=True)
    if brute_force:
        report.add("brute-force pair count mismatches", mismatches == 0, mismatches, 0)
    logger.info(f"pair counts over {len(squares)} squares: {'passed' if report.passed else 'FAILED'}")
    return report


def symdiff_occupants(G: GraphInstance, a: int, b: int) -> int:
    left = vertices_in(G, Ball(G.point(a), G.r))
    right = vertices_in(G, Ball(G.point(b), G.r))
    return int(np.setxor1d(left, right).size)


def symdiff_occupants_brute(G: GraphInstance, a: int, b: int) -> int:
    da = G.box.distances(G.positions[a], G.positions)
    db = G.box.distances(G.positions[b], G.positions)
    return int(np.count_nonzero((da <= G.r) != (db <= G.r)))


def verify_crown_counts(G: GraphInstance, m: int, seed: int, brute_force: bool = False) -> ValidationReport:
    """Occupants of B(a, r) symmetric-difference B(b, r) for random pairs at least eps_c apart."""
    report = ValidationReport(title=f"crown counts (n={G.n}, r={G.r:g})")
    if G.n < 2:
        report.add("pairs examined", True, 0, 0)
        return report
    eps_c = epsilon_critical(G.n, G.r)
    rng = stream(seed, "crown-pairs")
    a = rng.integers(0, G.n, size=m)
    b = rng.integers(0, G.n, size=m)
    d = np.array([G.box.distances(G.positions[i], G.positions[j][None, :])[0] for i, j in zip(a, b)])
    keep = d >= eps_c
    violations = mismatches = 0
    worst = math.inf
    for i, j, dist in zip(a[keep], b[keep], d[keep]):
        occ = symdiff_occupants(G, int(i), int(j))
        bound = min(dist, 2.0 * G.r) * G.r
        worst = min(worst, occ / bound)
        if occ < bound:
            violations += 1
        if brute_force and occ != symdiff_occupants_brute(G, int(i), int(j)):
            mismatches += 1
    examined = int(keep.sum())
    report.add("pairs examined", examined > 0, examined, m, detail=f"eps_c={eps_c:.4g}")
    report.add("symmetric-difference violations", violations == 0, violations, 0, statistical=True,
               detail=f"worst occupants/bound ratio {worst:.4g}")
    if brute_force:
        report.add("brute-force occupant mismatches", mismatches == 0, mismatches, 0)
    return report


def chernoff_bounds(mean: float, t: float) -> tuple:
    """(upper-tail, lower-tail) Chernoff bounds for deviation t around the mean."""
    if t == 0:
        return 1.0, 1.0
    upper = math.exp(-t * t / (2.0 * (mean + t / 3.0)))
    lower = math.exp(-t * t / (2.0 * mean)) if mean > 0 else 0.0
    return upper, lower


def chernoff_check(n: int, p: float, t: float, trials: int, seed: int) -> ValidationReport:
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0.0 <= p <= 1.0 or t < 0:
        raise ValueError(f"need 0 <= p <= 1 and t >= 0, got p={p}, t={t}")
    report = ValidationReport(title=f"Chernoff tails (n={n}, p={p:g}, t={t:g}, trials={trials})")
    x = stream(seed, "chernoff").binomial(n, p, size=trials)
    mean = n * p
    upper, lower = chernoff_bounds(mean, t)
    freq_up = float(np.mean(x >= mean + t))
    freq_lo = float(np.mean(x <= mean - t))
    report.add("upper tail", freq_up <= upper + _sigma_slack(upper, trials), freq_up, upper, statistical=True)
    report.add("lower tail", freq_lo <= lower + _sigma_slack(lower, trials), freq_lo, lower, statistical=True)
    return report


def poisson_tail_check(lam: float, trials: int, seed: int) -> ValidationReport:
    if lam <= 0 or trials < 1:
        raise ValueError(f"need lam > 0 and trials >= 1, got lam={lam}, trials={trials}")
    report = ValidationReport(title=f"Poisson tail (lambda={lam:g}, trials={trials})")
    x = stream(seed, "poisson-tail").poisson(lam, size=trials)
    bound = min(1.0, 2.0 * math.exp(-lam / 3.0))
    freq = float(np.mean(x >= 2.0 * lam))
    report.add("P(X >= 2 lambda)", freq <= bound + _sigma_slack(bound, trials), freq, bound, statistical=True)
    return report


def _metric_checks(report: ValidationReport, trials: int, seed: int):
    rng = stream(seed, "geometry-metric")
    box = TorusBox(10.0)
    p, q, w = (rng.uniform(0, 10.0, size=(trials, 2)) for _ in range(3))
    dpq = np.array([box.distances(a, b[None, :])[0] for a, b in zip(p, q)])
    dqp = np.array([box.distances(b, a[None, :])[0] for a, b in zip(p, q)])
    dqw = np.array([box.distances(a, b[None, :])[0] for a, b in zip(q, w)])
    dpw = np.array([box.distances(a, b[None, :])[0] for a, b in zip(p, w)])
    asym = float(np.max(np.abs(dpq - dqp)))
    triangle = int(np.count_nonzero(dpw > dpq + dqw + 1e-12))
    report.add("metric symmetry", asym <= 1e-12, asym, 1e-12)
    report.add("metric triangle inequality", triangle == 0, triangle, 0)
    report.add("metric bounded by half-diagonal", float(dpq.max()) <= 5.0 * math.sqrt(2) + 1e-12, float(dpq.max()),
               5.0 * math.sqrt(2))


def _symdiff_checks(report: ValidationReport, trials: int, seed: int):
    rng = stream(seed, "geometry-symdiff")
    r = rng.uniform(0.5, 5.0, size=trials)
    eps = rng.uniform(0.0, 4.0, size=trials) * r
    ratios = [symdiff_area(ri, ei) / (2.0 * min(ei, 2.0 * ri) * ri) for ri, ei in zip(r, eps) if ei > 0]
    worst = min(ratios) if ratios else math.inf
    report.add("symdiff area / 2 min(eps, 2r) r", worst >= 1.0 - 1e-12, worst, 1.0)


def _random_configuration(rng, r: float):
    clip = Ball(Point(0.0, 0.0), rng.uniform(0.05, 1.0 / 3.0) * r)
    count = int(rng.integers(1, 21))
    angle = rng.uniform(0, 2 * math.pi, size=count)
    dist = rng.uniform(0.0, r + clip.radius, size=count)
    centers = [Point(d * math.cos(a), d * math.sin(a)) for a, d in zip(angle, dist)]
    return centers, clip


def _boundary_length_checks(report: ValidationReport, trials: int, seed: int):
    rng = stream(seed, "geometry-arcs")
    worst = 0.0
    degenerate = 0
    for _ in range(trials):
        centers, clip = _random_configuration(rng, 1.0)
        try:
            total = boundary_arcs(centers, 1.0, clip).total_length
        except DegenerateTangencyError:
            degenerate += 1
            continue
        worst = max(worst, total / (2.0 * math.pi * clip.radius))
    report.add("boundary length / clip perimeter", worst <= 1.0 + 1e-6, worst, 1.0,
               detail=f"{degenerate} degenerate configurations skipped")


def _isoperimetric_checks(report: ValidationReport, trials: int, seed: int):
    rng = stream(seed, "geometry-isoperimetric")
    worst = 0.0
    examined = 0
    for t in range(trials):
        centers, clip = _random_configuration(rng, 1.0)
        try:
            raster, comps = boundary_components(centers, 1.0, clip, resolution=256)
        except DegenerateTangencyError:
            continue
        clip_area = math.pi * clip.radius ** 2
        window = (clip.center.x - clip.radius, clip.center.y - clip.radius,
                  clip.center.x + clip.radius, clip.center.y + clip.radius)
        for comp in comps:
            if comp.pixel_area < 0.05 * clip_area or comp.length <= 0:
                continue
            area, se = mc_area(raster.component_membership(comp.label), window, 20_000, seed + t)
            limit = comp.length ** 2 / (4.0 * math.pi)
            worst = max(worst, (area - 3.0 * se) / limit)
            examined += 1
    report.add("component area / (length^2 / 4 pi)", worst <= 1.0, worst, 1.0, statistical=True,
               detail=f"{examined} components")


def _strip_checks(report: ValidationReport, trials: int, seed: int):
    rng = stream(seed, "geometry-strips")
    worst = 0.0
    missed = 0
    for _ in range(trials):
        s = rng.uniform(1.0, 100.0)
        square = Square(Point(0.0, 0.0), s, rng.uniform(0, math.pi / 2))
        _, B, _, D = square.corners(scale=3.0)
        u, v = rng.uniform(-s / 2.0, s / 2.0, size=2)
        c, sn = math.cos(square.angle), math.sin(square.angle)
        x = Point(c * u - sn * v, sn * u + c * v)
        dB = math.hypot(x.x - B.x, x.y - B.y)
        dD = math.hypot(x.x - D.x, x.y - D.y)
        rho_B = max(dB - rng.uniform(0, s / 6.0), 0.0)
        rho_D = max(dD - rng.uniform(0, s / 6.0), 0.0)
        try:
            strip = crown_pair_strip(B, D, rho_B, rho_D, s)
        except EmptyIntersectionError:
            missed += 1
            continue
        worst = max(worst, strip.width / s)
        if not strip.contains(x.as_array()[None, :], tol=1e-9 * s)[0]:
            missed += 1
    report.add("strip width / s", worst <= STRIP_WIDTH_CONSTANT, worst, STRIP_WIDTH_CONSTANT)
    report.add("strip misses the robber position", missed == 0, missed, 0)


def verify_geometry(trials: int, seed: int) -> ValidationReport:
    """Metric axioms, symmetric-difference areas, boundary lengths, isoperimetry and strip widths."""
    if trials < 1:
        raise ValueError("trials must be positive")
    report = ValidationReport(title=f"geometry invariants (trials={trials}, seed={seed})")
    _metric_checks(report, trials, seed)
    _symdiff_checks(report, trials, seed)
    _boundary_length_checks(report, trials, seed)
    _isoperimetric_checks(report, min(trials, 10), seed)
    _strip_checks(report, trials, seed)
    logger.info(f"geometry suite: {len(report.failed())} of {len(report.checks)} checks failed")
    return report
