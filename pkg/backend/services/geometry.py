# backend/services/geometry.py
"""Discs, crowns, strips, squares and circular-arc boundaries on the torus.

Points are plain (x, y) pairs; bulk operations take ``(m, 2)`` float arrays.
Planar helpers (strips, arcs) work in whatever local frame the caller
unwraps into; torus-aware helpers take a ``TorusBox``.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import ndimage

from backend.services.errors import DegenerateTangencyError, EmptyIntersectionError
from backend.services.rng import stream

ANGLE_TOL = 1e-9
LENGTH_TOL = 1e-9
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def of(cls, xy) -> "Point":
        return cls(float(xy[0]), float(xy[1]))


@dataclass(frozen=True)
class TorusBox:
    """Side-L square, wrapped unless ``wrap`` is off (square metric)."""

    side: float
    wrap: bool = True

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError(f"torus side must be positive, got {self.side}")

    def canonical(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        if not self.wrap:
            return coords
        out = np.mod(coords, self.side)
        # mod can round up to exactly `side` for tiny negative inputs
        return np.where(out >= self.side, 0.0, out)

    def canonical_point(self, p: Point) -> Point:
        return Point.of(self.canonical(p.as_array()))

    def delta(self, origin: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Signed minimal-image displacement from ``origin`` to each target."""
        d = np.asarray(targets, dtype=float) - np.asarray(origin, dtype=float)
        if self.wrap:
            d = d - self.side * np.round(d / self.side)
        return d

    def distances(self, origin: np.ndarray, targets: np.ndarray) -> np.ndarray:
        d = np.abs(np.asarray(targets, dtype=float) - np.asarray(origin, dtype=float))
        if self.wrap:
            d = np.minimum(d, self.side - d)
        return np.sqrt(np.sum(d * d, axis=-1))

    @property
    def area(self) -> float:
        return self.side * self.side


def torus_distance(p: Point, q: Point, box: TorusBox) -> float:
    dx = abs(p.x - q.x)
    dy = abs(p.y - q.y)
    if box.wrap:
        dx = min(dx, box.side - dx)
        dy = min(dy, box.side - dy)
    return math.hypot(dx, dy)


@dataclass(frozen=True)
class Ball:
    center: Point
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"ball radius must be non-negative, got {self.radius}")

    def contains(self, points: np.ndarray, box: Optional[TorusBox] = None) -> np.ndarray:
        points = np.atleast_2d(points)
        if box is None:
            d = np.hypot(points[:, 0] - self.center.x, points[:, 1] - self.center.y)
        else:
            d = box.distances(self.center.as_array(), points)
        return d <= self.radius


@dataclass(frozen=True)
class Crown:
    center: Point
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not 0 <= self.r_inner <= self.r_outer:
            raise ValueError(f"crown radii out of order: {self.r_inner}, {self.r_outer}")

    @property
    def width(self) -> float:
        return self.r_outer - self.r_inner

    def contains(self, points: np.ndarray, box: Optional[TorusBox] = None) -> np.ndarray:
        points = np.atleast_2d(points)
        if box is None:
            d = np.hypot(points[:, 0] - self.center.x, points[:, 1] - self.center.y)
        else:
            d = box.distances(self.center.as_array(), points)
        return (d >= self.r_inner) & (d <= self.r_outer)


@dataclass(frozen=True)
class Strip:
    """All points within width/2 of the line through ``anchor`` along ``direction``."""

    anchor: Point
    direction: Tuple[float, float]
    width: float

    def __post_init__(self):
        if self.width < 0:
            raise ValueError(f"strip width must be non-negative, got {self.width}")

    def offset(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        ux, uy = self.direction
        rel_x = points[:, 0] - self.anchor.x
        rel_y = points[:, 1] - self.anchor.y
        return ux * rel_y - uy * rel_x

    def contains(self, points: np.ndarray, tol: float = LENGTH_TOL) -> np.ndarray:
        return np.abs(self.offset(points)) <= self.width / 2.0 + tol


@dataclass(frozen=True)
class Square:
    """Square of side ``side`` centred at ``center`` and rotated by ``angle``."""

    center: Point
    side: float
    angle: float = 0.0

    def local(self, points: np.ndarray, box: Optional[TorusBox] = None) -> np.ndarray:
        points = np.atleast_2d(points)
        if box is None:
            rel = points - self.center.as_array()
        else:
            rel = box.delta(self.center.as_array(), points)
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.column_stack([c * rel[:, 0] + s * rel[:, 1], -s * rel[:, 0] + c * rel[:, 1]])

    def contains(
        self, points: np.ndarray, box: Optional[TorusBox] = None, margin: float = 0.0
    ) -> np.ndarray:
        half = self.side / 2.0 - margin
        if half < 0:
            return np.zeros(len(np.atleast_2d(points)), dtype=bool)
        loc = self.local(points, box)
        return (np.abs(loc[:, 0]) <= half) & (np.abs(loc[:, 1]) <= half)

    def corners(self, scale: float = 1.0) -> List[Point]:
        """Corners A, B, C, D (counter-clockwise from lower-left) of the concentric square of side scale*side."""
        h = scale * self.side / 2.0
        c, s = math.cos(self.angle), math.sin(self.angle)
        out = []
        for lx, ly in ((-h, -h), (h, -h), (h, h), (-h, h)):
            out.append(Point(self.center.x + c * lx - s * ly, self.center.y + s * lx + c * ly))
        return out

    def shrink(self, margin: float) -> "Square":
        return Square(self.center, max(self.side - 2.0 * margin, 0.0), self.angle)


@dataclass(frozen=True)
class Arc:
    center: Point
    radius: float
    start: float
    end: float

    @property
    def length(self) -> float:
        return self.radius * (self.end - self.start)

    def point_at(self, t: float, offset: float = 0.0) -> np.ndarray:
        """Point at fraction ``t`` along the arc, pushed radially by ``offset``."""
        theta = self.start + t * (self.end - self.start)
        rad = self.radius + offset
        return np.array([self.center.x + rad * math.cos(theta), self.center.y + rad * math.sin(theta)])


@dataclass(frozen=True)
class ArcSet:
    arcs: Tuple[Arc, ...] = field(default_factory=tuple)

    @property
    def total_length(self) -> float:
        return float(sum(a.length for a in self.arcs))

    def __len__(self) -> int:
        return len(self.arcs)


def symdiff_area(r: float, eps: float) -> float:
    """Area of B(A, r) symmetric-difference B(B, r) for |AB| = eps."""
    if r <= 0 or eps < 0:
        raise ValueError(f"symdiff_area needs r > 0 and eps >= 0, got r={r}, eps={eps}")
    if eps > 2.0 * r:
        return TWO_PI * r * r
    ratio = eps / (2.0 * r)
    return (TWO_PI - 4.0 * math.acos(ratio)) * r * r + 2.0 * eps * r * math.sqrt(max(0.0, 1.0 - ratio * ratio))


def annulus_area(r_mid: float, halfwidth: float) -> float:
    if halfwidth < 0 or r_mid < 0:
        raise ValueError("annulus radii must be non-negative")
    if halfwidth > r_mid:
        raise ValueError(f"halfwidth {halfwidth} exceeds r_mid {r_mid}")
    return 4.0 * math.pi * r_mid * halfwidth


def smallarea_bound(eps: float, r: float) -> float:
    return math.pi * r * eps


def tube_bound(eps: float, r: float) -> float:
    return 4.0 * math.pi * eps * r / 3.0


def tube_area_budget(eps: float, r: float) -> float:
    return smallarea_bound(eps, r) + tube_bound(eps, r)


def mc_area(
    membership: Callable[[np.ndarray], np.ndarray],
    window: Tuple[float, float, float, float],
    samples: int,
    seed: int,
    chunk: int = 1_000_000,
) -> Tuple[float, float]:
    """Hit-or-miss area estimate of ``membership`` inside ``window`` = (x0, y0, x1, y1).

    Returns (estimate, standard error).
    """
    if samples < 1000:
        raise ValueError(f"mc_area needs at least 1000 samples, got {samples}")
    x0, y0, x1, y1 = window
    w_area = (x1 - x0) * (y1 - y0)
    rng = stream(seed, "mc-area")
    hits = 0
    remaining = samples
    while remaining > 0:
        m = min(chunk, remaining)
        pts = np.column_stack([rng.uniform(x0, x1, m), rng.uniform(y0, y1, m)])
        hits += int(np.count_nonzero(membership(pts)))
        remaining -= m
    p_hat = hits / samples
    return w_area * p_hat, w_area * math.sqrt(p_hat * (1.0 - p_hat) / samples)


def crowns_intersect(L: float, a1: float, b1: float, a2: float, b2: float) -> bool:
    """Whether annuli [a1,b1] and [a2,b2] around centres at distance L meet."""
    return b1 + b2 >= L and a1 <= b2 + L and a2 <= b1 + L


def crown_pair_strip(
    B: Point, D: Point, rho_B: float, rho_D: float, s: float, widths: Optional[Tuple[float, float]] = None
) -> Strip:
    """Strip perpendicular to BD containing D(B, rho_B, rho_B+w_B) ∩ D(D, rho_D, rho_D+w_D).

    Both widths default to s/6. Planar; B and D must be given in one unwrapped frame.
    """
    w_B, w_D = widths if widths is not None else (s / 6.0, s / 6.0)
    bx, by = D.x - B.x, D.y - B.y
    L = math.hypot(bx, by)
    if L <= 0:
        raise ValueError("crown centres coincide")
    if not crowns_intersect(L, rho_B, rho_B + w_B, rho_D, rho_D + w_D):
        raise EmptyIntersectionError(
            f"crowns around B and D are disjoint (|BD|={L:.6g}, rho_B={rho_B:.6g}, rho_D={rho_D:.6g})"
        )
    ux, uy = bx / L, by / L
    # t is the projection of a point of the intersection onto BD, measured from B
    lo = max(
        (L * L + rho_B * rho_B - (rho_D + w_D) ** 2) / (2.0 * L),
        L - rho_D - w_D,
        -(rho_B + w_B),
    )
    hi = min(
        (L * L + (rho_B + w_B) ** 2 - rho_D * rho_D) / (2.0 * L),
        rho_B + w_B,
        L + rho_D + w_D,
    )
    hi = max(hi, lo)
    mid = 0.5 * (lo + hi)
    anchor = Point(B.x + mid * ux, B.y + mid * uy)
    return Strip(anchor=anchor, direction=(-uy, ux), width=hi - lo)


def strip_crossing(first: Strip, second: Strip) -> Point:
    """Intersection point of the axes of two non-parallel strips."""
    ux, uy = first.direction
    vx, vy = second.direction
    det = ux * (-vy) - uy * (-vx)
    if abs(det) < ANGLE_TOL:
        raise ValueError("strip axes are parallel")
    dx = second.anchor.x - first.anchor.x
    dy = second.anchor.y - first.anchor.y
    t = (dx * (-vy) - dy * (-vx)) / det
    return Point(first.anchor.x + t * ux, first.anchor.y + t * uy)


def _subtract(pieces: List[Tuple[float, float]], cut: Tuple[float, float]) -> List[Tuple[float, float]]:
    lo, hi = cut
    out = []
    for a, b in pieces:
        if hi <= a or lo >= b:
            out.append((a, b))
            continue
        if lo > a:
            out.append((a, lo))
        if hi < b:
            out.append((hi, b))
    return out


def _dedupe_centers(centers: np.ndarray) -> np.ndarray:
    if len(centers) == 0:
        return centers
    keep = [0]
    for i in range(1, len(centers)):
        if np.min(np.hypot(*(centers[keep] - centers[i]).T)) > LENGTH_TOL:
            keep.append(i)
    return centers[keep]


def boundary_arcs(centers: Sequence[Point], r: float, clip: Ball) -> ArcSet:
    """Arcs of the circles C(O_i, r) inside ``clip`` and outside every other ball B(O_j, r)."""
    pts = np.array([[c.x, c.y] for c in centers], dtype=float).reshape(-1, 2)
    pts = _dedupe_centers(pts)
    cx, cy, rho = clip.center.x, clip.center.y, clip.radius
    arcs: List[Arc] = []
    for i, (ox, oy) in enumerate(pts):
        d = math.hypot(cx - ox, cy - oy)
        if d >= r + rho or d + rho <= r or d <= LENGTH_TOL:
            continue
        cos_alpha = (r * r + d * d - rho * rho) / (2.0 * r * d)
        alpha = math.acos(min(1.0, max(-1.0, cos_alpha)))
        if alpha < ANGLE_TOL:
            raise DegenerateTangencyError(f"circle {i} is tangent to the clip ball")
        base = math.atan2(cy - oy, cx - ox) - alpha
        pieces = [(0.0, 2.0 * alpha)]
        for j, (qx, qy) in enumerate(pts):
            if j == i or not pieces:
                continue
            dij = math.hypot(qx - ox, qy - oy)
            if dij >= 2.0 * r:
                continue
            beta = math.acos(dij / (2.0 * r))
            if beta < ANGLE_TOL:
                raise DegenerateTangencyError(f"circles {i} and {j} are tangent")
            start = (math.atan2(qy - oy, qx - ox) - beta - base) % TWO_PI
            for shift in (0.0, -TWO_PI):
                pieces = _subtract(pieces, (start + shift, start + shift + 2.0 * beta))
        for a, b in pieces:
            if b - a < ANGLE_TOL:
                raise DegenerateTangencyError(f"arc of circle {i} shrinks below angular tolerance")
            arcs.append(Arc(Point(ox, oy), r, base + a, base + b))
    return ArcSet(tuple(arcs))


def _outside_all(points: np.ndarray, centers: np.ndarray, r: float) -> np.ndarray:
    out = np.ones(len(points), dtype=bool)
    for ox, oy in centers:
        out &= np.hypot(points[:, 0] - ox, points[:, 1] - oy) > r
    return out


def clip_arcs(centers: Sequence[Point], r: float, clip: Ball) -> ArcSet:
    """Parts of the clip circle lying outside every ball B(O_i, r)."""
    pts = _dedupe_centers(np.array([[c.x, c.y] for c in centers], dtype=float).reshape(-1, 2))
    cx, cy, rho = clip.center.x, clip.center.y, clip.radius
    pieces = [(0.0, TWO_PI)]
    for ox, oy in pts:
        d = math.hypot(ox - cx, oy - cy)
        if d + rho <= r:
            return ArcSet(())
        if d >= r + rho:
            continue
        cos_beta = (rho * rho + d * d - r * r) / (2.0 * rho * d)
        beta = math.acos(min(1.0, max(-1.0, cos_beta)))
        start = (math.atan2(oy - cy, ox - cx) - beta) % TWO_PI
        for shift in (0.0, -TWO_PI):
            pieces = _subtract(pieces, (start + shift, start + shift + 2.0 * beta))
    return ArcSet(tuple(Arc(clip.center, rho, a, b) for a, b in pieces if b - a > ANGLE_TOL))


@dataclass(frozen=True)
class BoundaryComponent:
    label: int
    length: float
    pixel_area: float


@dataclass
class RegionRaster:
    """Rasterised R = clip minus the union of balls, with connected components labelled."""

    labels: np.ndarray
    nearest_labels: np.ndarray
    origin: Tuple[float, float]
    pixel: float
    centers: np.ndarray
    r: float
    clip: Ball

    def _lookup(self, table: np.ndarray, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        ix = np.floor((points[:, 0] - self.origin[0]) / self.pixel).astype(int)
        iy = np.floor((points[:, 1] - self.origin[1]) / self.pixel).astype(int)
        n = table.shape[0]
        ok = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n)
        out = np.zeros(len(points), dtype=int)
        out[ok] = table[iy[ok], ix[ok]]
        return out

    def label_at(self, points: np.ndarray) -> np.ndarray:
        return self._lookup(self.labels, points)

    def nearest_label_at(self, points: np.ndarray) -> np.ndarray:
        return self._lookup(self.nearest_labels, points)

    def in_region(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return self.clip.contains(points) & _outside_all(points, self.centers, self.r)

    def component_membership(self, label: int) -> Callable[[np.ndarray], np.ndarray]:
        return lambda pts: self.in_region(pts) & (self.label_at(pts) == label)


def boundary_components(
    centers: Sequence[Point], r: float, clip: Ball, resolution: int = 512
) -> Tuple[RegionRaster, List[BoundaryComponent]]:
    """Connected components of clip \\ ∪B(O_i, r) with the length of each one's boundary."""
    pts = _dedupe_centers(np.array([[c.x, c.y] for c in centers], dtype=float).reshape(-1, 2))
    rho = clip.radius
    origin = (clip.center.x - rho, clip.center.y - rho)
    pixel = 2.0 * rho / resolution
    grid = (np.arange(resolution) + 0.5) * pixel
    gx, gy = np.meshgrid(origin[0] + grid, origin[1] + grid)
    flat = np.column_stack([gx.ravel(), gy.ravel()])
    mask = (clip.contains(flat) & _outside_all(flat, pts, r)).reshape(resolution, resolution)
    labels, count = ndimage.label(mask)
    if count:
        _, (iy, ix) = ndimage.distance_transform_edt(labels == 0, return_indices=True)
        nearest = labels[iy, ix]
    else:
        nearest = labels.copy()
    raster = RegionRaster(
        labels=labels, nearest_labels=nearest, origin=origin, pixel=pixel, centers=pts, r=r, clip=clip
    )

    lengths = np.zeros(count + 1)
    inner = boundary_arcs([Point.of(p) for p in pts], r, clip)
    rim = clip_arcs([Point.of(p) for p in pts], r, clip)
    for arcs, outward in ((inner.arcs, 1.0), (rim.arcs, -1.0)):
        for arc in arcs:
            label = int(raster.nearest_label_at(arc.point_at(0.5, outward * pixel))[0])
            if label:
                lengths[label] += arc.length
            else:
                logger.debug(f"arc of length {arc.length:.3g} left unassigned at pixel {pixel:.3g}")
    sizes = np.bincount(labels.ravel(), minlength=count + 1)
    comps = [
        BoundaryComponent(label=k, length=float(lengths[k]), pixel_area=float(sizes[k] * pixel * pixel))
        for k in range(1, count + 1)
    ]
    return raster, comps
