"""Planar primitives, neighborhood shapes and cell grids.

Everything here is immutable once built. The central routine is
:func:`segment_cell_pieces`, which cuts a segment at every place it can cross
a cell boundary and keeps the pieces whose midpoint lies strictly inside the
cell. Pieces running along a boundary are dropped, so tangential contact has
zero length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

SNAP = 1e-9  # absolute snap tolerance in meters
TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    pass


class EmptyGrid(GeometryError):
    pass


class Point2(NamedTuple):
    x: float
    y: float


def _finite(p: Point2) -> bool:
    return math.isfinite(p[0]) and math.isfinite(p[1])


def dist(a: Point2, b: Point2) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


@dataclass(frozen=True)
class Segment:
    a: Point2
    b: Point2

    def __post_init__(self):
        a, b = Point2(*self.a), Point2(*self.b)
        if not (_finite(a) and _finite(b)):
            raise GeometryError(f"non-finite segment endpoint: {a}, {b}")
        if a == b:
            raise GeometryError(f"zero-length segment at {a}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return dist(self.a, self.b)

    def at(self, t: float) -> Point2:
        return Point2(self.a.x + t * (self.b.x - self.a.x), self.a.y + t * (self.b.y - self.a.y))

    def reversed(self) -> "Segment":
        return Segment(self.b, self.a)


def point_segment_distance(p: Point2, a: Point2, b: Point2) -> tuple[float, float]:
    """Distance from ``p`` to segment ``ab`` and the parameter of the nearest point."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    den = dx * dx + dy * dy
    if den == 0.0:
        return dist(p, a), 0.0
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / den
    t = min(1.0, max(0.0, t))
    return math.hypot(a[0] + t * dx - p[0], a[1] + t * dy - p[1]), t


def _line_params(seg: Segment, p: Point2, q: Point2) -> list[float]:
    """Parameters where ``seg`` crosses the infinite line through ``p`` and ``q``."""
    ax, ay = seg.a
    dx, dy = seg.b.x - ax, seg.b.y - ay
    ex, ey = q[0] - p[0], q[1] - p[1]
    den = dx * ey - dy * ex
    if den == 0.0:
        return []
    t = ((p[0] - ax) * ey - (p[1] - ay) * ex) / den
    return [t] if 0.0 < t < 1.0 else []


def _circle_params(seg: Segment, radius: float) -> list[float]:
    ax, ay = seg.a
    dx, dy = seg.b.x - ax, seg.b.y - ay
    a = dx * dx + dy * dy
    b = 2.0 * (ax * dx + ay * dy)
    c = ax * ax + ay * ay - radius * radius
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return []
    sq = math.sqrt(disc)
    # numerically stable roots
    qq = -0.5 * (b + math.copysign(sq, b))
    roots = [qq / a] + ([c / qq] if qq != 0.0 else [])
    return [t for t in roots if 0.0 < t < 1.0]


# ---------------------------------------------------------------- regions


@dataclass(frozen=True)
class AnnularSector:
    """Region ``gamma <= r <= rho``, ``0 <= theta <= theta_max`` around the origin."""

    gamma: float
    rho: float
    theta_max: float

    def __post_init__(self):
        if not (0.0 < self.gamma < self.rho) or not math.isfinite(self.rho):
            raise GeometryError(f"need 0 < gamma < rho, got gamma={self.gamma}, rho={self.rho}")
        if not (0.0 < self.theta_max <= TWO_PI + 1e-12):
            raise GeometryError(f"need 0 < theta_max <= 2*pi, got {self.theta_max}")

    @property
    def area(self) -> float:
        return 0.5 * self.theta_max * (self.rho**2 - self.gamma**2)

    @property
    def depot(self) -> Point2:
        return Point2(0.0, 0.0)

    def polar_point(self, r: float, theta: float) -> Point2:
        return Point2(r * math.cos(theta), r * math.sin(theta))

    def contains(self, p: Point2, tol: float = SNAP) -> bool:
        r = math.hypot(p[0], p[1])
        if r < self.gamma - tol or r > self.rho + tol:
            return False
        if self.theta_max >= TWO_PI:
            return True
        return _in_wedge(p, 0.0, self.theta_max, tol)


def _polygon_area(pts: Sequence[Point2]) -> float:
    s = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _polygon_centroid(pts: Sequence[Point2]) -> Point2:
    a = _polygon_area(pts)
    if abs(a) < 1e-300:
        xs, ys = zip(*pts)
        return Point2(sum(xs) / len(xs), sum(ys) / len(ys))
    cx = cy = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        w = x0 * y1 - x1 * y0
        cx += (x0 + x1) * w
        cy += (y0 + y1) * w
    return Point2(cx / (6.0 * a), cy / (6.0 * a))


def _segments_cross(p1, p2, p3, p4) -> bool:
    """True when closed segments p1p2 and p3p4 share any point."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    def on(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2, o3, o4 = orient(p1, p2, p3), orient(p1, p2, p4), orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and on(p1, p2, p3))
        or (o2 == 0 and on(p1, p2, p4))
        or (o3 == 0 and on(p3, p4, p1))
        or (o4 == 0 and on(p3, p4, p2))
    )


@dataclass(frozen=True)
class PolygonRegion:
    """Simple polygon neighborhood with a depot (post office) inside it.

    Vertices are stored counter-clockwise; clockwise input is reversed.
    """

    vertices: tuple[Point2, ...]
    depot: Point2

    def __post_init__(self):
        verts = [Point2(float(x), float(y)) for x, y in self.vertices]
        if len(verts) >= 2 and verts[0] == verts[-1]:
            verts.pop()
        if len(verts) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if not all(_finite(v) for v in verts):
            raise GeometryError("polygon has non-finite vertices")
        n = len(verts)
        for i in range(n):
            if verts[i] == verts[(i + 1) % n]:
                raise GeometryError(f"repeated vertex {verts[i]}")
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or j == (i + 1) % n:
                    continue
                if _segments_cross(a, b, verts[j], verts[(j + 1) % n]):
                    raise GeometryError(f"polygon is not simple: edges {i} and {j} intersect")
        area = _polygon_area(verts)
        if area == 0.0:
            raise GeometryError("polygon has zero area")
        if area < 0:
            verts.reverse()
        object.__setattr__(self, "vertices", tuple(verts))
        depot = Point2(float(self.depot[0]), float(self.depot[1]))
        object.__setattr__(self, "depot", depot)
        if not self.contains(depot):
            raise GeometryError(f"depot {depot} lies outside the polygon")

    @property
    def edges(self) -> Iterable[tuple[Point2, Point2]]:
        v = self.vertices
        return ((v[i], v[(i + 1) % len(v)]) for i in range(len(v)))

    @property
    def area(self) -> float:
        return _polygon_area(self.vertices)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def boundary_distance(self, p: Point2) -> float:
        return min(point_segment_distance(p, a, b)[0] for a, b in self.edges)

    def _inside_raw(self, p: Point2) -> bool:
        x, y = p
        inside = False
        for (x0, y0), (x1, y1) in self.edges:
            if (y0 > y) != (y1 > y):
                xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
                if xc > x:
                    inside = not inside
        return inside

    def contains(self, p: Point2, tol: float = SNAP) -> bool:
        """Closed containment (boundary included, within ``tol``)."""
        return self._inside_raw(p) or self.boundary_distance(p) <= tol

    def interior(self, p: Point2, tol: float = SNAP) -> bool:
        return self._inside_raw(p) and self.boundary_distance(p) > tol


Region = Union[AnnularSector, PolygonRegion]


# ------------------------------------------------------------------ cells


def _in_wedge(p: Point2, theta0: float, span: float, tol: float) -> bool:
    """Closed angular containment, with ``tol`` slack around the bounding rays."""
    if math.hypot(p[0], p[1]) <= tol:
        return True
    if (math.atan2(p[1], p[0]) - theta0) % TWO_PI <= span:
        return True
    return min(_ray_distance(p, theta0), _ray_distance(p, theta0 + span)) <= tol


def clip_polygon_to_rect(pts: Sequence[Point2], xmin, ymin, xmax, ymax) -> list[Point2]:
    """Sutherland-Hodgman clip against an axis-aligned rectangle.

    Output can contain degenerate bridging edges for non-convex input; its
    shoelace area is still exact.
    """
    out = list(pts)
    planes = (
        (lambda p: p[0] >= xmin, lambda a, b: Point2(xmin, a[1] + (xmin - a[0]) * (b[1] - a[1]) / (b[0] - a[0]))),
        (lambda p: p[0] <= xmax, lambda a, b: Point2(xmax, a[1] + (xmax - a[0]) * (b[1] - a[1]) / (b[0] - a[0]))),
        (lambda p: p[1] >= ymin, lambda a, b: Point2(a[0] + (ymin - a[1]) * (b[0] - a[0]) / (b[1] - a[1]), ymin)),
        (lambda p: p[1] <= ymax, lambda a, b: Point2(a[0] + (ymax - a[1]) * (b[0] - a[0]) / (b[1] - a[1]), ymax)),
    )
    for inside, cut in planes:
        if not out:
            break
        src, out = out, []
        prev = src[-1]
        for cur in src:
            if inside(cur):
                if not inside(prev):
                    out.append(cut(prev, cur))
                out.append(cur)
            elif inside(prev):
                out.append(cut(prev, cur))
            prev = cur
    return out


@dataclass(frozen=True)
class RectCell:
    """Axis-aligned tile, optionally intersected with a polygon region."""

    index: int
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    clip: PolygonRegion | None = None
    area: float = field(default=0.0, compare=False)
    centroid: Point2 = field(default=Point2(0.0, 0.0), compare=False)

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise GeometryError("empty rectangle")
        if self.clip is None:
            area = (self.xmax - self.xmin) * (self.ymax - self.ymin)
            c = Point2(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
        else:
            piece = clip_polygon_to_rect(self.clip.vertices, self.xmin, self.ymin, self.xmax, self.ymax)
            area = abs(_polygon_area(piece)) if len(piece) >= 3 else 0.0
            c = _polygon_centroid(piece) if len(piece) >= 3 else Point2(self.xmin, self.ymin)
        object.__setattr__(self, "area", area)
        object.__setattr__(self, "centroid", c)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return self.xmin, self.ymin, self.xmax, self.ymax

    def contains(self, p: Point2, tol: float = SNAP) -> bool:
        x, y = p
        if not (self.xmin - tol <= x <= self.xmax + tol and self.ymin - tol <= y <= self.ymax + tol):
            return False
        return self.clip is None or self.clip.contains(p, tol)

    def interior(self, p: Point2, tol: float = SNAP) -> bool:
        x, y = p
        if not (self.xmin + tol < x < self.xmax - tol and self.ymin + tol < y < self.ymax - tol):
            return False
        return self.clip is None or self.clip.interior(p, tol)

    def cut_params(self, seg: Segment) -> list[float]:
        ts: list[float] = []
        ax, ay = seg.a
        dx, dy = seg.b.x - ax, seg.b.y - ay
        for x in (self.xmin, self.xmax):
            if dx != 0.0:
                t = (x - ax) / dx
                if 0.0 < t < 1.0:
                    ts.append(t)
        for y in (self.ymin, self.ymax):
            if dy != 0.0:
                t = (y - ay) / dy
                if 0.0 < t < 1.0:
                    ts.append(t)
        if self.clip is not None:
            for a, b in self.clip.edges:
                ts.extend(_line_params(seg, a, b))
        return ts


@dataclass(frozen=True)
class WedgeCell:
    """Annular wedge ``gamma <= r <= rho``, ``theta0 <= theta <= theta0 + span``."""

    index: int
    gamma: float
    rho: float
    theta0: float
    span: float
    area: float = field(default=0.0, compare=False)
    centroid: Point2 = field(default=Point2(0.0, 0.0), compare=False)

    def __post_init__(self):
        if not (0.0 <= self.gamma < self.rho) or not (0.0 < self.span <= TWO_PI + 1e-12):
            raise GeometryError("bad wedge")
        object.__setattr__(self, "area", 0.5 * self.span * (self.rho**2 - self.gamma**2))
        # centroid of an annular wedge along its bisector
        r_c = (2.0 / 3.0) * (self.rho**3 - self.gamma**3) / (self.rho**2 - self.gamma**2)
        half = 0.5 * self.span
        r_c *= math.sin(half) / half if half > 0 else 1.0
        mid = self.theta0 + half
        object.__setattr__(self, "centroid", Point2(r_c * math.cos(mid), r_c * math.sin(mid)))

    @property
    def full_turn(self) -> bool:
        return self.span >= TWO_PI

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return -self.rho, -self.rho, self.rho, self.rho

    def contains(self, p: Point2, tol: float = SNAP) -> bool:
        r = math.hypot(p[0], p[1])
        if r < self.gamma - tol or r > self.rho + tol:
            return False
        return self.full_turn or _in_wedge(p, self.theta0, self.span, tol)

    def interior(self, p: Point2, tol: float = SNAP) -> bool:
        r = math.hypot(p[0], p[1])
        if not (self.gamma + tol < r < self.rho - tol):
            return False
        if self.full_turn:
            return True
        off = (math.atan2(p[1], p[0]) - self.theta0) % TWO_PI
        if not (0.0 < off < self.span):
            return False
        return min(_ray_distance(p, self.theta0), _ray_distance(p, self.theta0 + self.span)) > tol

    def cut_params(self, seg: Segment) -> list[float]:
        ts = _circle_params(seg, self.rho)
        if self.gamma > 0.0:
            ts += _circle_params(seg, self.gamma)
        if not self.full_turn:
            o = Point2(0.0, 0.0)
            for th in (self.theta0, self.theta0 + self.span):
                ts += _line_params(seg, o, Point2(math.cos(th), math.sin(th)))
        return ts


def _ray_distance(p: Point2, theta: float) -> float:
    ux, uy = math.cos(theta), math.sin(theta)
    if p[0] * ux + p[1] * uy >= 0.0:
        return abs(ux * p[1] - uy * p[0])
    return math.hypot(p[0], p[1])


Cell = Union[RectCell, WedgeCell]


@dataclass(frozen=True)
class CellGrid:
    cells: tuple[Cell, ...]
    region: Region
    cell_size: float | None = None
    sector_cells: int | None = None

    def __post_init__(self):
        if not self.cells:
            raise EmptyGrid("grid has no cells")
        object.__setattr__(self, "cells", tuple(self.cells))

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def cell(self, index: int) -> Cell:
        return self.cells[index - 1]

    @property
    def areas(self) -> np.ndarray:
        return np.array([c.area for c in self.cells])

    def shape(self) -> tuple[int, int] | None:
        """(rows, cols) of the underlying tiling for rectangular grids."""
        if self.cell_size is None:
            return None
        xmin, ymin, xmax, ymax = self.region.bbox
        return (
            max(1, math.ceil((ymax - ymin) / self.cell_size - 1e-12)),
            max(1, math.ceil((xmax - xmin) / self.cell_size - 1e-12)),
        )

    def tile_position(self, cell: RectCell) -> tuple[int, int]:
        xmin, ymin, _, _ = self.region.bbox
        return (
            int(round((cell.ymin - ymin) / self.cell_size)),
            int(round((cell.xmin - xmin) / self.cell_size)),
        )


# ------------------------------------------------------------- operations


def segment_cell_pieces(seg: Segment, cell: Cell) -> list[tuple[float, float]]:
    """Parameter intervals ``(t0, t1)`` of ``seg`` lying inside ``cell``."""
    x0, y0, x1, y1 = cell.bbox
    if (
        max(seg.a.x, seg.b.x) < x0 - SNAP
        or min(seg.a.x, seg.b.x) > x1 + SNAP
        or max(seg.a.y, seg.b.y) < y0 - SNAP
        or min(seg.a.y, seg.b.y) > y1 + SNAP
    ):
        return []
    ts = sorted(set([0.0, 1.0] + cell.cut_params(seg)))
    length = seg.length
    pieces: list[tuple[float, float]] = []
    for t0, t1 in zip(ts, ts[1:]):
        if (t1 - t0) * length <= SNAP:
            continue
        if cell.interior(seg.at(0.5 * (t0 + t1))):
            if pieces and pieces[-1][1] == t0:
                pieces[-1] = (pieces[-1][0], t1)
            else:
                pieces.append((t0, t1))
    return pieces


def segment_cell_length(seg: Segment, cell: Cell) -> float:
    """Length of ``seg`` inside ``cell`` (zero for disjoint or tangential contact)."""
    return sum(t1 - t0 for t0, t1 in segment_cell_pieces(seg, cell)) * seg.length


def polyline_segments(points: Sequence[Point2]) -> list[Segment]:
    return [Segment(a, b) for a, b in zip(points, points[1:])]


def polyline_cell_length(path: Sequence[Segment], cell: Cell) -> float:
    for s0, s1 in zip(path, path[1:]):
        if s0.b != s1.a:
            raise GeometryError("path segments are not chained")
    return sum(segment_cell_length(s, cell) for s in path)


def build_rect_grid(region: PolygonRegion, cell_size: float) -> CellGrid:
    xmin, ymin, xmax, ymax = region.bbox
    if not (cell_size > 0) or cell_size >= math.hypot(xmax - xmin, ymax - ymin):
        raise GeometryError(f"cell_size must be positive and below the bounding-box diagonal, got {cell_size}")
    nx = max(1, math.ceil((xmax - xmin) / cell_size - 1e-12))
    ny = max(1, math.ceil((ymax - ymin) / cell_size - 1e-12))
    min_area = 1e-9 * cell_size * cell_size
    cells = []
    for j in range(ny):
        for i in range(nx):
            x0, y0 = xmin + i * cell_size, ymin + j * cell_size
            c = RectCell(len(cells) + 1, x0, y0, x0 + cell_size, y0 + cell_size, clip=region)
            if c.area > min_area:
                cells.append(c)
    if not cells:
        raise EmptyGrid("no cell intersects the region")
    return CellGrid(tuple(cells), region, cell_size=cell_size)


def build_equal_sector_cells(sector: AnnularSector, n: int) -> CellGrid:
    if n < 1:
        raise GeometryError("need at least one cell")
    span = sector.theta_max / n
    cells = tuple(WedgeCell(i + 1, sector.gamma, sector.rho, i * span, span) for i in range(n))
    return CellGrid(cells, sector, sector_cells=n)


def locate_cell(grid: CellGrid, p: Point2) -> int | None:
    """Index of the cell containing ``p``; boundary points go to the lowest index."""
    if not grid.region.contains(p):
        return None
    if grid.sector_cells is not None and isinstance(grid.region, AnnularSector):
        # direct angular lookup, then walk back over a shared ray
        off = math.atan2(p[1], p[0]) % TWO_PI
        n = grid.sector_cells
        k = min(n - 1, int(off / (grid.region.theta_max / n))) if off <= grid.region.theta_max else n - 1
        candidates = sorted({max(0, k - 1), k, min(n - 1, k + 1), 0, n - 1})
        for c in candidates:
            if grid.cells[c].contains(p):
                return c + 1
        return None
    for cell in grid.cells:
        if cell.contains(p):
            return cell.index
    return None


def interior_anchor(cell: Cell) -> Point2:
    """A point well inside ``cell``: the centroid when it is interior.

    Clipped cells can be non-convex or split, so fall back to the middle of
    the longest horizontal chord through the cell.
    """
    margin = 1e3 * SNAP
    if cell.interior(cell.centroid, margin):
        return cell.centroid
    x0, y0, x1, y1 = cell.bbox
    best, best_len = None, 0.0
    fractions = [0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875] + [k / 64 for k in range(1, 64)]
    for f in fractions:
        y = y0 + f * (y1 - y0)
        chord = Segment(Point2(x0 - 1.0, y), Point2(x1 + 1.0, y))
        for t0, t1 in segment_cell_pieces(chord, cell):
            ln = (t1 - t0) * chord.length
            if ln > best_len:
                best, best_len = chord.at(0.5 * (t0 + t1)), ln
        if best is not None and best_len > 0.05 * (x1 - x0):
            break
    if best is None or not cell.interior(best, margin):
        raise GeometryError(f"cannot find an interior point of cell {cell.index}")
    return best
