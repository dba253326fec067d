"""Depot-to-house delivery paths and their cell crossings.

Paths start as straight lines. :func:`ensure_cell_coverage` then bends the
nearest path through every cell no path crosses, by inserting an interior
point of that cell as an extra waypoint.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from typing import Sequence

from .geometry import (
    CellGrid,
    GeometryError,
    Point2,
    dist,
    interior_anchor,
    point_segment_distance,
    polyline_segments,
    segment_cell_pieces,
)


class DegenerateHouse(ValueError):
    pass


class Unreachable(RuntimeError):
    pass


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class Crossing:
    cell: int
    s_in: float
    s_out: float

    @property
    def length(self) -> float:
        return self.s_out - self.s_in


@dataclass(frozen=True)
class DeliveryPath:
    house_index: int
    waypoints: tuple[Point2, ...]
    crossings: tuple[Crossing, ...] = ()

    @property
    def depot(self) -> Point2:
        return self.waypoints[0]

    @property
    def house(self) -> Point2:
        return self.waypoints[-1]

    @property
    def cumulative(self) -> tuple[float, ...]:
        s = [0.0]
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            s.append(s[-1] + dist(a, b))
        return tuple(s)

    @property
    def total_length(self) -> float:
        return self.cumulative[-1]

    def cell_length(self, cell: int) -> float:
        return sum(c.length for c in self.crossings if c.cell == cell)


@dataclass(frozen=True)
class PathSet:
    paths: tuple[DeliveryPath, ...]
    grid: CellGrid | None = None

    def __len__(self) -> int:
        return len(self.paths)

    def __getitem__(self, i: int) -> DeliveryPath:
        return self.paths[i]

    def cell_lengths(self) -> dict[int, float]:
        """Total crossing length per cell, summed over all paths."""
        out = {c.index: 0.0 for c in self.grid.cells} if self.grid else {}
        for p in self.paths:
            for c in p.crossings:
                out[c.cell] = out.get(c.cell, 0.0) + c.length
        return out

    def uncovered_cells(self) -> list[int]:
        return [l for l, v in self.cell_lengths().items() if not v > 0.0]


def compute_crossings(waypoints: Sequence[Point2], grid: CellGrid) -> tuple[Crossing, ...]:
    """Ordered (cell, s_in, s_out) intervals of a polyline through ``grid``."""
    found: list[Crossing] = []
    s0 = 0.0
    for seg in polyline_segments(waypoints):
        ln = seg.length
        for cell in grid.cells:
            for t0, t1 in segment_cell_pieces(seg, cell):
                found.append(Crossing(cell.index, s0 + t0 * ln, s0 + t1 * ln))
        s0 += ln
    found.sort(key=lambda c: (c.s_in, c.cell))
    merged: list[Crossing] = []
    for c in found:
        # a waypoint inside a cell splits one traversal into two pieces
        if merged and merged[-1].cell == c.cell and abs(merged[-1].s_out - c.s_in) <= 1e-9:
            merged[-1] = Crossing(c.cell, merged[-1].s_in, c.s_out)
        else:
            merged.append(c)
    return tuple(merged)


def straight_paths(depot: Point2, houses: Sequence[Point2], grid: CellGrid | None = None) -> PathSet:
    depot = Point2(*depot)
    paths = []
    for h, house in enumerate(houses, start=1):
        house = Point2(*house)
        if house == depot:
            raise DegenerateHouse(f"house {h} coincides with the depot")
        wps = (depot, house)
        paths.append(DeliveryPath(h, wps, compute_crossings(wps, grid) if grid else ()))
    return PathSet(tuple(paths), grid)


def _nearest_on_path(p: Point2, waypoints: Sequence[Point2]) -> tuple[float, int]:
    """Distance to the polyline and the index of the first segment attaining it."""
    best, best_i = math.inf, 0
    for i, (a, b) in enumerate(zip(waypoints, waypoints[1:])):
        d, _ = point_segment_distance(p, a, b)
        if d < best:
            best, best_i = d, i
    return best, best_i


def ensure_cell_coverage(paths: PathSet, grid: CellGrid) -> PathSet:
    """Reroute paths until every cell is crossed with positive length.

    Uncovered cells are handled in ascending index order. Each one pulls the
    closest path (ties to the lowest house index) through an interior anchor
    point, inserted between the two waypoints bracketing the nearest point.
    Anchors are never removed, so a cell fixed once stays covered and the loop
    ends after at most one detour per cell.
    """
    current = list(paths.paths)
    if paths.grid is not grid:
        current = [replace(p, crossings=compute_crossings(p.waypoints, grid)) for p in current]
    for _ in range(grid.cell_count + 1):
        # recomputed each pass: incremental updates leave float residue on emptied cells
        totals = PathSet(tuple(current), grid).cell_lengths()
        uncovered = [l for l, v in totals.items() if not v > 0.0]
        if not uncovered:
            return PathSet(tuple(current), grid)
        cell = grid.cell(uncovered[0])
        try:
            anchor = interior_anchor(cell)
        except GeometryError as exc:
            raise Unreachable(str(exc)) from exc
        if not grid.region.contains(anchor):
            raise Unreachable(f"anchor of cell {cell.index} lies outside the region")
        scored = [(_nearest_on_path(anchor, p.waypoints), k) for k, p in enumerate(current)]
        (_, seg_i), k = min(scored, key=lambda item: (item[0][0], current[item[1]].house_index))
        old = current[k]
        wps = old.waypoints[: seg_i + 1] + (anchor,) + old.waypoints[seg_i + 1 :]
        current[k] = DeliveryPath(old.house_index, wps, compute_crossings(wps, grid))
    raise Unreachable("coverage completion did not converge")


def point_at_arclength(path: DeliveryPath, s: float, cumulative: Sequence[float] | None = None) -> Point2:
    cum = cumulative if cumulative is not None else path.cumulative
    total = cum[-1]
    if not (0.0 <= s <= total):
        if -1e-9 <= s < 0.0:
            s = 0.0
        elif total < s <= total + 1e-9:
            s = total
        else:
            raise OutOfRange(f"arc length {s} outside [0, {total}]")
    i = min(max(bisect.bisect_right(cum, s) - 1, 0), len(cum) - 2)
    a, b = path.waypoints[i], path.waypoints[i + 1]
    seg = cum[i + 1] - cum[i]
    f = (s - cum[i]) / seg if seg > 0 else 0.0
    if s == total:
        return path.waypoints[-1]
    return Point2(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))


def coverage_complete(paths: PathSet) -> bool:
    return not paths.uncovered_cells()
