import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dronecover.geometry import (
    AnnularSector,
    EmptyGrid,
    GeometryError,
    Point2,
    PolygonRegion,
    RectCell,
    Segment,
    build_equal_sector_cells,
    build_rect_grid,
    locate_cell,
    polyline_cell_length,
    polyline_segments,
    segment_cell_length,
)

from oracles import mc_area, mc_segment_length

UNIT = RectCell(1, 0.0, 0.0, 1.0, 1.0)
REF_SECTOR = AnnularSector(100.0, 5000.0, 2 * math.pi * 5 / 8)


def seg(ax, ay, bx, by):
    return Segment(Point2(ax, ay), Point2(bx, by))


class TestSegmentCellLength:
    def test_horizontal_chord(self):
        assert segment_cell_length(seg(-1, 0.5, 2, 0.5), UNIT) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        assert segment_cell_length(seg(0, 0, 1, 1), UNIT) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_disjoint(self):
        assert segment_cell_length(seg(-1, -1, -0.5, -0.5), UNIT) == 0.0

    def test_edge_grazing_counts_zero(self):
        # runs along the boundary: no interior length
        assert segment_cell_length(seg(-1, 0, 2, 0), UNIT) == 0.0

    def test_corner_touch_is_zero(self):
        assert segment_cell_length(seg(-1, 1, 1, -1), UNIT) == pytest.approx(0.0, abs=1e-9)

    def test_clipped_cell_uses_polygon(self):
        tri = PolygonRegion(((0, 0), (2, 0), (0, 2)), (0.1, 0.1))
        cell = RectCell(1, 0, 0, 2, 2, clip=tri)
        # y = 1.5 crosses the triangle for x in [0, 0.5]
        assert segment_cell_length(seg(-1, 1.5, 3, 1.5), cell) == pytest.approx(0.5, abs=1e-12)

    def test_wedge_radial(self):
        g = build_equal_sector_cells(REF_SECTOR, 10)
        w = g.cell(1)
        th = 0.5 * w.span
        s = Segment(Point2(0, 0), Point2(6000 * math.cos(th), 6000 * math.sin(th)))
        assert segment_cell_length(s, w) == pytest.approx(4900.0, rel=1e-12)

    def test_segment_rejects_zero_length(self):
        with pytest.raises(GeometryError):
            seg(1, 1, 1, 1)

    def test_monte_carlo_oracle_agrees(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = rng.uniform(-0.5, 1.5, 2)
            b = rng.uniform(-0.5, 1.5, 2)
            s = seg(*a, *b)
            exact = segment_cell_length(s, UNIT)
            est = mc_segment_length(s, UNIT, 200_000)
            assert abs(est - exact) <= 2 * s.length / 200_000 + 1e-12


class TestPolyline:
    def test_inside(self):
        path = polyline_segments([Point2(0.1, 0.1), Point2(0.9, 0.1), Point2(0.9, 0.9)])
        assert polyline_cell_length(path, UNIT) == pytest.approx(1.6)

    def test_outside(self):
        path = polyline_segments([Point2(2, 2), Point2(3, 2), Point2(3, 3)])
        assert polyline_cell_length(path, UNIT) == 0.0

    def test_l_shape_half_in(self):
        pts = [Point2(0.5, 0.5), Point2(1.5, 0.5), Point2(1.5, 1.5)]
        path = polyline_segments(pts)
        assert polyline_cell_length(path, UNIT) == pytest.approx(0.5)
        mc = sum(mc_segment_length(s, UNIT, 100_000) for s in path)
        assert mc == pytest.approx(0.5, abs=1e-4)

    def test_unchained_rejected(self):
        with pytest.raises(GeometryError):
            polyline_cell_length([seg(0, 0, 1, 0), seg(2, 0, 3, 0)], UNIT)


class TestRectGrid:
    SQUARE = PolygonRegion(((0, 0), (100, 0), (100, 100), (0, 100)), (50, 50))

    def test_four_cells(self):
        g = build_rect_grid(self.SQUARE, 50)
        assert g.cell_count == 4
        assert [c.index for c in g.cells] == [1, 2, 3, 4]
        # row-major from the bottom-left tile
        assert (g.cell(2).xmin, g.cell(2).ymin) == (50, 0)
        assert (g.cell(3).xmin, g.cell(3).ymin) == (0, 50)

    def test_one_cell(self):
        assert build_rect_grid(self.SQUARE, 100).cell_count == 1

    def test_l_shape_drops_outside_tile(self):
        ell = PolygonRegion(((0, 0), (100, 0), (100, 50), (50, 50), (50, 100), (0, 100)), (10, 10))
        g = build_rect_grid(ell, 50)
        assert g.cell_count == 3
        for c in g.cells:
            assert c.area == pytest.approx(mc_area(c, 200), rel=1e-3)
        assert sum(c.area for c in g.cells) == pytest.approx(ell.area)

    def test_clipped_areas_match_oracle(self):
        tri = PolygonRegion(((0, 0), (300, 0), (0, 200)), (10, 10))
        g = build_rect_grid(tri, 70)
        assert sum(c.area for c in g.cells) == pytest.approx(tri.area, rel=1e-12)
        for c in g.cells:
            assert c.area == pytest.approx(mc_area(c, 400), rel=2e-2, abs=1.0)

    def test_bad_cell_size(self):
        with pytest.raises(GeometryError):
            build_rect_grid(self.SQUARE, 0)
        with pytest.raises(GeometryError):
            build_rect_grid(self.SQUARE, 1e6)

    def test_empty_grid_is_geometry_error(self):
        assert issubclass(EmptyGrid, GeometryError)


class TestPolygonRegion:
    def test_clockwise_input_normalized(self):
        cw = PolygonRegion(((0, 0), (0, 1), (1, 1), (1, 0)), (0.5, 0.5))
        assert cw.area == pytest.approx(1.0)

    def test_self_intersecting_rejected(self):
        with pytest.raises(GeometryError):
            PolygonRegion(((0, 0), (1, 1), (1, 0), (0, 1)), (0.5, 0.25))

    def test_depot_outside_rejected(self):
        with pytest.raises(GeometryError):
            PolygonRegion(((0, 0), (1, 0), (1, 1), (0, 1)), (2, 2))


class TestSectorCells:
    def test_reference_sector_areas(self):
        g = build_equal_sector_cells(REF_SECTOR, 10)
        want = (5 / 8) * math.pi * (5000.0**2 - 100.0**2) / 10
        assert g.cell_count == 10
        for c in g.cells:
            assert c.area == pytest.approx(want, rel=1e-9)

    def test_single_cell_is_sector(self):
        g = build_equal_sector_cells(REF_SECTOR, 1)
        assert g.cell(1).area == pytest.approx(REF_SECTOR.area, rel=1e-12)

    def test_wedge_area_matches_sampling(self):
        g = build_equal_sector_cells(REF_SECTOR, 10)
        assert g.cell(4).area == pytest.approx(mc_area(g.cell(4), 1000), rel=1e-2)

    @given(st.integers(1, 64))
    def test_pairwise_equal(self, n):
        areas = build_equal_sector_cells(REF_SECTOR, n).areas
        assert np.max(np.abs(areas - areas[0])) <= 1e-9 * areas[0]


class TestLocateCell:
    GRID = build_rect_grid(PolygonRegion(((0, 0), (300, 0), (300, 100), (0, 100)), (10, 10)), 100)

    def test_center(self):
        assert locate_cell(self.GRID, self.GRID.cell(3).centroid) == 3

    def test_outside(self):
        assert locate_cell(self.GRID, Point2(-5, 5)) is None

    def test_shared_edge_lowest_index(self):
        assert locate_cell(self.GRID, Point2(200, 50)) == 2

    def test_sector_boundary_ray(self):
        g = build_equal_sector_cells(REF_SECTOR, 10)
        th = g.cell(3).theta0
        p = Point2(1000 * math.cos(th), 1000 * math.sin(th))
        assert locate_cell(g, p) == 2

    def test_sector_outside(self):
        g = build_equal_sector_cells(REF_SECTOR, 10)
        assert locate_cell(g, Point2(10, 10)) is None  # inside gamma
        assert locate_cell(g, Point2(0, -1000)) is None  # beyond theta_max


# ------------------------------------------------------------------ properties

coord = st.floats(-50, 150, allow_nan=False)


def _seg_or_skip(ax, ay, bx, by):
    if math.hypot(bx - ax, by - ay) < 1e-6:
        return None
    return seg(ax, ay, bx, by)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord)
def test_additivity_over_partition(ax, ay, bx, by):
    s = _seg_or_skip(ax, ay, bx, by)
    if s is None:
        return
    region = PolygonRegion(((0, 0), (100, 0), (100, 100), (0, 100)), (50, 50))
    g = build_rect_grid(region, 25)
    total = sum(segment_cell_length(s, c) for c in g.cells)
    whole = segment_cell_length(s, RectCell(0, 0, 0, 100, 100))
    assert total == pytest.approx(whole, rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord)
def test_reversal_symmetry(ax, ay, bx, by):
    s = _seg_or_skip(ax, ay, bx, by)
    if s is None:
        return
    cell = RectCell(1, 10, 20, 70, 90)
    assert segment_cell_length(s, cell) == pytest.approx(segment_cell_length(s.reversed(), cell), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord, st.floats(0.0, 0.49))
def test_shrinking_cell_never_grows(ax, ay, bx, by, f):
    s = _seg_or_skip(ax, ay, bx, by)
    if s is None:
        return
    big = RectCell(1, 0, 0, 100, 100)
    small = RectCell(1, 100 * f, 100 * f, 100 * (1 - f), 100 * (1 - f))
    assert segment_cell_length(s, small) <= segment_cell_length(s, big) + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 300), st.floats(0, 100))
def test_locate_is_total_and_consistent(x, y):
    g = TestLocateCell.GRID
    k = locate_cell(g, Point2(x, y))
    assert k is not None
    assert g.cell(k).contains(Point2(x, y))
