import numpy as np
import pytest

from centerout import (
    ContourSet,
    GridSpec,
    Sample,
    build_grid,
    contour,
    empirical_F,
    fit_smooth_Q,
    region_probability,
    sign_curves,
)
from centerout.contours import contours_to_csv, sign_curves_to_csv, to_json_document
from centerout.grid import InvalidInputError


@pytest.fixture(scope="module")
def fitted():
    rng = np.random.default_rng(0)
    s = Sample(points=rng.standard_normal((24, 2)))
    grid = build_grid(GridSpec(n=24, d=2, n_R=3, n_S=8, n_0=0))
    assignment, table = empirical_F(s, grid)
    inv = fit_smooth_Q(s, grid, assignment)
    return s, grid, assignment, table, inv


class TestTable:
    def test_d1_seven_point_pattern(self):
        # [PAPER] d=1 sample laid on its own grid: ranks {1,2,3}, signs +-1
        grid = build_grid(GridSpec(n=7, d=1, n_R=3, n_S=2, n_0=1))
        from centerout import break_ties

        s = Sample(points=grid.points.copy())
        _, table = empirical_F(s, grid)
        np.testing.assert_allclose(np.sort(table.rank), [0, 1, 1, 2, 2, 3, 3])
        assert set(np.unique(table.sign[:, 0])) <= {-1.0, 0.0, 1.0}

    def test_rank_equals_scaled_norm(self, fitted):
        _, grid, _, table, _ = fitted
        norms = np.linalg.norm(table.F_value, axis=1)
        np.testing.assert_allclose(table.rank, (grid.spec.n_R + 1) * norms)

    def test_csv(self, fitted, tmp_path):
        *_, table, _ = fitted[0], fitted[1], fitted[2], fitted[3], fitted[4]
        table = fitted[3]
        p = tmp_path / "t.csv"
        table.to_csv(p)
        lines = p.read_text().strip().split("\n")
        assert lines[0] == "F_0,F_1,rank,sign_0,sign_1,ring"
        assert len(lines) == 25


class TestContour:
    def test_closed_polyline_d2(self, fitted):
        *_, inv = fitted
        cs = contour(inv, 0.5, mesh_size=64)
        np.testing.assert_allclose(cs.polyline[0], cs.polyline[-1])
        assert cs.polyline.shape == (65, 2)

    def test_ladder_membership(self, fitted):
        # q = j/(n_R+1): members are the n_S rank-j points, region has j*n_S
        _, grid, _, table, inv = fitted
        cs = contour(inv, 2 / 4, rank_table=table)
        assert not cs.interpolated
        assert cs.member_points.size == 8
        assert cs.region_members.size == 16
        assert (np.rint(table.rank[cs.member_points]) == 2).all()

    def test_interpolated_level(self, fitted):
        *_, table, inv = fitted[0], fitted[1], fitted[2], fitted[3], fitted[4]
        table, inv = fitted[3], fitted[4]
        cs = contour(inv, 0.4, rank_table=table)
        assert cs.interpolated and cs.member_points.size == 0

    def test_contour_separates_ranks(self, fitted):
        # [DERIVED] point-in-polygon: strict interiors (rank < j) are inside,
        # points two or more rings out (rank > j+1) are outside; the polyline
        # itself passes through rank-j (and occasionally rank-j+1) points
        s, grid, _, table, inv = fitted
        from matplotlib.path import Path

        ranks = np.rint(table.rank)
        for j in (1, 2):
            cs = contour(inv, j / 4, mesh_size=1024, rank_table=table)
            inside = Path(cs.polyline).contains_points(s.points, radius=1e-7)
            assert inside[ranks < j].all()
            assert not inside[ranks > j + 1].any()

    def test_monotone_nesting(self, fitted):
        # larger q encloses the smaller-q polyline (convex-potential nesting)
        *_, inv = fitted
        small = contour(inv, 0.25, mesh_size=128).polyline
        big = contour(inv, 0.75, mesh_size=512).polyline
        from matplotlib.path import Path

        assert Path(big).contains_points(small[:-1], radius=1e-7).all()

    def test_rejects_bad_level(self, fitted):
        *_, inv = fitted
        with pytest.raises(InvalidInputError):
            contour(inv, 0.0)
        with pytest.raises(InvalidInputError):
            contour(inv, 1.5)
        with pytest.raises(InvalidInputError):
            contour(inv, 0.5, mesh_size=4)


class TestSignCurves:
    def test_shape_and_bounds(self, fitted):
        s, *_, inv = fitted[0], fitted[1], fitted[2], fitted[3], fitted[4]
        s, inv = fitted[0], fitted[4]
        curves = sign_curves(inv, np.array([[1.0, 0.0], [0.0, 1.0]]), mesh_size=16)
        assert len(curves) == 2
        assert curves[0].polyline.shape == (15, 2)
        # images stay within the data hull scale
        lim = np.abs(s.points).max() + 1.0
        for c in curves:
            assert np.abs(c.polyline).max() < lim

    def test_direction_normalized(self, fitted):
        *_, inv = fitted
        curves = sign_curves(inv, np.array([[3.0, 4.0]]))
        np.testing.assert_allclose(np.linalg.norm(curves[0].direction), 1.0)


class TestRegionProbability:
    def test_rank_count(self, fitted):
        s, _, _, table, inv = fitted
        cs = contour(inv, 2 / 4, rank_table=table)
        assert region_probability(cs, s, mode="rank") == pytest.approx(16 / 24)

    def test_polygon_close_to_rank(self, fitted):
        s, _, _, table, inv = fitted
        cs = contour(inv, 2 / 4, mesh_size=512, rank_table=table)
        p_poly = region_probability(cs, s, mode="polygon")
        # boundary passes through sample points, so counts can differ by
        # up to about one ring's worth
        assert abs(p_poly - 16 / 24) <= 10 / 24

    def test_requires_closed_polyline(self):
        cs = ContourSet(level=0.5, polyline=np.array([[0.0, 0], [1, 0], [1, 1]]),
                        member_points=np.array([]), region_members=np.array([]))
        with pytest.raises(InvalidInputError):
            region_probability(cs, Sample(points=np.zeros((1, 2))), mode="polygon")


class TestExport:
    def test_csv_and_json(self, fitted, tmp_path):
        *_, table, inv = fitted[0], fitted[1], fitted[2], fitted[3], fitted[4]
        table, inv = fitted[3], fitted[4]
        sets = [contour(inv, q, mesh_size=16, rank_table=table) for q in (0.25, 0.5)]
        curves = sign_curves(inv, np.array([[1.0, 0.0]]), mesh_size=8)
        contours_to_csv(sets, tmp_path / "c.csv")
        sign_curves_to_csv(curves, tmp_path / "s.csv")
        assert (tmp_path / "c.csv").read_text().startswith("level,vertex,x_0,x_1")
        assert (tmp_path / "s.csv").read_text().startswith("curve,vertex,u_0,u_1,x_0,x_1")
        import json

        doc = json.loads(to_json_document(sets, curves))
        assert len(doc["contours"]) == 2 and len(doc["sign_curves"]) == 1
