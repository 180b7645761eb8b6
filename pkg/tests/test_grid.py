import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centerout import (
    BallGrid,
    GridSpec,
    break_ties,
    build_grid,
    factorize,
    unit_directions,
)
from centerout.grid import InvalidInputError


class TestFactorize:
    def test_large_balanced(self):
        # [PAPER] n=20000, d=2, ratio 2 -> 100 rings of 200 directions
        assert factorize(20000, 2, 2.0) == (100, 200, 0)

    def test_d1_odd(self):
        # [PAPER] d=1, n=7: three rings of {+1,-1} plus the origin
        assert factorize(7, 1) == (3, 2, 1)

    def test_small_ratio(self):
        # [DERIVED] exhaustive search over feasible pairs for n=6, ratio 1.5
        assert factorize(6, 2, 1.5) == (2, 3, 0)

    def test_invariant_holds(self):
        for n in [2, 3, 10, 37, 101, 997, 2000]:
            n_R, n_S, n_0 = factorize(n, 2)
            assert n == n_R * n_S + n_0
            assert n_0 == 0 or n_0 < min(n_R, n_S) or n_0 == 1

    def test_deterministic(self):
        assert factorize(1234, 2) == factorize(1234, 2)

    def test_rejects_tiny(self):
        with pytest.raises(InvalidInputError):
            factorize(1, 2)

    @given(st.integers(min_value=2, max_value=5000))
    @settings(max_examples=60, deadline=None)
    def test_always_feasible(self, n):
        n_R, n_S, n_0 = factorize(n, 2)
        spec = GridSpec(n=n, d=2, n_R=n_R, n_S=n_S, n_0=n_0)
        assert spec.n == n


class TestUnitDirections:
    def test_equal_angle_d2(self):
        u = unit_directions(4, 2, "equal-angle")
        np.testing.assert_allclose(
            u, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15
        )

    def test_unit_norms(self):
        for method, d in [
            ("equal-angle", 2),
            ("fibonacci-sphere", 3),
            ("random-sphere", 5),
        ]:
            u = unit_directions(50, d, method)
            np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-12)

    def test_d1(self):
        np.testing.assert_array_equal(unit_directions(2, 1), [[1.0], [-1.0]])

    def test_random_seeded(self):
        a = unit_directions(10, 4, "random-sphere", seed=7)
        b = unit_directions(10, 4, "random-sphere", seed=7)
        np.testing.assert_array_equal(a, b)

    def test_bad_method(self):
        with pytest.raises(InvalidInputError):
            unit_directions(5, 2, "nope")


class TestBuildGrid:
    def test_d1_seven_points(self):
        # [PAPER] grid for n=7, d=1: {+-1/4, +-2/4, +-3/4, 0}
        grid = build_grid(GridSpec(n=7, d=1, n_R=3, n_S=2, n_0=1))
        got = sorted(grid.points[:, 0].tolist())
        expect = sorted([0.25, -0.25, 0.5, -0.5, 0.75, -0.75, 0.0])
        np.testing.assert_allclose(got, expect, atol=1e-15)

    def test_single_ring(self):
        grid = build_grid(GridSpec(n=4, d=2, n_R=1, n_S=4, n_0=0))
        np.testing.assert_allclose(np.linalg.norm(grid.points, axis=1), 0.5)
        np.testing.assert_allclose(grid.points @ grid.points.T / 0.25,
                                   [[1, 0, -1, 0], [0, 1, 0, -1],
                                    [-1, 0, 1, 0], [0, -1, 0, 1]], atol=1e-15)

    def test_norm_multiset(self):
        spec = GridSpec(n=14, d=2, n_R=4, n_S=3, n_0=2)
        grid = build_grid(spec)
        norms = np.sort(np.linalg.norm(grid.points, axis=1))
        expect = np.sort([0.0] * 2 + [j / 5 for j in range(1, 5) for _ in range(3)])
        np.testing.assert_allclose(norms, expect, atol=1e-15)

    def test_ring_and_direction_metadata(self):
        grid = build_grid(GridSpec(n=6, d=2, n_R=2, n_S=3, n_0=0))
        np.testing.assert_array_equal(grid.ring_of, [1, 1, 1, 2, 2, 2])
        np.testing.assert_array_equal(grid.direction_of, [0, 1, 2, 0, 1, 2])

    def test_origin_metadata(self):
        grid = build_grid(GridSpec(n=14, d=2, n_R=4, n_S=3, n_0=2))
        assert (grid.ring_of[-2:] == 0).all()
        assert (grid.direction_of[-2:] == -1).all()

    def test_spec_validation(self):
        with pytest.raises(InvalidInputError):
            GridSpec(n=7, d=2, n_R=2, n_S=3, n_0=0)  # 7 != 6
        with pytest.raises(InvalidInputError):
            GridSpec(n=10, d=2, n_R=2, n_S=3, n_0=4)  # n_0 >= min

    def test_json_roundtrip(self):
        grid = build_grid(GridSpec(n=6, d=2, n_R=2, n_S=3, n_0=0))
        back = BallGrid.from_json(grid.to_json())
        np.testing.assert_array_equal(back.points, grid.points)
        assert back.spec == grid.spec


class TestBreakTies:
    def test_noop_for_small_n0(self):
        grid = build_grid(GridSpec(n=6, d=2, n_R=2, n_S=3, n_0=0))
        tied = break_ties(grid)
        assert tied.ties_broken
        np.testing.assert_array_equal(tied.points, grid.points)

    def test_perturbs_origins(self):
        grid = build_grid(GridSpec(n=14, d=2, n_R=4, n_S=3, n_0=2))
        tied = break_ties(grid, seed=3)
        assert tied.ties_broken
        # origins moved to the half-gap sphere, all distinct
        norms = np.linalg.norm(tied.points[-2:], axis=1)
        np.testing.assert_allclose(norms, 1.0 / (2 * 5), atol=1e-12)
        assert len(np.unique(tied.points, axis=0)) == 14

    def test_seeded(self):
        grid = build_grid(GridSpec(n=14, d=2, n_R=4, n_S=3, n_0=2))
        a = break_ties(grid, seed=5).points
        b = break_ties(grid, seed=5).points
        np.testing.assert_array_equal(a, b)
