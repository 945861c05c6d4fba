"""Box-counting estimator vs a brute-force oracle, plus shaping contracts."""

import math

import numpy as np
import pytest

from policytune.errors import NonPositiveReturnError
from policytune.meshdim import (
    DEFAULT_LADDER,
    DimensionEstimate,
    MeshLadder,
    estimate_dimension,
    occupied_cells,
    shaped_return,
)
from policytune.rng import Prng


def occupied_cells_oracle(points, scale):
    """Independent reimplementation: set of per-axis floor tuples."""
    cells = set()
    for p in np.atleast_2d(points):
        cells.add(tuple(math.floor(v / scale) for v in np.atleast_1d(p)))
    return len(cells)


class TestOccupiedCells:
    def test_single_repeated_point(self):
        cloud = np.tile([[0.3, -0.2]], (50, 1))
        for scale in (0.01, 0.5, 3.0):
            assert occupied_cells(cloud, scale) == 1

    def test_three_points_direct_floor(self):
        assert occupied_cells(np.array([[0.05], [0.15], [0.25]]), 0.1) == 3

    def test_uniform_square_all_cells_hit(self):
        rng = Prng(404)
        pts = rng.uniform(20_000).reshape(10_000, 2)
        assert occupied_cells(pts, 0.1) == 100

    def test_matches_oracle_on_random_small_clouds(self):
        rng = Prng(500)
        for case in range(50):
            d = 1 + case % 3
            n = 1 + int(rng.uniform(1)[0] * 99)
            cloud = (rng.gaussian(n * d) * 3.0).reshape(n, d)
            scale = 0.05 + float(rng.uniform(1)[0])
            assert occupied_cells(cloud, scale) == occupied_cells_oracle(cloud, scale)

    def test_nonincreasing_in_scale(self):
        rng = Prng(501)
        cloud = rng.gaussian(600).reshape(300, 2)
        scales = [2.0, 1.0, 0.5, 0.25, 0.125]
        counts = [occupied_cells(cloud, s) for s in scales]
        assert counts == sorted(counts)  # finer scale -> more (or equal) cells

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            occupied_cells(np.array([[0.0]]), 0.0)
        with pytest.raises(ValueError):
            occupied_cells(np.zeros((0, 2)), 0.5)
        with pytest.raises(ValueError):
            occupied_cells(np.array([[np.nan]]), 0.5)


class TestMeshLadder:
    def test_scales_strictly_decreasing(self):
        ladder = MeshLadder(0.25, 0.5, 4)
        assert ladder.scales() == [0.25, 0.125, 0.0625, 0.03125]

    def test_validation(self):
        with pytest.raises(ValueError):
            MeshLadder(base_scale=0.0)
        with pytest.raises(ValueError):
            MeshLadder(ratio=1.0)
        with pytest.raises(ValueError):
            MeshLadder(num_scales=1)


class TestEstimateDimension:
    def test_line_segment(self):
        pts = np.linspace(0.0, 1.0, 2000).reshape(-1, 1)
        est = estimate_dimension(pts, MeshLadder(0.25, 0.5, 4))
        assert 0.8 <= est.average <= 1.2
        assert est.lower <= est.average <= est.upper

    def test_uniform_square(self):
        rng = Prng(42)
        pts = rng.uniform(20_000).reshape(10_000, 2)
        est = estimate_dimension(pts, MeshLadder(0.25, 0.5, 4))
        assert 1.7 <= est.average <= 2.2

    def test_constant_trajectory_is_zero(self):
        pts = np.tile([[0.7, 0.7, 0.7]], (100, 1))
        est = estimate_dimension(pts, DEFAULT_LADDER)
        assert est.lower == est.upper == est.average == 0.0
        assert all(count == 1 for _, count in est.counts)

    def test_single_point_not_an_error(self):
        est = estimate_dimension(np.array([[1.0, 2.0]]), DEFAULT_LADDER)
        assert est.average == 0.0

    def test_average_is_exact_midpoint(self):
        rng = Prng(43)
        pts = rng.gaussian(400).reshape(200, 2)
        est = estimate_dimension(pts, DEFAULT_LADDER)
        assert est.average == (est.lower + est.upper) / 2.0

    def test_counts_recorded_coarse_to_fine(self):
        rng = Prng(44)
        pts = rng.gaussian(200).reshape(100, 2)
        est = estimate_dimension(pts, MeshLadder(0.5, 0.5, 3))
        scales = [s for s, _ in est.counts]
        assert scales == [0.5, 0.25, 0.125]
        counts = [c for _, c in est.counts]
        assert counts == sorted(counts)

    def test_slopes_clamped_to_dimension(self):
        rng = Prng(45)
        for d in (1, 2, 3):
            pts = (rng.uniform(900 * d) * 4.0).reshape(900, d)
            est = estimate_dimension(pts, DEFAULT_LADDER)
            assert 0.0 <= est.lower <= est.upper <= d

    def test_translation_by_integer_multiple_of_every_scale(self):
        rng = Prng(46)
        pts = rng.gaussian(300).reshape(150, 2)
        ladder = MeshLadder(0.5, 0.5, 4)
        base = estimate_dimension(pts, ladder)
        # base_scale is an integer multiple of each finer scale (ratio 1/2)
        shifted = estimate_dimension(pts + ladder.base_scale, ladder)
        assert shifted == base

    def test_arbitrary_translation_bounded_boundary_effect(self):
        rng = Prng(47)
        for _ in range(20):
            d = 1 + int(rng.uniform(1)[0] * 2.999)
            pts = rng.gaussian(40 * d).reshape(40, d)
            shift = rng.gaussian(d) * 0.3
            for scale in (0.5, 0.25):
                n0 = occupied_cells(pts, scale)
                n1 = occupied_cells(pts + shift, scale)
                assert n1 <= (2 ** d) * n0
                assert n0 <= (2 ** d) * n1


class TestShapedReturn:
    def est(self, average):
        return DimensionEstimate(lower=average, upper=average, average=average, counts=())

    def test_ratio_arithmetic(self):
        assert shaped_return(100.0, self.est(2.0), "dim_ratio") == 50.0

    def test_product_arithmetic(self):
        assert shaped_return(-22.0, self.est(1.89), "dim_product") == pytest.approx(-41.58)

    def test_clamp_below_one(self):
        assert shaped_return(100.0, self.est(0.3), "dim_ratio") == 100.0
        assert shaped_return(-5.0, self.est(0.3), "dim_product") == -5.0

    def test_ratio_rejects_nonpositive_return(self):
        with pytest.raises(NonPositiveReturnError, match="dim_product"):
            shaped_return(0.0, self.est(2.0), "dim_ratio")
        with pytest.raises(NonPositiveReturnError, match="positive"):
            shaped_return(-1.0, self.est(2.0), "dim_ratio")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            shaped_return(1.0, self.est(1.0), "raw")

    def test_ratio_strictly_decreasing_in_dimension(self):
        rng = Prng(48)
        for _ in range(200):
            raw = float(rng.uniform(1)[0]) * 100.0 + 1e-6
            d1 = 1.0 + float(rng.uniform(1)[0]) * 5.0
            d2 = d1 + 1e-3 + float(rng.uniform(1)[0])
            assert shaped_return(raw, self.est(d2), "dim_ratio") < shaped_return(raw, self.est(d1), "dim_ratio")

    def test_product_strictly_decreasing_in_dimension_for_negative(self):
        rng = Prng(49)
        for _ in range(200):
            raw = -(float(rng.uniform(1)[0]) * 100.0 + 1e-6)
            d1 = 1.0 + float(rng.uniform(1)[0]) * 5.0
            d2 = d1 + 1e-3 + float(rng.uniform(1)[0])
            assert shaped_return(raw, self.est(d2), "dim_product") < shaped_return(raw, self.est(d1), "dim_product")
