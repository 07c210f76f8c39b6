"""Stratification and grid-generation tests for the sampling module."""

import numpy as np
import pytest

from hann.sampling import (SamplePlan, latin_hypercube, midpoint_grid,
                           random_in_cell)


def _strata_counts(points_1d, lo, hi, n):
    idx = np.floor((points_1d - lo) / (hi - lo) * n).astype(int)
    idx = np.clip(idx, 0, n - 1)
    return np.bincount(idx, minlength=n)


@pytest.mark.parametrize("count", [4, 5, 50, 500, 1000])
def test_lhs_stratification_unit_interval(count):
    plan = SamplePlan(count=count, dims=1, bounds=((0.0, 1.0),), seed=7)
    pts = latin_hypercube(plan)
    assert pts.shape == (count, 1)
    counts = _strata_counts(pts[:, 0], 0.0, 1.0, count)
    assert np.all(counts == 1)


def test_lhs_stratification_multidim_general_bounds():
    plan = SamplePlan(count=20, dims=3,
                      bounds=((-30.0, 30.0), (0.0, 1.0), (-5.0, 5.0)),
                      seed=11)
    pts = latin_hypercube(plan)
    assert pts.shape == (20, 3)
    for d, (lo, hi) in enumerate(plan.bounds):
        counts = _strata_counts(pts[:, d], lo, hi, 20)
        assert np.all(counts == 1)
        assert np.all(pts[:, d] >= lo) and np.all(pts[:, d] <= hi)


def test_lhs_seed_determinism():
    plan = SamplePlan(count=100, dims=2, bounds=((0, 1), (0, 1)), seed=5)
    a = latin_hypercube(plan)
    b = latin_hypercube(plan)
    assert np.array_equal(a, b)
    c = latin_hypercube(SamplePlan(count=100, dims=2,
                                   bounds=((0, 1), (0, 1)), seed=6))
    assert not np.array_equal(a, c)


def test_lhs_rejects_wrong_scheme():
    plan = SamplePlan(count=4, dims=1, bounds=((0, 1),), seed=0,
                      scheme="midpoint-grid")
    with pytest.raises(ValueError):
        latin_hypercube(plan)


@pytest.mark.parametrize("bad", [
    dict(count=0, dims=1, bounds=((0, 1),), seed=0),
    dict(count=1, dims=0, bounds=(), seed=0),
    dict(count=1, dims=1, bounds=((1, 0),), seed=0),
    dict(count=1, dims=2, bounds=((0, 1),), seed=0),
])
def test_plan_validation(bad):
    with pytest.raises(ValueError):
        SamplePlan(**bad)


# ---------------------------------------------------------------------------
# midpoint grid

def test_midpoint_grid_two_subdivisions():
    pts = midpoint_grid([(-40.0, 0.0)], [2])
    assert np.allclose(pts, [[-30.0], [-10.0]])


def test_midpoint_grid_32_subdivisions():
    pts = midpoint_grid([(-40.0, 0.0)], [32])
    assert pts.shape == (32, 1)
    assert pts[0, 0] == pytest.approx(-39.375)
    assert np.allclose(np.diff(pts[:, 0]), 1.25)


def test_midpoint_grid_count_is_product():
    pts = midpoint_grid([(-15, 15), (-15, 15)], [7, 7])
    assert pts.shape == (49, 2)
    pts = midpoint_grid([(0, 1), (0, 1), (0, 1)], [2, 3, 4])
    assert pts.shape == (24, 3)


def test_midpoint_grid_invalid():
    with pytest.raises(ValueError):
        midpoint_grid([(0, 1)], [0])
    with pytest.raises(ValueError):
        midpoint_grid([(1, 0)], [2])
    with pytest.raises(ValueError):
        midpoint_grid([(0, 1), (0, 1)], [2])


# ---------------------------------------------------------------------------
# random in cell

def test_random_in_cell_strictly_inside_each_cell():
    dom = [(-5.0, 5.0), (-5.0, 5.0)]
    pts = random_in_cell(dom, [10, 10], seed=3)
    assert pts.shape == (100, 2)
    k = 0
    for i in range(10):
        for j in range(10):
            x, y = pts[k]
            assert -5 + i < x < -5 + (i + 1)
            assert -5 + j < y < -5 + (j + 1)
            k += 1


def test_random_in_cell_degenerate_grid():
    pts = random_in_cell([(2.0, 4.0)], [1], seed=0)
    assert pts.shape == (1, 1)
    assert 2.0 < pts[0, 0] < 4.0


def test_random_in_cell_determinism():
    dom = [(0.0, 1.0)]
    assert np.array_equal(random_in_cell(dom, [5], 9),
                          random_in_cell(dom, [5], 9))
    assert not np.array_equal(random_in_cell(dom, [5], 9),
                              random_in_cell(dom, [5], 10))
