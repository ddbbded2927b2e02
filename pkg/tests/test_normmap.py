import json
import math

import numpy as np
import pytest

from models.domain import GridPoint, NormGrid
from services.errors import EmptyGrid
from services.normmap_service import (
    evaluate_point,
    export_grid,
    export_summary,
    find_threshold,
    fraction_below,
    max_neighbor_jump,
    read_grid,
)

RANGES = ((1.0, 2.0), (0.5, 1.0), (1.0, 2.0))


def synthetic_grid(norms, statuses=None):
    keys = [(a, b, c) for a in (1.0, 2.0) for b in (0.5, 1.0) for c in (1.0, 2.0)]
    statuses = statuses or ["converged"] * len(keys)
    points = [
        GridPoint(p_y=a, p_z=b, p_eta=c, norm=n, tail_bound=1e-4 * n, status=s)
        for (a, b, c), n, s in zip(keys, norms, statuses)
    ]
    return NormGrid(ranges=RANGES, counts=(2, 2, 2), L=60.0, points=points)


@pytest.fixture
def grid():
    return synthetic_grid([float(n) for n in range(1, 9)])


def test_fraction_below(grid):
    assert fraction_below(grid, 1.0) == 0.0
    assert fraction_below(grid, 4.5) == 0.5
    assert fraction_below(grid, 100.0) == 1.0


def test_threshold_is_the_quantile(grid):
    report = find_threshold(grid, 0.5)
    assert report.M == np.nextafter(4.0, np.inf)
    assert report.fraction_below == 0.5
    assert report.admissible
    assert (report.min_norm, report.max_norm, report.median_norm) == (1.0, 8.0, 4.5)


def test_threshold_ignores_unconverged_points():
    statuses = ["converged"] * 6 + ["failed", "inconclusive"]
    grid = synthetic_grid([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, math.nan, 1e9], statuses)
    report = find_threshold(grid, 1.0)
    assert report.max_norm == 6.0
    assert report.fraction_below == 1.0


def test_threshold_rejects_bad_fraction(grid):
    for target in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            find_threshold(grid, target)


def test_empty_grid():
    grid = synthetic_grid([math.nan] * 8, ["failed"] * 8)
    with pytest.raises(EmptyGrid):
        find_threshold(grid)
    with pytest.raises(EmptyGrid):
        fraction_below(grid, 1.0)


def test_neighbor_jump(grid):
    # p_y neighbours (1, 0.5, 1) -> (2, 0.5, 1) carry norms 1 and 5
    assert max_neighbor_jump(grid) == 4.0
    flat = synthetic_grid([3.0] * 8)
    assert max_neighbor_jump(flat) == 0.0


def test_points_are_sorted():
    points = [
        GridPoint(p_y=2.0, p_z=1.0, p_eta=1.0, norm=1.0, tail_bound=0.0, status="converged"),
        GridPoint(p_y=1.0, p_z=1.0, p_eta=2.0, norm=1.0, tail_bound=0.0, status="converged"),
        GridPoint(p_y=1.0, p_z=0.5, p_eta=1.0, norm=1.0, tail_bound=0.0, status="converged"),
    ]
    grid = NormGrid(ranges=RANGES, counts=(2, 2, 2), L=60.0, points=points)
    assert [p.key() for p in grid.points] == [(1.0, 0.5, 1.0), (1.0, 1.0, 2.0), (2.0, 1.0, 1.0)]


def test_grid_file(grid, tmp_path):
    path = export_grid(tmp_path / "norm-grid.csv", grid, "cafe")
    loaded = read_grid(path)
    assert loaded.ranges == grid.ranges
    assert loaded.counts == grid.counts
    assert loaded.L == grid.L
    assert [p.norm for p in loaded.points] == [p.norm for p in grid.points]


def test_read_grid_rejects_other_files(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("# config_hash=x\na,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_grid(path)


def test_summary_file(grid, tmp_path):
    report = find_threshold(grid)
    path = export_summary(tmp_path / "threshold.json", grid, report, "cafe")
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["config_hash"] == "cafe"
    assert document["statuses"] == {"converged": 8}
    assert document["threshold"]["admissible"] is True


def test_grid_needs_two_points_per_axis(container):
    with pytest.raises(ValueError):
        container.normmap.grid_norms(RANGES, (1, 2, 2), 30.0)


def test_grid_avoids_zero_p_z(container):
    with pytest.raises(ValueError):
        container.normmap.grid_norms(((1.0, 2.0), (-1.0, 1.0), (1.0, 2.0)), (2, 2, 2), 30.0)


def test_failed_point_is_recorded(weyl):
    point = evaluate_point(weyl, (1.0, 0.0, 1.0), 30.0)
    assert point.status == "failed"
    assert math.isnan(point.norm)
    assert "p_z" in point.message


def test_single_point_norm(weyl):
    point = evaluate_point(weyl, (1.0, 1.0, 1.0), 30.0)
    assert point.status in ("converged", "inconclusive")
    assert point.norm > 0.0 and math.isfinite(point.norm)


@pytest.mark.slow
def test_small_grid(container):
    grid = container.normmap.grid_norms(((1.0, 1.5), (1.0, 1.5), (1.0, 1.5)), (2, 2, 2), 30.0)
    assert len(grid.points) == 8
    assert all(p.status != "failed" for p in grid.points)
    report = find_threshold(grid, 0.5)
    assert report.fraction_below >= 0.5
