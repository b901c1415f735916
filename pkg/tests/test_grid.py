import numpy as np
import pytest

from momentchain.exceptions import GridConstructionError, GridParameterError
from momentchain.grid import (
    ExplicitGrid,
    TwoSidedGrid,
    UniformGrid,
    gaps,
    grid_from_json,
    make_explicit,
    make_two_sided,
    make_uniform,
)

INDICES = np.arange(-10000, 10001, dtype=np.int64)


def test_uniform_points():
    grid = make_uniform(1.0)
    assert isinstance(grid, UniformGrid)
    assert grid.kind == "uniform"
    assert grid.point(3) == 3.0
    assert grid.point(-2) == -2.0
    assert grid.point(0) == 0.0

    grid = make_uniform(20.0 / 11.0 * 0.01)
    assert grid.point(11) == pytest.approx(0.2, abs=1e-15)


@pytest.mark.parametrize("h", [0, 0.0, -1.0, float("inf"), float("nan"), True, "1"])
def test_uniform_rejects_bad_spacing(h):
    with pytest.raises(GridParameterError) as err:
        make_uniform(h)
    assert err.value.field == "h"
    assert isinstance(err.value, ValueError)


def test_two_sided_points():
    grid = make_two_sided(0.1, 0.01)
    assert isinstance(grid, TwoSidedGrid)
    assert grid.point(5) == 0.05
    assert grid.point(-5) == -0.5
    assert grid.point(0) == 0.0
    assert gaps(grid, 0) == (0.1, 0.01)
    assert gaps(grid, 1) == (0.01, 0.01)
    assert gaps(grid, -1) == (0.1, 0.1)

    with pytest.raises(GridParameterError) as err:
        make_two_sided(0.1, 0.0)
    assert err.value.field == "slope_pos"


def test_two_sided_with_equal_slopes_is_uniform():
    for h in (1.0, 0.01, 0.3):
        assert np.array_equal(
            make_two_sided(h, h).points(INDICES), make_uniform(h).points(INDICES)
        )


def test_uniform_gaps_are_exact():
    grid = make_uniform(0.1)
    left, right = grid.gaps_array(-100, 100)
    assert np.all(left == 0.1)
    assert np.all(right == 0.1)
    assert gaps(grid, 37) == (0.1, 0.1)


def test_explicit_points():
    grid = make_explicit([-1.0, 0.0, 0.5, 2.0], 1.0, 1.5)
    assert isinstance(grid, ExplicitGrid)
    assert grid.table_indices == (-1, 2)
    assert grid.point(0) == 0.0
    assert grid.point(1) == 0.5
    assert grid.point(2) == 2.0
    assert grid.point(3) == 3.5
    assert grid.point(4) == 5.0
    assert grid.point(-1) == -1.0
    assert grid.point(-3) == -3.0
    assert gaps(grid, 1) == (0.5, 1.5)
    assert gaps(grid, 2) == (1.5, 1.5)
    assert gaps(grid, -1) == (1.0, 1.0)


def test_explicit_single_zero_is_uniform():
    grid = make_explicit([0.0], 1.0, 1.0)
    idx = np.arange(-50, 51)
    assert np.array_equal(grid.points(idx), make_uniform(1.0).points(idx))


def test_explicit_does_not_alias_input():
    table = np.array([-1.0, 0.0, 1.0])
    grid = make_explicit(table, 1.0, 1.0)
    table[0] = -5.0
    assert grid.point(-1) == -1.0
    assert table.flags.writeable
    assert not grid.table.flags.writeable


@pytest.mark.parametrize(
    "points",
    [
        [],
        [-1.0, 1.0],
        [0.0, -1.0, 1.0],
        [-1.0, 0.0, 0.0, 1.0],
        [-1.0, 0.0, 1.0, 1.0],
        [0.0, float("nan")],
        [[0.0, 1.0]],
    ],
)
def test_explicit_rejects_bad_tables(points):
    with pytest.raises(GridConstructionError) as err:
        make_explicit(points, 1.0, 1.0)
    assert err.value.field == "points"


def test_explicit_rejects_bad_extension():
    with pytest.raises(GridParameterError) as err:
        make_explicit([0.0, 1.0], 1.0, -2.0)
    assert err.value.field == "h_right"


@pytest.mark.parametrize(
    "grid",
    [
        make_uniform(0.01),
        make_two_sided(0.1, 0.01),
        make_explicit([-3.0, -0.5, 0.0, 0.001, 0.2, 7.0], 0.3, 2.0),
    ],
)
def test_points_strictly_increasing_and_pure(grid):
    x = grid.points(INDICES)
    assert np.all(np.diff(x) > 0)
    assert np.array_equal(x, grid.points(INDICES))
    left, right = grid.gaps_array(-10000, 10000)
    assert np.all(left > 0) and np.all(right > 0)
    assert np.all(np.isfinite(left)) and np.all(np.isfinite(right))


def test_scalar_and_vector_queries_agree():
    grid = make_explicit([-1.0, 0.0, 0.25, 2.0], 0.5, 0.75)
    for i in range(-6, 7):
        assert grid.point(i) == grid.points([i])[0]
        left, right = grid.gaps_array(i, i)
        assert gaps(grid, i) == (left[0], right[0])


def test_index_windows():
    assert make_uniform(1.0).index_window() == (0, 0)
    assert make_two_sided(1.0, 2.0).index_window() == (-1, 1)
    assert make_explicit([-1.0, 0.0, 0.5, 2.0], 1.0, 1.0).index_window() == (-2, 3)


def test_grid_from_json():
    specs = [
        {"kind": "uniform", "h": 0.5},
        {"kind": "two_sided", "slope_neg": 0.1, "slope_pos": 0.01},
        {"kind": "explicit", "points": [-1.0, 0.0, 2.0], "h_left": 1.0, "h_right": 2.0},
    ]
    for spec in specs:
        grid = grid_from_json(spec)
        assert grid.kind == spec["kind"]
        assert grid.to_json() == spec

    with pytest.raises(GridParameterError) as err:
        grid_from_json({"kind": "log"})
    assert err.value.field == "kind"


def test_explicit_extension_gaps_are_nominal():
    grid = make_explicit([-0.2, -0.1, 0.0, 0.1, 0.2], 0.1, 0.1)
    left, right = grid.gaps_array(-100000, -99990)
    assert np.all(left == 0.1) and np.all(right == 0.1)
    left, right = grid.gaps_array(99990, 100000)
    assert np.all(left == 0.1) and np.all(right == 0.1)
    assert gaps(grid, 3) == (0.1, 0.1)

    low, high = grid.index_window()
    window = set(zip(*grid.gaps_array(low, high)))
    far = set(zip(*grid.gaps_array(-100000, 100000)))
    assert far <= window

    asymmetric = make_explicit([-1.0, 0.0, 0.5, 2.0], 0.3, 0.7)
    assert asymmetric.gaps(-1) == (0.3, 1.0)
    assert asymmetric.gaps(-2) == (0.3, 0.3)
    assert asymmetric.gaps(2) == (1.5, 0.7)
    assert asymmetric.gaps(3) == (0.7, 0.7)
