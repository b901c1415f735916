__all__ = [
    "Grid",
    "UniformGrid",
    "TwoSidedGrid",
    "ExplicitGrid",
    "make_uniform",
    "make_two_sided",
    "make_explicit",
    "gaps",
    "grid_from_json",
]

from abc import ABC, abstractmethod
from typing import Sequence, Tuple, Union

import numpy as np

from momentchain.exceptions import GridConstructionError, GridParameterError
from momentchain.typings import FloatArray, IndexArray, Json
from momentchain.utils import require_positive


class Grid(ABC):
    """Strictly increasing map from integer index to real coordinate.

    Grids are lazy: coordinates are computed from the index on demand, so the
    doubly-infinite state space never has to be stored. Every grid satisfies
    ``point(0) == 0.0`` and ``point(i) < point(i + 1)``. Instances are
    immutable and may be shared across threads.
    """

    __slots__: Tuple[str, ...] = ()

    @property
    @abstractmethod
    def kind(self) -> str:
        """Return the grid kind ("uniform", "two_sided" or "explicit")."""
        raise NotImplementedError

    @abstractmethod
    def points(self, indices: Union[Sequence[int], IndexArray]) -> FloatArray:
        """Return the coordinates of an array of indices.

        :param indices: Grid indices.
        :type indices: numpy.ndarray | [int]
        :return: Coordinates, same shape as **indices**.
        :rtype: numpy.ndarray
        """
        raise NotImplementedError

    @abstractmethod
    def index_window(self) -> Tuple[int, int]:
        """Return an index window representative of the whole grid.

        Every index outside the window has the same (left, right) gap pair as
        some index inside it, so checking a gap-only condition on the window
        checks it on all of Z.

        :return: Inclusive (low, high) index bounds.
        :rtype: (int, int)
        """
        raise NotImplementedError

    @abstractmethod
    def to_json(self) -> Json:
        """Return the grid specification as used in config files.

        :return: Grid specification with a "kind" key.
        :rtype: dict
        """
        raise NotImplementedError

    def point(self, i: int) -> float:
        """Return the coordinate of grid index **i**.

        :param i: Grid index.
        :type i: int
        :return: Coordinate x_i.
        :rtype: float
        """
        return float(self.points(np.array([i], dtype=np.int64))[0])

    def gaps(self, i: int) -> Tuple[float, float]:
        """Return the spacing to the left and right neighbors of index **i**.

        Where the grid has constant spacing (uniform grids, both sides of a
        two-sided grid, the extensions of an explicit grid) the nominal spacing
        is returned rather than a difference of rounded coordinates.

        :param i: Grid index.
        :type i: int
        :return: (x_i - x_{i-1}, x_{i+1} - x_i).
        :rtype: (float, float)
        """
        left, right = self.gaps_array(i, i)
        return float(left[0]), float(right[0])

    def gaps_array(self, low: int, high: int) -> Tuple[FloatArray, FloatArray]:
        """Return left and right gaps for every index in [low, high].

        :param low: First index.
        :type low: int
        :param high: Last index (inclusive).
        :type high: int
        :return: Arrays of left gaps and right gaps.
        :rtype: (numpy.ndarray, numpy.ndarray)
        """
        x = self.points(np.arange(low - 1, high + 2, dtype=np.int64))
        return x[1:-1] - x[:-2], x[2:] - x[1:-1]


class UniformGrid(Grid):
    """Grid with constant spacing, x_i = h * i.

    :param h: Spacing.
    :type h: float
    """

    __slots__ = ("_h",)

    def __init__(self, h: float) -> None:
        self._h = require_positive(h, "h", GridParameterError)

    def __repr__(self) -> str:
        return f"<UniformGrid h={self._h!r}>"

    @property
    def kind(self) -> str:
        return "uniform"

    @property
    def h(self) -> float:
        """Return the spacing.

        :return: Spacing.
        :rtype: float
        """
        return self._h

    def points(self, indices: Union[Sequence[int], IndexArray]) -> FloatArray:
        idx = np.asarray(indices, dtype=np.int64)
        return self._h * idx.astype(np.float64)

    def gaps_array(self, low: int, high: int) -> Tuple[FloatArray, FloatArray]:
        # Exactly h, not differences of rounded coordinates.
        gap = np.full(max(high - low + 1, 0), self._h)
        return gap, gap.copy()

    def index_window(self) -> Tuple[int, int]:
        return 0, 0

    def to_json(self) -> Json:
        return {"kind": self.kind, "h": self._h}


class TwoSidedGrid(Grid):
    """Grid with one slope for negative and another for nonnegative indices.

    :param slope_neg: Spacing used for i < 0.
    :type slope_neg: float
    :param slope_pos: Spacing used for i >= 0.
    :type slope_pos: float
    """

    __slots__ = ("_slope_neg", "_slope_pos")

    def __init__(self, slope_neg: float, slope_pos: float) -> None:
        self._slope_neg = require_positive(slope_neg, "slope_neg", GridParameterError)
        self._slope_pos = require_positive(slope_pos, "slope_pos", GridParameterError)

    def __repr__(self) -> str:
        return (
            f"<TwoSidedGrid slope_neg={self._slope_neg!r} "
            f"slope_pos={self._slope_pos!r}>"
        )

    @property
    def kind(self) -> str:
        return "two_sided"

    @property
    def slope_neg(self) -> float:
        return self._slope_neg

    @property
    def slope_pos(self) -> float:
        return self._slope_pos

    def points(self, indices: Union[Sequence[int], IndexArray]) -> FloatArray:
        idx = np.asarray(indices, dtype=np.int64).astype(np.float64)
        return np.where(idx >= 0, self._slope_pos * idx, self._slope_neg * idx)

    def gaps_array(self, low: int, high: int) -> Tuple[FloatArray, FloatArray]:
        idx = np.arange(low, high + 1, dtype=np.int64)
        left = np.where(idx > 0, self._slope_pos, self._slope_neg)
        right = np.where(idx >= 0, self._slope_pos, self._slope_neg)
        return left, right

    def index_window(self) -> Tuple[int, int]:
        return -1, 1

    def to_json(self) -> Json:
        return {
            "kind": self.kind,
            "slope_neg": self._slope_neg,
            "slope_pos": self._slope_pos,
        }


class ExplicitGrid(Grid):
    """Grid given by a finite table around the origin, extended uniformly.

    Table entry equal to 0 becomes index 0; entries to its left and right get
    negative and positive indices. Beyond the table the grid continues with
    constant spacing **h_left** (leftwards) and **h_right** (rightwards).

    :param points: Strictly increasing coordinates containing exactly one 0.
    :type points: [float]
    :param h_left: Spacing of the left extension.
    :type h_left: float
    :param h_right: Spacing of the right extension.
    :type h_right: float
    """

    __slots__ = ("_table", "_diffs", "_zero", "_h_left", "_h_right")

    def __init__(self, points: Sequence[float], h_left: float, h_right: float) -> None:
        table = np.array(points, dtype=np.float64)
        if table.ndim != 1 or table.size == 0:
            raise GridConstructionError("points must be a non-empty list", "points")
        if not np.all(np.isfinite(table)):
            raise GridConstructionError("points must be finite", "points")
        if np.any(np.diff(table) <= 0):
            raise GridConstructionError(
                "points must be strictly increasing without duplicates", "points"
            )
        zeros = np.flatnonzero(table == 0.0)
        if zeros.size != 1:
            raise GridConstructionError("points must contain 0", "points")

        self._table = table
        self._table.setflags(write=False)
        self._diffs = np.diff(table)
        self._zero = int(zeros[0])
        self._h_left = require_positive(h_left, "h_left", GridParameterError)
        self._h_right = require_positive(h_right, "h_right", GridParameterError)

    def __repr__(self) -> str:
        return (
            f"<ExplicitGrid size={self._table.size} h_left={self._h_left!r} "
            f"h_right={self._h_right!r}>"
        )

    @property
    def kind(self) -> str:
        return "explicit"

    @property
    def table(self) -> FloatArray:
        """Return the (read-only) coordinate table.

        :return: Table coordinates.
        :rtype: numpy.ndarray
        """
        return self._table

    @property
    def table_indices(self) -> Tuple[int, int]:
        """Return the grid indices of the first and last table entries.

        :return: Inclusive (low, high) index bounds of the table.
        :rtype: (int, int)
        """
        return -self._zero, self._table.size - 1 - self._zero

    @property
    def h_left(self) -> float:
        return self._h_left

    @property
    def h_right(self) -> float:
        return self._h_right

    def points(self, indices: Union[Sequence[int], IndexArray]) -> FloatArray:
        idx = np.asarray(indices, dtype=np.int64)
        pos = idx + self._zero
        last = self._table.size - 1

        inside = self._table[np.clip(pos, 0, last)]
        below = self._table[0] - self._h_left * (-pos).astype(np.float64)
        above = self._table[last] + self._h_right * (pos - last).astype(np.float64)
        outside = np.where(pos > last, above, inside)
        result: FloatArray = np.where(pos < 0, below, outside)
        return result

    def gaps_array(self, low: int, high: int) -> Tuple[FloatArray, FloatArray]:
        # Extension gaps are exactly h_left and h_right at any distance.
        pos = np.arange(low, high + 1, dtype=np.int64) + self._zero
        last = self._table.size - 1

        left = np.where(pos > last, self._h_right, self._h_left)
        inner = (pos >= 1) & (pos <= last)
        left[inner] = self._diffs[pos[inner] - 1]

        right = np.where(pos >= last, self._h_right, self._h_left)
        inner = (pos >= 0) & (pos < last)
        right[inner] = self._diffs[pos[inner]]
        return left, right

    def index_window(self) -> Tuple[int, int]:
        low, high = self.table_indices
        return low - 1, high + 1

    def to_json(self) -> Json:
        return {
            "kind": self.kind,
            "points": [float(x) for x in self._table],
            "h_left": self._h_left,
            "h_right": self._h_right,
        }


def make_uniform(h: float) -> UniformGrid:
    """Return the uniform grid x_i = h * i.

    :param h: Spacing.
    :type h: float
    :return: Uniform grid.
    :rtype: momentchain.grid.UniformGrid
    :raise momentchain.exceptions.GridParameterError: If h is not positive.
    """
    return UniformGrid(h)


def make_two_sided(slope_neg: float, slope_pos: float) -> TwoSidedGrid:
    """Return the grid x_i = slope_pos * i for i >= 0, slope_neg * i for i < 0.

    :param slope_neg: Spacing for negative indices.
    :type slope_neg: float
    :param slope_pos: Spacing for nonnegative indices.
    :type slope_pos: float
    :return: Two-sided grid.
    :rtype: momentchain.grid.TwoSidedGrid
    :raise momentchain.exceptions.GridParameterError: If a slope is not positive.
    """
    return TwoSidedGrid(slope_neg, slope_pos)


def make_explicit(
    points: Sequence[float], h_left: float, h_right: float
) -> ExplicitGrid:
    """Return a grid built from an explicit table with uniform extensions.

    :param points: Strictly increasing coordinates containing 0.
    :type points: [float]
    :param h_left: Spacing of the extension below the table.
    :type h_left: float
    :param h_right: Spacing of the extension above the table.
    :type h_right: float
    :return: Explicit grid.
    :rtype: momentchain.grid.ExplicitGrid
    :raise momentchain.exceptions.GridConstructionError: If the table is
        unsorted, has duplicates or does not contain 0.
    """
    return ExplicitGrid(points, h_left, h_right)


def gaps(grid: Grid, i: int) -> Tuple[float, float]:
    """Return (x_i - x_{i-1}, x_{i+1} - x_i) for **grid**.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param i: Grid index.
    :type i: int
    :return: Left and right gap.
    :rtype: (float, float)
    """
    return grid.gaps(i)


def grid_from_json(spec: Json) -> Grid:
    """Build a grid from its config file specification.

    :param spec: Dictionary with "kind" and the kind's parameters.
    :type spec: dict
    :return: Grid.
    :rtype: momentchain.grid.Grid
    :raise momentchain.exceptions.GridParameterError: If the kind is unknown.
    """
    kind = spec.get("kind")
    if kind == "uniform":
        return make_uniform(spec["h"])
    if kind == "two_sided":
        return make_two_sided(spec["slope_neg"], spec["slope_pos"])
    if kind == "explicit":
        return make_explicit(spec["points"], spec["h_left"], spec["h_right"])
    raise GridParameterError(f"unknown grid kind: {kind!r}", "kind")
