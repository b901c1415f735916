__all__ = [
    "HeatParams",
    "HeatProfile",
    "PointHistory",
    "heat_spec",
    "heat_kernel",
    "heat_feasibility",
    "heat_kernel_probs",
    "heat_max_tau",
    "embed_points",
    "temperature_profile",
    "point_history",
]

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from momentchain.exact import build_truncated, propagate, propagate_steps
from momentchain.exceptions import (
    GridConstructionError,
    ParameterError,
    TruncationError,
)
from momentchain.grid import Grid, make_explicit, make_uniform
from momentchain.kernel import (
    FeasibilityReport,
    MomentSpec,
    TransitionKernel,
    check_feasibility,
    transition_probs,
)
from momentchain.stats import NormalLaw, normal_cell_mass, normal_pdf
from momentchain.typings import FloatArray, IndexArray, Json, Triple
from momentchain.utils import require_positive

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HeatParams:
    """Free-space heat diffusion parameters.

    :param alpha: Diffusivity (length^2 / time).
    :type alpha: float
    :param tau: Physical time per chain step.
    :type tau: float
    :param points_of_interest: Coordinates whose temperature is tracked.
    :type points_of_interest: [float]
    """

    alpha: float
    tau: float
    points_of_interest: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", require_positive(self.alpha, "alpha"))
        object.__setattr__(self, "tau", require_positive(self.tau, "tau"))
        points = tuple(float(p) for p in self.points_of_interest)
        if not all(math.isfinite(p) for p in points):
            raise ParameterError("points of interest must be finite", "points")
        object.__setattr__(self, "points_of_interest", points)

    def law(self, k: int) -> NormalLaw:
        """Return the exact heat profile law N(0, 2 alpha k tau) after k steps."""
        return NormalLaw(0.0, 2.0 * self.alpha * k * self.tau)


@dataclass(frozen=True)
class HeatProfile:
    """Chain temperature profile after k steps next to the analytic solution.

    Analytic columns hold NaN at k = 0, where the exact solution is a point
    source.
    """

    k: int
    time: float
    indices: IndexArray
    x: FloatArray
    mass: FloatArray
    density_estimate: FloatArray
    analytic_density: FloatArray
    analytic_cell_mass: FloatArray
    points_of_interest: Dict[float, int]

    @property
    def abs_error(self) -> FloatArray:
        result: FloatArray = np.abs(self.mass - self.analytic_cell_mass)
        return result

    @property
    def tv_distance(self) -> float:
        """Return the total-variation distance to the analytic cell masses."""
        return 0.5 * math.fsum(self.abs_error)

    def at_points(self) -> Json:
        """Return the chain mass at each point of interest."""
        n = (self.indices.size - 1) // 2
        return {p: float(self.mass[i + n]) for p, i in self.points_of_interest.items()}


@dataclass(frozen=True)
class PointHistory:
    """Chain mass at each point of interest for k = 0..n."""

    points: Tuple[float, ...]
    indices: Tuple[int, ...]
    times: FloatArray
    mass: FloatArray


def heat_spec(params: HeatParams) -> MomentSpec:
    """Return the moment increments M = 0, V = 2 alpha tau.

    :param params: Heat parameters.
    :type params: momentchain.heat.HeatParams
    :return: Moment increments.
    :rtype: momentchain.kernel.MomentSpec
    """
    return MomentSpec(0.0, 2.0 * params.alpha * params.tau)


def heat_kernel(grid: Grid, params: HeatParams) -> TransitionKernel:
    """Return the heat diffusion transition kernel on **grid**."""
    return TransitionKernel(grid, heat_spec(params))


def heat_feasibility(
    grid: Grid,
    params: HeatParams,
    index_range: Tuple[int, int],
    slack: float = 0.0,
) -> FeasibilityReport:
    """Check ``2 alpha tau <= right_gap * left_gap`` on an index window.

    With M = 0 the general inequalities 1 and 2 always hold, so the report
    can only fail on inequality 3, which is exactly this condition.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param params: Heat parameters.
    :type params: momentchain.heat.HeatParams
    :param index_range: Inclusive (low, high) index window.
    :type index_range: (int, int)
    :param slack: Tolerance added to the right-hand side.
    :type slack: float
    :return: Feasibility report.
    :rtype: momentchain.kernel.FeasibilityReport
    """
    return check_feasibility(grid, heat_spec(params), index_range, slack)


def heat_kernel_probs(grid: Grid, params: HeatParams, i: int) -> Triple:
    """Return the heat diffusion transition probabilities at index i.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param params: Heat parameters.
    :type params: momentchain.heat.HeatParams
    :param i: Grid index.
    :type i: int
    :return: (left, center, right) probabilities.
    :rtype: (float, float, float)
    :raise momentchain.exceptions.InfeasibleIndexError: If infeasible at i.
    """
    return transition_probs(grid, heat_spec(params), i)


def heat_max_tau(grid: Grid, alpha: float, index_range: Tuple[int, int]) -> float:
    """Return the largest tau satisfying the heat inequality on a window.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param alpha: Diffusivity.
    :type alpha: float
    :param index_range: Inclusive (low, high) index window.
    :type index_range: (int, int)
    :return: min(right_gap * left_gap) / (2 alpha).
    :rtype: float
    """
    alpha = require_positive(alpha, "alpha")
    left, right = grid.gaps_array(*index_range)
    return float(np.min(right * left)) / (2.0 * alpha)


def embed_points(points_of_interest: Sequence[float], base_gap: float) -> Grid:
    """Return a grid containing 0 and every point of interest.

    Duplicates are collapsed and 0 is added if absent. Table gaps wider than
    **base_gap** are split into equal pieces no wider than **base_gap**, and
    the grid continues with spacing **base_gap** beyond the table. With no
    point other than 0 the result is the uniform grid of spacing **base_gap**.

    :param points_of_interest: Coordinates to embed.
    :type points_of_interest: [float]
    :param base_gap: Largest allowed gap.
    :type base_gap: float
    :return: Grid whose points include every point of interest.
    :rtype: momentchain.grid.Grid
    :raise momentchain.exceptions.GridConstructionError: If a point is not
        finite.
    """
    base_gap = require_positive(base_gap, "base_gap")
    values = [float(p) + 0.0 for p in points_of_interest]
    if not all(math.isfinite(p) for p in values):
        raise GridConstructionError("points of interest must be finite", "points")

    pts = sorted(set(values) | {0.0})
    if len(pts) == 1:
        return make_uniform(base_gap)

    table = [pts[0]]
    for a, b in zip(pts, pts[1:]):
        pieces = math.ceil((b - a) / base_gap)
        for j in range(1, pieces):
            x = a + (b - a) * j / pieces
            if table[-1] < x < b:
                table.append(x)
        table.append(b)

    logger.debug("embedded %d points into a table of %d", len(pts), len(table))
    return make_explicit(table, base_gap, base_gap)


def _check_window(n: int, k: int) -> None:
    if isinstance(k, bool) or not isinstance(k, int) or k < 0:
        raise ParameterError(f"k must be a nonnegative integer, got {k!r}", "k")
    if k > n:
        raise TruncationError(f"k={k} exceeds truncation half-width n={n}")


def _locate(
    points: Sequence[float], indices: IndexArray, x: FloatArray
) -> Dict[float, int]:
    located: Dict[float, int] = {}
    for p in points:
        hits = np.flatnonzero(x == p)
        if hits.size == 0:
            raise ParameterError(
                f"point of interest {p!r} is not a state of the window"
            )
        located[p] = int(indices[hits[0]])
    return located


def temperature_profile(grid: Grid, params: HeatParams, n: int, k: int) -> HeatProfile:
    """Return the chain temperature profile after k steps on x_{-n}..x_n.

    Reports the chain mass P(r(k) = x_i), the density estimate
    mass_i / ((x_{i+1} - x_{i-1}) / 2), the analytic density u(k tau, x_i) and
    the analytic mass of the cell between the midpoints to both neighbors.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param params: Heat parameters.
    :type params: momentchain.heat.HeatParams
    :param n: Truncation half-width.
    :type n: int
    :param k: Steps; at most n.
    :type k: int
    :return: Profile.
    :rtype: momentchain.heat.HeatProfile
    :raise momentchain.exceptions.TruncationError: If k > n.
    :raise momentchain.exceptions.InfeasibleIndexError: If the heat kernel
        is infeasible inside the window.
    """
    _check_window(n, k)
    chain = build_truncated(grid, heat_kernel(grid, params), n)
    dist = propagate(chain, k)

    x = grid.points(np.arange(-n - 1, n + 2, dtype=np.int64))
    width = 0.5 * (x[2:] - x[:-2])
    lower = 0.5 * (x[:-2] + x[1:-1])
    upper = 0.5 * (x[1:-1] + x[2:])

    if k == 0:
        analytic_density = np.full(chain.size, np.nan)
        analytic_cell_mass = np.full(chain.size, np.nan)
    else:
        law = params.law(k)
        analytic_density = normal_pdf(chain.states, law)
        analytic_cell_mass = normal_cell_mass(lower, upper, law)

    return HeatProfile(
        k=k,
        time=k * params.tau,
        indices=chain.indices,
        x=chain.states,
        mass=dist.mass,
        density_estimate=dist.mass / width,
        analytic_density=analytic_density,
        analytic_cell_mass=analytic_cell_mass,
        points_of_interest=_locate(
            params.points_of_interest, chain.indices, chain.states
        ),
    )


def point_history(grid: Grid, params: HeatParams, n: int) -> PointHistory:
    """Return the chain mass at each point of interest for k = 0..n.

    :param grid: Grid containing every point of interest within x_{-n}..x_n.
    :type grid: momentchain.grid.Grid
    :param params: Heat parameters.
    :type params: momentchain.heat.HeatParams
    :param n: Truncation half-width and last step.
    :type n: int
    :return: Mass history, shape (n + 1, number of points).
    :rtype: momentchain.heat.PointHistory
    """
    chain = build_truncated(grid, heat_kernel(grid, params), n)
    located = _locate(params.points_of_interest, chain.indices, chain.states)
    columns = np.array([i + n for i in located.values()], dtype=np.int64)

    mass = np.array([d.mass[columns] for d in propagate_steps(chain, n)])
    return PointHistory(
        points=tuple(located),
        indices=tuple(located.values()),
        times=np.arange(n + 1) * params.tau,
        mass=mass.reshape(n + 1, columns.size),
    )
