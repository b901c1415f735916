__all__ = [
    "MomentSpec",
    "Violation",
    "FeasibilityReport",
    "TransitionKernel",
    "check_feasibility",
    "check_global_feasibility",
    "transition_probs",
    "uniform_transition_probs",
    "PROBABILITY_TOLERANCE",
    "CONSISTENCY_TOLERANCE",
]

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from momentchain.exceptions import (
    InfeasibleIndexError,
    KernelConsistencyError,
    ParameterError,
)
from momentchain.grid import Grid
from momentchain.typings import FloatArray, Json, Triple
from momentchain.utils import require_positive

logger = logging.getLogger(__name__)

# Allowed excursion of a probability outside [0, 1].
PROBABILITY_TOLERANCE = 1e-12

# Allowed gap between the center probability and 1 - left - right.
CONSISTENCY_TOLERANCE = 1e-12

INEQUALITIES = {
    1: "M * right_gap <= M^2 + V",
    2: "-M * left_gap <= M^2 + V",
    3: "M^2 + V + M * (left_gap - right_gap) <= right_gap * left_gap",
}


@dataclass(frozen=True)
class MomentSpec:
    """Per-step mean and variance increment of the chain, in grid units.

    :param M: Mean increment per step.
    :type M: float
    :param V: Variance increment per step.
    :type V: float
    """

    M: float
    V: float

    def __post_init__(self) -> None:
        for name in ("M", "V"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParameterError(f"{name} must be a real number", name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite", name)
            object.__setattr__(self, name, float(value))

    @property
    def second_moment(self) -> float:
        """Return M^2 + V, the per-step second raw moment of the increment."""
        return self.M * self.M + self.V


@dataclass(frozen=True)
class Violation:
    """First failing inequality of a feasibility check.

    Inequality 1 bounds the right step, 2 bounds the left step and 3 bounds
    the combined spread against the product of the gaps.
    """

    index: int
    inequality: int
    lhs: float
    rhs: float

    def to_json(self) -> Json:
        return {
            "index": self.index,
            "inequality": self.inequality,
            "condition": INEQUALITIES[self.inequality],
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of checking the feasibility inequalities on an index window."""

    feasible: bool
    first_violation: Optional[Violation]
    index_range: Tuple[int, int]
    slack: float = 0.0

    def __post_init__(self) -> None:
        if self.feasible != (self.first_violation is None):
            raise ValueError("feasible must be True exactly when no violation exists")

    def to_json(self) -> Json:
        return {
            "feasible": self.feasible,
            "index_range": list(self.index_range),
            "slack": self.slack,
            "first_violation": (
                None if self.first_violation is None else self.first_violation.to_json()
            ),
        }


def _triple_arrays(
    left: FloatArray, right: FloatArray, spec: MomentSpec
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    # Fixed evaluation order; _triple below must mirror it exactly.
    m, m2v = spec.M, spec.second_moment
    span = left + right
    num_l = m2v - m * right
    num_r = m2v + m * left
    num_c = m2v + m * (left - right)
    return num_l / (span * left), 1.0 - num_c / (right * left), num_r / (span * right)


def _triple(left: float, right: float, spec: MomentSpec) -> Triple:
    m, m2v = spec.M, spec.second_moment
    span = left + right
    num_l = m2v - m * right
    num_r = m2v + m * left
    num_c = m2v + m * (left - right)
    return num_l / (span * left), 1.0 - num_c / (right * left), num_r / (span * right)


def _validate_triple(index: int, triple: Triple, tolerance: float) -> Triple:
    low, high = -tolerance, 1.0 + tolerance
    if not all(low <= p <= high for p in triple):
        raise InfeasibleIndexError(index, triple)
    lam_l, lam_c, lam_r = triple
    if abs(lam_c - (1.0 - lam_l - lam_r)) > CONSISTENCY_TOLERANCE:
        raise KernelConsistencyError(
            index,
            triple,
            f"center probability {lam_c!r} disagrees with 1 - left - right "
            f"at index {index}",
        )
    return triple


def check_feasibility(
    grid: Grid,
    spec: MomentSpec,
    index_range: Tuple[int, int],
    slack: float = 0.0,
) -> FeasibilityReport:
    """Check the three feasibility inequalities on an index window.

    For every i in the window, with left and right gaps of x_i, checks

    1. ``M * right <= M^2 + V``
    2. ``-M * left <= M^2 + V``
    3. ``M^2 + V + M * (left - right) <= right * left``

    each as ``lhs <= rhs + slack``. Infeasibility is reported, not raised.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param spec: Moment increments.
    :type spec: momentchain.kernel.MomentSpec
    :param index_range: Inclusive (low, high) index window.
    :type index_range: (int, int)
    :param slack: Nonnegative tolerance added to every right-hand side.
    :type slack: float
    :return: Feasibility report with the first violation (lowest index first,
        then lowest inequality number).
    :rtype: momentchain.kernel.FeasibilityReport
    :raise momentchain.exceptions.ParameterError: If the window is empty or
        the slack is negative.
    """
    low, high = int(index_range[0]), int(index_range[1])
    if low > high:
        raise ParameterError(f"empty index range [{low}, {high}]", "index_range")
    if not (math.isfinite(slack) and slack >= 0):
        raise ParameterError("slack must be a nonnegative number", "slack")

    left, right = grid.gaps_array(low, high)
    m2v = spec.second_moment
    rhs_side = np.full_like(left, m2v)
    sides = (
        (spec.M * right, rhs_side),
        (-spec.M * left, rhs_side),
        (m2v + spec.M * (left - right), right * left),
    )

    first: Optional[Violation] = None
    within_slack = False
    for number, (lhs, rhs) in enumerate(sides, start=1):
        failing = np.flatnonzero(lhs > rhs + slack)
        within_slack = within_slack or bool(np.any(lhs > rhs))
        if failing.size and (first is None or low + int(failing[0]) < first.index):
            pos = int(failing[0])
            first = Violation(low + pos, number, float(lhs[pos]), float(rhs[pos]))

    if first is None and within_slack:
        logger.warning(
            "kernel (M=%r, V=%r) feasible on [%d, %d] only within slack %r",
            spec.M,
            spec.V,
            low,
            high,
            slack,
        )
    if first is None and spec.V < 0:
        logger.warning("feasible window with negative variance increment V=%r", spec.V)

    return FeasibilityReport(first is None, first, (low, high), float(slack))


def check_global_feasibility(
    grid: Grid, spec: MomentSpec, slack: float = 0.0
) -> FeasibilityReport:
    """Check feasibility on every index of the grid.

    The inequalities depend on the index only through its gap pair, so it is
    enough to check the grid's representative window
    (see :meth:`momentchain.grid.Grid.index_window`).

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param spec: Moment increments.
    :type spec: momentchain.kernel.MomentSpec
    :param slack: Tolerance added to every right-hand side.
    :type slack: float
    :return: Feasibility report over the representative window.
    :rtype: momentchain.kernel.FeasibilityReport
    """
    return check_feasibility(grid, spec, grid.index_window(), slack)


def transition_probs(
    grid: Grid, spec: MomentSpec, i: int, tolerance: float = PROBABILITY_TOLERANCE
) -> Triple:
    """Return the moment-matched (left, center, right) probabilities at index i.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param spec: Moment increments.
    :type spec: momentchain.kernel.MomentSpec
    :param i: Grid index.
    :type i: int
    :param tolerance: Allowed excursion of a probability outside [0, 1].
    :type tolerance: float
    :return: Transition probabilities, not clamped.
    :rtype: (float, float, float)
    :raise momentchain.exceptions.InfeasibleIndexError: If a probability lies
        outside [-tolerance, 1 + tolerance].
    """
    left, right = grid.gaps(i)
    return _validate_triple(i, _triple(left, right, spec), tolerance)


def uniform_transition_probs(
    h: float, spec: MomentSpec, tolerance: float = PROBABILITY_TOLERANCE
) -> Triple:
    """Return the index-independent probabilities of a uniform grid.

    Uses ``(M^2 + V - h M) / 2h^2``, ``1 - (M^2 + V) / h^2`` and
    ``(M^2 + V + h M) / 2h^2``, evaluated in the same order as
    :func:`transition_probs` so both agree bit for bit.

    :param h: Grid spacing.
    :type h: float
    :param spec: Moment increments.
    :type spec: momentchain.kernel.MomentSpec
    :param tolerance: Allowed excursion of a probability outside [0, 1].
    :type tolerance: float
    :return: Transition probabilities.
    :rtype: (float, float, float)
    :raise momentchain.exceptions.InfeasibleIndexError: If a probability lies
        outside [-tolerance, 1 + tolerance] (reported at index 0).
    """
    h = require_positive(h, "h")
    m, m2v = spec.M, spec.second_moment
    two_h = 2.0 * h
    triple = (
        (m2v - m * h) / (two_h * h),
        1.0 - m2v / (h * h),
        (m2v + m * h) / (two_h * h),
    )
    return _validate_triple(0, triple, tolerance)


class TransitionKernel:
    """Moment-matched transition probabilities of a grid.

    Scalar queries are memoized; the memo is safe to share between threads.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param spec: Moment increments.
    :type spec: momentchain.kernel.MomentSpec
    :param tolerance: Allowed excursion of a probability outside [0, 1].
    :type tolerance: float
    :param memo_size: Maximum number of memoized indices.
    :type memo_size: int
    """

    def __init__(
        self,
        grid: Grid,
        spec: MomentSpec,
        tolerance: float = PROBABILITY_TOLERANCE,
        memo_size: int = 1 << 16,
    ) -> None:
        self._grid = grid
        self._spec = spec
        self._tolerance = tolerance
        self._probs = lru_cache(maxsize=memo_size)(self._compute)

    def __repr__(self) -> str:
        spec = self._spec
        return f"<TransitionKernel {self._grid!r} M={spec.M!r} V={spec.V!r}>"

    @property
    def grid(self) -> Grid:
        return self._grid

    @property
    def spec(self) -> MomentSpec:
        return self._spec

    def _compute(self, i: int) -> Triple:
        return transition_probs(self._grid, self._spec, i, self._tolerance)

    def probs(self, i: int) -> Triple:
        """Return (left, center, right) probabilities at index **i**.

        :param i: Grid index.
        :type i: int
        :return: Transition probabilities.
        :rtype: (float, float, float)
        :raise momentchain.exceptions.InfeasibleIndexError: If infeasible.
        """
        return self._probs(int(i))

    def feasibility(
        self, index_range: Tuple[int, int], slack: float = 0.0
    ) -> FeasibilityReport:
        """Check the kernel's feasibility inequalities on a window.

        :param index_range: Inclusive (low, high) index window.
        :type index_range: (int, int)
        :param slack: Tolerance added to every right-hand side.
        :type slack: float
        :return: Feasibility report.
        :rtype: momentchain.kernel.FeasibilityReport
        """
        return check_feasibility(self._grid, self._spec, index_range, slack)

    def table(self, low: int, high: int) -> Tuple[FloatArray, FloatArray, FloatArray]:
        """Return probability arrays for every index in [low, high].

        Values are bit-identical to :meth:`probs` at each index.

        :param low: First index.
        :type low: int
        :param high: Last index (inclusive).
        :type high: int
        :return: Arrays of left, center and right probabilities.
        :rtype: (numpy.ndarray, numpy.ndarray, numpy.ndarray)
        :raise momentchain.exceptions.InfeasibleIndexError: At the lowest
            infeasible index.
        """
        left, right = self._grid.gaps_array(low, high)
        lam_l, lam_c, lam_r = _triple_arrays(left, right, self._spec)

        tol = self._tolerance
        stacked = np.stack([lam_l, lam_c, lam_r])
        bad = np.any((stacked < -tol) | (stacked > 1.0 + tol), axis=0)
        bad |= np.abs(lam_c - (1.0 - lam_l - lam_r)) > CONSISTENCY_TOLERANCE
        if np.any(bad):
            pos = int(np.flatnonzero(bad)[0])
            triple = (float(lam_l[pos]), float(lam_c[pos]), float(lam_r[pos]))
            _validate_triple(low + pos, triple, tol)

        logger.debug("built kernel table on [%d, %d] for %r", low, high, self)
        return lam_l, lam_c, lam_r
