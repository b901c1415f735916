__all__ = [
    "TruncatedChain",
    "GridDistribution",
    "RecurrenceReport",
    "build_truncated",
    "propagate",
    "propagate_steps",
    "mean_var",
    "check_recurrences",
    "MomentSeries",
    "moment_series",
]

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from momentchain.exceptions import ParameterError, TruncationError
from momentchain.grid import Grid
from momentchain.kernel import MomentSpec, TransitionKernel
from momentchain.typings import FloatArray, IndexArray, Json

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-12


@dataclass(frozen=True)
class GridDistribution:
    """Probability mass on the states x_{-n}..x_n of a truncated chain."""

    indices: IndexArray
    support: FloatArray
    mass: FloatArray

    @property
    def n(self) -> int:
        return (self.mass.size - 1) // 2

    @property
    def total(self) -> float:
        return math.fsum(self.mass)

    @property
    def mass_at_boundary(self) -> float:
        """Return the mass sitting on the two absorbing states."""
        return float(self.mass[0] + self.mass[-1])

    def at(self, i: int) -> float:
        """Return the mass at grid index **i**.

        :param i: Grid index in [-n, n].
        :type i: int
        :return: Probability mass.
        :rtype: float
        """
        if not -self.n <= i <= self.n:
            raise ParameterError(f"index {i} outside [-{self.n}, {self.n}]", "i")
        return float(self.mass[i + self.n])


@dataclass(frozen=True)
class TruncatedChain:
    """Finite restriction of the chain to x_{-n}..x_n with absorbing ends.

    Row i of the transition matrix is stored as the three diagonals
    ``lower[i]``, ``center[i]`` and ``upper[i]``: the probabilities of moving
    from state i to i-1, staying, and moving to i+1.
    """

    n: int
    kernel: TransitionKernel
    indices: IndexArray
    states: FloatArray
    lower: FloatArray
    center: FloatArray
    upper: FloatArray

    @property
    def size(self) -> int:
        return 2 * self.n + 1

    @property
    def initial(self) -> FloatArray:
        """Return the initial distribution: all mass on x_0."""
        nu = np.zeros(self.size)
        nu[self.n] = 1.0
        return nu

    def dense_matrix(self) -> FloatArray:
        """Return the full (2n+1) x (2n+1) transition matrix.

        :return: Row-stochastic matrix.
        :rtype: numpy.ndarray
        """
        matrix = np.diag(self.center)
        matrix += np.diag(self.lower[1:], k=-1)
        matrix += np.diag(self.upper[:-1], k=1)
        return matrix


@dataclass(frozen=True)
class RecurrenceReport:
    """Residuals of the per-step moment recurrences and their closed forms.

    ``mean_step[k-1]`` is ``mean(k) - mean(k-1) - M`` and ``second_step[k-1]``
    is ``m2(k) - m2(k-1) - (M^2 + V + 2 M^2 (k-1))`` for k = 1..k_max, where m2
    is the second raw moment. ``mean_closed[k]`` and ``second_closed[k]``
    compare against ``M k`` and ``M^2 k^2 + V k`` for k = 0..k_max.
    """

    k_max: int
    mean_step: FloatArray
    second_step: FloatArray
    mean_closed: FloatArray
    second_closed: FloatArray
    step_tolerance: Tuple[float, float] = (1e-11, 1e-10)
    closed_tolerance: Tuple[float, float] = (1e-10, 1e-9)

    @property
    def max_step_residual(self) -> float:
        residuals = np.concatenate([np.abs(self.mean_step), np.abs(self.second_step)])
        return float(residuals.max()) if residuals.size else 0.0

    @property
    def passed(self) -> bool:
        mean_tol, second_tol = self.step_tolerance
        closed_mean_tol, closed_second_tol = self.closed_tolerance
        return bool(
            np.all(np.abs(self.mean_step) <= mean_tol)
            and np.all(np.abs(self.second_step) <= second_tol)
            and np.all(np.abs(self.mean_closed) <= closed_mean_tol)
            and np.all(np.abs(self.second_closed) <= closed_second_tol)
        )

    def to_json(self) -> Json:
        return {
            "k_max": self.k_max,
            "passed": self.passed,
            "max_step_residual": self.max_step_residual,
            "max_mean_closed": float(np.max(np.abs(self.mean_closed))),
            "max_second_closed": float(np.max(np.abs(self.second_closed))),
        }


def build_truncated(grid: Grid, kernel: TransitionKernel, n: int) -> TruncatedChain:
    """Build the truncated chain on x_{-n}..x_n.

    Interior rows -(n-1)..n-1 carry the kernel's probabilities; rows -n and n
    are absorbing.

    :param grid: Grid of the kernel.
    :type grid: momentchain.grid.Grid
    :param kernel: Transition kernel.
    :type kernel: momentchain.kernel.TransitionKernel
    :param n: Half-width of the truncation.
    :type n: int
    :return: Truncated chain.
    :rtype: momentchain.exact.TruncatedChain
    :raise momentchain.exceptions.InfeasibleIndexError: If the kernel is
        infeasible at an interior index.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}", "n")
    if kernel.grid is not grid:
        raise ParameterError("kernel was built on a different grid", "kernel")

    lam_l, lam_c, lam_r = kernel.table(-(n - 1), n - 1)
    lower = np.concatenate(([0.0], lam_l, [0.0]))
    center = np.concatenate(([1.0], lam_c, [1.0]))
    upper = np.concatenate(([0.0], lam_r, [0.0]))
    indices = np.arange(-n, n + 1, dtype=np.int64)

    logger.debug("built truncated chain n=%d for %r", n, kernel)
    return TruncatedChain(
        n=n,
        kernel=kernel,
        indices=indices,
        states=grid.points(indices),
        lower=lower,
        center=center,
        upper=upper,
    )


def _step(chain: TruncatedChain, mass: FloatArray) -> FloatArray:
    new = mass * chain.center
    new[:-1] += mass[1:] * chain.lower[1:]
    new[1:] += mass[:-1] * chain.upper[:-1]
    return new


def propagate_steps(chain: TruncatedChain, k: int) -> Iterator[GridDistribution]:
    """Yield the distributions after 0, 1, ..., k steps.

    :param chain: Truncated chain.
    :type chain: momentchain.exact.TruncatedChain
    :param k: Number of steps.
    :type k: int
    :return: Generator of k + 1 distributions.
    :rtype: Iterator[momentchain.exact.GridDistribution]
    """
    if isinstance(k, bool) or not isinstance(k, int) or k < 0:
        raise ParameterError(f"k must be a nonnegative integer, got {k!r}", "k")

    mass = chain.initial
    yield GridDistribution(chain.indices, chain.states, mass.copy())
    for step in range(1, k + 1):
        mass = _step(chain, mass)
        drift = abs(math.fsum(mass) - 1.0)
        if drift > MASS_TOLERANCE * step:
            logger.warning("mass drifted by %r after %d steps", drift, step)
        yield GridDistribution(chain.indices, chain.states, mass.copy())


def propagate(chain: TruncatedChain, k: int) -> GridDistribution:
    """Return the initial distribution pushed through k transitions.

    :param chain: Truncated chain.
    :type chain: momentchain.exact.TruncatedChain
    :param k: Number of steps.
    :type k: int
    :return: Distribution after k steps.
    :rtype: momentchain.exact.GridDistribution
    """
    if isinstance(k, bool) or not isinstance(k, int) or k < 0:
        raise ParameterError(f"k must be a nonnegative integer, got {k!r}", "k")

    mass = chain.initial
    for _ in range(k):
        mass = _step(chain, mass)
    return GridDistribution(chain.indices, chain.states, mass)


def _raw_moments(dist: GridDistribution) -> Tuple[float, float]:
    weighted = dist.support * dist.mass
    return math.fsum(weighted), math.fsum(dist.support * weighted)


def mean_var(dist: GridDistribution) -> Tuple[float, float]:
    """Return the mean and variance of a grid distribution.

    Sums are exactly rounded (``math.fsum``).

    :param dist: Normalized distribution.
    :type dist: momentchain.exact.GridDistribution
    :return: (mean, variance), variance as E[r^2] - E[r]^2.
    :rtype: (float, float)
    """
    mean, second = _raw_moments(dist)
    return mean, second - mean * mean


@dataclass(frozen=True)
class MomentSeries:
    """Raw moments and boundary mass of the chain for k = 0..k_max."""

    mean: FloatArray
    second: FloatArray
    boundary: FloatArray

    @property
    def variance(self) -> FloatArray:
        result: FloatArray = self.second - self.mean * self.mean
        return result

    def step_residuals(self, spec: MomentSpec) -> FloatArray:
        """Return the largest recurrence residual of each step, 0 at k = 0."""
        steps = np.arange(self.mean.size - 1, dtype=np.float64)
        m = spec.M
        mean_step = np.diff(self.mean) - m
        second_step = np.diff(self.second) - (spec.second_moment + 2.0 * m * m * steps)
        result: FloatArray = np.concatenate(
            ([0.0], np.maximum(np.abs(mean_step), np.abs(second_step)))
        )
        return result


def moment_series(chain: TruncatedChain, k_max: int) -> MomentSeries:
    """Return the raw moments of the chain after 0..k_max steps.

    Beyond k = n mass absorbed at the ends biases the moments; a warning is
    logged in that case.

    :param chain: Truncated chain.
    :type chain: momentchain.exact.TruncatedChain
    :param k_max: Last step.
    :type k_max: int
    :return: Moment series.
    :rtype: momentchain.exact.MomentSeries
    """
    if k_max > chain.n:
        logger.warning(
            "k_max=%d exceeds n=%d, moments include absorbed mass", k_max, chain.n
        )
    rows = [
        (*_raw_moments(d), d.mass_at_boundary) for d in propagate_steps(chain, k_max)
    ]
    table = np.array(rows, dtype=np.float64)
    return MomentSeries(mean=table[:, 0], second=table[:, 1], boundary=table[:, 2])


def check_recurrences(chain: TruncatedChain, k_max: int) -> RecurrenceReport:
    """Measure the moment recurrences of the chain up to k_max steps.

    :param chain: Truncated chain.
    :type chain: momentchain.exact.TruncatedChain
    :param k_max: Last step; at most n so no mass reaches the boundary.
    :type k_max: int
    :return: Residual report.
    :rtype: momentchain.exact.RecurrenceReport
    :raise momentchain.exceptions.TruncationError: If k_max > n.
    """
    if k_max > chain.n:
        raise TruncationError(
            f"k_max={k_max} exceeds truncation half-width n={chain.n}"
        )
    spec = chain.kernel.spec
    m, m2v = spec.M, spec.second_moment

    series = moment_series(chain, k_max)
    means, seconds = series.mean, series.second
    steps = np.arange(k_max + 1, dtype=np.float64)

    return RecurrenceReport(
        k_max=k_max,
        mean_step=np.diff(means) - m,
        second_step=np.diff(seconds) - (m2v + 2.0 * m * m * steps[:-1]),
        mean_closed=means - m * steps,
        second_closed=seconds - (m * m * steps * steps + spec.V * steps),
    )
