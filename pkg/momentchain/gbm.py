__all__ = [
    "GbmParams",
    "CoefficientSchedule",
    "PricePaths",
    "gbm_spec",
    "gbm_kernel",
    "gbm_kernel_probs",
    "log_return_law",
    "price_paths",
    "simulate_schedule",
    "wasserstein_series",
]

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from momentchain.exceptions import ParameterError, ScheduleError
from momentchain.grid import Grid
from momentchain.kernel import MomentSpec, TransitionKernel, transition_probs
from momentchain.simulate import (
    DEFAULT_CHUNK_SIZE,
    TrajectoryBatch,
    simulate_segments,
    snapshot,
)
from momentchain.stats import DEFAULT_NODES, NormalLaw, wasserstein1
from momentchain.typings import FloatArray, IndexArray, Json, Triple
from momentchain.utils import require_positive

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GbmParams:
    """Coefficients of geometric Brownian motion ds = mu s dt + sigma s dw.

    :param mu: Drift (1/time).
    :type mu: float
    :param sigma2: Squared volatility (1/time).
    :type sigma2: float
    :param s0: Initial price.
    :type s0: float
    :param tau: Physical time per chain step.
    :type tau: float
    """

    mu: float
    sigma2: float
    s0: float
    tau: float

    def __post_init__(self) -> None:
        real = isinstance(self.mu, (int, float)) and not isinstance(self.mu, bool)
        if not (real and math.isfinite(self.mu)):
            raise ParameterError("mu must be a finite real", "mu")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma2", require_positive(self.sigma2, "sigma2"))
        object.__setattr__(self, "s0", require_positive(self.s0, "s0"))
        object.__setattr__(self, "tau", require_positive(self.tau, "tau"))

    @property
    def eta(self) -> float:
        """Return the log-return drift mu - sigma2 / 2."""
        return self.mu - 0.5 * self.sigma2

    def to_json(self) -> Json:
        return {"mu": self.mu, "sigma2": self.sigma2, "s0": self.s0, "tau": self.tau}


class CoefficientSchedule:
    """Piecewise-constant GBM coefficients switched at given steps.

    Segment ``(start, params)`` applies to every transition from step t to
    t + 1 with ``start <= t`` until the next segment starts. All segments
    share s0 and tau.

    :param segments: ``(start_step, params)`` pairs; first start 0, strictly
        increasing.
    :type segments: [(int, momentchain.gbm.GbmParams)]
    :raise momentchain.exceptions.ScheduleError: If the segments are
        malformed.
    """

    __slots__ = ("_segments",)

    def __init__(self, segments: Sequence[Tuple[int, GbmParams]]) -> None:
        segments = tuple((start, params) for start, params in segments)
        if not segments:
            raise ScheduleError("schedule needs at least one segment", "schedule")

        starts = [start for start, _ in segments]
        for start in starts:
            if isinstance(start, bool) or not isinstance(start, int) or start < 0:
                raise ScheduleError(f"invalid start step {start!r}", "schedule")
        if starts[0] != 0:
            raise ScheduleError("first segment must start at step 0", "schedule")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ScheduleError("start steps must be strictly increasing", "schedule")

        first = segments[0][1]
        for _, params in segments[1:]:
            if params.s0 != first.s0 or params.tau != first.tau:
                raise ScheduleError("segments must share s0 and tau", "schedule")
        self._segments = segments

    @classmethod
    def constant(cls, params: GbmParams) -> "CoefficientSchedule":
        """Return the one-segment schedule of **params**."""
        return cls([(0, params)])

    def __len__(self) -> int:
        return len(self._segments)

    def __repr__(self) -> str:
        return f"<CoefficientSchedule segments={len(self._segments)}>"

    @property
    def segments(self) -> Tuple[Tuple[int, GbmParams], ...]:
        return self._segments

    @property
    def s0(self) -> float:
        return self._segments[0][1].s0

    @property
    def tau(self) -> float:
        return self._segments[0][1].tau

    def _steps_per_segment(self, k: int) -> List[Tuple[int, GbmParams]]:
        bounds = [start for start, _ in self._segments[1:]] + [k]
        return [
            (max(0, min(end, k) - start), params)
            for (start, params), end in zip(self._segments, bounds)
        ]

    def law(self, k: int) -> NormalLaw:
        """Return the exact law of ln(s_{k tau} / s0) under the schedule.

        :param k: Steps.
        :type k: int
        :return: Normal law whose moments add up over the segments.
        :rtype: momentchain.stats.NormalLaw
        """
        _check_steps(k)
        parts = self._steps_per_segment(k)
        mean = math.fsum(p.eta * p.tau * steps for steps, p in parts)
        variance = math.fsum(p.sigma2 * p.tau * steps for steps, p in parts)
        return NormalLaw(mean, variance)

    def expected_price(self, k: int) -> float:
        """Return E[s_{k tau}] = s0 exp(sum of mu tau over the elapsed steps)."""
        _check_steps(k)
        parts = self._steps_per_segment(k)
        return self.s0 * math.exp(math.fsum(p.mu * p.tau * steps for steps, p in parts))

    def to_json(self) -> Json:
        return {
            "segments": [
                {"start": start, **params.to_json()} for start, params in self._segments
            ]
        }


Coefficients = Union[GbmParams, CoefficientSchedule]


@dataclass(frozen=True)
class PricePaths:
    """Price trajectories s0 exp(r(k)) with their average and expectation."""

    steps: IndexArray
    prices: FloatArray
    mean: FloatArray
    expected: FloatArray

    def relative_error(self) -> FloatArray:
        """Return |mean - expected| / expected per recorded step."""
        result: FloatArray = np.abs(self.mean - self.expected) / self.expected
        return result


def _check_steps(k: int) -> None:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 0:
        raise ParameterError(f"k must be a nonnegative integer, got {k!r}", "k")


def _as_schedule(coefficients: Coefficients) -> CoefficientSchedule:
    if isinstance(coefficients, CoefficientSchedule):
        return coefficients
    return CoefficientSchedule.constant(coefficients)


def gbm_spec(params: GbmParams) -> MomentSpec:
    """Return the log-return increments M = eta tau, V = sigma2 tau.

    :param params: GBM coefficients.
    :type params: momentchain.gbm.GbmParams
    :return: Moment increments.
    :rtype: momentchain.kernel.MomentSpec
    """
    return MomentSpec(params.eta * params.tau, params.sigma2 * params.tau)


def gbm_kernel(grid: Grid, params: GbmParams) -> TransitionKernel:
    """Return the log-return transition kernel on **grid**."""
    return TransitionKernel(grid, gbm_spec(params))


def gbm_kernel_probs(grid: Grid, params: GbmParams, i: int) -> Triple:
    """Return the log-return transition probabilities at index i.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param params: GBM coefficients.
    :type params: momentchain.gbm.GbmParams
    :param i: Grid index.
    :type i: int
    :return: (left, center, right) probabilities.
    :rtype: (float, float, float)
    :raise momentchain.exceptions.InfeasibleIndexError: If infeasible at i.
    """
    return transition_probs(grid, gbm_spec(params), i)


def log_return_law(params: GbmParams, k: int) -> NormalLaw:
    """Return the exact law N(eta k tau, sigma2 k tau) of ln(s_{k tau} / s0).

    :param params: GBM coefficients.
    :type params: momentchain.gbm.GbmParams
    :param k: Steps.
    :type k: int
    :return: Normal law; unpacks as ``mean, variance``.
    :rtype: momentchain.stats.NormalLaw
    """
    _check_steps(k)
    return NormalLaw(params.eta * k * params.tau, params.sigma2 * k * params.tau)


def price_paths(
    batch: TrajectoryBatch,
    coefficients: Coefficients,
    paths: Optional[int] = None,
) -> PricePaths:
    """Rebuild prices s0 exp(x_{r(k)}) from log-return trajectories.

    The chain matches the first two moments of the log-return only, so the
    average price tracks E[s_{k tau}] = s0 exp(mu k tau) approximately.

    :param batch: Trajectories simulated with a GBM kernel or schedule.
    :type batch: momentchain.simulate.TrajectoryBatch
    :param coefficients: Coefficients used for the simulation.
    :type coefficients: momentchain.gbm.GbmParams |
        momentchain.gbm.CoefficientSchedule
    :param paths: Keep only the first **paths** trajectories in ``prices``
        (the average always uses every path). None keeps all.
    :type paths: int | None
    :return: Price trajectories, per-step average and expectation.
    :rtype: momentchain.gbm.PricePaths
    """
    schedule = _as_schedule(coefficients)
    prices = schedule.s0 * np.exp(batch.coordinates())
    expected = np.array([schedule.expected_price(int(k)) for k in batch.steps])
    if paths is not None:
        if paths < 0:
            raise ParameterError("paths must be nonnegative", "paths")
        kept = prices[:paths]
    else:
        kept = prices
    return PricePaths(
        steps=batch.steps,
        prices=kept,
        mean=prices.mean(axis=0),
        expected=expected,
    )


def simulate_schedule(
    grid: Grid,
    schedule: Coefficients,
    k_max: int,
    n_paths: int,
    seed: int,
    record: Optional[Sequence[int]] = None,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    slack: float = 0.0,
) -> TrajectoryBatch:
    """Simulate log-return paths under a coefficient schedule.

    Every segment's kernel is checked on the whole window [-k_max, k_max]
    before any sampling, since paths may sit anywhere in it when a segment
    takes over. A one-segment schedule reproduces ``simulate`` exactly.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param schedule: Coefficient schedule (or constant coefficients).
    :type schedule: momentchain.gbm.CoefficientSchedule |
        momentchain.gbm.GbmParams
    :param k_max: Number of steps.
    :type k_max: int
    :param n_paths: Number of paths.
    :type n_paths: int
    :param seed: Unsigned 64-bit seed.
    :type seed: int
    :param record: Steps to store; None stores all.
    :type record: [int] | None
    :param threads: Worker threads.
    :type threads: int
    :param chunk_size: Paths per worker task.
    :type chunk_size: int
    :param slack: Feasibility slack.
    :type slack: float
    :return: Trajectory batch.
    :rtype: momentchain.simulate.TrajectoryBatch
    :raise momentchain.exceptions.FeasibilityError: If any segment's kernel
        is infeasible.
    """
    schedule = _as_schedule(schedule)
    segments = [
        (start, gbm_kernel(grid, params)) for start, params in schedule.segments
    ]
    logger.debug("simulating schedule of %d segments", len(segments))
    return simulate_segments(
        grid,
        segments,
        k_max,
        n_paths,
        seed,
        record=record,
        threads=threads,
        chunk_size=chunk_size,
        slack=slack,
    )


def wasserstein_series(
    batch: TrajectoryBatch,
    coefficients: Union[Coefficients, Callable[[int], NormalLaw]],
    steps: Optional[Sequence[int]] = None,
    nodes: int = DEFAULT_NODES,
) -> List[Tuple[int, float]]:
    """Return W1 between the simulated and exact laws per step.

    :param batch: Trajectory batch.
    :type batch: momentchain.simulate.TrajectoryBatch
    :param coefficients: Coefficients used for the simulation, or any
        function returning the exact law after k steps.
    :type coefficients: momentchain.gbm.GbmParams |
        momentchain.gbm.CoefficientSchedule | callable
    :param steps: Recorded steps to evaluate; None evaluates every recorded
        step.
    :type steps: [int] | None
    :param nodes: Midpoint nodes of the quantile integral.
    :type nodes: int
    :return: ``(k, W1)`` pairs in the order of **steps**.
    :rtype: [(int, float)]
    """
    if isinstance(coefficients, (GbmParams, CoefficientSchedule)):
        law = _as_schedule(coefficients).law
    else:
        law = coefficients
    if steps is None:
        steps = [int(k) for k in batch.steps]
    return [(k, wasserstein1(snapshot(batch, k), law(k), nodes)) for k in steps]
