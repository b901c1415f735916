__all__ = [
    "TrajectoryBatch",
    "simulate",
    "simulate_segments",
    "snapshot",
    "path_generator",
    "DEFAULT_CHUNK_SIZE",
]

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from momentchain.exceptions import FeasibilityError, ParameterError, StepRangeError
from momentchain.grid import Grid
from momentchain.kernel import TransitionKernel
from momentchain.stats import EmpiricalDistribution
from momentchain.typings import FloatArray, IndexArray
from momentchain.utils import get_batches

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 1024
DEFAULT_BLOCK_STEPS = 1024

Segment = Tuple[int, TransitionKernel]


@dataclass(frozen=True)
class TrajectoryBatch:
    """Grid-index trajectories of N independent chain paths.

    ``states[p, j]`` is the grid index of path p after ``steps[j]`` steps.
    Step 0 is always recorded and every path starts at index 0.
    """

    grid: Grid
    segments: Tuple[Segment, ...]
    n_paths: int
    k_max: int
    seed: int
    steps: IndexArray
    states: IndexArray

    def column(self, k: int) -> int:
        """Return the column of **states** holding step k.

        :param k: Step.
        :type k: int
        :return: Column position.
        :rtype: int
        :raise momentchain.exceptions.StepRangeError: If step k was not
            simulated or not recorded.
        """
        if not 0 <= k <= self.k_max:
            raise StepRangeError(f"step {k} outside [0, {self.k_max}]")
        pos = int(np.searchsorted(self.steps, k))
        if pos >= self.steps.size or self.steps[pos] != k:
            raise StepRangeError(f"step {k} was not recorded")
        return pos

    def indices_at(self, k: int) -> IndexArray:
        """Return the grid indices of all paths after k steps."""
        result: IndexArray = self.states[:, self.column(k)]
        return result

    def coordinates(self) -> FloatArray:
        """Return the grid coordinates of every recorded state."""
        return self.grid.points(self.states)


def path_generator(seed: int, path: int) -> np.random.Generator:
    """Return the random stream of one path.

    Path p draws from a Philox4x64 generator keyed by **seed** whose 256-bit
    counter starts at p * 2**192, so paths never share counter values and a
    path's draws do not depend on how paths are scheduled.

    :param seed: Unsigned 64-bit run seed.
    :type seed: int
    :param path: Path number.
    :type path: int
    :return: Generator for the path.
    :rtype: numpy.random.Generator
    """
    return np.random.Generator(np.random.Philox(key=seed, counter=path << 192))


def _check_count(value: int, name: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ParameterError(f"{name} must be an integer, got {value!r}", name)
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value!r}", name)
    return int(value)


def _record_steps(record: Optional[Sequence[int]], k_max: int) -> IndexArray:
    if record is None:
        return np.arange(k_max + 1, dtype=np.int64)
    steps = np.unique(np.asarray(list(record) + [0], dtype=np.int64))
    if steps[0] < 0 or steps[-1] > k_max:
        raise StepRangeError(f"recorded steps must lie in [0, {k_max}]")
    return steps


class _Thresholds:
    """Inverse-CDF thresholds of one kernel over [-k_max, k_max]."""

    __slots__ = ("start", "move_left", "stay")

    def __init__(self, start: int, kernel: TransitionKernel, k_max: int) -> None:
        lam_l, lam_c, _ = kernel.table(-k_max, k_max)
        self.start = start
        self.move_left = lam_l
        self.stay = lam_l + lam_c


def _run_chunk(
    paths: range,
    seed: int,
    k_max: int,
    thresholds: Sequence[_Thresholds],
    column_of: IndexArray,
    n_columns: int,
    block_steps: int,
) -> IndexArray:
    count = len(paths)
    generators = [path_generator(seed, p) for p in paths]
    out = np.zeros((count, n_columns), dtype=np.int64)
    idx = np.zeros(count, dtype=np.int64)
    draws = np.empty((count, min(block_steps, max(k_max, 1))))

    segment = 0
    for block_start in range(0, k_max, block_steps):
        width = min(block_steps, k_max - block_start)
        block = draws[:, :width]
        for row, gen in enumerate(generators):
            gen.random(out=block[row])

        for offset in range(width):
            t = block_start + offset
            while segment + 1 < len(thresholds) and thresholds[segment + 1].start <= t:
                segment += 1
            table = thresholds[segment]

            pos = idx + k_max
            u = block[:, offset]
            # L, C, R order: left below move_left, stay below move_left + center.
            idx += (u >= table.move_left[pos]).astype(np.int64)
            idx += (u >= table.stay[pos]).astype(np.int64)
            idx -= 1

            col = column_of[t + 1]
            if col >= 0:
                out[:, col] = idx

    return out


def simulate_segments(
    grid: Grid,
    segments: Sequence[Segment],
    k_max: int,
    n_paths: int,
    seed: int,
    record: Optional[Sequence[int]] = None,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    slack: float = 0.0,
    block_steps: int = DEFAULT_BLOCK_STEPS,
) -> TrajectoryBatch:
    """Simulate paths under a sequence of kernels switched at given steps.

    Segment ``(start, kernel)`` drives every transition from step t to t + 1
    with ``start <= t`` until the next segment starts. Paths keep their grid
    position and their random stream across switches.

    :param grid: Grid shared by all kernels.
    :type grid: momentchain.grid.Grid
    :param segments: ``(start_step, kernel)`` pairs, first start 0, strictly
        increasing.
    :type segments: [(int, momentchain.kernel.TransitionKernel)]
    :param k_max: Number of steps.
    :type k_max: int
    :param n_paths: Number of paths.
    :type n_paths: int
    :param seed: Unsigned 64-bit seed.
    :type seed: int
    :param record: Steps to store (step 0 always included); None stores all.
    :type record: [int] | None
    :param threads: Worker threads; results do not depend on it.
    :type threads: int
    :param chunk_size: Paths simulated together by one worker task.
    :type chunk_size: int
    :param slack: Feasibility slack passed to the up-front check.
    :type slack: float
    :param block_steps: Steps of random draws generated per block.
    :type block_steps: int
    :return: Trajectory batch.
    :rtype: momentchain.simulate.TrajectoryBatch
    :raise momentchain.exceptions.FeasibilityError: If any kernel is
        infeasible on [-k_max, k_max]; raised before any sampling.
    """
    k_max = _check_count(k_max, "k_max", 0)
    n_paths = _check_count(n_paths, "n_paths", 1)
    threads = _check_count(threads, "threads", 1)
    chunk_size = _check_count(chunk_size, "chunk_size", 1)
    block_steps = _check_count(block_steps, "block_steps", 1)
    seed = _check_count(seed, "seed", 0)
    if seed >= 1 << 64:
        raise ParameterError("seed must fit in 64 unsigned bits", "seed")

    if not segments or segments[0][0] != 0:
        raise ParameterError("first segment must start at step 0", "segments")
    starts = [start for start, _ in segments]
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise ParameterError("segment starts must be strictly increasing", "segments")
    for _, kernel in segments:
        if kernel.grid is not grid:
            raise ParameterError("kernel was built on a different grid", "segments")
        report = kernel.feasibility((-k_max, k_max), slack)
        if not report.feasible:
            raise FeasibilityError(report)

    thresholds = [_Thresholds(start, kernel, k_max) for start, kernel in segments]
    steps = _record_steps(record, k_max)
    column_of = np.full(k_max + 1, -1, dtype=np.int64)
    column_of[steps] = np.arange(steps.size)

    chunks = list(get_batches(n_paths, chunk_size))
    logger.debug(
        "simulating %d paths x %d steps in %d chunks on %d threads",
        n_paths,
        k_max,
        len(chunks),
        threads,
    )

    def run(paths: range) -> IndexArray:
        return _run_chunk(
            paths, seed, k_max, thresholds, column_of, steps.size, block_steps
        )

    results: List[IndexArray]
    if threads == 1:
        results = [run(paths) for paths in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))

    return TrajectoryBatch(
        grid=grid,
        segments=tuple(segments),
        n_paths=n_paths,
        k_max=k_max,
        seed=seed,
        steps=steps,
        states=np.concatenate(results, axis=0),
    )


def simulate(
    grid: Grid,
    kernel: TransitionKernel,
    k_max: int,
    n_paths: int,
    seed: int,
    record: Optional[Sequence[int]] = None,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    slack: float = 0.0,
) -> TrajectoryBatch:
    """Simulate N paths of the chain for k_max steps starting at index 0.

    Each step draws u uniform on [0, 1) and moves left if u < lambda_L, stays
    if u < lambda_L + lambda_C and moves right otherwise.

    :param grid: Grid.
    :type grid: momentchain.grid.Grid
    :param kernel: Transition kernel on **grid**.
    :type kernel: momentchain.kernel.TransitionKernel
    :param k_max: Number of steps.
    :type k_max: int
    :param n_paths: Number of paths.
    :type n_paths: int
    :param seed: Unsigned 64-bit seed.
    :type seed: int
    :param record: Steps to store (step 0 always included); None stores all.
    :type record: [int] | None
    :param threads: Worker threads; results do not depend on it.
    :type threads: int
    :param chunk_size: Paths simulated together by one worker task.
    :type chunk_size: int
    :param slack: Feasibility slack passed to the up-front check.
    :type slack: float
    :return: Trajectory batch.
    :rtype: momentchain.simulate.TrajectoryBatch
    :raise momentchain.exceptions.FeasibilityError: If the kernel is
        infeasible on [-k_max, k_max].
    """
    return simulate_segments(
        grid,
        [(0, kernel)],
        k_max,
        n_paths,
        seed,
        record=record,
        threads=threads,
        chunk_size=chunk_size,
        slack=slack,
    )


def snapshot(batch: TrajectoryBatch, k: int) -> EmpiricalDistribution:
    """Return the empirical distribution of the path coordinates at step k.

    :param batch: Trajectory batch.
    :type batch: momentchain.simulate.TrajectoryBatch
    :param k: Recorded step.
    :type k: int
    :return: N samples of x_{r(k)}.
    :rtype: momentchain.stats.EmpiricalDistribution
    :raise momentchain.exceptions.StepRangeError: If k was not recorded.
    """
    return EmpiricalDistribution(batch.grid.points(batch.indices_at(k)))
