import math

import numpy as np
import pytest

from momentchain.exceptions import FeasibilityError, ParameterError, StepRangeError
from momentchain.grid import make_explicit, make_uniform
from momentchain.kernel import MomentSpec, TransitionKernel
from momentchain.simulate import (
    TrajectoryBatch,
    path_generator,
    simulate,
    simulate_segments,
    snapshot,
)
from momentchain.stats import EmpiricalDistribution
from tests.helpers import count_true, mean_and_variance

GBM_SPEC = MomentSpec(1.875 * 0.0002, 0.25 * 0.0002)


def test_simulate_shapes():
    grid = make_uniform(1.0)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.2))
    batch = simulate(grid, kernel, 50, 30, seed=3)
    assert isinstance(batch, TrajectoryBatch)
    assert batch.states.shape == (30, 51)
    assert batch.steps.tolist() == list(range(51))
    assert np.all(batch.states[:, 0] == 0)
    # Nearest-neighbor moves only.
    assert np.all(np.abs(np.diff(batch.states, axis=1)) <= 1)
    assert np.array_equal(batch.coordinates(), batch.states.astype(float))


def test_simulation_is_deterministic(two_sided):
    kernel = TransitionKernel(two_sided, GBM_SPEC)
    base = simulate(two_sided, kernel, 200, 300, seed=42)
    for threads, chunk_size in [(1, 1), (4, 7), (4, 1024), (3, 64)]:
        other = simulate(
            two_sided, kernel, 200, 300, seed=42, threads=threads, chunk_size=chunk_size
        )
        assert np.array_equal(base.states, other.states)

    assert not np.array_equal(
        base.states, simulate(two_sided, kernel, 200, 300, seed=43).states
    )


def test_paths_do_not_depend_on_path_count(two_sided):
    kernel = TransitionKernel(two_sided, GBM_SPEC)
    small = simulate(two_sided, kernel, 100, 10, seed=9)
    large = simulate(two_sided, kernel, 100, 25, seed=9, chunk_size=4)
    assert np.array_equal(small.states, large.states[:10])


def test_block_size_does_not_change_paths():
    grid = make_uniform(1.0)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.2))
    base = simulate_segments(grid, [(0, kernel)], 70, 12, seed=5)
    other = simulate_segments(grid, [(0, kernel)], 70, 12, seed=5, block_steps=16)
    assert np.array_equal(base.states, other.states)


def test_path_streams_are_independent():
    first = path_generator(1, 0).random(8)
    again = path_generator(1, 0).random(8)
    second = path_generator(1, 1).random(8)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, second)


def test_record_subset():
    grid = make_uniform(1.0)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.2))
    full = simulate(grid, kernel, 40, 20, seed=11)
    part = simulate(grid, kernel, 40, 20, seed=11, record=[40, 10, 10])
    assert part.steps.tolist() == [0, 10, 40]
    assert np.array_equal(part.indices_at(10), full.indices_at(10))
    assert np.array_equal(part.indices_at(40), full.indices_at(40))

    with pytest.raises(StepRangeError):
        part.indices_at(20)
    with pytest.raises(StepRangeError):
        part.indices_at(41)
    with pytest.raises(StepRangeError):
        simulate(grid, kernel, 40, 20, seed=11, record=[41])


def test_infeasible_kernel_fails_before_sampling():
    grid = make_uniform(0.1)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.02))
    with pytest.raises(FeasibilityError) as err:
        simulate(grid, kernel, 10, 5, seed=0)
    report = err.value.report
    assert report.first_violation.index == -10
    assert err.value.to_json()["report"]["feasible"] is False


def test_feasibility_window_tracks_reachable_states():
    # Infeasible only from index 2 on, which 1 step cannot reach.
    grid = make_explicit([0.0, 1.0, 2.0, 2.01], 1.0, 1.0)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.1))
    batch = simulate(grid, kernel, 1, 5, seed=0)
    assert batch.k_max == 1
    with pytest.raises(FeasibilityError):
        simulate(grid, kernel, 2, 5, seed=0)


@pytest.mark.parametrize(
    "kwargs,field",
    [
        ({"k_max": -1}, "k_max"),
        ({"n_paths": 0}, "n_paths"),
        ({"threads": 0}, "threads"),
        ({"chunk_size": 0}, "chunk_size"),
        ({"seed": -1}, "seed"),
        ({"seed": 1 << 64}, "seed"),
        ({"n_paths": 2.0}, "n_paths"),
    ],
)
def test_simulate_rejects_bad_arguments(kwargs, field):
    grid = make_uniform(1.0)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.2))
    args = {"k_max": 5, "n_paths": 3, "seed": 0}
    args.update(kwargs)
    with pytest.raises(ParameterError) as err:
        simulate(grid, kernel, **args)
    assert err.value.field == field


def test_segments_must_be_ordered():
    grid = make_uniform(1.0)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.2))
    with pytest.raises(ParameterError):
        simulate_segments(grid, [], 5, 3, 0)
    with pytest.raises(ParameterError):
        simulate_segments(grid, [(1, kernel)], 5, 3, 0)
    with pytest.raises(ParameterError):
        simulate_segments(grid, [(0, kernel), (3, kernel), (3, kernel)], 5, 3, 0)
    with pytest.raises(ParameterError):
        simulate_segments(make_uniform(2.0), [(0, kernel)], 5, 3, 0)


def test_identical_segments_match_single_kernel(two_sided):
    kernel = TransitionKernel(two_sided, GBM_SPEC)
    twin = TransitionKernel(two_sided, GBM_SPEC)
    single = simulate(two_sided, kernel, 120, 40, seed=8)
    split = simulate_segments(two_sided, [(0, kernel), (50, twin)], 120, 40, seed=8)
    assert np.array_equal(single.states, split.states)


def test_segment_switch_changes_drift():
    grid = make_uniform(1.0)
    drift_up = TransitionKernel(grid, MomentSpec(0.2, 0.2))
    drift_down = TransitionKernel(grid, MomentSpec(-0.2, 0.2))
    segments = [(0, drift_up), (100, drift_down)]
    batch = simulate_segments(grid, segments, 200, 500, seed=1)
    assert snapshot(batch, 100).mean > 10.0
    assert abs(snapshot(batch, 200).mean) < 5.0


def test_snapshot():
    grid = make_uniform(0.5)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.05))
    batch = simulate(grid, kernel, 10, 8, seed=2)
    snap = snapshot(batch, 10)
    assert isinstance(snap, EmpiricalDistribution)
    assert len(snap) == 8
    assert np.array_equal(snap.samples, 0.5 * batch.indices_at(10))
    assert np.all(snapshot(batch, 0).samples == 0.0)


def test_sample_moments_match_kernel(
    two_sided, complete, mc_runs, mc_paths, mc_steps
):
    kernel = TransitionKernel(two_sided, GBM_SPEC)
    mean, var = GBM_SPEC.M * mc_steps, GBM_SPEC.V * mc_steps
    rel = 0.1 if complete else 0.2
    results = []
    for run in range(mc_runs):
        batch = simulate(
            two_sided, kernel, mc_steps, mc_paths, seed=run, record=[mc_steps]
        )
        sample_mean, sample_var = mean_and_variance(
            snapshot(batch, mc_steps).samples, np.full(mc_paths, 1.0 / mc_paths)
        )
        mean_ok = abs(sample_mean - mean) <= 4.0 * math.sqrt(var / mc_paths)
        results.append(mean_ok and abs(sample_var - var) <= rel * var)
    assert count_true(results) >= mc_runs - 1
