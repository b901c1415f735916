import logging

import numpy as np
import pytest

from momentchain.exceptions import InfeasibleIndexError, ParameterError
from momentchain.grid import make_explicit, make_two_sided, make_uniform
from momentchain.kernel import (
    FeasibilityReport,
    MomentSpec,
    TransitionKernel,
    Violation,
    check_feasibility,
    check_global_feasibility,
    transition_probs,
    uniform_transition_probs,
)
from tests.helpers import solve_moment_system

GBM_SPEC = MomentSpec(1.875 * 0.0002, 0.25 * 0.0002)


def test_moment_spec():
    spec = MomentSpec(0.5, 0.2)
    assert spec.second_moment == 0.25 + 0.2
    with pytest.raises(ParameterError):
        MomentSpec(float("nan"), 0.2)
    with pytest.raises(ParameterError):
        MomentSpec(0.0, float("inf"))


def test_feasibility_uniform():
    report = check_feasibility(make_uniform(1.0), MomentSpec(0.0, 0.2), (-100, 100))
    assert isinstance(report, FeasibilityReport)
    assert report.feasible is True
    assert report.first_violation is None
    assert report.index_range == (-100, 100)


def test_feasibility_gbm_two_sided():
    grid = make_two_sided(0.1, 0.01)
    report = check_feasibility(grid, GBM_SPEC, (-10000, 10000))
    assert report.feasible is True

    spec = MomentSpec(1.875 * 0.02, 0.25 * 0.02)
    report = check_feasibility(grid, spec, (-10000, 10000))
    assert report.feasible is False
    violation = report.first_violation
    assert isinstance(violation, Violation)
    assert violation.inequality == 3
    assert violation.lhs > violation.rhs
    assert -10000 <= violation.index <= 10000


def test_feasibility_reports_lowest_index_first():
    report = check_feasibility(make_uniform(0.1), MomentSpec(0.0, 0.02), (-5, 5))
    assert report.feasible is False
    violation = report.first_violation
    assert violation.index == -5
    assert violation.inequality == 3
    assert violation.lhs == pytest.approx(0.02)
    assert violation.rhs == pytest.approx(0.01)
    body = report.to_json()
    assert body["feasible"] is False
    assert body["first_violation"]["index"] == -5
    assert body["first_violation"]["inequality"] == 3


def test_feasibility_lowest_inequality_at_same_index():
    # The right-step bound and the spread bound both fail at every index.
    report = check_feasibility(make_uniform(1.0), MomentSpec(1.5, -1.2), (0, 3))
    violation = report.first_violation
    assert violation.index == 0
    assert violation.inequality == 1
    assert violation.lhs == 1.5
    assert violation.rhs == pytest.approx(1.05)


def test_feasibility_slack(caplog):
    spec = MomentSpec(0.0, 1.0 + 1e-15)
    grid = make_uniform(1.0)
    assert check_feasibility(grid, spec, (0, 0)).feasible is False
    with caplog.at_level(logging.WARNING, logger="momentchain.kernel"):
        report = check_feasibility(grid, spec, (0, 0), slack=1e-12)
    assert report.feasible is True
    assert report.slack == 1e-12
    assert "within slack" in caplog.text


def test_feasibility_rejects_bad_arguments():
    with pytest.raises(ParameterError) as err:
        check_feasibility(make_uniform(1.0), MomentSpec(0.0, 0.1), (3, 2))
    assert err.value.field == "index_range"
    with pytest.raises(ParameterError):
        check_feasibility(make_uniform(1.0), MomentSpec(0.0, 0.1), (0, 1), slack=-1.0)


def test_report_invariant():
    with pytest.raises(ValueError):
        FeasibilityReport(True, Violation(0, 1, 1.0, 0.0), (0, 0))
    with pytest.raises(ValueError):
        FeasibilityReport(False, None, (0, 0))


def test_global_feasibility_uses_grid_window():
    grid = make_explicit([-1.0, 0.0, 0.05, 1.0], 1.0, 1.0)
    spec = MomentSpec(0.0, 0.01)
    report = check_global_feasibility(grid, spec)
    assert report.index_range == (-2, 3)
    # x_1 = 0.05 has gaps (0.05, 0.95): product 0.0475 >= 0.01
    assert report.feasible is True
    report = check_global_feasibility(grid, MomentSpec(0.0, 0.1))
    assert report.feasible is False
    assert report.first_violation.index == 0


def test_window_verdict_holds_far_out_on_explicit_grids():
    # V = h_left * h_right puts the center mass exactly at zero.
    grid = make_explicit([-0.2, -0.1, 0.0, 0.1, 0.2], 0.1, 0.1)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.1 * 0.1))
    assert kernel.feasibility(grid.index_window()).feasible is True
    assert kernel.feasibility((-100010, -100000)).feasible is True
    assert kernel.feasibility((100000, 100010)).feasible is True
    assert check_global_feasibility(grid, MomentSpec(0.0, 0.1 * 0.1)).feasible


def test_transition_probs_uniform():
    triple = transition_probs(make_uniform(1.0), MomentSpec(0.0, 0.2), 7)
    assert triple == pytest.approx((0.1, 0.8, 0.1), abs=1e-15)
    assert uniform_transition_probs(1.0, MomentSpec(0.0, 0.2)) == pytest.approx(
        (0.1, 0.8, 0.1), abs=1e-15
    )
    assert uniform_transition_probs(2.0, MomentSpec(0.0, 4.0)) == (0.5, 0.0, 0.5)


def test_degenerate_chain_never_moves():
    spec = MomentSpec(0.0, 0.0)
    for grid in (make_uniform(1.0), make_two_sided(0.1, 0.01)):
        for i in (-3, 0, 5):
            assert transition_probs(grid, spec, i) == (0.0, 1.0, 0.0)


def test_infeasible_triple_is_an_error():
    with pytest.raises(InfeasibleIndexError) as err:
        uniform_transition_probs(1.0, MomentSpec(0.5, 0.0))
    exc = err.value
    assert exc.triple == pytest.approx((-0.125, 0.75, 0.375))
    assert exc.to_json()["error"] == "InfeasibleIndexError"

    with pytest.raises(InfeasibleIndexError) as err:
        transition_probs(make_uniform(0.1), MomentSpec(0.0, 0.02), 4)
    assert err.value.index == 4


@pytest.mark.parametrize("i", [-3, -1, 0, 1, 2, 500])
def test_two_sided_gbm_probs_match_moment_system(i):
    grid = make_two_sided(0.1, 0.01)
    expected = solve_moment_system(
        grid.point(i - 1), grid.point(i), grid.point(i + 1), GBM_SPEC.M, GBM_SPEC.V
    )
    triple = transition_probs(grid, GBM_SPEC, i)
    assert triple == pytest.approx(expected, abs=1e-12)
    assert all(0.0 <= p <= 1.0 for p in triple)


def test_two_sided_origin_is_asymmetric():
    grid = make_two_sided(0.1, 0.01)
    lam_l, lam_c, lam_r = transition_probs(grid, GBM_SPEC, 0)
    m2v = GBM_SPEC.second_moment
    assert lam_l == pytest.approx((m2v - GBM_SPEC.M * 0.01) / (0.11 * 0.1), rel=1e-12)
    assert lam_r == pytest.approx((m2v + GBM_SPEC.M * 0.1) / (0.11 * 0.01), rel=1e-12)
    assert lam_l != lam_r


def test_uniform_specialization_is_bit_identical():
    rng = np.random.default_rng(1)
    for h, spec in [
        (1.0, MomentSpec(0.0, 0.2)),
        (0.1, MomentSpec(0.001, 0.004)),
        (20.0 / 11.0 * 0.01, GBM_SPEC),
    ]:
        grid = make_uniform(h)
        expected = uniform_transition_probs(h, spec)
        for i in rng.integers(-100000, 100000, size=100):
            assert transition_probs(grid, spec, int(i)) == expected


def test_random_feasible_instances():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(500):
        grid = make_two_sided(*rng.uniform(0.01, 1.0, size=2))
        spec = MomentSpec(rng.uniform(-0.1, 0.1), rng.uniform(-0.01, 0.2))
        if not check_global_feasibility(grid, spec).feasible:
            continue
        checked += 1
        for i in (-2, -1, 0, 1, 2):
            triple = transition_probs(grid, spec, i)
            assert all(-1e-12 <= p <= 1.0 + 1e-12 for p in triple)
            assert sum(triple) == pytest.approx(1.0, abs=1e-12)
    assert checked > 0


def test_kernel_table_matches_scalar_probs():
    grid = make_explicit([-1.0, -0.3, 0.0, 0.2, 0.25, 1.0], 0.5, 0.5)
    kernel = TransitionKernel(grid, MomentSpec(0.001, 0.004))
    lam_l, lam_c, lam_r = kernel.table(-6, 6)
    for pos, i in enumerate(range(-6, 7)):
        assert kernel.probs(i) == (lam_l[pos], lam_c[pos], lam_r[pos])
    assert kernel.grid is grid
    assert kernel.spec == MomentSpec(0.001, 0.004)


def test_kernel_table_raises_at_first_bad_index():
    grid = make_explicit([-1.0, 0.0, 0.05, 0.06, 1.0], 1.0, 1.0)
    kernel = TransitionKernel(grid, MomentSpec(0.0, 0.01))
    with pytest.raises(InfeasibleIndexError) as err:
        kernel.table(-3, 5)
    assert err.value.index == 1
    report = kernel.feasibility((-3, 5))
    assert report.first_violation.index == 1
