import json

import pytest

from momentchain.exceptions import (
    ConfigValidationError,
    FeasibilityError,
    GridParameterError,
    InfeasibleIndexError,
    MomentChainError,
    ParameterError,
    StepRangeError,
    error_payload,
)
from momentchain.grid import make_two_sided, make_uniform
from momentchain.kernel import MomentSpec, TransitionKernel


def test_parameter_error():
    with pytest.raises(GridParameterError) as err:
        make_uniform(-1.0)
    exc = err.value
    assert isinstance(exc, ParameterError)
    assert isinstance(exc, MomentChainError)
    assert isinstance(exc, ValueError)
    assert exc.field == "h"
    assert exc.message == str(exc)
    assert exc.to_json() == {
        "error": "GridParameterError",
        "message": exc.message,
        "field": "h",
    }
    assert ParameterError("bad").to_json() == {
        "error": "ParameterError",
        "message": "bad",
    }


def test_infeasible_index_error():
    exc = InfeasibleIndexError(4, (-0.125, 0.75, 0.375))
    assert "index 4" in exc.message
    body = exc.to_json()
    assert body["index"] == 4
    assert body["triple"] == [-0.125, 0.75, 0.375]


def test_feasibility_error():
    grid = make_two_sided(0.1, 0.01)
    kernel = TransitionKernel(grid, MomentSpec(1.875 * 0.02, 0.25 * 0.02))
    report = kernel.feasibility(grid.index_window())
    exc = FeasibilityError(report)
    assert exc.message.startswith("inequality 3 violated at index")
    assert exc.report is report
    body = exc.to_json()
    assert body["error"] == "FeasibilityError"
    assert body["report"]["feasible"] is False
    assert body["report"]["first_violation"]["inequality"] == 3
    json.dumps(body)


def test_config_validation_error():
    exc = ConfigValidationError([("grid.h", "must be positive"), ("n", "required")])
    assert exc.errors == [("grid.h", "must be positive"), ("n", "required")]
    assert exc.message.startswith("invalid config (2 errors)")
    assert "grid.h: must be positive" in exc.message
    assert exc.to_json()["errors"] == [
        {"field": "grid.h", "message": "must be positive"},
        {"field": "n", "message": "required"},
    ]


def test_error_payload():
    assert error_payload(StepRangeError("step 5 was not recorded")) == {
        "error": "StepRangeError",
        "message": "step 5 was not recorded",
    }
    assert isinstance(StepRangeError("x"), IndexError)
    assert error_payload(FileNotFoundError("gone")) == {
        "error": "FileNotFoundError",
        "message": "gone",
    }
