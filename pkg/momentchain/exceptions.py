from typing import TYPE_CHECKING, Any, List, Optional, Sequence, Tuple

from momentchain.typings import Json, Triple

if TYPE_CHECKING:  # pragma: no cover
    from momentchain.kernel import FeasibilityReport


class MomentChainError(Exception):
    """Base class for all exceptions in python-momentchain.

    :param msg: Error message.
    :type msg: str

    :ivar message: Error message.
    :vartype message: str
    """

    def __init__(self, msg: str) -> None:
        super().__init__(msg)
        self.message = msg

    def details(self) -> Json:
        """Return error specific details for machine-readable output.

        :return: Error details.
        :rtype: dict
        """
        return {}

    def to_json(self) -> Json:
        """Return the error as a JSON-serializable dictionary.

        :return: Error name, message and details.
        :rtype: dict
        """
        result: Json = {"error": type(self).__name__, "message": self.message}
        result.update(self.details())
        return result


class ParameterError(MomentChainError, ValueError):
    """Model parameter failed its precondition.

    :param msg: Error message.
    :type msg: str
    :param field: Name of the offending parameter.
    :type field: str | None

    :ivar field: Name of the offending parameter.
    :vartype field: str | None
    """

    def __init__(self, msg: str, field: Optional[str] = None) -> None:
        super().__init__(msg)
        self.field = field

    def details(self) -> Json:
        return {} if self.field is None else {"field": self.field}


###################
# Grid Exceptions #
###################


class GridParameterError(ParameterError):
    """Grid spacing or slope is not a finite positive number."""


class GridConstructionError(ParameterError):
    """Explicit grid table is unsorted, duplicated or misses the origin."""


#####################
# Kernel Exceptions #
#####################


class InfeasibleIndexError(MomentChainError):
    """Transition probabilities at a grid index are not a distribution.

    :param index: Grid index.
    :type index: int
    :param triple: Computed (left, center, right) probabilities.
    :type triple: (float, float, float)

    :ivar index: Grid index.
    :vartype index: int
    :ivar triple: Computed (left, center, right) probabilities.
    :vartype triple: (float, float, float)
    """

    def __init__(self, index: int, triple: Triple, msg: Optional[str] = None) -> None:
        msg = msg or f"infeasible transition probabilities {triple} at index {index}"
        super().__init__(msg)
        self.index = index
        self.triple = triple

    def details(self) -> Json:
        return {"index": self.index, "triple": list(self.triple)}


class KernelConsistencyError(InfeasibleIndexError):
    """Center probability disagrees with the complement of the side branches."""


class FeasibilityError(MomentChainError):
    """Feasibility inequalities fail somewhere in a required index window.

    :param report: Failed feasibility report.
    :type report: momentchain.kernel.FeasibilityReport

    :ivar report: Failed feasibility report.
    :vartype report: momentchain.kernel.FeasibilityReport
    """

    def __init__(self, report: "FeasibilityReport", msg: Optional[str] = None) -> None:
        violation = report.first_violation
        if msg is None and violation is not None:
            msg = (
                f"inequality {violation.inequality} violated at index "
                f"{violation.index}: {violation.lhs!r} > {violation.rhs!r}"
            )
        super().__init__(msg or "infeasible kernel")
        self.report = report

    def details(self) -> Json:
        return {"report": self.report.to_json()}


####################
# Exact Exceptions #
####################


class TruncationError(MomentChainError, ValueError):
    """Requested step count lets mass reach the absorbing boundary."""


#########################
# Simulation Exceptions #
#########################


class StepRangeError(MomentChainError, IndexError):
    """Requested step was not simulated or not recorded."""


##################
# GBM Exceptions #
##################


class ScheduleError(ParameterError):
    """Coefficient schedule is malformed."""


####################
# Stats Exceptions #
####################


class QuantileLevelError(ParameterError):
    """Quantile level outside the open unit interval."""


class SampleSizeError(ParameterError):
    """Sample sets are empty or have mismatched sizes."""


class BinEdgesError(ParameterError):
    """Histogram bin edges are not strictly increasing."""


#####################
# Config Exceptions #
#####################


class ConfigFileError(MomentChainError):
    """Config file is missing or is not well-formed JSON."""


class ConfigValidationError(MomentChainError, ValueError):
    """Config failed validation.

    :param errors: Pairs of dotted field path and message.
    :type errors: [(str, str)]

    :ivar errors: Pairs of dotted field path and message.
    :vartype errors: [(str, str)]
    """

    def __init__(self, errors: Sequence[Tuple[str, str]]) -> None:
        self.errors: List[Tuple[str, str]] = list(errors)
        lines = "; ".join(f"{path}: {msg}" for path, msg in self.errors)
        super().__init__(f"invalid config ({len(self.errors)} errors): {lines}")

    def details(self) -> Json:
        return {"errors": [{"field": p, "message": m} for p, m in self.errors]}


def error_payload(err: BaseException) -> Any:
    """Return the JSON payload for any exception.

    :param err: Exception raised during a run.
    :type err: BaseException
    :return: JSON-serializable error description.
    :rtype: dict
    """
    if isinstance(err, MomentChainError):
        return err.to_json()
    return {"error": type(err).__name__, "message": str(err)}
