__all__ = [
    "suppress_warning",
    "get_batches",
    "is_positive_real",
    "require_positive",
]

import logging
import math
from contextlib import contextmanager
from typing import Any, Iterator, Type

from momentchain.exceptions import ParameterError


@contextmanager
def suppress_warning(logger_name: str) -> Iterator[None]:
    """Suppress logger messages.

    :param logger_name: Full name of the logger.
    :type logger_name: str
    """
    logger = logging.getLogger(logger_name)
    original_log_level = logger.getEffectiveLevel()
    logger.setLevel(logging.CRITICAL)
    try:
        yield
    finally:
        logger.setLevel(original_log_level)


def get_batches(total: int, batch_size: int) -> Iterator[range]:
    """Split the indices 0..total-1 into consecutive ranges.

    :param total: Number of items.
    :type total: int
    :param batch_size: Maximum number of items per range.
    :type batch_size: int
    :return: Generator of index ranges.
    :rtype: Iterator[range]
    """
    for start in range(0, total, batch_size):
        yield range(start, min(start + batch_size, total))


def is_positive_real(obj: Any) -> bool:
    """Check if obj is a finite real number greater than zero.

    :param obj: Object to check.
    :type obj: object
    :return: True if object is a finite positive real.
    :rtype: bool
    """
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        return False
    return math.isfinite(obj) and obj > 0


def require_positive(
    value: Any, field: str, error: Type[ParameterError] = ParameterError
) -> float:
    """Return value as float or raise if it is not a finite positive real.

    :param value: Value to check.
    :type value: int | float
    :param field: Parameter name used in the error message.
    :type field: str
    :param error: Error class to raise.
    :type error: type
    :return: Value as float.
    :rtype: float
    :raise momentchain.exceptions.ParameterError: If value is not positive.
    """
    if not is_positive_real(value):
        raise error(f"{field} must be a finite positive number, got {value!r}", field)
    return float(value)
