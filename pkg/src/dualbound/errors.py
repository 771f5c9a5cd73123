# Author: gadwant
from __future__ import annotations

from collections.abc import Sequence
from typing import Any

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
EXIT_FORMAT = 5


class DualBoundError(Exception):
    """Base class for every error the library raises on purpose."""

    exit_code = 1


class ValidationError(DualBoundError, ValueError):
    exit_code = EXIT_VALIDATION


class SymmetryError(ValidationError):
    pass


class PreconditionError(ValidationError):
    pass


class OracleLimitError(ValidationError):
    pass


class UndefinedMetricError(ValidationError):
    pass


class RawIOError(DualBoundError, OSError):
    exit_code = EXIT_IO


class FormatError(DualBoundError, ValueError):
    exit_code = EXIT_FORMAT


class DecodeError(FormatError):
    pass


class TuningFailedError(DualBoundError):
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, trace: Sequence[Any] = ()) -> None:
        super().__init__(message)
        self.trace = tuple(trace)
