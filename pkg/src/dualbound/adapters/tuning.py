# Author: gadwant
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from dualbound.adapters.base import BaseCompressor, CompressedOutput
from dualbound.errors import TuningFailedError, ValidationError
from dualbound.projection.cubes import compute_error
from dualbound.transform.dft import forward_dft
from dualbound.transform.types import ScalarField

logger = logging.getLogger(__name__)

DEFAULT_SHRINK = 0.5
DEFAULT_MAX_STEPS = 200
UNDERFLOW_RATIO = 1e-12


@dataclass(frozen=True)
class TuningStep:
    step: int
    error_bound: float
    max_frequency_error: float
    payload_bytes: int

    def as_dict(self) -> dict[str, Any]:
        return {
            "step": self.step,
            "error_bound": self.error_bound,
            "max_frequency_error": self.max_frequency_error,
            "payload_bytes": self.payload_bytes,
        }


@dataclass(frozen=True, eq=False)
class TuningResult:
    error_bound: float
    output: CompressedOutput
    steps: tuple[TuningStep, ...]

    @property
    def shrink_steps(self) -> int:
        return len(self.steps) - 1


def max_frequency_error(original: ScalarField, decompressed: ScalarField) -> float:
    delta = forward_dft(compute_error(original, decompressed)).values
    return float(np.max(np.maximum(np.abs(delta.real), np.abs(delta.imag))))


def trial_and_error_tune(
    field: ScalarField,
    target_delta: float,
    base: BaseCompressor,
    initial_bound: float,
    shrink_factor: float = DEFAULT_SHRINK,
    *,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> TuningResult:
    """Tighten E geometrically until the base output meets `target_delta` in frequency."""
    if not 0 < shrink_factor < 1:
        raise ValidationError(f"shrink_factor must lie in (0, 1), got {shrink_factor}")
    if initial_bound <= 0:
        raise ValidationError(f"initial_bound must be positive, got {initial_bound}")
    if target_delta <= 0:
        raise TuningFailedError(
            f"Target frequency error {target_delta} is unreachable for a lossy base compressor"
        )

    error_bound = initial_bound
    underflow = initial_bound * UNDERFLOW_RATIO
    trace: list[TuningStep] = []
    while True:
        try:
            output = base.compress(field, error_bound)
        except ValidationError as exc:
            raise TuningFailedError(
                f"Base compressor rejected E={error_bound:.3e}: {exc}", trace=trace
            ) from exc
        achieved = max_frequency_error(field, output.decompressed)
        trace.append(TuningStep(len(trace), error_bound, achieved, output.payload_bytes))
        logger.info(
            "tuning step %d: E=%.6e max frequency error %.6e (target %.6e), %d bytes",
            len(trace) - 1,
            error_bound,
            achieved,
            target_delta,
            output.payload_bytes,
        )
        if achieved <= target_delta:
            return TuningResult(error_bound, output, tuple(trace))

        error_bound *= shrink_factor
        if error_bound < underflow or len(trace) >= max_steps:
            raise TuningFailedError(
                f"No E down to {error_bound:.3e} met the frequency target {target_delta:.3e} "
                f"after {len(trace)} attempts",
                trace=trace,
            )
