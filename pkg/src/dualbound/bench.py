# Author: gadwant
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Any, Literal

from dualbound.adapters.base import BaseCompressor, CompressedOutput
from dualbound.adapters.tuning import DEFAULT_SHRINK, trial_and_error_tune
from dualbound.codec.compact import DEFAULT_CODE_BITS
from dualbound.errors import TuningFailedError, ValidationError
from dualbound.metrics.quality import format_metric, quality_report
from dualbound.pipeline import correct
from dualbound.projection.bounds import DualBounds, GlobalFrequencyBound, GlobalSpatialBound
from dualbound.projection.loop import DEFAULT_MAX_ITERS
from dualbound.transform.dft import forward_dft
from dualbound.transform.types import ComplexSpectrum, ScalarField

logger = logging.getLogger(__name__)

Leg = Literal["base", "tuned", "corrected"]
LegStatus = Literal["ok", "failed", "skipped", "not-converged"]

BENCH_COLUMNS = (
    "leg",
    "status",
    "error_bound",
    "payload_bytes",
    "compression_ratio",
    "psnr",
    "ssnr",
    "max_rfe",
    "max_spatial_error",
    "max_frequency_error",
    "iterations",
    "wall_time",
)


@dataclass(frozen=True)
class BenchRow:
    leg: Leg
    status: LegStatus
    error_bound: float | None = None
    payload_bytes: int | None = None
    compression_ratio: float | None = None
    psnr: float | None = None
    ssnr: float | None = None
    max_rfe: float | None = None
    max_spatial_error: float | None = None
    max_frequency_error: float | None = None
    iterations: int | None = None
    wall_time: float | None = None

    def as_dict(self) -> dict[str, Any]:
        row = {column: getattr(self, column) for column in BENCH_COLUMNS}
        for key in ("psnr", "ssnr"):
            if row[key] is not None:
                row[key] = format_metric(row[key])
        return row


def _measured_row(
    leg: Leg,
    original: ScalarField,
    spectrum: ComplexSpectrum,
    reconstructed: ScalarField,
    *,
    error_bound: float,
    payload_bytes: int,
    wall_time: float,
    status: LegStatus = "ok",
    iterations: int | None = None,
) -> BenchRow:
    quality = quality_report(original, reconstructed, original_spectrum=spectrum)
    return BenchRow(
        leg=leg,
        status=status,
        error_bound=error_bound,
        payload_bytes=payload_bytes,
        compression_ratio=original.nbytes / payload_bytes if payload_bytes else None,
        psnr=quality.psnr,
        ssnr=quality.ssnr,
        max_rfe=quality.max_rfe,
        max_spatial_error=quality.max_spatial_error,
        max_frequency_error=quality.max_frequency_error,
        iterations=iterations,
        wall_time=wall_time,
    )


def run_bench(
    original: ScalarField,
    bounds: DualBounds,
    base: BaseCompressor,
    *,
    m: int = DEFAULT_CODE_BITS,
    max_iters: int = DEFAULT_MAX_ITERS,
    shrink_factor: float = DEFAULT_SHRINK,
) -> list[BenchRow]:
    """Base alone, base tuned by trial and error, and base plus correction, on one field."""
    if not isinstance(bounds.spatial, GlobalSpatialBound):
        raise ValidationError("The bench needs a single global spatial bound for the base")
    error_bound = bounds.spatial.value
    spectrum = forward_dft(original)

    started = time.perf_counter()
    base_output: CompressedOutput = base.compress(original, error_bound)
    base_time = time.perf_counter() - started
    base_row = _measured_row(
        "base",
        original,
        spectrum,
        base_output.decompressed,
        error_bound=error_bound,
        payload_bytes=base_output.payload_bytes,
        wall_time=base_time,
    )

    tuned_row: BenchRow
    if not base.retunable or not isinstance(bounds.frequency, GlobalFrequencyBound):
        tuned_row = BenchRow(leg="tuned", status="skipped")
    else:
        started = time.perf_counter()
        try:
            tuned = trial_and_error_tune(
                original, bounds.frequency.value, base, error_bound, shrink_factor
            )
        except TuningFailedError as exc:
            logger.warning("Trial-and-error leg failed: %s", exc)
            tuned_row = BenchRow(
                leg="tuned", status="failed", wall_time=time.perf_counter() - started
            )
        else:
            tuned_row = _measured_row(
                "tuned",
                original,
                spectrum,
                tuned.output.decompressed,
                error_bound=tuned.error_bound,
                payload_bytes=tuned.output.payload_bytes,
                wall_time=time.perf_counter() - started,
                iterations=len(tuned.steps),
            )

    started = time.perf_counter()
    result = correct(original, base_output.decompressed, bounds, m=m, max_iters=max_iters)
    corrected_row = _measured_row(
        "corrected",
        original,
        spectrum,
        result.corrected,
        error_bound=error_bound,
        payload_bytes=base_output.payload_bytes + len(result.archive_bytes),
        wall_time=base_time + time.perf_counter() - started,
        status="ok" if result.report.converged else "not-converged",
        iterations=result.report.iterations,
    )
    return [base_row, tuned_row, corrected_row]

