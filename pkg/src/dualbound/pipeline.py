# Author: gadwant
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from dualbound.codec.apply import BoundsCheck, apply_edits, verify_bounds
from dualbound.codec.archive import EditsArchive, write_archive
from dualbound.codec.compact import (
    DEFAULT_CODE_BITS,
    EditSet,
    QuantizationParams,
    QuantizedEdits,
    dequantize_edit_set,
    quantize_edit_set,
)
from dualbound.projection.bounds import DualBounds, shrink_bounds, shrink_factor
from dualbound.projection.cubes import compute_error
from dualbound.projection.loop import (
    DEFAULT_MAX_ITERS,
    ENTRY_SLACK,
    ProjectionReport,
    alternating_projection,
)
from dualbound.transform.dft import forward_dft, mirror_indices, to_half_spectrum
from dualbound.transform.types import ScalarField

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CorrectionResult:
    archive: EditsArchive
    archive_bytes: bytes
    report: ProjectionReport
    check: BoundsCheck
    corrected: ScalarField
    escape_rounds: int
    field_nbytes: int

    @property
    def escapes(self) -> int:
        return len(self.archive.edits.escapes)

    @property
    def payload_ratio(self) -> float:
        return len(self.archive_bytes) / self.field_nbytes

    def as_dict(self) -> dict[str, Any]:
        payload = self.report.as_dict()
        payload.update(
            {
                "stored_spatial": self.archive.edits.active_spatial,
                "stored_frequency": self.archive.edits.active_frequency,
                "escapes": self.escapes,
                "escape_rounds": self.escape_rounds,
                "payload_bytes": len(self.archive_bytes),
                "payload_ratio": self.payload_ratio,
                "m": self.archive.m,
                "verify": self.check.as_dict(),
            }
        )
        return payload


def _half_mask(full_mask: npt.NDArray[np.bool_]) -> npt.NDArray[np.bool_]:
    """Fold a full-spectrum mask onto the stored half (k and its mirror are one entry)."""
    return to_half_spectrum(full_mask | mirror_indices(full_mask))


def _next_escapes(
    check: BoundsCheck,
    edits: EditSet,
    escape_spatial: npt.NDArray[np.bool_],
    escape_frequency: npt.NDArray[np.bool_],
) -> tuple[npt.NDArray[np.bool_], npt.NDArray[np.bool_]]:
    """Pick edits to store at full precision; same-domain first, then the other domain."""
    open_spatial = edits.spatial_flags & ~escape_spatial
    open_frequency = edits.frequency_flags & ~escape_frequency
    frequency_hit = _half_mask(check.frequency_violations)

    new_spatial = open_spatial & check.spatial_violations
    new_frequency = open_frequency & frequency_hit
    if new_spatial.any() or new_frequency.any():
        return new_spatial, new_frequency

    # Quantization noise leaks across domains: a frequency violation with no frequency
    # edit left to escape is fed by spatial edits, and vice versa.
    if check.frequency_violations.any():
        new_spatial = open_spatial
    if check.spatial_violations.any():
        new_frequency = open_frequency
    return new_spatial, new_frequency


def quantize_with_escapes(
    original: ScalarField,
    decompressed: ScalarField,
    edits: EditSet,
    bounds: DualBounds,
    params: QuantizationParams,
    *,
    escalate: bool = True,
    workers: int | None = None,
) -> tuple[QuantizedEdits, ScalarField, BoundsCheck, int]:
    """Quantize, apply, verify against `bounds`; escape offending edits until the check passes."""
    original_spectrum = forward_dft(original, workers=workers)
    escape_spatial = np.zeros(edits.spatial_flags.shape, dtype=bool)
    escape_frequency = np.zeros(edits.frequency_flags.shape, dtype=bool)
    rounds = 0

    while True:
        quantized = quantize_edit_set(
            edits,
            params,
            escape_spatial=escape_spatial,
            escape_frequency=escape_frequency,
        )
        corrected = apply_edits(
            decompressed, dequantize_edit_set(quantized, params), workers=workers
        )
        check = verify_bounds(
            original,
            corrected,
            bounds,
            original_spectrum=original_spectrum,
            workers=workers,
        )
        if check.ok or not escalate:
            break
        new_spatial, new_frequency = _next_escapes(
            check, edits, escape_spatial, escape_frequency
        )
        if not (new_spatial.any() or new_frequency.any()):
            logger.warning(
                "Bounds still violated after %d escape rounds with nothing left to escape "
                "(spatial excess %.3e, frequency excess %.3e)",
                rounds,
                check.max_spatial_excess,
                check.max_freq_excess,
            )
            break
        escape_spatial |= new_spatial
        escape_frequency |= new_frequency
        rounds += 1
        logger.info(
            "escape round %d: +%d spatial, +%d frequency entries at full precision",
            rounds,
            int(np.count_nonzero(new_spatial)),
            int(np.count_nonzero(new_frequency)),
        )
    return quantized, corrected, check, rounds


def correct(
    original: ScalarField,
    decompressed: ScalarField,
    bounds: DualBounds,
    *,
    m: int = DEFAULT_CODE_BITS,
    max_iters: int = DEFAULT_MAX_ITERS,
    workers: int | None = None,
) -> CorrectionResult:
    """Shrink, project, compact, quantize, escape, and serialize the edits for one field pair."""
    epsilon0 = compute_error(original, decompressed)
    working = shrink_bounds(bounds, m)
    # Admit epsilon0 against the caller's E, not the shrunken one.
    entry_slack = (1.0 + ENTRY_SLACK) / shrink_factor(m) - 1.0
    dense, _, report = alternating_projection(
        epsilon0,
        working,
        max_iters,
        entry_slack=entry_slack,
        workers=workers,
    )

    edits = EditSet.from_dense(dense)
    params = QuantizationParams.from_bounds(bounds, original.dims, m)
    quantized, corrected, check, rounds = quantize_with_escapes(
        original,
        decompressed,
        edits,
        bounds,
        params,
        escalate=report.converged,
        workers=workers,
    )
    archive = EditsArchive(
        precision=original.precision,
        bounds=bounds,
        m=m,
        converged=report.converged,
        edits=quantized,
    )
    archive_bytes = write_archive(archive)
    logger.info(
        "archive: %d bytes, %d spatial + %d frequency edits, %d escapes",
        len(archive_bytes),
        quantized.active_spatial,
        quantized.active_frequency,
        len(quantized.escapes),
    )
    return CorrectionResult(
        archive=archive,
        archive_bytes=archive_bytes,
        report=report,
        check=check,
        corrected=corrected,
        escape_rounds=rounds,
        field_nbytes=original.nbytes,
    )
