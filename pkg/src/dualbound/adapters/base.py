# Author: gadwant
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np
import numpy.typing as npt

from dualbound.codec.entropy import encode_index_stream
from dualbound.errors import ValidationError
from dualbound.io.raw import DatasetDescriptor, load_raw
from dualbound.transform.types import ScalarField, numpy_dtype

# Codes past this magnitude lose integer exactness in float64.
MAX_CODE = 2**52


@dataclass(frozen=True, eq=False)
class CompressedOutput:
    decompressed: ScalarField
    payload_bytes: int
    error_bound: float


class BaseCompressor(Protocol):
    """A lossy compressor with a pointwise absolute error bound."""

    name: str
    # False when the compressor cannot be re-run at a different bound.
    retunable: bool

    def compress(self, field: ScalarField, error_bound: float) -> CompressedOutput: ...


def _clamp_to_bound(
    reconstructed: npt.NDArray[np.floating[Any]],
    original: npt.NDArray[np.floating[Any]],
    error_bound: float,
) -> npt.NDArray[np.floating[Any]]:
    """Move samples that rounding pushed past the bound one ulp toward the original."""
    target = original.astype(reconstructed.dtype)
    reference = original.astype(np.float64)

    def outside() -> npt.NDArray[np.bool_]:
        return np.abs(reconstructed.astype(np.float64) - reference) > error_bound

    for _ in range(2):
        mask = outside()
        if not mask.any():
            return reconstructed
        reconstructed[mask] = np.nextafter(reconstructed[mask], target[mask])
    mask = outside()
    reconstructed[mask] = target[mask]
    return reconstructed


def uniform_quantize_compress(field: ScalarField, error_bound: float) -> tuple[ScalarField, int]:
    """Mid-tread quantizer x_hat = round(x / 2E) * 2E; size is the coded length of the codes."""
    if not np.isfinite(error_bound) or error_bound <= 0:
        raise ValidationError(f"Error bound must be positive, got {error_bound}")
    values = field.as_float64()
    step = 2.0 * error_bound
    codes = np.rint(values / step)
    if np.any(np.abs(codes) > MAX_CODE):
        raise ValidationError(f"Error bound {error_bound:.3e} is too small for this field's range")

    reconstructed = (codes * step).astype(numpy_dtype(field.precision))
    reconstructed = _clamp_to_bound(reconstructed, field.values, error_bound)
    payload = encode_index_stream(codes.astype(np.int64))
    return ScalarField(reconstructed, precision=field.precision), len(payload)


class UniformQuantizer:
    name = "quantizer"
    retunable = True

    def compress(self, field: ScalarField, error_bound: float) -> CompressedOutput:
        decompressed, size = uniform_quantize_compress(field, error_bound)
        return CompressedOutput(decompressed, size, error_bound)


def file_pair_adapter(
    original: DatasetDescriptor,
    decompressed: DatasetDescriptor,
) -> tuple[ScalarField, ScalarField]:
    """Load the output of an external compressor next to its input."""
    if original.dims != decompressed.dims:
        raise ValidationError(
            f"Shape mismatch: original {original.dims} vs decompressed {decompressed.dims}"
        )
    if original.precision != decompressed.precision:
        raise ValidationError(
            "Precision mismatch: "
            f"original {original.precision} vs decompressed {decompressed.precision}"
        )
    return load_raw(original), load_raw(decompressed)


class ExternalOutput:
    """Replays a reconstruction an external compressor already produced."""

    name = "files"
    retunable = False

    def __init__(self, decompressed: ScalarField, payload_bytes: int) -> None:
        if payload_bytes <= 0:
            raise ValidationError(f"Payload size must be positive, got {payload_bytes}")
        self.decompressed = decompressed
        self.payload_bytes = payload_bytes

    def compress(self, field: ScalarField, error_bound: float) -> CompressedOutput:
        if field.dims != self.decompressed.dims:
            raise ValidationError(
                f"Shape mismatch: original {field.dims} vs decompressed {self.decompressed.dims}"
            )
        return CompressedOutput(self.decompressed, self.payload_bytes, error_bound)
