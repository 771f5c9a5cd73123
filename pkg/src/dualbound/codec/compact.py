# Author: gadwant
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from dualbound.errors import ValidationError
from dualbound.projection.bounds import DualBounds, shrink_factor
from dualbound.projection.loop import DenseEdits
from dualbound.transform.dft import half_spectrum_shape, to_half_spectrum
from dualbound.transform.types import validate_dims

DEFAULT_CODE_BITS = 16
INDEX_LIMIT = 2**31 - 1

BoolArray = npt.NDArray[np.bool_]
IndexArray = npt.NDArray[np.int64]


def compact_edits(dense: npt.NDArray[Any]) -> tuple[BoolArray, npt.NDArray[Any]]:
    """Split a dense edit vector into nonzero flags and the nonzero values in index order."""
    array = np.asarray(dense)
    flags = array != 0
    return flags, array[flags]


def _round_half_away(quotient: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    return np.sign(quotient) * np.floor(np.abs(quotient) + 0.5)


def _quantize_lane(
    values: npt.NDArray[np.float64],
    step: npt.NDArray[np.float64] | float,
) -> tuple[IndexArray, BoolArray]:
    if not np.all(np.isfinite(values)):
        raise ValidationError("Cannot quantize non-finite edit values")
    rounded = _round_half_away(values / step)
    overflow = np.abs(rounded) > INDEX_LIMIT
    rounded[overflow] = 0
    return rounded.astype(np.int64), overflow


def quantize_edits(
    values: npt.NDArray[Any],
    step: npt.NDArray[np.float64] | float,
    step_imag: npt.NDArray[np.float64] | float | None = None,
) -> tuple[IndexArray, BoolArray]:
    """Quantize to signed indices; returns (indices, escape mask for 32-bit overflow).

    Complex values are two independent lanes and produce an (n, 2) index array.
    """
    array = np.asarray(values)
    if not np.iscomplexobj(array):
        return _quantize_lane(array.astype(np.float64), step)

    real_index, real_overflow = _quantize_lane(array.real, step)
    imag_index, imag_overflow = _quantize_lane(
        array.imag, step if step_imag is None else step_imag
    )
    overflow = real_overflow | imag_overflow
    indices = np.stack([real_index, imag_index], axis=-1)
    indices[overflow] = 0
    return indices, overflow


def dequantize_edits(
    indices: npt.NDArray[Any],
    step: npt.NDArray[np.float64] | float,
    step_imag: npt.NDArray[np.float64] | float | None = None,
) -> npt.NDArray[Any]:
    array = np.asarray(indices, dtype=np.int64)
    if array.ndim == 2 and array.shape[1] == 2:
        imag_step = step if step_imag is None else step_imag
        return array[:, 0] * step + 1j * (array[:, 1] * imag_step)
    return array * step


@dataclass(frozen=True, eq=False)
class QuantizationParams:
    """Steps 2*bound/2^m per component; frequency steps live on the half spectrum."""

    m: int
    step_spatial: npt.NDArray[np.float64]
    step_freq_re: npt.NDArray[np.float64]
    step_freq_im: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        shrink_factor(self.m)
        for label in ("step_spatial", "step_freq_re", "step_freq_im"):
            step = np.asarray(getattr(self, label), dtype=np.float64)
            if not np.all(np.isfinite(step)) or np.any(step <= 0):
                raise ValidationError(f"{label} must be strictly positive")
            object.__setattr__(self, label, step)

    @classmethod
    def from_bounds(
        cls,
        bounds: DualBounds,
        dims: Sequence[int],
        m: int = DEFAULT_CODE_BITS,
    ) -> QuantizationParams:
        extents = validate_dims(dims)
        scale = 2.0 / 2.0**m
        limit_re, limit_im = bounds.frequency_limits(extents)
        if limit_re.ndim:
            limit_re = to_half_spectrum(limit_re)
            limit_im = to_half_spectrum(limit_im)
        return cls(
            m=m,
            step_spatial=bounds.spatial_limits(extents) * scale,
            step_freq_re=limit_re * scale,
            step_freq_im=limit_im * scale,
        )

    def spatial_steps(self, flags: BoolArray) -> npt.NDArray[np.float64]:
        count = int(np.count_nonzero(flags))
        if self.step_spatial.ndim == 0:
            return np.full(count, float(self.step_spatial))
        return self.step_spatial[flags]

    def frequency_steps(
        self,
        flags: BoolArray,
    ) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
        count = int(np.count_nonzero(flags))
        if self.step_freq_re.ndim == 0:
            return (
                np.full(count, float(self.step_freq_re)),
                np.full(count, float(self.step_freq_im)),
            )
        return self.step_freq_re[flags], self.step_freq_im[flags]


@dataclass(frozen=True, eq=False)
class EditSet:
    """Sparse edits: spatial over the field, frequency over the non-redundant half spectrum."""

    dims: tuple[int, ...]
    spatial_flags: BoolArray
    spatial_values: npt.NDArray[np.float64]
    frequency_flags: BoolArray
    frequency_values: npt.NDArray[np.complex128]

    def __post_init__(self) -> None:
        dims = validate_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        spatial_flags = np.asarray(self.spatial_flags, dtype=bool).reshape(dims)
        frequency_flags = np.asarray(self.frequency_flags, dtype=bool).reshape(
            half_spectrum_shape(dims)
        )
        spatial_values = np.asarray(self.spatial_values, dtype=np.float64).ravel()
        frequency_values = np.asarray(self.frequency_values, dtype=np.complex128).ravel()
        if int(np.count_nonzero(spatial_flags)) != spatial_values.size:
            raise ValidationError("Spatial flag popcount does not match the stored values")
        if int(np.count_nonzero(frequency_flags)) != frequency_values.size:
            raise ValidationError("Frequency flag popcount does not match the stored values")
        if np.any(spatial_values == 0) or np.any(frequency_values == 0):
            raise ValidationError("Zero edits must be encoded by absent flags, not stored")
        object.__setattr__(self, "spatial_flags", spatial_flags)
        object.__setattr__(self, "spatial_values", spatial_values)
        object.__setattr__(self, "frequency_flags", frequency_flags)
        object.__setattr__(self, "frequency_values", frequency_values)

    @classmethod
    def from_dense(cls, edits: DenseEdits) -> EditSet:
        spatial_flags, spatial_values = compact_edits(edits.spatial)
        frequency_flags, frequency_values = compact_edits(to_half_spectrum(edits.frequency))
        return cls(edits.dims, spatial_flags, spatial_values, frequency_flags, frequency_values)

    @classmethod
    def from_dense_arrays(
        cls,
        dims: Sequence[int],
        spatial: npt.NDArray[np.float64],
        frequency_half: npt.NDArray[np.complex128],
    ) -> EditSet:
        spatial_flags, spatial_values = compact_edits(spatial)
        frequency_flags, frequency_values = compact_edits(frequency_half)
        return cls(tuple(dims), spatial_flags, spatial_values, frequency_flags, frequency_values)

    @property
    def active_spatial(self) -> int:
        return int(self.spatial_values.size)

    @property
    def active_frequency(self) -> int:
        return int(self.frequency_values.size)

    def dense_spatial(self) -> npt.NDArray[np.float64]:
        dense = np.zeros(self.dims, dtype=np.float64)
        dense[self.spatial_flags] = self.spatial_values
        return dense

    def dense_frequency_half(self) -> npt.NDArray[np.complex128]:
        dense = np.zeros(half_spectrum_shape(self.dims), dtype=np.complex128)
        dense[self.frequency_flags] = self.frequency_values
        return dense


@dataclass(frozen=True, eq=False)
class EscapeList:
    """Full-precision edits; index n < N is spatial, N + h is half-spectrum entry h."""

    indices: npt.NDArray[np.uint64]
    values: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        indices = np.asarray(self.indices, dtype=np.uint64).ravel()
        values = np.asarray(self.values, dtype=np.float64).reshape(-1, 2)
        if indices.size != values.shape[0]:
            raise ValidationError("Escape indices and values differ in length")
        order = np.argsort(indices, kind="stable")
        object.__setattr__(self, "indices", indices[order])
        object.__setattr__(self, "values", values[order])

    def __len__(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True, eq=False)
class QuantizedEdits:
    """Flags plus integer indices; escaped entries keep their flag and store index 0."""

    dims: tuple[int, ...]
    spatial_flags: BoolArray
    spatial_indices: IndexArray
    frequency_flags: BoolArray
    frequency_indices: IndexArray
    escapes: EscapeList

    def __post_init__(self) -> None:
        dims = validate_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(
            self, "spatial_flags", np.asarray(self.spatial_flags, dtype=bool).reshape(dims)
        )
        object.__setattr__(
            self,
            "frequency_flags",
            np.asarray(self.frequency_flags, dtype=bool).reshape(half_spectrum_shape(dims)),
        )
        object.__setattr__(
            self, "spatial_indices", np.asarray(self.spatial_indices, dtype=np.int64).ravel()
        )
        object.__setattr__(
            self,
            "frequency_indices",
            np.asarray(self.frequency_indices, dtype=np.int64).reshape(-1, 2),
        )
        if int(np.count_nonzero(self.spatial_flags)) != self.spatial_indices.size:
            raise ValidationError("Spatial flag popcount does not match the index count")
        if int(np.count_nonzero(self.frequency_flags)) != self.frequency_indices.shape[0]:
            raise ValidationError("Frequency flag popcount does not match the index count")

    @property
    def active_spatial(self) -> int:
        return int(self.spatial_indices.size)

    @property
    def active_frequency(self) -> int:
        return int(self.frequency_indices.shape[0])

    @property
    def sample_count(self) -> int:
        return int(np.prod(self.dims))

    def same_as(self, other: QuantizedEdits) -> bool:
        return (
            self.dims == other.dims
            and np.array_equal(self.spatial_flags, other.spatial_flags)
            and np.array_equal(self.spatial_indices, other.spatial_indices)
            and np.array_equal(self.frequency_flags, other.frequency_flags)
            and np.array_equal(self.frequency_indices, other.frequency_indices)
            and np.array_equal(self.escapes.indices, other.escapes.indices)
            and np.array_equal(self.escapes.values, other.escapes.values)
        )


def _refine_flags(flags: BoolArray, keep: BoolArray) -> BoolArray:
    positions = np.flatnonzero(flags)
    refined = np.zeros(flags.shape, dtype=bool)
    refined.flat[positions[keep]] = True
    return refined


def quantize_edit_set(
    edits: EditSet,
    params: QuantizationParams,
    *,
    escape_spatial: BoolArray | None = None,
    escape_frequency: BoolArray | None = None,
) -> QuantizedEdits:
    """Quantize both domains; entries rounding to zero lose their flag.

    ``escape_spatial`` (field-shaped) and ``escape_frequency`` (half-spectrum-shaped) force
    entries into the full-precision escape list.
    """
    sample_count = int(np.prod(edits.dims))

    spatial_indices, spatial_escaped = quantize_edits(
        edits.spatial_values, params.spatial_steps(edits.spatial_flags)
    )
    if escape_spatial is not None:
        spatial_escaped |= np.asarray(escape_spatial, dtype=bool).reshape(edits.dims)[
            edits.spatial_flags
        ]
    spatial_indices[spatial_escaped] = 0
    spatial_keep = (spatial_indices != 0) | spatial_escaped

    step_re, step_im = params.frequency_steps(edits.frequency_flags)
    frequency_indices, frequency_escaped = quantize_edits(
        edits.frequency_values, step_re, step_im
    )
    if escape_frequency is not None:
        frequency_escaped |= np.asarray(escape_frequency, dtype=bool).reshape(
            edits.frequency_flags.shape
        )[edits.frequency_flags]
    frequency_indices[frequency_escaped] = 0
    frequency_keep = np.any(frequency_indices != 0, axis=-1) | frequency_escaped

    spatial_positions = np.flatnonzero(edits.spatial_flags)[spatial_escaped]
    frequency_positions = np.flatnonzero(edits.frequency_flags)[frequency_escaped]
    escaped_spatial_values = edits.spatial_values[spatial_escaped]
    escaped_frequency_values = edits.frequency_values[frequency_escaped]
    escapes = EscapeList(
        np.concatenate(
            [
                spatial_positions.astype(np.uint64),
                (frequency_positions + sample_count).astype(np.uint64),
            ]
        ),
        np.concatenate(
            [
                np.stack(
                    [escaped_spatial_values, np.zeros_like(escaped_spatial_values)], axis=-1
                ),
                np.stack(
                    [escaped_frequency_values.real, escaped_frequency_values.imag], axis=-1
                ),
            ]
        ),
    )

    return QuantizedEdits(
        dims=edits.dims,
        spatial_flags=_refine_flags(edits.spatial_flags, spatial_keep),
        spatial_indices=spatial_indices[spatial_keep],
        frequency_flags=_refine_flags(edits.frequency_flags, frequency_keep),
        frequency_indices=frequency_indices[frequency_keep],
        escapes=escapes,
    )


def dequantize_edit_set(quantized: QuantizedEdits, params: QuantizationParams) -> EditSet:
    sample_count = quantized.sample_count

    spatial = np.zeros(quantized.dims, dtype=np.float64)
    spatial[quantized.spatial_flags] = dequantize_edits(
        quantized.spatial_indices, params.spatial_steps(quantized.spatial_flags)
    )
    frequency = np.zeros(quantized.frequency_flags.shape, dtype=np.complex128)
    step_re, step_im = params.frequency_steps(quantized.frequency_flags)
    frequency[quantized.frequency_flags] = dequantize_edits(
        quantized.frequency_indices, step_re, step_im
    )

    escapes = quantized.escapes
    is_spatial = escapes.indices < np.uint64(sample_count)
    spatial_positions = escapes.indices[is_spatial].astype(np.int64)
    frequency_positions = escapes.indices[~is_spatial].astype(np.int64) - sample_count
    spatial.flat[spatial_positions] = escapes.values[is_spatial, 0]
    frequency.flat[frequency_positions] = (
        escapes.values[~is_spatial, 0] + 1j * escapes.values[~is_spatial, 1]
    )
    return EditSet.from_dense_arrays(quantized.dims, spatial, frequency)
