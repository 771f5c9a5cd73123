# Author: gadwant
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
import numpy.typing as npt

from dualbound.errors import ValidationError

Precision = Literal["f32", "f64"]
Normalization = Literal["forward-unscaled"]

PRECISIONS: tuple[Precision, ...] = ("f32", "f64")
MAX_NDIM = 3

_DTYPES: dict[str, type[np.floating[Any]]] = {"f32": np.float32, "f64": np.float64}


def numpy_dtype(precision: Precision) -> np.dtype[Any]:
    if precision not in _DTYPES:
        raise ValidationError(f"Unsupported precision tag: {precision!r}")
    return np.dtype(_DTYPES[precision])


def validate_dims(dims: Sequence[int]) -> tuple[int, ...]:
    extents = tuple(int(extent) for extent in dims)
    if not 1 <= len(extents) <= MAX_NDIM:
        raise ValidationError(f"Fields must have 1 to {MAX_NDIM} axes, got {len(extents)}")
    if any(extent <= 0 for extent in extents):
        raise ValidationError(f"All extents must be positive, got {extents}")
    return extents


def _frozen(array: npt.NDArray[Any]) -> npt.NDArray[Any]:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples on a regular 1D/2D/3D grid, stored row-major (last axis fastest)."""

    values: npt.NDArray[np.floating[Any]]
    precision: Precision = "f64"

    def __post_init__(self) -> None:
        dtype = numpy_dtype(self.precision)
        raw = np.asarray(self.values)
        if np.iscomplexobj(raw):
            raise ValidationError("ScalarField values must be real")
        validate_dims(raw.shape)
        values = np.array(raw, dtype=dtype, order="C", copy=True)
        if not np.all(np.isfinite(values)):
            raise ValidationError("ScalarField values must be finite (no NaN/Inf)")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_flat(
        cls,
        values: Sequence[float] | npt.NDArray[Any],
        dims: Sequence[int],
        precision: Precision = "f64",
    ) -> ScalarField:
        extents = validate_dims(dims)
        flat = np.asarray(values)
        if flat.size != int(np.prod(extents)):
            raise ValidationError(
                f"product(dims)={int(np.prod(extents))} does not match {flat.size} values"
            )
        return cls(flat.reshape(extents), precision=precision)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(extent) for extent in self.values.shape)

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def nbytes(self) -> int:
        return int(self.values.nbytes)

    def as_float64(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.values, dtype=np.float64)

    def value_range(self) -> float:
        return float(np.max(self.values)) - float(np.min(self.values))


@dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    """Full logical DFT of a field; coefficients carry no 1/N factor."""

    values: npt.NDArray[np.complex128]
    precision: Precision = "f64"
    normalization: Normalization = "forward-unscaled"

    def __post_init__(self) -> None:
        numpy_dtype(self.precision)
        if self.normalization != "forward-unscaled":
            raise ValidationError(f"Unsupported normalization: {self.normalization!r}")
        raw = np.asarray(self.values)
        validate_dims(raw.shape)
        values = np.array(raw, dtype=np.complex128, order="C", copy=True)
        object.__setattr__(self, "values", _frozen(values))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(extent) for extent in self.values.shape)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def max_magnitude(self) -> float:
        return float(np.max(np.abs(self.values)))
