# Author: gadwant
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from dualbound.errors import ValidationError
from dualbound.transform.dft import mirror_indices

MIN_CODE_BITS = 1
MAX_CODE_BITS = 24


def _positive_scalar(value: float, label: str) -> float:
    result = float(value)
    if not np.isfinite(result) or result <= 0:
        raise ValidationError(f"{label} must be positive and finite, got {value!r}")
    return result


def _positive_array(values: Any, label: str) -> npt.NDArray[np.float64]:
    array = np.array(values, dtype=np.float64, copy=True)
    if array.size == 0:
        raise ValidationError(f"{label} must not be empty")
    if not np.all(np.isfinite(array)) or np.any(array <= 0):
        raise ValidationError(f"{label} entries must be positive and finite")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GlobalSpatialBound:
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", _positive_scalar(self.value, "Spatial bound E"))


@dataclass(frozen=True, eq=False)
class PointwiseSpatialBound:
    values: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _positive_array(self.values, "Pointwise bound E_n"))


@dataclass(frozen=True)
class GlobalFrequencyBound:
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", _positive_scalar(self.value, "Frequency bound Delta"))


@dataclass(frozen=True, eq=False)
class ComponentFrequencyBound:
    """Per-component bounds on Re and Im, shaped like the full spectrum."""

    real: npt.NDArray[np.float64]
    imag: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        real = _positive_array(self.real, "Delta_re")
        imag = _positive_array(self.imag, "Delta_im")
        if real.shape != imag.shape:
            raise ValidationError(f"Delta_re {real.shape} and Delta_im {imag.shape} differ")
        for label, array in (("Delta_re", real), ("Delta_im", imag)):
            if not np.array_equal(array, mirror_indices(array)):
                raise ValidationError(
                    f"{label} is not Hermitian-consistent: bound(k) != bound(-k mod dims)"
                )
        object.__setattr__(self, "real", real)
        object.__setattr__(self, "imag", imag)


SpatialBound = GlobalSpatialBound | PointwiseSpatialBound
FrequencyBound = GlobalFrequencyBound | ComponentFrequencyBound


def _check_shape(
    array: npt.NDArray[Any],
    dims: tuple[int, ...],
    label: str,
    *,
    allow_flat: bool = False,
) -> None:
    if tuple(array.shape) != dims:
        if allow_flat and array.ndim == 1 and array.size == int(np.prod(dims)):
            return
        raise ValidationError(f"{label} has shape {array.shape}, field dims are {dims}")


@dataclass(frozen=True, eq=False)
class DualBounds:
    """Spatial bound E (s-cube) plus frequency bound Delta (f-cube)."""

    spatial: SpatialBound
    frequency: FrequencyBound

    @classmethod
    def uniform(cls, spatial: float, frequency: float) -> DualBounds:
        return cls(GlobalSpatialBound(spatial), GlobalFrequencyBound(frequency))

    def spatial_limits(self, dims: Sequence[int]) -> npt.NDArray[np.float64]:
        """E_n broadcastable against a field of `dims`."""
        extents = tuple(int(extent) for extent in dims)
        if isinstance(self.spatial, GlobalSpatialBound):
            return np.asarray(self.spatial.value, dtype=np.float64)
        _check_shape(self.spatial.values, extents, "Pointwise spatial bound", allow_flat=True)
        return self.spatial.values.reshape(extents)

    def frequency_limits(
        self,
        dims: Sequence[int],
    ) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
        """(Delta_re, Delta_im) broadcastable against a spectrum of `dims`."""
        extents = tuple(int(extent) for extent in dims)
        if isinstance(self.frequency, GlobalFrequencyBound):
            value = np.asarray(self.frequency.value, dtype=np.float64)
            return value, value
        _check_shape(self.frequency.real, extents, "Per-component frequency bound")
        return self.frequency.real.reshape(extents), self.frequency.imag.reshape(extents)

    def scaled(self, factor: float) -> DualBounds:
        spatial: SpatialBound
        if isinstance(self.spatial, GlobalSpatialBound):
            spatial = GlobalSpatialBound(self.spatial.value * factor)
        else:
            spatial = PointwiseSpatialBound(self.spatial.values * factor)

        frequency: FrequencyBound
        if isinstance(self.frequency, GlobalFrequencyBound):
            frequency = GlobalFrequencyBound(self.frequency.value * factor)
        else:
            frequency = ComponentFrequencyBound(
                self.frequency.real * factor,
                self.frequency.imag * factor,
            )
        return DualBounds(spatial, frequency)

    def with_frequency(self, frequency: FrequencyBound) -> DualBounds:
        return DualBounds(self.spatial, frequency)


def shrink_factor(m: int) -> float:
    if not MIN_CODE_BITS <= m <= MAX_CODE_BITS:
        raise ValidationError(
            f"Code length m must be in [{MIN_CODE_BITS}, {MAX_CODE_BITS}], got {m}"
        )
    return 1.0 - 2.0 ** (-m)


def shrink_bounds(bounds: DualBounds, m: int) -> DualBounds:
    """Scale every bound by (1 - 2^-m) so m-bit quantized edits stay feasible."""
    return bounds.scaled(shrink_factor(m))
