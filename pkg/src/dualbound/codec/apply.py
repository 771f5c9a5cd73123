# Author: gadwant
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from dualbound.codec.compact import EditSet
from dualbound.errors import ValidationError
from dualbound.projection.bounds import DualBounds
from dualbound.projection.cubes import ROUNDOFF_ULPS, frequency_excess, spatial_excess
from dualbound.transform.dft import forward_dft, inverse_dft, spectrum_from_half
from dualbound.transform.types import ComplexSpectrum, ScalarField


def _check_dims(field: ScalarField, edits: EditSet) -> None:
    if field.dims != edits.dims:
        raise ValidationError(f"Edits are for dims {edits.dims}, field has dims {field.dims}")


def frequency_edits_in_space(
    edits: EditSet,
    *,
    workers: int | None = None,
) -> npt.NDArray[np.float64]:
    """Inverse DFT of the Hermitian-expanded frequency edits."""
    if edits.active_frequency == 0:
        return np.zeros(edits.dims, dtype=np.float64)
    spectrum = spectrum_from_half(edits.dense_frequency_half(), edits.dims)
    return inverse_dft(spectrum, workers=workers).as_float64()


def apply_edits(
    decompressed: ScalarField,
    edits: EditSet,
    *,
    workers: int | None = None,
) -> ScalarField:
    """decompressed + spatial edits + IDFT(frequency edits), returned in 64-bit."""
    _check_dims(decompressed, edits)
    corrected = (
        decompressed.as_float64()
        + edits.dense_spatial()
        + frequency_edits_in_space(edits, workers=workers)
    )
    return ScalarField(corrected, precision="f64")


def complete_edits(
    edits: EditSet,
    *,
    workers: int | None = None,
) -> tuple[npt.NDArray[np.float64], ComplexSpectrum]:
    """Total change seen in each domain: (space, frequency)."""
    spatial = edits.dense_spatial()
    in_space = spatial + frequency_edits_in_space(edits, workers=workers)
    spatial_spectrum = forward_dft(ScalarField(spatial), workers=workers).values
    frequency = spectrum_from_half(edits.dense_frequency_half(), edits.dims).values
    return in_space, ComplexSpectrum(spatial_spectrum + frequency)


@dataclass(frozen=True, eq=False)
class BoundsCheck:
    ok: bool
    max_spatial_excess: float
    max_freq_excess: float
    spatial_violations: npt.NDArray[np.bool_]
    frequency_violations: npt.NDArray[np.bool_]

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "max_spatial_excess": self.max_spatial_excess,
            "max_freq_excess": self.max_freq_excess,
            "spatial_violations": int(np.count_nonzero(self.spatial_violations)),
            "frequency_violations": int(np.count_nonzero(self.frequency_violations)),
        }


def verify_bounds(
    original: ScalarField,
    corrected: ScalarField,
    bounds: DualBounds,
    *,
    original_spectrum: ComplexSpectrum | None = None,
    workers: int | None = None,
) -> BoundsCheck:
    """Recompute both errors from scratch and test them against `bounds`.

    ``ok`` tolerates 64 ulps of the field (spatial) or spectrum (frequency) magnitude scale;
    the reported excesses are raw.
    """
    if original.dims != corrected.dims:
        raise ValidationError(
            f"Shape mismatch: original {original.dims} vs corrected {corrected.dims}"
        )
    reference = original.as_float64()
    epsilon = ScalarField(corrected.as_float64() - reference, precision="f64")
    delta = forward_dft(epsilon, workers=workers)

    eps = float(np.finfo(np.float64).eps)
    spatial_scale = max(float(np.max(np.abs(reference))), float(np.max(np.abs(corrected.values))))
    spectrum = original_spectrum if original_spectrum is not None else forward_dft(original)
    frequency_scale = max(spectrum.max_magnitude(), spatial_scale)

    excess_s = spatial_excess(epsilon, bounds)
    excess_f = frequency_excess(delta, bounds)
    spatial_violations = excess_s > ROUNDOFF_ULPS * eps * spatial_scale
    frequency_violations = excess_f > ROUNDOFF_ULPS * eps * frequency_scale
    return BoundsCheck(
        ok=not (spatial_violations.any() or frequency_violations.any()),
        max_spatial_excess=max(float(np.max(excess_s)), 0.0),
        max_freq_excess=max(float(np.max(excess_f)), 0.0),
        spatial_violations=spatial_violations,
        frequency_violations=frequency_violations,
    )

