# Author: gadwant
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from dualbound.errors import ValidationError
from dualbound.projection.bounds import DualBounds
from dualbound.transform.types import ComplexSpectrum, ScalarField


# Excesses within this many ulps of the spectrum scale are transform round-off, not violations.
ROUNDOFF_ULPS = 64.0


class ConvergenceCheck(NamedTuple):
    satisfied: bool
    violations: int
    max_excess: float


def compute_error(original: ScalarField, decompressed: ScalarField) -> ScalarField:
    """epsilon_n = decompressed_n - original_n, evaluated in 64-bit."""
    if original.dims != decompressed.dims:
        raise ValidationError(
            f"Shape mismatch: original {original.dims} vs decompressed {decompressed.dims}"
        )
    if original.precision != decompressed.precision:
        raise ValidationError(
            "Precision mismatch: "
            f"original {original.precision} vs decompressed {decompressed.precision}"
        )
    return ScalarField(decompressed.as_float64() - original.as_float64(), precision="f64")


def frequency_excess(delta: ComplexSpectrum, bounds: DualBounds) -> npt.NDArray[np.float64]:
    """Per-component max(|Re| - Delta_re, |Im| - Delta_im); positive entries violate the f-cube."""
    limit_re, limit_im = bounds.frequency_limits(delta.dims)
    excess_re = np.abs(delta.values.real) - limit_re
    excess_im = np.abs(delta.values.imag) - limit_im
    return np.maximum(excess_re, excess_im)


def spatial_excess(epsilon: ScalarField, bounds: DualBounds) -> npt.NDArray[np.float64]:
    return np.abs(epsilon.as_float64()) - bounds.spatial_limits(epsilon.dims)


def roundoff_allowance(delta: ComplexSpectrum, bounds: DualBounds) -> float:
    """Slack an IFFT-FFT round trip may add to a clipped component."""
    limit_re, limit_im = bounds.frequency_limits(delta.dims)
    scale = max(delta.max_magnitude(), float(np.max(limit_re)), float(np.max(limit_im)))
    return ROUNDOFF_ULPS * float(np.finfo(np.float64).eps) * scale


def check_convergence(
    delta: ComplexSpectrum,
    bounds: DualBounds,
    *,
    allowance: float | None = None,
) -> ConvergenceCheck:
    """Count components past the f-cube by more than `allowance`.

    ``allowance`` defaults to `roundoff_allowance`; ``max_excess`` stays raw.
    """
    if allowance is None:
        allowance = roundoff_allowance(delta, bounds)
    excess = frequency_excess(delta, bounds)
    violations = int(np.count_nonzero(excess > allowance))
    max_excess = max(float(np.max(excess)), 0.0)
    return ConvergenceCheck(violations == 0, violations, max_excess)


def fcube_distance(delta: ComplexSpectrum, bounds: DualBounds) -> float:
    """Euclidean distance (frequency coordinates) from delta to the f-cube."""
    limit_re, limit_im = bounds.frequency_limits(delta.dims)
    out_re = np.maximum(np.abs(delta.values.real) - limit_re, 0.0)
    out_im = np.maximum(np.abs(delta.values.imag) - limit_im, 0.0)
    return float(np.sqrt(np.sum(out_re**2) + np.sum(out_im**2)))


def project_onto_fcube(
    delta: ComplexSpectrum,
    bounds: DualBounds,
) -> tuple[ComplexSpectrum, npt.NDArray[np.complex128]]:
    """Clamp Re and Im independently; the clamp is the exact nearest point of the box."""
    limit_re, limit_im = bounds.frequency_limits(delta.dims)
    real = np.clip(delta.values.real, -limit_re, limit_re)
    imag = np.clip(delta.values.imag, -limit_im, limit_im)
    clipped = real + 1j * imag
    displacement = clipped - delta.values
    return ComplexSpectrum(clipped, precision=delta.precision), displacement


def project_onto_scube(
    epsilon: ScalarField,
    bounds: DualBounds,
) -> tuple[ScalarField, npt.NDArray[np.float64]]:
    limit = bounds.spatial_limits(epsilon.dims)
    values = epsilon.as_float64()
    clipped = np.clip(values, -limit, limit)
    displacement = clipped - values
    return ScalarField(clipped, precision=epsilon.precision), displacement
