# Author: gadwant
from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy import fft as sp_fft

from dualbound.errors import OracleLimitError, SymmetryError, ValidationError
from dualbound.transform.types import (
    ComplexSpectrum,
    Precision,
    ScalarField,
    validate_dims,
)


ORACLE_MAX_SAMPLES = 4096

IMAG_RESIDUE_TOLERANCE: dict[str, float] = {"f32": 1e-6, "f64": 1e-10}


def forward_dft(field: ScalarField, *, workers: int | None = None) -> ComplexSpectrum:
    """Unnormalized forward DFT: X_k = sum_n x_n exp(-2 pi i k n / N), per axis."""
    values = sp_fft.fftn(field.as_float64(), workers=workers)
    return ComplexSpectrum(values, precision=field.precision)


def inverse_dft(spectrum: ComplexSpectrum, *, workers: int | None = None) -> ScalarField:
    """Inverse DFT with the 1/prod(dims) factor; the result must be real to round-off."""
    values = sp_fft.ifftn(spectrum.values, workers=workers)
    residue = float(np.max(np.abs(values.imag)))
    scale = float(np.max(np.abs(values)))
    tolerance = IMAG_RESIDUE_TOLERANCE[spectrum.precision] * scale
    if residue > tolerance:
        raise SymmetryError(
            f"Inverse transform left an imaginary residue of {residue:.3e} "
            f"(tolerance {tolerance:.3e}); the spectrum is not Hermitian"
        )
    return ScalarField(values.real, precision=spectrum.precision)


def _dft_matrix(extent: int) -> npt.NDArray[np.complex128]:
    index = np.arange(extent, dtype=np.int64)
    # Reduce k*n modulo N before scaling so the phase stays exact for large products.
    phase = np.outer(index, index) % extent
    return np.exp(-2j * np.pi * phase / extent)


def brute_force_dft(field: ScalarField) -> ComplexSpectrum:
    """Direct summation along every axis; a test oracle for `forward_dft`."""
    if field.size > ORACLE_MAX_SAMPLES:
        raise OracleLimitError(
            f"Oracle DFT is limited to {ORACLE_MAX_SAMPLES} samples, field has {field.size}"
        )

    values: npt.NDArray[Any] = field.as_float64().astype(np.complex128)
    for axis, extent in enumerate(field.dims):
        matrix = _dft_matrix(extent)
        moved = np.moveaxis(values, axis, 0)
        summed = np.tensordot(matrix, moved, axes=([1], [0]))
        values = np.moveaxis(summed, 0, axis)
    return ComplexSpectrum(values, precision=field.precision)


def mirror_indices(values: npt.NDArray[Any]) -> npt.NDArray[Any]:
    """Return `values` re-indexed at (dims - k) mod dims on every axis."""
    mirrored = values
    for axis in range(values.ndim):
        mirrored = np.roll(np.flip(mirrored, axis=axis), 1, axis=axis)
    return mirrored


def check_hermitian(spectrum: ComplexSpectrum, tol: float) -> bool:
    partner = np.conj(mirror_indices(spectrum.values))
    deviation = float(np.max(np.abs(spectrum.values - partner)))
    return deviation <= tol


def half_spectrum_shape(dims: Sequence[int]) -> tuple[int, ...]:
    extents = validate_dims(dims)
    return (*extents[:-1], extents[-1] // 2 + 1)


def to_half_spectrum(values: npt.NDArray[Any]) -> npt.NDArray[Any]:
    """Keep last-axis indices 0..floor(N/2); the rest is implied by Hermitian symmetry."""
    last = values.shape[-1] // 2 + 1
    return np.ascontiguousarray(values[..., :last])


def expand_half_spectrum(
    half: npt.NDArray[Any],
    dims: Sequence[int],
    *,
    conjugate: bool = True,
) -> npt.NDArray[Any]:
    """Rebuild the full array from its non-redundant half by mirroring.

    With ``conjugate=False`` the mirror copies values unchanged, which is what real-valued
    per-component quantities (bounds, magnitudes) need.
    """
    extents = validate_dims(dims)
    expected = half_spectrum_shape(extents)
    if tuple(half.shape) != expected:
        raise ValidationError(f"Half spectrum has shape {half.shape}, expected {expected}")

    last = extents[-1]
    kept = expected[-1]
    full = np.zeros(extents, dtype=half.dtype)
    full[..., :kept] = half
    if last > kept:
        leading = [(-np.arange(extent)) % extent for extent in extents[:-1]]
        tail = last - np.arange(kept, last)
        mirrored = half[np.ix_(*leading, tail)]
        full[..., kept:] = np.conj(mirrored) if conjugate else mirrored
    return full


def spectrum_from_half(
    half: npt.NDArray[Any],
    dims: Sequence[int],
    precision: Precision = "f64",
) -> ComplexSpectrum:
    full = expand_half_spectrum(np.asarray(half, dtype=np.complex128), dims)
    return ComplexSpectrum(full, precision=precision)
