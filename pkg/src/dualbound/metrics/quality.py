# Author: gadwant
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from dualbound.errors import UndefinedMetricError, ValidationError
from dualbound.transform.dft import forward_dft
from dualbound.transform.types import ComplexSpectrum, ScalarField

INF = math.inf


def _difference(original: ScalarField, reconstructed: ScalarField) -> npt.NDArray[np.float64]:
    if original.dims != reconstructed.dims:
        raise ValidationError(
            f"Shape mismatch: original {original.dims} vs reconstructed {reconstructed.dims}"
        )
    return reconstructed.as_float64() - original.as_float64()


def _check_spectra(original: ComplexSpectrum, other: ComplexSpectrum) -> None:
    if original.dims != other.dims:
        raise ValidationError(f"Spectrum shapes differ: {original.dims} vs {other.dims}")


def mse(original: ScalarField, reconstructed: ScalarField) -> float:
    return float(np.mean(_difference(original, reconstructed) ** 2))


def frequency_mse(delta: ComplexSpectrum) -> float:
    """Mean |delta_k|^2; equals prod(dims) times the spatial MSE."""
    return float(np.mean(np.abs(delta.values) ** 2))


def max_abs_error(original: ScalarField, reconstructed: ScalarField) -> float:
    return float(np.max(np.abs(_difference(original, reconstructed))))


def psnr(original: ScalarField, reconstructed: ScalarField) -> float:
    """20 log10(value range / RMSE); identical inputs give `INF`."""
    rmse = math.sqrt(mse(original, reconstructed))
    if rmse == 0:
        return INF
    value_range = original.value_range()
    if value_range == 0:
        raise UndefinedMetricError("PSNR is undefined for a constant original with nonzero error")
    return 20.0 * math.log10(value_range / rmse)


def ssnr(original_spectrum: ComplexSpectrum, reconstructed_spectrum: ComplexSpectrum) -> float:
    _check_spectra(original_spectrum, reconstructed_spectrum)
    signal = float(np.sum(np.abs(original_spectrum.values) ** 2))
    noise = float(np.sum(np.abs(original_spectrum.values - reconstructed_spectrum.values) ** 2))
    if noise == 0:
        return INF
    if signal == 0:
        raise UndefinedMetricError("SSNR is undefined for a zero-energy original spectrum")
    return 10.0 * math.log10(signal / noise)


def rfe(delta: ComplexSpectrum, original_spectrum: ComplexSpectrum) -> npt.NDArray[np.float64]:
    """|delta_k| / max_k |X_k| per component."""
    _check_spectra(original_spectrum, delta)
    peak = original_spectrum.max_magnitude()
    if peak == 0:
        raise UndefinedMetricError("RFE is undefined for an all-zero original spectrum")
    return np.abs(delta.values) / peak


def format_metric(value: float) -> str | float:
    """Reports carry infinities as the string "inf"."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


@dataclass(frozen=True)
class QualityReport:
    psnr: float
    ssnr: float
    max_spatial_error: float
    max_rfe: float
    max_frequency_error: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "psnr": format_metric(self.psnr),
            "ssnr": format_metric(self.ssnr),
            "max_spatial_error": self.max_spatial_error,
            "max_rfe": self.max_rfe,
            "max_frequency_error": self.max_frequency_error,
        }


def quality_report(
    original: ScalarField,
    reconstructed: ScalarField,
    *,
    original_spectrum: ComplexSpectrum | None = None,
    workers: int | None = None,
) -> QualityReport:
    """Every metric at once; the error spectrum is the DFT of the 64-bit difference."""
    spectrum = original_spectrum
    if spectrum is None:
        spectrum = forward_dft(original, workers=workers)
    difference = ScalarField(_difference(original, reconstructed))
    delta = forward_dft(difference, workers=workers)
    reconstructed_spectrum = ComplexSpectrum(spectrum.values + delta.values)
    parts = np.maximum(np.abs(delta.values.real), np.abs(delta.values.imag))
    return QualityReport(
        psnr=psnr(original, reconstructed),
        ssnr=ssnr(spectrum, reconstructed_spectrum),
        max_spatial_error=float(np.max(np.abs(difference.values))),
        max_rfe=float(np.max(rfe(delta, spectrum))),
        max_frequency_error=float(np.max(parts)),
    )
