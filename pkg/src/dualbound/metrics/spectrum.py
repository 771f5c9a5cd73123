# Author: gadwant
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy import fft as sp_fft

from dualbound.errors import ValidationError
from dualbound.projection.bounds import ComponentFrequencyBound
from dualbound.transform.dft import mirror_indices
from dualbound.transform.types import ComplexSpectrum, ScalarField

MEAN_GUARD = 1e-12
BOUND_FLOOR = 1e-7


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """Shell-summed |X'_k|^2 of the mean-normalized field, keyed by integer radius."""

    k_bins: npt.NDArray[np.int64]
    power: npt.NDArray[np.float64]
    counts: npt.NDArray[np.int64]
    mean_fallback: bool = False

    def rows(self) -> list[dict[str, Any]]:
        return [
            {"k": int(k), "P_k": float(p), "count": int(c)}
            for k, p, c in zip(self.k_bins, self.power, self.counts)
        ]


def normalized_fluctuation(values: npt.NDArray[np.float64]) -> tuple[npt.NDArray[np.float64], bool]:
    """(x - mean) / mean, or x - mean when the mean is numerically zero (flagged True)."""
    mean = float(np.mean(values))
    scale = float(np.max(np.abs(values)))
    if abs(mean) > MEAN_GUARD * scale:
        return (values - mean) / mean, False
    return values - mean, True


def _shell_index(dims: tuple[int, ...]) -> npt.NDArray[np.int64]:
    axes = [np.arange(extent) - extent // 2 for extent in dims]
    grids = np.meshgrid(*axes, indexing="ij")
    radius = np.sqrt(sum(grid.astype(np.float64) ** 2 for grid in grids))
    return np.rint(radius).astype(np.int64)


def power_spectrum(field: ScalarField, *, workers: int | None = None) -> PowerSpectrum:
    fluctuation, fallback = normalized_fluctuation(field.as_float64())
    centered = sp_fft.fftshift(sp_fft.fftn(fluctuation, workers=workers))
    shells = _shell_index(field.dims).ravel()
    power = np.bincount(shells, weights=(np.abs(centered) ** 2).ravel())
    counts = np.bincount(shells)
    occupied = counts > 0
    return PowerSpectrum(
        k_bins=np.flatnonzero(occupied).astype(np.int64),
        power=power[occupied],
        counts=counts[occupied].astype(np.int64),
        mean_fallback=fallback,
    )


def power_spectrum_ratio(
    reference: PowerSpectrum,
    reconstructed: PowerSpectrum,
) -> npt.NDArray[np.float64]:
    """P_hat(k) / P(k) per bin; empty bins in both give 1, empty reference bins give inf."""
    if not np.array_equal(reference.k_bins, reconstructed.k_bins):
        raise ValidationError("Power spectra cover different shells")
    ratio = np.ones_like(reference.power)
    nonzero = reference.power > 0
    ratio[nonzero] = reconstructed.power[nonzero] / reference.power[nonzero]
    ratio[~nonzero & (reconstructed.power > 0)] = math.inf
    return ratio


def relative_power_box(
    magnitudes: npt.NDArray[np.float64],
    rho: float,
) -> npt.NDArray[np.float64]:
    """Largest Re/Im half-width keeping | |X_hat|^2 - |X|^2 | <= rho |X|^2 per component."""
    if rho < 0:
        raise ValidationError(f"rho must be >= 0, got {rho}")
    return magnitudes * math.expm1(0.5 * math.log1p(rho)) / math.sqrt(2.0)


def spectrum_bound_to_freq_bounds(
    original_spectrum: ComplexSpectrum,
    rho: float,
) -> ComponentFrequencyBound:
    """Per-component bounds keeping every normalized power-spectrum shell within rho.

    The zero-frequency bound sits at the floor, and rho is tightened by the relative change of
    the mean that floor permits, since the normalized spectrum divides by the mean.
    """
    if rho < 0:
        raise ValidationError(f"rho must be >= 0, got {rho}")
    values = original_spectrum.values
    magnitude = np.abs(values)
    magnitude = np.minimum(magnitude, mirror_indices(magnitude))
    floor = max(BOUND_FLOOR * float(np.max(magnitude)), float(np.finfo(np.float64).tiny))

    dc = float(magnitude.flat[0])
    drift = math.sqrt(2.0) * floor / dc if dc > 0 else 0.0
    rho_eff = max(
        min((1.0 + rho) * (1.0 - drift) ** 2 - 1.0, 1.0 - (1.0 - rho) * (1.0 + drift) ** 2),
        0.0,
    )

    delta = np.maximum(relative_power_box(magnitude, rho_eff), floor)
    delta.flat[0] = floor
    return ComponentFrequencyBound(delta, delta.copy())
