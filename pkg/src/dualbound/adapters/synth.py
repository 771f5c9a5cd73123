# Author: gadwant
from __future__ import annotations

from collections.abc import Sequence
from typing import Literal

import numpy as np
import numpy.typing as npt
from scipy import fft as sp_fft

from dualbound.errors import ValidationError
from dualbound.transform.types import Precision, ScalarField, validate_dims

SynthKind = Literal["white-noise", "power-law", "exponential", "impulse", "constant"]
SYNTH_KINDS: tuple[SynthKind, ...] = (
    "white-noise",
    "power-law",
    "exponential",
    "impulse",
    "constant",
)


def radial_wavenumber(dims: Sequence[int]) -> npt.NDArray[np.float64]:
    """|k| on the unshifted DFT grid, in integer wavenumber units."""
    axes = [sp_fft.fftfreq(extent, d=1.0 / extent) for extent in dims]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.sqrt(sum(grid**2 for grid in grids))


def _shaped_noise(
    noise: npt.NDArray[np.float64],
    envelope: npt.NDArray[np.float64],
) -> npt.NDArray[np.float64]:
    # White noise already has a Hermitian spectrum with random phases.
    shaped = sp_fft.ifftn(sp_fft.fftn(noise) * np.sqrt(envelope)).real
    spread = float(np.std(shaped))
    return shaped / spread if spread > 0 else shaped


def synth_field(
    kind: SynthKind,
    dims: Sequence[int],
    seed: int = 0,
    *,
    alpha: float = 2.0,
    k0: float = 4.0,
    amplitude: float = 1.0,
    mean: float = 0.0,
    precision: Precision = "f64",
) -> ScalarField:
    extents = validate_dims(dims)
    rng = np.random.default_rng(seed)

    if kind == "white-noise":
        values = rng.standard_normal(extents)
    elif kind in ("power-law", "exponential"):
        k = radial_wavenumber(extents)
        if kind == "power-law":
            if alpha <= 0:
                raise ValidationError(f"alpha must be > 0, got {alpha}")
            envelope = np.zeros_like(k)
            np.power(k, -alpha, out=envelope, where=k > 0)
        else:
            if k0 <= 0:
                raise ValidationError(f"k0 must be > 0, got {k0}")
            envelope = np.exp(-k / k0)
            envelope.flat[0] = 0.0
        values = _shaped_noise(rng.standard_normal(extents), envelope)
    elif kind == "impulse":
        values = np.zeros(extents)
        values[tuple(extent // 2 for extent in extents)] = 1.0
    elif kind == "constant":
        values = np.ones(extents)
    else:
        raise ValidationError(f"Unknown synthetic kind {kind!r}; expected one of {SYNTH_KINDS}")

    return ScalarField(amplitude * values + mean, precision=precision)
