# Author: gadwant
from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from dualbound.codec.compact import DEFAULT_CODE_BITS
from dualbound.errors import ValidationError
from dualbound.io.raw import DatasetDescriptor, load_raw
from dualbound.metrics.spectrum import spectrum_bound_to_freq_bounds
from dualbound.projection.bounds import (
    MAX_CODE_BITS,
    MIN_CODE_BITS,
    DualBounds,
    FrequencyBound,
    GlobalFrequencyBound,
    GlobalSpatialBound,
    PointwiseSpatialBound,
    SpatialBound,
)
from dualbound.projection.loop import DEFAULT_MAX_ITERS
from dualbound.transform.dft import forward_dft
from dualbound.transform.types import ComplexSpectrum, Precision, ScalarField

BaseKind = Literal["quantizer", "files"]


def _count_set(*values: object) -> int:
    return sum(value is not None for value in values)


class BoundSpec(BaseModel):
    """Spatial bound (absolute, percent of value range, or per-point map) plus frequency bound
    (absolute, percent of max |X_k|, or power-spectrum tolerance rho)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eps: float | None = Field(default=None, gt=0)
    eps_rel: float | None = Field(default=None, gt=0)
    eps_map: Path | None = None
    delta: float | None = Field(default=None, gt=0)
    delta_rel: float | None = Field(default=None, gt=0)
    rho: float | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _one_of_each(self) -> BoundSpec:
        if _count_set(self.eps, self.eps_rel, self.eps_map) != 1:
            raise ValueError("give exactly one of --eps, --eps-rel, --eps-map")
        if _count_set(self.delta, self.delta_rel, self.rho) != 1:
            raise ValueError("give exactly one of --delta, --delta-rel, --rho")
        return self

    @property
    def spectrum_mode(self) -> bool:
        return self.rho is not None


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: str
    original: Path | None = None
    decompressed: Path | None = None
    dims: tuple[int, ...] | None = None
    precision: Precision | None = None
    bounds: BoundSpec | None = None
    m: int = Field(default=DEFAULT_CODE_BITS, ge=MIN_CODE_BITS, le=MAX_CODE_BITS)
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, ge=1)
    shrink_factor: float = Field(default=0.5, gt=0, lt=1)
    seed: int = 0
    base: BaseKind = "files"
    out: Path | None = None
    workers: int | None = None

    @model_validator(mode="after")
    def _inputs_for_base(self) -> RunConfig:
        needs_pair = self.command in ("correct", "bench")
        if self.base == "files" and needs_pair and self.decompressed is None:
            raise ValueError("--base files needs --decompressed")
        return self


def resolve_spatial(spec: BoundSpec, original: ScalarField) -> SpatialBound:
    if spec.eps is not None:
        return GlobalSpatialBound(spec.eps)
    if spec.eps_rel is not None:
        value_range = original.value_range()
        if value_range == 0:
            raise ValidationError("A relative spatial bound needs a non-constant original field")
        return GlobalSpatialBound(spec.eps_rel / 100.0 * value_range)
    if spec.eps_map is None:
        raise ValidationError("No spatial bound given")
    bound_map = load_raw(DatasetDescriptor(path=spec.eps_map, dims=original.dims, precision="f64"))
    return PointwiseSpatialBound(bound_map.values)


def resolve_frequency(spec: BoundSpec, spectrum: ComplexSpectrum) -> FrequencyBound:
    if spec.delta is not None:
        return GlobalFrequencyBound(spec.delta)
    if spec.delta_rel is not None:
        peak = spectrum.max_magnitude()
        if peak == 0:
            raise ValidationError("A relative frequency bound needs a nonzero original spectrum")
        return GlobalFrequencyBound(spec.delta_rel / 100.0 * peak)
    if spec.rho is None:
        raise ValidationError("No frequency bound given")
    return spectrum_bound_to_freq_bounds(spectrum, spec.rho)


def resolve_bounds(
    spec: BoundSpec,
    original: ScalarField,
    *,
    original_spectrum: ComplexSpectrum | None = None,
) -> DualBounds:
    """Absolute bounds: percentages refer to the original value range and max_k |X_k|."""
    spectrum = original_spectrum if original_spectrum is not None else forward_dft(original)
    return DualBounds(resolve_spatial(spec, original), resolve_frequency(spec, spectrum))
