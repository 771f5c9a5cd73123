# Author: gadwant
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from dualbound.config import BoundSpec, RunConfig, resolve_bounds
from dualbound.errors import ValidationError
from dualbound.io.raw import save_raw
from dualbound.projection.bounds import (
    ComponentFrequencyBound,
    GlobalFrequencyBound,
    GlobalSpatialBound,
    PointwiseSpatialBound,
)
from dualbound.transform.dft import forward_dft
from dualbound.transform.types import ScalarField


def test_bound_spec_needs_exactly_one_of_each_group() -> None:
    with pytest.raises(PydanticValidationError, match="exactly one of --eps"):
        BoundSpec(delta=1.0)
    with pytest.raises(PydanticValidationError, match="exactly one of --delta"):
        BoundSpec(eps=1.0, delta=1.0, rho=0.1)

    spec = BoundSpec(eps=1.0, rho=0.01)
    assert spec.spectrum_mode


def test_bound_spec_rejects_non_positive_values() -> None:
    with pytest.raises(PydanticValidationError):
        BoundSpec(eps=0.0, delta=1.0)


def test_run_config_defaults_and_ranges() -> None:
    config = RunConfig(command="bench", base="quantizer")

    assert config.m == 16
    assert config.max_iters == 1000
    assert config.shrink_factor == 0.5
    assert config.seed == 0
    with pytest.raises(PydanticValidationError):
        RunConfig(command="bench", base="quantizer", m=25)
    with pytest.raises(PydanticValidationError):
        RunConfig(command="bench", base="quantizer", shrink_factor=1.0)


def test_files_base_needs_a_decompressed_input() -> None:
    with pytest.raises(PydanticValidationError, match="--decompressed"):
        RunConfig(command="correct", base="files")


def test_relative_bounds_resolve_against_range_and_peak() -> None:
    original = ScalarField(np.array([0.0, 1.0, 2.0, 1.0]))
    peak = forward_dft(original).max_magnitude()

    bounds = resolve_bounds(BoundSpec(eps_rel=10.0, delta_rel=1.0), original)

    assert bounds.spatial == GlobalSpatialBound(0.2)
    assert isinstance(bounds.frequency, GlobalFrequencyBound)
    assert bounds.frequency.value == pytest.approx(0.01 * peak)


def test_absolute_and_spectrum_bounds() -> None:
    original = ScalarField(np.array([1.0, 2.0, 3.0, 2.0]))

    bounds = resolve_bounds(BoundSpec(eps=0.5, rho=0.01), original)

    assert bounds.spatial == GlobalSpatialBound(0.5)
    assert isinstance(bounds.frequency, ComponentFrequencyBound)


def test_eps_map_loads_a_per_point_bound(tmp_path: Path) -> None:
    path = tmp_path / "eps.f64"
    save_raw(ScalarField(np.array([0.1, 0.2, 0.3])), path)

    bounds = resolve_bounds(BoundSpec(eps_map=path, delta=1.0), ScalarField(np.zeros(3)))

    assert isinstance(bounds.spatial, PointwiseSpatialBound)
    assert bounds.spatial.values.tolist() == [0.1, 0.2, 0.3]


def test_relative_bounds_need_a_non_trivial_original() -> None:
    constant = ScalarField(np.ones(4))
    with pytest.raises(ValidationError, match="non-constant"):
        resolve_bounds(BoundSpec(eps_rel=1.0, delta=1.0), constant)
    with pytest.raises(ValidationError, match="nonzero"):
        resolve_bounds(BoundSpec(eps=1.0, delta_rel=1.0), ScalarField(np.zeros(4)))
