# Author: gadwant
from __future__ import annotations

import numpy as np
import pytest

from dualbound.errors import ValidationError
from dualbound.transform.types import ComplexSpectrum, ScalarField, validate_dims


def test_scalar_field_copies_and_freezes_values() -> None:
    source = np.arange(6, dtype=np.float64).reshape(2, 3)
    field = ScalarField(source)

    source[0, 0] = 99.0

    assert field.values[0, 0] == 0.0
    with pytest.raises(ValueError):
        field.values[0, 0] = 1.0


def test_scalar_field_casts_to_declared_precision() -> None:
    field = ScalarField(np.array([0.1, 0.2]), precision="f32")

    assert field.values.dtype == np.float32
    assert field.nbytes == 8


def test_scalar_field_rejects_non_finite_values() -> None:
    with pytest.raises(ValidationError):
        ScalarField(np.array([1.0, np.nan]))


def test_scalar_field_rejects_complex_values() -> None:
    with pytest.raises(ValidationError):
        ScalarField(np.array([1.0 + 1j]))


def test_from_flat_checks_sample_count() -> None:
    with pytest.raises(ValidationError, match="does not match"):
        ScalarField.from_flat([1.0, 2.0, 3.0], (2, 2))

    field = ScalarField.from_flat([1.0, 2.0, 3.0, 4.0], (2, 2))
    assert field.dims == (2, 2)


@pytest.mark.parametrize("dims", [(), (2, 2, 2, 2), (0,), (4, -1)])
def test_validate_dims_rejects_bad_extents(dims: tuple[int, ...]) -> None:
    with pytest.raises(ValidationError):
        validate_dims(dims)


def test_value_range() -> None:
    assert ScalarField(np.array([-1.0, 0.5, 3.0])).value_range() == 4.0


def test_complex_spectrum_rejects_other_normalization() -> None:
    values = np.ones(4, dtype=np.complex128)
    with pytest.raises(ValidationError):
        ComplexSpectrum(values, normalization="ortho")  # type: ignore[arg-type]
