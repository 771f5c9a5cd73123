# Author: gadwant
from __future__ import annotations

import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from dualbound.codec.compact import EditSet  # noqa: E402
from dualbound.io.raw import save_raw  # noqa: E402
from dualbound.transform.dft import half_spectrum_shape  # noqa: E402
from dualbound.transform.types import Precision, ScalarField  # noqa: E402

FieldFactory = Callable[..., ScalarField]


@pytest.fixture
def make_field() -> FieldFactory:
    """Seeded Gaussian field of the requested dims and precision."""

    def factory(
        dims: tuple[int, ...],
        seed: int = 0,
        precision: Precision = "f64",
        scale: float = 1.0,
    ) -> ScalarField:
        rng = np.random.default_rng(seed)
        return ScalarField(scale * rng.standard_normal(dims), precision=precision)

    return factory


@pytest.fixture
def small_field(make_field: FieldFactory) -> ScalarField:
    return make_field((8, 6), seed=7)


@pytest.fixture
def write_raw_field(tmp_path: Path) -> Callable[..., Path]:
    """Write a field as headerless raw bytes plus its `.desc` sidecar."""

    def writer(field: ScalarField, name: str, *, sidecar: bool = True) -> Path:
        path = tmp_path / name
        save_raw(field, path, sidecar=sidecar)
        return path

    return writer


@pytest.fixture
def empty_edits() -> Callable[[tuple[int, ...]], EditSet]:
    """An edit set with no active entries in either domain."""

    def factory(dims: tuple[int, ...]) -> EditSet:
        return EditSet.from_dense_arrays(
            dims,
            np.zeros(dims),
            np.zeros(half_spectrum_shape(dims), dtype=np.complex128),
        )

    return factory
