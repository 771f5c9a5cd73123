# Author: gadwant
from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from dualbound.errors import RawIOError, ValidationError
from dualbound.transform.types import Precision, ScalarField, numpy_dtype, validate_dims

logger = logging.getLogger(__name__)

ByteOrder = Literal["little", "big"]

SIDECAR_SUFFIX = ".desc"
_BYTE_ORDER_CHARS: dict[str, str] = {"little": "<", "big": ">"}


class DatasetDescriptor(BaseModel):
    """Headerless raw field: row-major samples, dims and dtype supplied out of band."""

    model_config = ConfigDict(frozen=True)

    path: Path
    dims: tuple[int, ...]
    precision: Precision = "f64"
    byte_order: ByteOrder = "little"
    attribute: str | None = None

    @field_validator("dims")
    @classmethod
    def _check_dims(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        return validate_dims(value)

    @property
    def sample_count(self) -> int:
        return int(np.prod(self.dims))

    @property
    def dtype(self) -> np.dtype[Any]:
        return numpy_dtype(self.precision).newbyteorder(_BYTE_ORDER_CHARS[self.byte_order])

    @property
    def nbytes(self) -> int:
        return self.sample_count * self.dtype.itemsize


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + SIDECAR_SUFFIX)


def parse_dims(text: str) -> tuple[int, ...]:
    """Accept "64x64x64" or "64,64,64"."""
    parts = [part for part in text.replace("x", ",").split(",") if part.strip()]
    try:
        return validate_dims([int(part) for part in parts])
    except ValueError as exc:
        raise ValidationError(f"Invalid dims {text!r}: {exc}") from exc


def read_sidecar(path: Path) -> dict[str, Any]:
    """Parse key=value lines; blank lines and # comments are skipped."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise RawIOError(f"Cannot read descriptor {path}: {exc}") from exc

    entries: dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, separator, value = stripped.partition("=")
        if not separator:
            raise ValidationError(f"{path}:{number}: expected key=value, got {stripped!r}")
        entries[key.strip()] = value.strip()

    if "dims" in entries:
        entries["dims"] = parse_dims(entries["dims"])
    if "dtype" in entries:
        entries["precision"] = entries.pop("dtype")
    return entries


def write_sidecar(descriptor: DatasetDescriptor) -> Path:
    lines = [
        f"dims={','.join(str(extent) for extent in descriptor.dims)}",
        f"dtype={descriptor.precision}",
        f"byte_order={descriptor.byte_order}",
    ]
    if descriptor.attribute:
        lines.append(f"attribute={descriptor.attribute}")
    target = sidecar_path(descriptor.path)
    try:
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise RawIOError(f"Cannot write descriptor {target}: {exc}") from exc
    return target


def resolve_descriptor(
    path: Path,
    *,
    dims: Sequence[int] | None = None,
    precision: Precision | None = None,
) -> DatasetDescriptor:
    """Explicit dims/precision win over a `<file>.desc` sidecar next to the data."""
    settings: dict[str, Any] = {}
    sidecar = sidecar_path(path)
    if sidecar.is_file():
        settings.update(read_sidecar(sidecar))
    if dims is not None:
        settings["dims"] = tuple(dims)
    if precision is not None:
        settings["precision"] = precision
    if "dims" not in settings:
        raise ValidationError(f"No dims for {path}: pass --dims or provide {sidecar.name}")
    settings["path"] = path
    return DatasetDescriptor(**settings)


def load_raw(descriptor: DatasetDescriptor) -> ScalarField:
    try:
        raw = descriptor.path.read_bytes()
    except OSError as exc:
        raise RawIOError(f"Cannot read {descriptor.path}: {exc}") from exc
    if len(raw) != descriptor.nbytes:
        raise RawIOError(
            f"{descriptor.path} holds {len(raw)} bytes, expected {descriptor.nbytes} "
            f"for dims {descriptor.dims} at {descriptor.precision}"
        )
    values = np.frombuffer(raw, dtype=descriptor.dtype)
    return ScalarField.from_flat(values, descriptor.dims, descriptor.precision)


def save_raw(
    field: ScalarField,
    path: Path,
    *,
    precision: Precision | None = None,
    sidecar: bool = False,
) -> DatasetDescriptor:
    target = precision or field.precision
    if target == "f32" and field.precision == "f64":
        logger.info("Narrowing %s to 32-bit on save; bound checks use the 64-bit values", path)
    descriptor = DatasetDescriptor(path=path, dims=field.dims, precision=target)
    try:
        path.write_bytes(field.values.astype(descriptor.dtype).tobytes())
    except OSError as exc:
        raise RawIOError(f"Cannot write {path}: {exc}") from exc
    if sidecar:
        write_sidecar(descriptor)
    return descriptor

