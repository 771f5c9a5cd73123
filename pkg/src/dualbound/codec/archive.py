# Author: gadwant
"""Binary container for quantized edits.

Layout (little-endian)::

    "FFCZ" u16 version u8 ndim u64 extents[ndim]
    u8 precision u8 spatial-mode u8 frequency-mode u64 bound-payload-length
    bound payload (zstandard frame)
    u8 m u8 converged u64 active[2] u64 stream-lengths[4] u64 escape-count u32 payload-crc
    u32 header-crc
    spatial flags | spatial indices | frequency flags | frequency indices | escapes

Frequency flags and per-component frequency bounds cover the half spectrum
(last axis 0..N//2). Escapes are (u64 index, f64, f64) triples.
"""

from __future__ import annotations

from dataclasses import dataclass
from struct import Struct, error as StructError

import crc32c
import numpy as np

from dualbound.codec.compact import EscapeList, QuantizationParams, QuantizedEdits
from dualbound.codec.entropy import (
    decode_flags,
    decode_index_stream,
    encode_flags,
    encode_index_stream,
    zstd_compress,
    zstd_decompress,
)
from dualbound.errors import DecodeError, FormatError
from dualbound.projection.bounds import (
    ComponentFrequencyBound,
    DualBounds,
    FrequencyBound,
    GlobalFrequencyBound,
    GlobalSpatialBound,
    PointwiseSpatialBound,
    SpatialBound,
    shrink_factor,
)
from dualbound.transform.dft import expand_half_spectrum, half_spectrum_shape, to_half_spectrum
from dualbound.transform.types import Precision, validate_dims

MAGIC = b"FFCZ"
FORMAT_VERSION = 1

PREAMBLE = Struct("<4sHB")
EXTENT = Struct("<Q")
DESCRIPTOR = Struct("<BBBQ")
SUMMARY = Struct("<BBQQQQQQQI")
CHECKSUM = Struct("<I")
ESCAPE_DTYPE = np.dtype([("index", "<u8"), ("real", "<f8"), ("imag", "<f8")])

PRECISION_TAGS: dict[Precision, int] = {"f32": 32, "f64": 64}
SPATIAL_GLOBAL, SPATIAL_POINTWISE = 0, 1
FREQUENCY_GLOBAL, FREQUENCY_COMPONENT = 0, 1


@dataclass(frozen=True, eq=False)
class EditsArchive:
    """Everything `apply` needs: metadata, original bounds, quantized edits."""

    precision: Precision
    bounds: DualBounds
    m: int
    converged: bool
    edits: QuantizedEdits

    @property
    def dims(self) -> tuple[int, ...]:
        return self.edits.dims

    @property
    def params(self) -> QuantizationParams:
        return QuantizationParams.from_bounds(self.bounds, self.dims, self.m)


def _encode_bounds(bounds: DualBounds, dims: tuple[int, ...]) -> tuple[int, int, bytes]:
    parts: list[bytes] = []
    if isinstance(bounds.spatial, GlobalSpatialBound):
        spatial_mode = SPATIAL_GLOBAL
        parts.append(np.float64(bounds.spatial.value).astype("<f8").tobytes())
    else:
        spatial_mode = SPATIAL_POINTWISE
        parts.append(bounds.spatial_limits(dims).astype("<f8").tobytes())

    if isinstance(bounds.frequency, GlobalFrequencyBound):
        frequency_mode = FREQUENCY_GLOBAL
        parts.append(np.float64(bounds.frequency.value).astype("<f8").tobytes())
    else:
        frequency_mode = FREQUENCY_COMPONENT
        limit_re, limit_im = bounds.frequency_limits(dims)
        parts.append(to_half_spectrum(limit_re).astype("<f8").tobytes())
        parts.append(to_half_spectrum(limit_im).astype("<f8").tobytes())
    return spatial_mode, frequency_mode, zstd_compress(b"".join(parts))


def _decode_bounds(
    payload: bytes,
    dims: tuple[int, ...],
    spatial_mode: int,
    frequency_mode: int,
) -> DualBounds:
    raw = np.frombuffer(zstd_decompress(payload), dtype="<f8").astype(np.float64)
    sample_count = int(np.prod(dims))
    half_shape = half_spectrum_shape(dims)
    half_count = int(np.prod(half_shape))

    spatial_size = {SPATIAL_GLOBAL: 1, SPATIAL_POINTWISE: sample_count}.get(spatial_mode)
    frequency_size = {FREQUENCY_GLOBAL: 1, FREQUENCY_COMPONENT: 2 * half_count}.get(
        frequency_mode
    )
    if spatial_size is None or frequency_size is None:
        raise FormatError(f"Unknown bound mode tags ({spatial_mode}, {frequency_mode})")
    if raw.size != spatial_size + frequency_size:
        raise FormatError("Bound payload length does not match the declared bound modes")

    spatial: SpatialBound
    if spatial_mode == SPATIAL_GLOBAL:
        spatial = GlobalSpatialBound(float(raw[0]))
    else:
        spatial = PointwiseSpatialBound(raw[:sample_count].reshape(dims))

    rest = raw[spatial_size:]
    frequency: FrequencyBound
    if frequency_mode == FREQUENCY_GLOBAL:
        frequency = GlobalFrequencyBound(float(rest[0]))
    else:
        real = expand_half_spectrum(rest[:half_count].reshape(half_shape), dims, conjugate=False)
        imag = expand_half_spectrum(rest[half_count:].reshape(half_shape), dims, conjugate=False)
        frequency = ComponentFrequencyBound(real, imag)
    return DualBounds(spatial, frequency)


def _encode_escapes(escapes: EscapeList) -> bytes:
    records = np.zeros(len(escapes), dtype=ESCAPE_DTYPE)
    records["index"] = escapes.indices
    records["real"] = escapes.values[:, 0]
    records["imag"] = escapes.values[:, 1]
    return records.tobytes()


def write_archive(archive: EditsArchive) -> bytes:
    dims = archive.dims
    edits = archive.edits
    spatial_mode, frequency_mode, bound_payload = _encode_bounds(archive.bounds, dims)

    streams = [
        encode_flags(edits.spatial_flags),
        encode_index_stream(edits.spatial_indices),
        encode_flags(edits.frequency_flags),
        encode_index_stream(edits.frequency_indices.ravel()),
    ]
    escapes = _encode_escapes(edits.escapes)
    payload = b"".join(streams) + escapes

    header = b"".join(
        [
            PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(dims)),
            *(EXTENT.pack(extent) for extent in dims),
            DESCRIPTOR.pack(
                PRECISION_TAGS[archive.precision],
                spatial_mode,
                frequency_mode,
                len(bound_payload),
            ),
            bound_payload,
            SUMMARY.pack(
                archive.m,
                int(archive.converged),
                edits.active_spatial,
                edits.active_frequency,
                *(len(stream) for stream in streams),
                len(edits.escapes),
                crc32c.crc32c(payload),
            ),
        ]
    )
    return header + CHECKSUM.pack(crc32c.crc32c(header)) + payload


class _Cursor:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def unpack(self, layout: Struct) -> tuple[int, ...]:
        try:
            values = layout.unpack_from(self.data, self.offset)
        except StructError as exc:
            raise FormatError("Archive is truncated inside its header") from exc
        self.offset += layout.size
        return values

    def take(self, size: int, label: str) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise FormatError(f"Archive is truncated inside the {label}")
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk


def read_archive(data: bytes) -> EditsArchive:
    """Parse and fully validate an archive; nothing partial is ever returned."""
    cursor = _Cursor(bytes(data))
    magic, version, ndim = cursor.unpack(PREAMBLE)
    if magic != MAGIC:
        raise FormatError(f"Bad magic {magic!r}; not an edits archive")
    if version != FORMAT_VERSION:
        raise FormatError(f"Unsupported archive version {version}")
    if not 1 <= ndim <= 3:
        raise FormatError(f"Archive declares {ndim} axes")
    dims = tuple(cursor.unpack(EXTENT)[0] for _ in range(ndim))

    precision_tag, spatial_mode, frequency_mode, bound_length = cursor.unpack(DESCRIPTOR)
    bound_payload = cursor.take(bound_length, "bound payload")
    (
        m,
        converged,
        active_spatial,
        active_frequency,
        *stream_lengths,
        escape_count,
        payload_crc,
    ) = cursor.unpack(SUMMARY)
    header_end = cursor.offset
    (header_crc,) = cursor.unpack(CHECKSUM)
    if crc32c.crc32c(cursor.data[:header_end]) != header_crc:
        raise FormatError("Header checksum mismatch")

    payload_size = sum(stream_lengths) + escape_count * ESCAPE_DTYPE.itemsize
    if len(cursor.data) - cursor.offset != payload_size:
        raise FormatError(
            f"Payload holds {len(cursor.data) - cursor.offset} bytes, header declares "
            f"{payload_size}"
        )
    if crc32c.crc32c(cursor.data[cursor.offset :]) != payload_crc:
        raise FormatError("Payload checksum mismatch")

    precisions = {tag: name for name, tag in PRECISION_TAGS.items()}
    if precision_tag not in precisions:
        raise FormatError(f"Unknown precision tag {precision_tag}")
    try:
        extents = validate_dims(dims)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc

    try:
        bounds = _decode_bounds(bound_payload, extents, spatial_mode, frequency_mode)
        shrink_factor(m)
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"Invalid bound descriptors: {exc}") from exc
    sample_count = int(np.prod(extents))
    half_count = int(np.prod(half_spectrum_shape(extents)))
    spatial_flag_bytes, spatial_index_bytes, frequency_flag_bytes, frequency_index_bytes = (
        cursor.take(length, "streams") for length in stream_lengths
    )
    spatial_flags = decode_flags(spatial_flag_bytes, sample_count)
    spatial_indices = decode_index_stream(spatial_index_bytes)
    frequency_flags = decode_flags(frequency_flag_bytes, half_count)
    frequency_indices = decode_index_stream(frequency_index_bytes)
    if spatial_indices.size != active_spatial or frequency_indices.size != 2 * active_frequency:
        raise DecodeError("Decoded index counts disagree with the header")

    records = np.frombuffer(
        cursor.take(escape_count * ESCAPE_DTYPE.itemsize, "escape list"), dtype=ESCAPE_DTYPE
    )
    escapes = EscapeList(
        records["index"].copy(),
        np.stack([records["real"], records["imag"]], axis=-1),
    )
    if np.any(escapes.indices >= np.uint64(sample_count + half_count)):
        raise DecodeError("Escape index lies outside both edit domains")

    try:
        edits = QuantizedEdits(
            dims=extents,
            spatial_flags=spatial_flags,
            spatial_indices=spatial_indices,
            frequency_flags=frequency_flags,
            frequency_indices=frequency_indices.reshape(-1, 2),
            escapes=escapes,
        )
    except ValueError as exc:
        raise DecodeError(f"Archive content is inconsistent: {exc}") from exc
    return EditsArchive(
        precision=precisions[precision_tag],
        bounds=bounds,
        m=m,
        converged=bool(converged),
        edits=edits,
    )
