# Author: gadwant
from __future__ import annotations

from collections import Counter
from struct import Struct, error as StructError
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
import zstandard
from bitarray import bitarray
from bitarray.util import canonical_decode, canonical_huffman

from dualbound.errors import DecodeError

BLOCK_SIZE = 2**16
ZSTD_LEVEL = 19

STREAM_HEADER = Struct("<QI")
BLOCK_HEADER = Struct("<IB")
CODE_COUNT = Struct("<I")
SYMBOL = Struct("<q")
BIT_LENGTH = Struct("<Q")


class HuffmanBlock(NamedTuple):
    """One block's canonical table plus its packed code bits."""

    counts: tuple[int, ...]
    symbols: tuple[int, ...]
    bit_length: int
    payload: bytes


def block_histogram(block: npt.NDArray[np.int64]) -> Counter[int]:
    values, counts = np.unique(block, return_counts=True)
    return Counter({int(value): int(count) for value, count in zip(values, counts)})


def split_blocks(
    symbols: npt.NDArray[np.int64],
    block_size: int = BLOCK_SIZE,
) -> list[npt.NDArray[np.int64]]:
    return [symbols[start : start + block_size] for start in range(0, symbols.size, block_size)]


def encode_block(block: npt.NDArray[np.int64]) -> HuffmanBlock:
    histogram = block_histogram(block)
    if len(histogram) == 1:
        # A lone symbol needs no code bits; its count is implied by the block length.
        return HuffmanBlock((), (next(iter(histogram)),), 0, b"")

    codebook, counts, symbols = canonical_huffman(histogram)
    bits = bitarray()
    bits.encode(codebook, (int(value) for value in block))
    return HuffmanBlock(tuple(counts), tuple(symbols), len(bits), bits.tobytes())


def decode_block(block: HuffmanBlock, length: int) -> npt.NDArray[np.int64]:
    if not block.counts:
        return np.full(length, block.symbols[0], dtype=np.int64)

    bits = bitarray()
    bits.frombytes(block.payload)
    if block.bit_length > len(bits):
        raise DecodeError("Huffman block is shorter than its declared bit length")
    del bits[block.bit_length :]
    try:
        decoded = np.fromiter(
            canonical_decode(bits, list(block.counts), list(block.symbols)),
            dtype=np.int64,
        )
    except ValueError as exc:
        raise DecodeError(f"Corrupt Huffman block: {exc}") from exc
    if decoded.size != length:
        raise DecodeError(f"Huffman block decoded {decoded.size} symbols, expected {length}")
    return decoded


def _serialize_block(block: HuffmanBlock) -> bytes:
    parts = [BLOCK_HEADER.pack(len(block.symbols), len(block.counts))]
    parts.extend(CODE_COUNT.pack(count) for count in block.counts)
    parts.extend(SYMBOL.pack(symbol) for symbol in block.symbols)
    parts.append(BIT_LENGTH.pack(block.bit_length))
    parts.append(block.payload)
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._offset = 0

    def unpack(self, layout: Struct) -> tuple[int, ...]:
        values = layout.unpack_from(self._data, self._offset)
        self._offset += layout.size
        return values

    def take(self, size: int) -> bytes:
        end = self._offset + size
        if end > len(self._data):
            raise DecodeError("Stream ended inside a Huffman block")
        chunk = self._data[self._offset : end]
        self._offset = end
        return chunk

    @property
    def exhausted(self) -> bool:
        return self._offset == len(self._data)


def _parse_block(reader: _Reader) -> HuffmanBlock:
    symbol_count, code_lengths = reader.unpack(BLOCK_HEADER)
    if symbol_count == 0:
        raise DecodeError("Huffman block declares no symbols")
    counts = tuple(reader.unpack(CODE_COUNT)[0] for _ in range(code_lengths))
    symbols = tuple(reader.unpack(SYMBOL)[0] for _ in range(symbol_count))
    (bit_length,) = reader.unpack(BIT_LENGTH)
    payload = reader.take((bit_length + 7) // 8)
    return HuffmanBlock(counts, symbols, bit_length, payload)


def zstd_compress(data: bytes, level: int = ZSTD_LEVEL) -> bytes:
    return zstandard.ZstdCompressor(level=level).compress(data)


def zstd_decompress(data: bytes) -> bytes:
    try:
        return zstandard.ZstdDecompressor().decompress(data)
    except zstandard.ZstdError as exc:
        raise DecodeError(f"Corrupt zstandard frame: {exc}") from exc


def encode_index_stream(indices: npt.NDArray[np.int64], block_size: int = BLOCK_SIZE) -> bytes:
    """Canonical Huffman per block of symbols, then one zstandard frame around everything."""
    symbols = np.asarray(indices, dtype=np.int64).ravel()
    blocks = split_blocks(symbols, block_size)
    body = [STREAM_HEADER.pack(symbols.size, block_size)]
    body.extend(_serialize_block(encode_block(block)) for block in blocks)
    return zstd_compress(b"".join(body))


def decode_index_stream(data: bytes) -> npt.NDArray[np.int64]:
    reader = _Reader(zstd_decompress(data))
    try:
        total, block_size = reader.unpack(STREAM_HEADER)
        if total and block_size == 0:
            raise DecodeError("Index stream declares a zero block size")
        decoded: list[npt.NDArray[np.int64]] = []
        remaining = total
        while remaining:
            length = min(block_size, remaining)
            decoded.append(decode_block(_parse_block(reader), length))
            remaining -= length
    except StructError as exc:
        raise DecodeError(f"Truncated index stream: {exc}") from exc
    if not reader.exhausted:
        raise DecodeError("Trailing bytes after the last Huffman block")
    if not decoded:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(decoded)


def encode_flags(flags: npt.NDArray[np.bool_]) -> bytes:
    """Row-major flag n goes to byte n // 8, bit n % 8 (LSB first)."""
    packed = np.packbits(np.asarray(flags, dtype=bool).ravel(), bitorder="little")
    return zstd_compress(packed.tobytes())


def decode_flags(data: bytes, flag_count: int) -> npt.NDArray[np.bool_]:
    packed = np.frombuffer(zstd_decompress(data), dtype=np.uint8)
    if packed.size != (flag_count + 7) // 8:
        raise DecodeError(
            f"Flag stream holds {packed.size} bytes, expected {(flag_count + 7) // 8}"
        )
    return np.unpackbits(packed, count=flag_count, bitorder="little").astype(bool)


def encode_streams(
    flags: npt.NDArray[np.bool_],
    indices: npt.NDArray[np.int64],
) -> tuple[bytes, bytes]:
    return encode_flags(flags), encode_index_stream(indices)


def decode_streams(
    flag_bytes: bytes,
    index_bytes: bytes,
    flag_count: int,
) -> tuple[npt.NDArray[np.bool_], npt.NDArray[np.int64]]:
    return decode_flags(flag_bytes, flag_count), decode_index_stream(index_bytes)
