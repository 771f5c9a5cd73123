# Author: gadwant
from __future__ import annotations

import csv
import importlib
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from importlib.util import find_spec
from pathlib import Path
from typing import Any

from dualbound.errors import RawIOError

orjson: Any | None = importlib.import_module("orjson") if find_spec("orjson") is not None else None


def _plain(value: Any) -> Any:
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, Mapping):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def dumps_json(payload: Mapping[str, Any]) -> str:
    data = _plain(payload)
    if orjson is not None:
        raw: bytes = orjson.dumps(data, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)
        return raw.decode("utf-8")
    return json.dumps(data, indent=2, sort_keys=True)


def loads_json(raw: bytes | str) -> Any:
    if orjson is not None:
        return orjson.loads(raw)
    return json.loads(raw)


def write_text(text: str, path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    except OSError as exc:
        raise RawIOError(f"Cannot write {path}: {exc}") from exc


def write_json(payload: Mapping[str, Any], path: Path) -> None:
    write_text(dumps_json(payload), path)


def write_csv(rows: Iterable[Mapping[str, Any]], columns: Sequence[str], path: Path) -> None:
    """Header row plus one line per row; infinities are written as "inf"."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(columns), extrasaction="ignore")
            writer.writeheader()
            for row in rows:
                writer.writerow(_plain(row))
    except OSError as exc:
        raise RawIOError(f"Cannot write {path}: {exc}") from exc


def write_bytes(data: bytes, path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise RawIOError(f"Cannot write {path}: {exc}") from exc


def read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise RawIOError(f"Cannot read {path}: {exc}") from exc
