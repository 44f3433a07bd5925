"""Flat binary container for image cubes and model arrays.

Each record is a one-line JSON header followed by the raw little-endian
float32 payload. The header always carries ``id``, ``bands``, ``h`` and
``w`` (payload length is bands*h*w); writers may add extra keys. A dataset
index CSV maps record id to the byte offset of its header line.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .fileio import atomic_write_bytes, atomic_write_text

INDEX_HEADER = "sample_id,offset"


def pack_record(record_id: str, values: np.ndarray, extra: dict | None = None) -> bytes:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3:
        raise ValueError("payload must have shape (bands, h, w)")
    bands, h, w = values.shape
    header = {"id": record_id, "bands": bands, "h": h, "w": w}
    if extra:
        header.update(extra)
    line = json.dumps(header, sort_keys=False, separators=(", ", ": ")) + "\n"
    return line.encode("utf-8") + values.astype("<f4").tobytes()


def _read_record(fh) -> tuple[dict, np.ndarray] | None:
    line = fh.readline()
    if not line:
        return None
    header = json.loads(line.decode("utf-8"))
    count = header["bands"] * header["h"] * header["w"]
    payload = fh.read(count * 4)
    if len(payload) != count * 4:
        raise ValueError(f"truncated payload for record {header.get('id')!r}")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return header, values.reshape(header["bands"], header["h"], header["w"])


def write_container(records: dict[str, np.ndarray], bin_path: str | Path,
                    index_path: str | Path | None = None) -> None:
    """Write records sorted by id; optionally emit the offset index CSV."""
    blob = io.BytesIO()
    offsets: list[tuple[str, int]] = []
    for record_id in sorted(records):
        offsets.append((record_id, blob.tell()))
        blob.write(pack_record(record_id, records[record_id]))
    atomic_write_bytes(bin_path, blob.getvalue())
    if index_path is not None:
        lines = [INDEX_HEADER]
        lines += [f"{rid},{off}" for rid, off in offsets]
        atomic_write_text(index_path, "\n".join(lines) + "\n")


def read_container(bin_path: str | Path) -> dict[str, np.ndarray]:
    """Read every record into an id -> (bands, h, w) float array mapping."""
    out: dict[str, np.ndarray] = {}
    with open(bin_path, "rb") as fh:
        while True:
            item = _read_record(fh)
            if item is None:
                break
            header, values = item
            out[header["id"]] = values
    return out


def read_index(index_path: str | Path) -> dict[str, int]:
    with open(index_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(header) != INDEX_HEADER:
            raise ValueError(f"index header must be {INDEX_HEADER!r}")
        return {row[0]: int(row[1]) for row in reader if row}


def read_record_at(bin_path: str | Path, offset: int) -> tuple[dict, np.ndarray]:
    with open(bin_path, "rb") as fh:
        fh.seek(offset)
        item = _read_record(fh)
        if item is None:
            raise ValueError(f"no record at offset {offset}")
        return item
