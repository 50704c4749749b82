"""Durable outputs: CSV series and binary field snapshots.

Snapshot layout (little-endian)::

    offset  size  field
    0       4     magic b"PFLD"
    4       4     format version, u32 (= 1)
    8       4     M, u32
    12      8     time, f64
    20      1     model tag, u8 (0 = CH, 1 = MBE)
    21      8*M*M values, f64, row-major (first index = x1)
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis.record import COLUMNS, RunRecord
from .models import ModelKind
from .spectral import GridSpec, PhysicalField

MAGIC = b"PFLD"
VERSION = 1
_HEADER = struct.Struct("<4sIIdB")
MODEL_TAGS = {ModelKind.CH: 0, ModelKind.MBE: 1}


class SnapshotFormatError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"byte offset {offset}: {message}")
        self.offset = offset


@dataclass
class Snapshot:
    field: PhysicalField
    time: float
    model: ModelKind


def write_snapshot(path, field: PhysicalField, time: float, model: ModelKind | str) -> None:
    M = field.grid.M
    header = _HEADER.pack(MAGIC, VERSION, M, float(time), MODEL_TAGS[ModelKind(model)])
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_snapshot(path) -> Snapshot:
    """Read a snapshot written by :func:`write_snapshot`.

    The grid is rebuilt with the largest cutoff the stored ``M`` allows,
    ``N = (M - 2) // 4``.
    """
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise SnapshotFormatError(0, f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < _HEADER.size:
        raise SnapshotFormatError(len(data), f"truncated header; need {_HEADER.size} bytes")
    _, version, M, time, tag = _HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise SnapshotFormatError(4, f"unsupported format version {version}")
    tags = {v: k for k, v in MODEL_TAGS.items()}
    if tag not in tags:
        raise SnapshotFormatError(20, f"unknown model tag {tag}")
    expected = _HEADER.size + 8 * M * M
    if len(data) < expected:
        raise SnapshotFormatError(len(data), f"payload truncated; expected {expected} bytes in total")
    if len(data) > expected:
        raise SnapshotFormatError(expected, f"{len(data) - expected} trailing bytes")
    values = np.frombuffer(data, dtype="<f8", count=M * M, offset=_HEADER.size).reshape(M, M)
    grid = GridSpec(max(1, (M - 2) // 4), M)
    return Snapshot(PhysicalField(grid, values.astype(np.float64)), time, tags[tag])


def format_value(x) -> str:
    """Shortest decimal that parses back to the same double."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_energy_csv(path, record: RunRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in record.rows:
            w.writerow([format_value(v) for v in row])


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]
