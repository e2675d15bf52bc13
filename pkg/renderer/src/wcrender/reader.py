"""Readers for the simulator's on-disk formats.

Snapshot files: one JSON header line, then concatenated little-endian
float64 arrays in C order, one per header field entry, each shaped
(ny, nx).  The header carries schema/version, grid, time, the field list,
payload byte count, and a crc32 of the payload.  Diagnostics files are
plain CSV with a header row.

This package deliberately re-implements the readers against the published
format instead of importing the simulator.
"""

from __future__ import annotations

import csv
import json
import zlib
from dataclasses import dataclass

import numpy as np

SCHEMA = "wavecurrent-snapshot"
SUPPORTED_VERSION = 1


class SnapshotFormatError(RuntimeError):
    pass


class MissingFieldError(KeyError):
    def __init__(self, name: str, available):
        self.field = name
        super().__init__(
            f"field {name!r} not present in snapshot (has: {', '.join(available)})"
        )


@dataclass(frozen=True)
class Snapshot:
    nx: int
    ny: int
    Lx: float
    Ly: float
    time: float
    stage: str
    wave_model: str
    fields: dict[str, np.ndarray]

    def field(self, name: str) -> np.ndarray:
        if name not in self.fields:
            raise MissingFieldError(name, sorted(self.fields))
        return self.fields[name]


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotFormatError(f"{path}: unreadable header: {exc}") from exc
    if header.get("schema") != SCHEMA:
        raise SnapshotFormatError(f"{path}: not a {SCHEMA} file")
    if header.get("version") != SUPPORTED_VERSION:
        raise SnapshotFormatError(
            f"{path}: unsupported schema version {header.get('version')}"
        )
    if len(payload) != header["payload_bytes"]:
        raise SnapshotFormatError(f"{path}: truncated payload")
    if zlib.crc32(payload) != header["crc32"]:
        raise SnapshotFormatError(f"{path}: payload checksum mismatch")
    g = header["grid"]
    nx, ny = g["nx"], g["ny"]
    per = nx * ny * 8
    fields = {}
    for k, entry in enumerate(header["fields"]):
        raw = payload[k * per : (k + 1) * per]
        fields[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(ny, nx)
    return Snapshot(
        nx=nx,
        ny=ny,
        Lx=g["Lx"],
        Ly=g["Ly"],
        time=header["time"],
        stage=header.get("stage", ""),
        wave_model=header.get("wave_model", ""),
        fields=fields,
    )


def read_diagnostics(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SnapshotFormatError(f"{path}: empty diagnostics file")
    names = rows[0]
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    if data.size == 0:
        raise SnapshotFormatError(f"{path}: diagnostics file has no rows")
    return {name: data[:, i] for i, name in enumerate(names)}
