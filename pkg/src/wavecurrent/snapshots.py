"""Bit-exact snapshot files: one JSON header line + raw float64 payload.

Layout:

    line 1: UTF-8 JSON object terminated by "\\n" with keys
            schema, version, grid {nx, ny, Lx, Ly}, time, step,
            stage, wave_model, kappa, alpha,
            fields: [{name, bc}, ...] in payload order,
            dtype ("<f8"), order ("C"), payload_bytes, crc32
    rest:   concatenated little-endian float64 arrays, C order

Prognostics (Z, rho, a, b) restart a run exactly; diagnosed fields
(Psi, Q_F, Q_W, N) are included for post-processing and are recomputed,
never read back, on restart.  The crc32 of the payload is verified on read;
a schema-version mismatch is refused.
"""

from __future__ import annotations

import json
import sys
import zlib
from dataclasses import dataclass

import numpy as np

from .grid import BcClass, Field, GridSpec

SCHEMA = "wavecurrent-snapshot"
VERSION = 1

PROGNOSTIC_FIELDS = ("Z", "rho", "a", "b")


class SnapshotError(RuntimeError):
    """Malformed, corrupt, or incompatible snapshot file."""


@dataclass(frozen=True)
class SnapshotHeader:
    grid: GridSpec
    time: float
    step: int
    stage: str
    wave_model: str
    kappa: float
    alpha: float
    field_names: tuple[str, ...]
    field_bcs: tuple[str, ...]
    payload_bytes: int
    crc32: int


def _header_dict(header: SnapshotHeader) -> dict:
    return {
        "schema": SCHEMA,
        "version": VERSION,
        "grid": {
            "nx": header.grid.nx,
            "ny": header.grid.ny,
            "Lx": header.grid.Lx,
            "Ly": header.grid.Ly,
        },
        "time": header.time,
        "step": header.step,
        "stage": header.stage,
        "wave_model": header.wave_model,
        "kappa": header.kappa,
        "alpha": header.alpha,
        "fields": [
            {"name": n, "bc": b}
            for n, b in zip(header.field_names, header.field_bcs)
        ],
        "dtype": "<f8",
        "order": "C",
        "payload_bytes": header.payload_bytes,
        "crc32": header.crc32,
    }


def write_snapshot(
    path,
    grid: GridSpec,
    fields: dict[str, Field],
    time: float,
    step: int = 0,
    stage: str = "",
    wave_model: str = "none",
    kappa: float = 0.0,
    alpha: float = 0.0,
):
    names = tuple(fields.keys())
    arrays = [np.ascontiguousarray(fields[n].data, dtype="<f8") for n in names]
    payload = b"".join(a.tobytes() for a in arrays)
    header = SnapshotHeader(
        grid=grid,
        time=time,
        step=step,
        stage=stage,
        wave_model=wave_model,
        kappa=kappa,
        alpha=alpha,
        field_names=names,
        field_bcs=tuple(fields[n].bc.value for n in names),
        payload_bytes=len(payload),
        crc32=zlib.crc32(payload),
    )
    text = json.dumps(_header_dict(header), sort_keys=True) + "\n"
    with open(path, "wb") as fh:
        fh.write(text.encode("utf-8"))
        fh.write(payload)


def read_header(path) -> SnapshotHeader:
    """Header-only inspection; the payload is not touched."""
    with open(path, "rb") as fh:
        line = fh.readline()
    try:
        d = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"unreadable snapshot header: {exc}") from exc
    if d.get("schema") != SCHEMA:
        raise SnapshotError(f"not a {SCHEMA} file")
    if d.get("version") != VERSION:
        raise SnapshotError(
            f"snapshot schema version {d.get('version')} is not supported "
            f"(this build reads version {VERSION})"
        )
    if d.get("dtype") != "<f8" or d.get("order") != "C":
        raise SnapshotError("unsupported payload encoding")
    g = d["grid"]
    return SnapshotHeader(
        grid=GridSpec(g["nx"], g["ny"], g["Lx"], g["Ly"]),
        time=d["time"],
        step=d["step"],
        stage=d.get("stage", ""),
        wave_model=d.get("wave_model", "none"),
        kappa=d.get("kappa", 0.0),
        alpha=d.get("alpha", 0.0),
        field_names=tuple(f["name"] for f in d["fields"]),
        field_bcs=tuple(f["bc"] for f in d["fields"]),
        payload_bytes=d["payload_bytes"],
        crc32=d["crc32"],
    )


def read_snapshot(path) -> tuple[SnapshotHeader, dict[str, Field]]:
    header = read_header(path)
    with open(path, "rb") as fh:
        fh.readline()
        payload = fh.read()
    if len(payload) != header.payload_bytes:
        raise SnapshotError(
            f"payload truncated: {len(payload)} of {header.payload_bytes} bytes"
        )
    if zlib.crc32(payload) != header.crc32:
        raise SnapshotError("payload checksum mismatch")
    g = header.grid
    per_field = g.nx * g.ny * 8
    fields = {}
    for k, (name, bc) in enumerate(zip(header.field_names, header.field_bcs)):
        raw = payload[k * per_field : (k + 1) * per_field]
        data = np.frombuffer(raw, dtype="<f8").reshape(g.ny, g.nx)
        if sys.byteorder != "little":  # stored little-endian by contract
            data = data.astype(np.float64)
        fields[name] = Field(g, BcClass(bc), data)
    return header, fields
