"""Renderer unit tests against hand-built snapshot files."""

import json
import zlib
from pathlib import Path

import numpy as np
import pytest

from wcrender.reader import (
    MissingFieldError,
    SnapshotFormatError,
    read_diagnostics,
    read_snapshot,
)
from wcrender.render import RenderJob, color_limits, render, render_drift_series


def make_snapshot(path: Path, fields: dict[str, np.ndarray], nx=16, ny=9, time=1.5):
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in fields.values())
    header = {
        "schema": "wavecurrent-snapshot",
        "version": 1,
        "grid": {"nx": nx, "ny": ny, "Lx": 50.0, "Ly": 50.0},
        "time": time,
        "step": 0,
        "stage": "0-test",
        "wave_model": "nls",
        "kappa": 0.5,
        "alpha": 1.0,
        "fields": [{"name": n, "bc": "periodic_x_extrap_y"} for n in fields],
        "dtype": "<f8",
        "order": "C",
        "payload_bytes": len(payload),
        "crc32": zlib.crc32(payload),
    }
    path.write_bytes(json.dumps(header, sort_keys=True).encode() + b"\n" + payload)


@pytest.fixture
def snap_path(tmp_path):
    rng = np.random.default_rng(0)
    X, Y = np.meshgrid(np.arange(16) * 50 / 16, np.arange(9) * 50 / 8)
    fields = {
        "N": np.exp(-((X - 25) ** 2 + (Y - 25) ** 2) / 50),
        "Q_F": 0.01 * rng.standard_normal((9, 16)),
        "Q_W": 0.1 * rng.standard_normal((9, 16)),
        "rho": 1.0 + 0.1 * rng.standard_normal((9, 16)),
    }
    path = tmp_path / "s.snap"
    make_snapshot(path, fields)
    return path


def test_reader_round_trip(snap_path):
    snap = read_snapshot(snap_path)
    assert snap.nx == 16 and snap.ny == 9
    assert snap.time == 1.5
    assert set(snap.fields) == {"N", "Q_F", "Q_W", "rho"}


def test_reader_rejects_corruption(snap_path, tmp_path):
    data = bytearray(snap_path.read_bytes())
    data[-3] ^= 0x1
    bad = tmp_path / "bad.snap"
    bad.write_bytes(bytes(data))
    with pytest.raises(SnapshotFormatError, match="checksum"):
        read_snapshot(bad)


def test_missing_field_reported(snap_path):
    snap = read_snapshot(snap_path)
    with pytest.raises(MissingFieldError) as err:
        snap.field("Psi")
    assert err.value.field == "Psi"


def test_color_limits_symmetric_for_pv():
    data = np.array([[1.0, -3.0], [0.5, 2.0]])
    assert color_limits("Q_F", data) == (-3.0, 3.0)
    assert color_limits("N", data) == (-3.0, 2.0)


def test_color_limits_zero_field_maps_to_midpoint():
    data = np.zeros((4, 4))
    assert color_limits("Q_W", data) == (-1.0, 1.0)


def test_render_single_panel(snap_path, tmp_path):
    out = tmp_path / "img.png"
    render(RenderJob(snapshots=(str(snap_path),), fields=("N",), out=str(out)))
    assert out.exists() and out.stat().st_size > 0


def test_render_two_panels_side_by_side(snap_path, tmp_path):
    import matplotlib.image as mpimg

    out1 = tmp_path / "one.png"
    out2 = tmp_path / "two.png"
    render(RenderJob(snapshots=(str(snap_path),), fields=("Q_F",), out=str(out1)))
    render(
        RenderJob(
            snapshots=(str(snap_path), str(snap_path)),
            fields=("Q_F", "Q_W"),
            out=str(out2),
        )
    )
    a = mpimg.imread(out1)
    b = mpimg.imread(out2)
    assert b.shape[1] > 1.7 * a.shape[1]  # two panels widen the canvas
    assert abs(b.shape[0] - a.shape[0]) <= 2


def test_render_byte_stable(snap_path, tmp_path):
    outs = []
    for name in ("a.png", "b.png"):
        out = tmp_path / name
        render(
            RenderJob(
                snapshots=(str(snap_path), str(snap_path)),
                fields=("N", "Q_W"),
                out=str(out),
            )
        )
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_render_does_not_touch_inputs(snap_path, tmp_path):
    before = snap_path.read_bytes()
    render(RenderJob(snapshots=(str(snap_path),), fields=("N",), out=str(tmp_path / "x.png")))
    assert snap_path.read_bytes() == before


def test_drift_series(tmp_path):
    csv = tmp_path / "diag.csv"
    csv.write_text(
        "t,int_N,E_wave\n0.0,100.0,5.0\n1.0,100.00001,5.0001\n2.0,100.00002,5.0002\n"
    )
    out = tmp_path / "drift.png"
    render_drift_series(str(csv), ("int_N", "E_wave"), str(out))
    assert out.exists() and out.stat().st_size > 0


def test_cli_single_panel(snap_path, tmp_path):
    from wcrender.cli import main

    out = tmp_path / "cli.png"
    assert main(["--snapshot", str(snap_path), "--field", "N", "--out", str(out)]) == 0
    assert out.exists()


def test_cli_missing_field_exit_code(snap_path, tmp_path, capsys):
    from wcrender.cli import main

    rc = main(["--snapshot", str(snap_path), "--field", "Psi", "--out", str(tmp_path / "x.png")])
    assert rc == 2
    assert "Psi" in capsys.readouterr().err
