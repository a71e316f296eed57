"""Binary state snapshots and the CSV diagnostics time series.

Snapshot layout (little-endian): magic "OLDB2D01", format version u32,
n u32, L f64, time f64, field count u32, then per field a u8 name length,
the ASCII name, and n*n f64 row-major values.  Field data round-trips
bit-exactly.
"""

from __future__ import annotations

import struct

import numpy as np

from .diagnostics import DiagnosticsRecord
from .fields import SimState, StressField
from .spectral import SpectralGrid, scalar_field, vector_field

MAGIC = b"OLDB2D01"
VERSION = 1
_HEADER = struct.Struct("<8sIIddI")
_FIELD_ORDER = ("u1", "u2", "a", "b", "c", "rho")


class SnapshotFormatError(ValueError):
    pass


def _state_fields(state: SimState) -> dict:
    u = state.u.values
    return {
        "u1": u[0],
        "u2": u[1],
        "a": state.stress.a.values,
        "b": state.stress.b.values,
        "c": state.stress.c.values,
        "rho": state.rho.values,
    }


def write_snapshot(state: SimState, path) -> None:
    grid = state.grid
    fields = _state_fields(state)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, grid.n, grid.length,
                              state.time, len(_FIELD_ORDER)))
        for name in _FIELD_ORDER:
            encoded = name.encode("ascii")
            fh.write(struct.pack("<B", len(encoded)))
            fh.write(encoded)
            fh.write(np.ascontiguousarray(fields[name], dtype="<f8").tobytes())


def read_snapshot(path, grid: SpectralGrid) -> SimState:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise SnapshotFormatError("truncated snapshot: header incomplete")
    magic, version, n, length, time, field_count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported format version {version}")
    if n != grid.n or abs(length - grid.length) > 1e-12 * max(1.0, grid.length):
        raise SnapshotFormatError(
            f"grid mismatch: snapshot has n={n}, L={length:.12g}, "
            f"expected n={grid.n}, L={grid.length:.12g}"
        )

    offset = _HEADER.size
    block = 8 * n * n
    fields = {}
    for _ in range(field_count):
        if offset + 1 > len(blob):
            raise SnapshotFormatError("truncated snapshot: missing field header")
        (name_len,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        if offset + name_len + block > len(blob):
            raise SnapshotFormatError("truncated snapshot: incomplete field block")
        name = blob[offset:offset + name_len].decode("ascii")
        offset += name_len
        if name in fields:
            raise SnapshotFormatError(f"duplicate field {name!r}")
        if name not in _FIELD_ORDER:
            raise SnapshotFormatError(f"unexpected field {name!r}")
        data = np.frombuffer(blob[offset:offset + block], dtype="<f8")
        fields[name] = data.astype(np.float64).reshape(n, n)
        offset += block
    if offset != len(blob):
        raise SnapshotFormatError("trailing bytes after the last field block")
    missing = [name for name in _FIELD_ORDER if name not in fields]
    if missing:
        raise SnapshotFormatError(f"missing fields: {missing}")

    return SimState(
        time=time,
        u=vector_field(grid, np.stack([fields["u1"], fields["u2"]])),
        stress=StressField(
            scalar_field(grid, fields["a"]),
            scalar_field(grid, fields["b"]),
            scalar_field(grid, fields["c"]),
        ),
        rho=scalar_field(grid, fields["rho"]),
    )


TIMESERIES_COLUMNS = (
    "time", "energy", "dissipation", "source", "min_gamma", "min_rho",
    "u_L2", "grad_u_L2", "sigma_L1", "sigma_L2", "grad_sigma_L2",
    "omega_L2", "c_max",
)


def _row_values(record: DiagnosticsRecord):
    return (
        record.time, record.energy, record.dissipation, record.source,
        record.min_gamma, record.min_rho,
        record.norms["u_L2"], record.norms["grad_u_L2"],
        record.norms["sigma_L1"], record.norms["sigma_L2"],
        record.norms["grad_sigma_L2"], record.norms["omega_L2"],
        record.c_max,
    )


def append_timeseries(record: DiagnosticsRecord, path) -> None:
    """Append one CSV row (17 significant digits); the header is written
    exactly once, when the file is new or empty."""
    import os

    need_header = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8") as fh:
        if need_header:
            fh.write(",".join(TIMESERIES_COLUMNS) + "\n")
        fh.write(",".join(f"{v:.17g}" for v in _row_values(record)) + "\n")


def read_timeseries(path) -> dict:
    """Read a time-series CSV back into column arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != list(TIMESERIES_COLUMNS):
            raise SnapshotFormatError(f"unexpected time-series header {header}")
        rows = [list(map(float, line.strip().split(","))) for line in fh if line.strip()]
    data = np.array(rows) if rows else np.empty((0, len(TIMESERIES_COLUMNS)))
    return {name: data[:, i] for i, name in enumerate(TIMESERIES_COLUMNS)}
