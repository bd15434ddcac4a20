"""Checkpoints, time-series CSV, velocity/space slices and diagnostics JSON.

Checkpoint byte layout (all little-endian)::

    offset  size  field
    0       8     magic b"LANDAUF1"
    8       4     uint32 format version (1)
    12      4     uint32 dim_x
    16      4     uint32 nx
    20      4     uint32 nv
    24      8     float64 rv
    32      8     float64 time
    40      ...   float64 data, nx^dim_x * nv^3 values, x-major / v-minor (C order)
"""
from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .phase_space import Field, PhaseGrid

MAGIC = b"LANDAUF1"
VERSION = 1
_HEADER = struct.Struct("<8sIIIIdd")

CSV_COLUMNS = ("t", "l2_0", "l2_theta", "sigma_theta", "sup_theta", "energy_theta",
               "mass_residual", "momentum1_residual", "momentum2_residual", "momentum3_residual",
               "energy_residual", "min_F")
EXPORT_FORMATS = ("csv-vcut", "csv-xcut")


class CheckpointError(ValueError):
    pass


def checkpoint_bytes(f: Field, t: float) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, VERSION, g.dim_x, g.nx, g.nv, float(g.rv), float(t))
    return head + np.ascontiguousarray(f.data, dtype="<f8").tobytes()


def write_checkpoint(path, f: Field, t: float) -> None:
    Path(path).write_bytes(checkpoint_bytes(f, t))


def read_checkpoint(path) -> tuple[Field, float]:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e.strerror}") from None
    if len(raw) < _HEADER.size:
        raise CheckpointError("file too short for a checkpoint header")
    magic, version, dim_x, nx, nv, rv, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError("bad magic; not a checkpoint file")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    grid = PhaseGrid(nx, nv, rv, dim_x)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != int(np.prod(grid.shape)):
        raise CheckpointError("payload size does not match the header grid")
    return Field(grid, data.reshape(grid.shape).astype(float)), t


def _fmt(x) -> str:
    return repr(float(x))


def timeseries_csv(traj) -> str:
    """One row per stored snapshot; floats written with repr for exact round trips."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for t, rep, l2, drift, mF in zip(traj.times, traj.reports, traj.l2_plain, traj.moment_drift, traj.min_F):
        w.writerow([_fmt(t), _fmt(l2), _fmt(rep.l2_theta), _fmt(rep.sigma_theta), _fmt(rep.sup_theta),
                    _fmt(rep.energy_theta)] + [_fmt(d) for d in drift] + [_fmt(mF)])
    return buf.getvalue()


def slice_csv(f: Field, fmt: str, index=None) -> str:
    """Fixed-v cut (all x at one velocity node) or fixed-x cut (all v at one x node).

    ``index`` is a velocity index triple for ``csv-vcut`` (default: the node
    nearest v = 0) or a spatial index tuple for ``csv-xcut`` (default: origin).
    """
    if fmt not in EXPORT_FORMATS:
        raise ValueError(f"unknown format {fmt!r}; supported: {', '.join(EXPORT_FORMATS)}")
    g = f.grid
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    xs = [f"x{a + 1}" for a in range(g.dim_x)]
    if fmt == "csv-vcut":
        if index is None:
            index = np.unravel_index(int(np.argmin(g.speed)), g.velocity_shape)
        index = tuple(int(i) for i in index)
        vals = f.data[(Ellipsis,) + index]
        w.writerow(xs + ["f"])
        for k in np.ndindex(*g.spatial_shape):
            w.writerow([_fmt(g.x_axis[i]) for i in k] + [_fmt(vals[k])])
    else:
        index = tuple(int(i) for i in (index if index is not None else (0,) * g.dim_x))
        vals = f.data[index]
        w.writerow(["v1", "v2", "v3", "f"])
        for k in np.ndindex(*g.velocity_shape):
            w.writerow([_fmt(g.v_axis[i]) for i in k] + [_fmt(vals[k])])
    return buf.getvalue()


def read_slice_csv(text: str) -> tuple[list[str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array([[float(c) for c in r] for r in rows[1:]])


def dumps_json(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"
