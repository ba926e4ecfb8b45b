"""Binary lattice snapshots ("HFLW" format).

Layout, all little-endian:

    magic      4 bytes  b"HFLW"
    version    uint32
    n          uint32
    shape      n x uint32
    periods    n x float64
    lie_dim    uint32
    t          float64
    n_fields   uint32
    per field: name_len uint16, name utf-8, n_comp uint32
    data       for each field in order, float64 values in site-major,
               component-minor order (components vary fastest)

Components of ``A`` are ordered (Lie, form); Higgs fields (field, Lie).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"HFLW"
VERSION = 1


@dataclass
class Snapshot:
    shape: tuple
    periods: tuple
    lie_dim: int
    t: float
    fields: dict  # name -> array (*component_shape, *shape)

    @property
    def n(self) -> int:
        return len(self.shape)


def _site_major(arr: np.ndarray, n: int) -> np.ndarray:
    comp = arr.shape[: arr.ndim - n]
    flat = arr.reshape((int(np.prod(comp, dtype=int)),) + arr.shape[arr.ndim - n:])
    return np.ascontiguousarray(np.moveaxis(flat, 0, -1)).astype("<f8")


def write_snapshot(path, shape, periods, lie_dim: int, fields: dict, t: float = 0.0):
    """Write ``fields`` (name -> (*components, *shape) arrays) to ``path``."""
    shape = tuple(int(s) for s in shape)
    n = len(shape)
    parts = [MAGIC, struct.pack("<II", VERSION, n), struct.pack(f"<{n}I", *shape),
             struct.pack(f"<{n}d", *[float(p) for p in periods]),
             struct.pack("<Id", lie_dim, float(t)), struct.pack("<I", len(fields))]
    blobs = []
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        if tuple(arr.shape[arr.ndim - n:]) != shape:
            raise ValueError(f"field {name!r} does not end with the grid shape")
        ncomp = int(np.prod(arr.shape[: arr.ndim - n], dtype=int))
        raw = name.encode()
        parts.append(struct.pack("<H", len(raw)) + raw + struct.pack("<I", ncomp))
        blobs.append(_site_major(arr, n).tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))
        for b in blobs:
            fh.write(b)


def write_field(path, gauge_field, t: float = 0.0):
    """Snapshot of a GaugeField on a PeriodicGrid."""
    sp = gauge_field.space
    fields = {"A": gauge_field.A}
    if gauge_field.higgs is not None:
        fields["higgs"] = gauge_field.higgs
    write_snapshot(path, sp.shape, sp.periods, gauge_field.alg.dim, fields, t)


def read_snapshot(path, component_shapes: dict | None = None) -> Snapshot:
    """Read a snapshot; fields come back as (n_comp, *shape) unless a
    ``component_shapes`` entry says how to unflatten them."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError("not an HFLW snapshot")
    off = 4
    version, n = struct.unpack_from("<II", data, off)
    off += 8
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    shape = struct.unpack_from(f"<{n}I", data, off)
    off += 4 * n
    periods = struct.unpack_from(f"<{n}d", data, off)
    off += 8 * n
    lie_dim, t = struct.unpack_from("<Id", data, off)
    off += 12
    (nf,) = struct.unpack_from("<I", data, off)
    off += 4
    specs = []
    for _ in range(nf):
        (ln,) = struct.unpack_from("<H", data, off)
        off += 2
        name = data[off: off + ln].decode()
        off += ln
        (nc,) = struct.unpack_from("<I", data, off)
        off += 4
        specs.append((name, nc))
    sites = int(np.prod(shape, dtype=int))
    fields = {}
    for name, nc in specs:
        count = sites * nc
        flat = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(tuple(shape) + (nc,))
        off += 8 * count
        arr = np.moveaxis(flat, -1, 0).astype(float)
        if component_shapes and name in component_shapes:
            arr = arr.reshape(tuple(component_shapes[name]) + tuple(shape))
        fields[name] = arr
    if off != len(data):
        raise ValueError("trailing bytes in snapshot")
    return Snapshot(tuple(shape), tuple(periods), lie_dim, t, fields)
