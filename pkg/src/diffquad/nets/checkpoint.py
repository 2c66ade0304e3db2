"""Binary checkpoint format.

Layout: magic "E2EF", u32 format version, u8 precision tag (4 or 8 bytes
per float), u32 entry count; a table of (name, shape, byte offset) records;
then the raw little-endian arrays. Round-trips are bit-exact at the stored
precision.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"E2EF"
VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(params: dict, path, precision: str = "float64") -> None:
    if precision not in ("float32", "float64"):
        raise CheckpointError(f"unknown precision {precision!r}")
    dtype = np.dtype("<f4" if precision == "float32" else "<f8")
    names = list(params.keys())
    arrays = [np.ascontiguousarray(np.asarray(params[n]), dtype=dtype) for n in names]

    table = bytearray()
    offset = 0
    for name, arr in zip(names, arrays):
        nb = name.encode("utf-8")
        table += struct.pack("<H", len(nb)) + nb
        table += struct.pack("<B", arr.ndim)
        table += struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b""
        table += struct.pack("<Q", offset)
        offset += arr.nbytes

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<B", dtype.itemsize))
        fh.write(struct.pack("<I", len(names)))
        fh.write(bytes(table))
        for arr in arrays:
            fh.write(arr.tobytes())


def load_checkpoint(path):
    """Returns (params dict, precision string)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    pos = 4
    version, = struct.unpack_from("<I", blob, pos)
    pos += 4
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    itemsize, = struct.unpack_from("<B", blob, pos)
    pos += 1
    if itemsize not in (4, 8):
        raise CheckpointError(f"bad precision tag {itemsize}")
    count, = struct.unpack_from("<I", blob, pos)
    pos += 4

    entries = []
    for _ in range(count):
        nlen, = struct.unpack_from("<H", blob, pos)
        pos += 2
        name = blob[pos:pos + nlen].decode("utf-8")
        pos += nlen
        ndim, = struct.unpack_from("<B", blob, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, pos) if ndim else ()
        pos += 4 * ndim
        offset, = struct.unpack_from("<Q", blob, pos)
        pos += 8
        entries.append((name, shape, offset))

    dtype = np.dtype("<f4" if itemsize == 4 else "<f8")
    data_start = pos
    params = {}
    for name, shape, offset in entries:
        n = int(np.prod(shape)) if shape else 1
        start = data_start + offset
        arr = np.frombuffer(blob, dtype=dtype, count=n, offset=start).reshape(shape)
        params[name] = arr.copy()
    return params, ("float32" if itemsize == 4 else "float64")
