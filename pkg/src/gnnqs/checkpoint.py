"""Binary checkpoints: a JSON header followed by raw little-endian arrays.

Layout::

    b"GNNQSCKP" | u32 version | u32 header length | header JSON | array bytes

The header lists each array's name, dtype, shape and byte offset.  JSON is
written with sorted keys and arrays in sorted name order, so saving the
same content twice yields identical bytes.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import GNNQSError

MAGIC = b"GNNQSCKP"
VERSION = 1


class CheckpointError(GNNQSError, ValueError):
    pass


def dumps(meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    entries, blobs, offset = [], [], 0
    for name in sorted(arrays):
        arr = np.asarray(arrays[name])
        dtype = arr.dtype.newbyteorder("<")
        data = np.ascontiguousarray(arr, dtype=dtype).tobytes()
        entries.append({"name": name, "dtype": dtype.str,
                        "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    header = json.dumps({"meta": meta, "arrays": entries}, sort_keys=True, separators=(",", ":")).encode()
    return MAGIC + struct.pack("<II", VERSION, len(header)) + header + b"".join(blobs)


def loads(blob: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file")
    version, size = struct.unpack_from("<II", blob, len(MAGIC))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    start = len(MAGIC) + 8
    header = json.loads(blob[start : start + size])
    base = start + size
    arrays = {}
    for e in header["arrays"]:
        raw = blob[base + e["offset"] : base + e["offset"] + e["nbytes"]]
        arrays[e["name"]] = np.frombuffer(raw, dtype=np.dtype(e["dtype"])).reshape(e["shape"]).copy()
    return header["meta"], arrays


def save(path: str | os.PathLike, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write atomically: a temporary file is renamed over ``path``."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps(meta, arrays))
    os.replace(tmp, path)


def load(path: str | os.PathLike) -> tuple[dict, dict[str, np.ndarray]]:
    return loads(Path(path).read_bytes())
