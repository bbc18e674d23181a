"""Versioned binary container for model state.

Layout: 8-byte magic, u32 format version, u64 header length, canonical JSON
header (sorted keys, no whitespace), then the raw C-order bytes of each array
in header order. Writing the same state twice produces byte-identical files,
which zip-based formats do not guarantee (archive member timestamps).
"""

import json
import struct
from typing import Any

import numpy as np

from .errors import ModelIOError

MAGIC = b"TXPPMBIN"
FORMAT_VERSION = 1


def save_state(path, meta: dict[str, Any], arrays: dict[str, np.ndarray]) -> None:
    """Write `meta` (JSON-serializable) and named arrays to `path`."""
    manifest = []
    blobs = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        manifest.append({"name": name, "dtype": str(arr.dtype), "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = json.dumps({"meta": meta, "arrays": manifest},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", FORMAT_VERSION, len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_state(path) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """Read a container written by :func:`save_state`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 12 or raw[:len(MAGIC)] != MAGIC:
        raise ModelIOError(f"{path}: not a recognized model file")
    version, header_len = struct.unpack_from("<IQ", raw, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ModelIOError(f"{path}: unsupported format version {version}")
    start = len(MAGIC) + 12
    end = start + header_len
    if end > len(raw):
        raise ModelIOError(f"{path}: truncated header")
    try:
        header = json.loads(raw[start:end].decode("utf-8"))
        manifest = header["arrays"]
        meta = header["meta"]
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise ModelIOError(f"{path}: corrupt header ({exc})") from exc
    arrays: dict[str, np.ndarray] = {}
    offset = end
    for entry in manifest:
        try:
            dtype = np.dtype(entry["dtype"])
            shape = tuple(int(s) for s in entry["shape"])
            name = entry["name"]
        except (TypeError, KeyError) as exc:
            raise ModelIOError(f"{path}: corrupt array manifest ({exc})") from exc
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64))
        if offset + nbytes > len(raw):
            raise ModelIOError(f"{path}: truncated data for array {name!r}")
        arrays[name] = np.frombuffer(raw[offset:offset + nbytes], dtype=dtype).reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise ModelIOError(f"{path}: trailing bytes after array data")
    return meta, arrays
