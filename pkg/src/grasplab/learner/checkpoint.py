"""Versioned binary checkpoint container.

Layout (all integers little-endian):

    magic   4 bytes  b"GLCP"
    version u32      currently 1
    digest  32 bytes sha256 over everything after this field
    meta    u32 length + UTF-8 JSON (architecture + resolved config text)
    count   u32      number of tensor records
    record  u16 name length + name, u8 ndim, u32 dims..., float64 data

The digest covers the meta block and every tensor byte, so both a tampered
config and flipped payload bits are rejected on load.
"""

import hashlib
import json
import struct

import numpy as np

from grasplab.errors import CheckpointError

MAGIC = b"GLCP"
VERSION = 1


def _payload_bytes(meta_json, tensors):
    parts = [struct.pack("<I", len(meta_json)), meta_json]
    parts.append(struct.pack("<I", len(tensors)))
    for name, arr in tensors:
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        name_b = name.encode("utf-8")
        parts.append(struct.pack("<H", len(name_b)))
        parts.append(name_b)
        parts.append(struct.pack("<B", arr.ndim))
        for d in arr.shape:
            parts.append(struct.pack("<I", d))
        parts.append(arr.astype("<f8").tobytes())
    return b"".join(parts)


def save_checkpoint(path, tensors, meta):
    """Write named tensors with a metadata dict; order is preserved."""
    meta_json = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = _payload_bytes(meta_json, list(tensors))
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(digest)
        fh.write(payload)


class _Reader:
    def __init__(self, data, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CheckpointError(f"truncated checkpoint: {self.path}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self):
        return struct.unpack("<B", self.take(1))[0]

    def u16(self):
        return struct.unpack("<H", self.take(2))[0]

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path):
    """Read back (ordered list of (name, array), meta dict); verifies digest."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 + 4 + 32 or raw[:4] != MAGIC:
        raise CheckpointError(f"bad checkpoint magic: {path}")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}: {path}")
    digest = raw[8:40]
    payload = raw[40:]
    if hashlib.sha256(payload).digest() != digest:
        raise CheckpointError(f"checkpoint digest mismatch (corrupt file): {path}")
    r = _Reader(payload, path)
    meta_len = r.u32()
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"bad checkpoint metadata: {exc}") from exc
    count = r.u32()
    tensors = []
    for _ in range(count):
        name = r.take(r.u16()).decode("utf-8")
        ndim = r.u8()
        shape = tuple(r.u32() for _ in range(ndim))
        n_items = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.take(8 * n_items), dtype="<f8").reshape(shape)
        tensors.append((name, data.astype(np.float64)))
    if r.pos != len(payload):
        raise CheckpointError(f"trailing bytes in checkpoint: {path}")
    return tensors, meta
