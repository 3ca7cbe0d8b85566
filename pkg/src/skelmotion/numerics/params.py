"""Named trainable arrays with gradient slots and binary checkpointing."""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import DataError, ShapeError
from .tensor import Tensor

MAGIC = b"SMCK"
VERSION = 1


class ParamEntry:
    __slots__ = ("value", "grad", "state")

    def __init__(self, value):
        self.value = value
        self.grad = np.zeros(value.shape, dtype=np.float64)
        self.state = {}


class ParamStore:
    """Ordered name -> (value tensor, gradient slot, optimizer state)."""

    def __init__(self):
        self._entries = {}

    def add(self, name, values):
        if name in self._entries:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = values if isinstance(values, Tensor) else Tensor(values)
        self._entries[name] = ParamEntry(t)
        return t

    def __contains__(self, name):
        return name in self._entries

    def __getitem__(self, name):
        return self._entries[name].value

    def __len__(self):
        return len(self._entries)

    def names(self):
        return list(self._entries)

    def entries(self):
        return self._entries.items()

    def grad(self, name):
        return self._entries[name].grad

    def set_value(self, name, values):
        entry = self._entries[name]
        t = values if isinstance(values, Tensor) else Tensor(values)
        if t.shape != entry.value.shape:
            raise ShapeError(
                f"new value for {name!r} has shape {t.shape}, expected {entry.value.shape}"
            )
        entry.value = t

    def accumulate(self, grads_by_id):
        """Pull gradients for any entry whose current value tensor appears."""
        for entry in self._entries.values():
            g = grads_by_id.get(entry.value._id)
            if g is not None:
                entry.grad += np.broadcast_to(g, entry.grad.shape)

    def zero_gradients(self):
        for entry in self._entries.values():
            entry.grad.fill(0.0)

    def total_parameter_count(self):
        return sum(e.value.size for e in self._entries.values())

    def clone(self):
        out = ParamStore()
        for name, entry in self._entries.items():
            out.add(name, entry.value)
        return out


def save_checkpoint(store, path, meta=None):
    """Write the binary checkpoint format.

    Layout, all integers little-endian uint32: magic ``SMCK``, version,
    meta length + UTF-8 JSON meta, entry count, then per entry name length +
    name bytes + rank + dims + float64 little-endian payload.
    """
    meta_bytes = json.dumps(meta or {}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<I", len(store)))
        for name, entry in store.entries():
            nb = name.encode("utf-8")
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            shape = entry.value.shape
            fh.write(struct.pack("<I", len(shape)))
            for dim in shape:
                fh.write(struct.pack("<I", dim))
            fh.write(entry.value.data.astype("<f8", copy=False).tobytes())


def _read_exact(fh, n, path):
    buf = fh.read(n)
    if len(buf) != n:
        raise DataError(f"{path}: truncated checkpoint")
    return buf


def load_checkpoint(path):
    """Read a checkpoint back; returns (ParamStore, meta dict)."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, path) != MAGIC:
            raise DataError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, path))
        if version != VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        (meta_len,) = struct.unpack("<I", _read_exact(fh, 4, path))
        meta = json.loads(_read_exact(fh, meta_len, path).decode("utf-8"))
        (count,) = struct.unpack("<I", _read_exact(fh, 4, path))
        store = ParamStore()
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4, path))
            name = _read_exact(fh, name_len, path).decode("utf-8")
            (rank,) = struct.unpack("<I", _read_exact(fh, 4, path))
            shape = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank, path))
            n = int(np.prod(shape)) if rank else 1
            payload = _read_exact(fh, 8 * n, path)
            arr = np.frombuffer(payload, dtype="<f8").reshape(shape)
            store.add(name, arr)
        if fh.read(1):
            raise DataError(f"{path}: trailing bytes after last entry")
    return store, meta


def checkpoint_checksum(path):
    """SHA-256 of the file, for freeze-contract checks and report metadata."""
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
