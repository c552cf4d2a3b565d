"""Model weight file: magic "BCNN", version, classes, architecture, then
every array in declaration order as little-endian 32-bit floats.

Loading parses the whole file with bounds checks before any model state is
touched, so a truncated or corrupt file never yields a partial model.
Writes go through a temporary file and an atomic rename.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from ..errors import BadMagic, IoFailure, VersionMismatch
from .model import Model, build_model

MAGIC = b"BCNN"
FORMAT_VERSION = 1


def save_model(model: Model, path: str) -> None:
    parts = [MAGIC, struct.pack("<H", FORMAT_VERSION), struct.pack("<I", model.n_classes)]
    for name in model.class_names:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise IoFailure(f"class name too long: {name[:32]!r}...")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(struct.pack("<B", len(model.filters)))
    parts.append(struct.pack(f"<{len(model.filters)}I", *model.filters))
    parts.append(struct.pack("<B", len(model.kernels)))
    parts.append(struct.pack(f"<{len(model.kernels)}I", *model.kernels))
    for array in model.state_arrays():
        parts.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    blob = b"".join(parts)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write model to {path}: {exc}") from exc


class _Cursor:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.at = 0

    def take(self, n: int, what: str) -> bytes:
        if self.at + n > len(self.blob):
            raise IoFailure(f"model file truncated while reading {what}")
        out = self.blob[self.at : self.at + n]
        self.at += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_model(path: str) -> Model:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read model from {path}: {exc}") from exc
    cur = _Cursor(blob)
    if cur.take(4, "magic") != MAGIC:
        raise BadMagic(f"{path} is not a model file")
    (version,) = cur.unpack("<H", "format version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format {version}, this build reads {FORMAT_VERSION}")
    (n_classes,) = cur.unpack("<I", "class count")
    names = []
    for _ in range(n_classes):
        (length,) = cur.unpack("<H", "class name length")
        names.append(cur.take(length, "class name").decode("utf-8"))
    (n_blocks,) = cur.unpack("<B", "block count")
    filters = cur.unpack(f"<{n_blocks}I", "filter widths")
    (n_kernels,) = cur.unpack("<B", "kernel count")
    kernels = cur.unpack(f"<{n_kernels}I", "kernel sizes")

    model = build_model(names, filters=filters, kernels=kernels, seed=0, dtype=np.float32)
    arrays = model.state_arrays()
    values = []
    for array in arrays:
        raw = cur.take(array.size * 4, "parameter data")
        values.append(np.frombuffer(raw, dtype="<f4").reshape(array.shape))
    if cur.at != len(blob):
        raise IoFailure(f"{len(blob) - cur.at} trailing bytes after parameters")
    for dst, src in zip(arrays, values, strict=True):
        dst[...] = src
    return model
