"""FSTS binary series files and plain-text dataset manifests.

FSTS layout, all little-endian: magic "FSTS", version u16, flags u16
(bits 0-1 carry the codec), fps as float32 (0 = unknown), frame_count
u32, then frame_count u64 sizes in bits.

A manifest is a CSV with header ``path,label``; relative paths resolve
against the manifest's directory.
"""

from __future__ import annotations

import csv
import os
import struct
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import BadMagic, IoFailure, VersionMismatch
from .series import Codec, FrameSizeSeries, LabeledDataset

MAGIC = b"FSTS"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sHHfI")
_CODEC_MASK = 0x0003
_CODEC_TO_FLAG = {Codec.UNKNOWN: 0, Codec.AVC: 1, Codec.HEVC: 2}
_FLAG_TO_CODEC = {v: k for k, v in _CODEC_TO_FLAG.items()}


def write_fsts(series: FrameSizeSeries, path: str) -> None:
    flags = _CODEC_TO_FLAG[series.codec]
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, flags, float(series.fps), len(series))
    payload = series.sizes.astype("<u8").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_fsts(path: str, source_id: str | None = None) -> FrameSizeSeries:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise BadMagic(f"{path} too small to be an FSTS file")
    magic, version, flags, fps, count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagic(f"{path} is not an FSTS file")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path} uses FSTS version {version}")
    expected = _HEADER.size + 8 * count
    if len(blob) != expected:
        raise IoFailure(f"{path} declares {count} frames but has {len(blob)} bytes")
    sizes = np.frombuffer(blob, dtype="<u8", offset=_HEADER.size)
    if sizes.size and int(sizes.max()) >= 2**63:
        raise IoFailure(f"{path} contains a frame size out of supported range")
    return FrameSizeSeries(
        sizes=sizes.astype(np.int64),
        codec=_FLAG_TO_CODEC.get(flags & _CODEC_MASK, Codec.UNKNOWN),
        fps=fps,
        source_id=source_id if source_id is not None else path,
    )


def write_manifest(rows: list[tuple[str, str]], path: str) -> None:
    """rows are (fsts path, label); paths must be unique, labels non-empty."""
    seen = set()
    for p, label in rows:
        if p in seen:
            raise IoFailure(f"duplicate manifest path {p!r}")
        if not label:
            raise IoFailure(f"empty label for {p!r}")
        seen.add(p)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "label"])
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write manifest {path}: {exc}") from exc


def read_manifest(path: str) -> list[tuple[str, str]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["path", "label"]:
                raise IoFailure(f"{path}: manifest must start with 'path,label'")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) < 2 or not row[0] or not row[1]:
                    raise IoFailure(f"{path}:{lineno}: need 'path,label'")
                rows.append((row[0], row[1]))
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {path}: {exc}") from exc
    seen = set()
    for p, _ in rows:
        if p in seen:
            raise IoFailure(f"{path}: duplicate path {p!r}")
        seen.add(p)
    return rows


def worker_count() -> int:
    raw = os.environ.get("FRAMESCOPE_WORKERS", "")
    if raw.strip():
        try:
            n = int(raw)
        except ValueError as exc:
            raise IoFailure(f"FRAMESCOPE_WORKERS={raw!r} is not an integer") from exc
        if n >= 1:
            return n
    return os.cpu_count() or 1


def load_dataset(manifest_path: str) -> LabeledDataset:
    """Read every FSTS file in a manifest into a labeled dataset.

    Class names are the sorted unique labels, so the index table does not
    depend on row order. File reads fan out to a worker pool sized by
    FRAMESCOPE_WORKERS (default: logical CPU count).
    """
    rows = read_manifest(manifest_path)
    if not rows:
        raise IoFailure(f"{manifest_path}: manifest has no rows")
    base = os.path.dirname(os.path.abspath(manifest_path))
    names = sorted({label for _, label in rows})
    index = {name: i for i, name in enumerate(names)}

    def _load(row: tuple[str, str]) -> tuple[FrameSizeSeries, int]:
        rel, label = row
        full = rel if os.path.isabs(rel) else os.path.join(base, rel)
        return read_fsts(full, source_id=rel), index[label]

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        items = list(pool.map(_load, rows))
    return LabeledDataset(items, names)
