"""ISO-BMFF (MP4) sample-size extraction without touching coded data.

Plain files carry per-sample byte sizes in the stsz/stz2 table of the
video track; fragmented files carry them in trun entries with defaults
cascading from trex and tfhd. Either way the per-frame series is read
straight out of container metadata.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from typing import Iterator

from .errors import NoVideoTrack, NotMp4, TruncatedBox
from .series import Codec, FrameSizeSeries

log = logging.getLogger(__name__)

_TOP_LEVEL_TYPES = {
    "ftyp", "styp", "moov", "moof", "mdat", "free", "skip", "wide",
    "pdin", "sidx", "ssix", "prft", "uuid", "meta", "mfra", "emsg",
}

_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")


@dataclass(frozen=True)
class BoxHeader:
    box_type: str
    header_offset: int
    content_offset: int
    content_size: int
    is_large: bool

    @property
    def end(self) -> int:
        return self.content_offset + self.content_size


def _read_box(data: bytes, offset: int, limit: int) -> BoxHeader:
    if offset + 8 > limit:
        raise TruncatedBox(f"box header at {offset} extends past {limit}")
    (size,) = _U32.unpack_from(data, offset)
    raw_type = data[offset + 4 : offset + 8]
    if not all(0x20 <= b < 0x7F for b in raw_type):
        raise TruncatedBox(f"non-ASCII box type at {offset}: {raw_type!r}")
    header = 8
    is_large = False
    if size == 1:
        if offset + 16 > limit:
            raise TruncatedBox(f"large box header at {offset} truncated")
        (size,) = _U64.unpack_from(data, offset + 8)
        header = 16
        is_large = True
    elif size == 0:
        size = limit - offset
    if size < header:
        raise TruncatedBox(f"box at {offset} declares size {size} < header")
    if offset + size > limit:
        raise TruncatedBox(
            f"box '{raw_type.decode('ascii')}' at {offset} runs past its parent"
        )
    return BoxHeader(raw_type.decode("ascii"), offset, offset + header, size - header, is_large)


def _iter_boxes(data: bytes, lo: int, hi: int) -> Iterator[BoxHeader]:
    offset = lo
    while offset < hi:
        box = _read_box(data, offset, hi)
        yield box
        offset = box.end


def _find(data: bytes, parent: BoxHeader, box_type: str) -> BoxHeader | None:
    for child in _iter_boxes(data, parent.content_offset, parent.end):
        if child.box_type == box_type:
            return child
    return None


def _full_box(data: bytes, box: BoxHeader) -> tuple[int, int, int]:
    """(version, flags, first byte after the version/flags word)."""
    if box.content_size < 4:
        raise TruncatedBox(f"'{box.box_type}' too small for a full box")
    version = data[box.content_offset]
    flags = int.from_bytes(data[box.content_offset + 1 : box.content_offset + 4], "big")
    return version, flags, box.content_offset + 4


def _u32_at(data: bytes, offset: int, end: int, what: str) -> int:
    if offset + 4 > end:
        raise TruncatedBox(f"{what} truncated")
    return _U32.unpack_from(data, offset)[0]


def _track_id(data: bytes, trak: BoxHeader) -> int | None:
    tkhd = _find(data, trak, "tkhd")
    if tkhd is None:
        return None
    version, _, body = _full_box(data, tkhd)
    at = body + (16 if version == 1 else 8)
    return _u32_at(data, at, tkhd.end, "tkhd track_ID")


def _handler(data: bytes, mdia: BoxHeader) -> str:
    hdlr = _find(data, mdia, "hdlr")
    if hdlr is None or hdlr.content_size < 12:
        return ""
    at = hdlr.content_offset + 8
    return data[at : at + 4].decode("ascii", errors="replace")


def _stsz_sizes(data: bytes, stbl: BoxHeader) -> list[int]:
    stsz = _find(data, stbl, "stsz")
    if stsz is not None:
        _, _, body = _full_box(data, stsz)
        uniform = _u32_at(data, body, stsz.end, "stsz sample_size")
        count = _u32_at(data, body + 4, stsz.end, "stsz sample_count")
        if uniform != 0:
            return [uniform] * count
        if body + 8 + 4 * count > stsz.end:
            raise TruncatedBox("stsz entry table truncated")
        return list(struct.unpack_from(f">{count}I", data, body + 8)) if count else []
    stz2 = _find(data, stbl, "stz2")
    if stz2 is None:
        return []
    _, _, body = _full_box(data, stz2)
    field_size = data[body + 3]
    count = _u32_at(data, body + 4, stz2.end, "stz2 sample_count")
    if field_size not in (4, 8, 16):
        raise TruncatedBox(f"stz2 field size {field_size} unsupported")
    need = (count * field_size + 7) // 8
    if body + 8 + need > stz2.end:
        raise TruncatedBox("stz2 entry table truncated")
    table = data[body + 8 : body + 8 + need]
    if field_size == 4:
        out = []
        for i in range(count):
            byte = table[i // 2]
            out.append((byte >> 4) if i % 2 == 0 else (byte & 0x0F))
        return out
    width = field_size // 8
    return [int.from_bytes(table[i * width : (i + 1) * width], "big") for i in range(count)]


def _codec_of(data: bytes, stbl: BoxHeader) -> Codec:
    stsd = _find(data, stbl, "stsd")
    if stsd is None or stsd.content_size < 16:
        return Codec.UNKNOWN
    entry = data[stsd.content_offset + 12 : stsd.content_offset + 16]
    fourcc = entry.decode("ascii", errors="replace")
    if fourcc in ("avc1", "avc2", "avc3", "avc4"):
        return Codec.AVC
    if fourcc in ("hvc1", "hev1"):
        return Codec.HEVC
    return Codec.UNKNOWN


def _fps_of(data: bytes, mdia: BoxHeader, stbl: BoxHeader) -> float:
    mdhd = _find(data, mdia, "mdhd")
    stts = _find(data, stbl, "stts")
    if mdhd is None or stts is None:
        return 0.0
    version, _, body = _full_box(data, mdhd)
    timescale = _u32_at(data, body + (16 if version == 1 else 8), mdhd.end, "mdhd timescale")
    _, _, sbody = _full_box(data, stts)
    entries = _u32_at(data, sbody, stts.end, "stts entry_count")
    if entries < 1 or sbody + 12 > stts.end:
        return 0.0
    delta = _u32_at(data, sbody + 8, stts.end, "stts sample_delta")
    if timescale <= 0 or delta <= 0:
        return 0.0
    return timescale / delta


def _trex_default_size(data: bytes, moov: BoxHeader, track_id: int) -> int:
    mvex = _find(data, moov, "mvex")
    if mvex is None:
        return 0
    for child in _iter_boxes(data, mvex.content_offset, mvex.end):
        if child.box_type != "trex":
            continue
        _, _, body = _full_box(data, child)
        if _u32_at(data, body, child.end, "trex track_ID") == track_id:
            return _u32_at(data, body + 12, child.end, "trex default_sample_size")
    return 0


_TFHD_BASE_DATA_OFFSET = 0x1
_TFHD_SAMPLE_DESC_INDEX = 0x2
_TFHD_DEFAULT_DURATION = 0x8
_TFHD_DEFAULT_SIZE = 0x10
_TFHD_DEFAULT_FLAGS = 0x20

_TRUN_DATA_OFFSET = 0x1
_TRUN_FIRST_SAMPLE_FLAGS = 0x4
_TRUN_SAMPLE_DURATION = 0x100
_TRUN_SAMPLE_SIZE = 0x200
_TRUN_SAMPLE_FLAGS = 0x400
_TRUN_SAMPLE_CTO = 0x800


def _fragment_sizes(data: bytes, moof: BoxHeader, track_id: int, trex_size: int) -> list[int]:
    sizes: list[int] = []
    for traf in _iter_boxes(data, moof.content_offset, moof.end):
        if traf.box_type != "traf":
            continue
        tfhd = _find(data, traf, "tfhd")
        if tfhd is None:
            continue
        _, tf_flags, body = _full_box(data, tfhd)
        if _u32_at(data, body, tfhd.end, "tfhd track_ID") != track_id:
            continue
        cursor = body + 4
        if tf_flags & _TFHD_BASE_DATA_OFFSET:
            cursor += 8
        if tf_flags & _TFHD_SAMPLE_DESC_INDEX:
            cursor += 4
        if tf_flags & _TFHD_DEFAULT_DURATION:
            cursor += 4
        default_size = trex_size
        if tf_flags & _TFHD_DEFAULT_SIZE:
            default_size = _u32_at(data, cursor, tfhd.end, "tfhd default_sample_size")
        for trun in _iter_boxes(data, traf.content_offset, traf.end):
            if trun.box_type != "trun":
                continue
            _, tr_flags, tbody = _full_box(data, trun)
            count = _u32_at(data, tbody, trun.end, "trun sample_count")
            at = tbody + 4
            if tr_flags & _TRUN_DATA_OFFSET:
                at += 4
            if tr_flags & _TRUN_FIRST_SAMPLE_FLAGS:
                at += 4
            per_sample = sum(
                4
                for flag in (
                    _TRUN_SAMPLE_DURATION,
                    _TRUN_SAMPLE_SIZE,
                    _TRUN_SAMPLE_FLAGS,
                    _TRUN_SAMPLE_CTO,
                )
                if tr_flags & flag
            )
            if at + count * per_sample > trun.end:
                raise TruncatedBox("trun entry table truncated")
            for _ in range(count):
                entry = at
                if tr_flags & _TRUN_SAMPLE_DURATION:
                    entry += 4
                if tr_flags & _TRUN_SAMPLE_SIZE:
                    sizes.append(_U32.unpack_from(data, entry)[0])
                else:
                    sizes.append(default_size)
                at += per_sample
    return sizes


def extract_frames_mp4(
    data: bytes, include_overhead: bool = False, source_id: str = ""
) -> FrameSizeSeries:
    """Per-frame sizes (bits) from the first video track of an MP4 file.

    ``include_overhead`` spreads the container's non-sample bytes evenly
    across frames (remainder to the earliest frames) so the series sums to
    exactly 8x the file size; the default reports raw sample sizes.
    """
    limit = len(data)
    try:
        first = _read_box(data, 0, limit)
    except TruncatedBox as exc:
        raise NotMp4(f"not an ISO-BMFF file: {exc}") from exc
    if first.box_type not in _TOP_LEVEL_TYPES:
        raise NotMp4(f"unexpected leading box '{first.box_type}'")

    moov = None
    moofs: list[BoxHeader] = []
    for box in _iter_boxes(data, 0, limit):
        if box.box_type == "moov":
            moov = box
        elif box.box_type == "moof":
            moofs.append(box)
    if moov is None:
        raise NoVideoTrack("no moov box in file")

    track_id = None
    codec = Codec.UNKNOWN
    fps = 0.0
    sizes: list[int] = []
    for trak in _iter_boxes(data, moov.content_offset, moov.end):
        if trak.box_type != "trak":
            continue
        mdia = _find(data, trak, "mdia")
        if mdia is None or _handler(data, mdia) != "vide":
            continue
        minf = _find(data, mdia, "minf")
        stbl = _find(data, minf, "stbl") if minf is not None else None
        if stbl is None:
            continue
        track_id = _track_id(data, trak)
        codec = _codec_of(data, stbl)
        fps = _fps_of(data, mdia, stbl)
        sizes = _stsz_sizes(data, stbl)
        break
    if track_id is None:
        raise NoVideoTrack("no video track with a sample table")

    trex_size = _trex_default_size(data, moov, track_id)
    for moof in moofs:
        sizes.extend(_fragment_sizes(data, moof, track_id, trex_size))

    if not sizes:
        raise NoVideoTrack("video track declares zero samples")
    if any(s <= 0 for s in sizes):
        raise TruncatedBox("sample table contains a zero-byte sample")

    bits = [s * 8 for s in sizes]
    if include_overhead:
        overhead = 8 * limit - sum(bits)
        if overhead < 0:
            raise TruncatedBox("sample sizes exceed the file size")
        n = len(bits)
        share, rem = divmod(overhead, n)
        bits = [b + share + (1 if i < rem else 0) for i, b in enumerate(bits)]
    return FrameSizeSeries(sizes=bits, codec=codec, fps=fps, source_id=source_id)
