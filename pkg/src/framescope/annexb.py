"""Annex-B elementary stream parsing: start codes, NAL units, access units.

Frame sizes come out of the byte layout alone. A frame (access unit) spans
from the start code of its first NAL unit up to the start code that opens
the next access unit, so non-slice units (parameter sets, SEI, delimiters)
count toward the frame they precede and the sizes of all frames always sum
to the full stream size.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .bitreader import BitReader, read_ue, unescape_rbsp
from .errors import MalformedCode, NoFrames, NoStartCode
from .series import Codec, FrameSizeSeries

log = logging.getLogger(__name__)

_SC3 = b"\x00\x00\x01"

# AVC: coded slices (incl. data partitions and IDR). HEVC: types 0..31.
_AVC_VCL = frozenset(range(1, 6))
_AVC_AUD = 9
_HEVC_AUD = 35


@dataclass(frozen=True)
class NalUnit:
    """One NAL unit located inside an Annex-B stream.

    ``payload_offset`` indexes the first byte after the start code;
    ``payload_size`` excludes the start code and any trailing zero padding
    that belongs to the next start code's neighborhood.
    """

    payload_offset: int
    payload_size: int
    nal_type: int
    codec: Codec
    start_code_len: int

    @property
    def start_offset(self) -> int:
        return self.payload_offset - self.start_code_len

    @property
    def is_vcl(self) -> bool:
        if self.codec is Codec.AVC:
            return self.nal_type in _AVC_VCL
        return self.nal_type <= 31

    @property
    def is_aud(self) -> bool:
        aud = _AVC_AUD if self.codec is Codec.AVC else _HEVC_AUD
        return self.nal_type == aud


@dataclass(frozen=True)
class AccessUnitSpan:
    """Contiguous run of NAL units forming one coded frame."""

    first_nal_index: int
    last_nal_index: int
    total_bits: int


def _nal_type_of(first_byte: int, codec: Codec) -> int:
    if codec is Codec.AVC:
        return first_byte & 0x1F
    return (first_byte >> 1) & 0x3F


def scan_annexb(stream: bytes, codec: Codec) -> list[NalUnit]:
    """Locate every NAL unit between 3- or 4-byte start codes.

    A unit's payload runs to the next start code (or end of stream) with
    trailing zero bytes stripped; a zero immediately before 00 00 01 is
    read as the 4-byte start-code form.
    """
    if len(stream) == 0:
        raise NoStartCode("empty stream")
    starts: list[tuple[int, int]] = []  # (start code offset, code length)
    i = stream.find(_SC3)
    while i != -1:
        if i > 0 and stream[i - 1] == 0:
            starts.append((i - 1, 4))
        else:
            starts.append((i, 3))
        i = stream.find(_SC3, i + 3)
    if not starts:
        raise NoStartCode("no Annex-B start code in stream")

    units: list[NalUnit] = []
    for k, (off, sc_len) in enumerate(starts):
        payload_start = off + sc_len
        payload_end = starts[k + 1][0] if k + 1 < len(starts) else len(stream)
        raw = stream[payload_start:payload_end]
        body = raw.rstrip(b"\x00")
        if not body:
            log.warning("empty NAL payload at offset %d, skipping", payload_start)
            continue
        first = body[0]
        if first & 0x80:
            log.warning("forbidden_zero_bit set at offset %d", payload_start)
        units.append(
            NalUnit(
                payload_offset=payload_start,
                payload_size=len(body),
                nal_type=_nal_type_of(first, codec),
                codec=codec,
                start_code_len=sc_len,
            )
        )
    return units


def is_frame_start(nal: NalUnit, payload: bytes) -> bool:
    """True when this VCL unit opens a new picture.

    AVC: first ue(v) of the slice header (first_mb_in_slice) equals 0.
    HEVC: first bit after the 2-byte NAL header
    (first_slice_segment_in_pic_flag) equals 1.
    """
    if nal.codec is Codec.AVC:
        if len(payload) < 2:
            raise MalformedCode("AVC slice truncated before slice header")
        # 64 bytes cover any realistic first_mb_in_slice codeword.
        rbsp = unescape_rbsp(payload[1:65])
        return read_ue(BitReader(rbsp)) == 0
    if len(payload) < 3:
        raise MalformedCode("HEVC slice truncated before slice header")
    rbsp = unescape_rbsp(payload[:8])
    if len(rbsp) < 3:
        raise MalformedCode("HEVC slice header shorter than 3 bytes")
    return (rbsp[2] >> 7) & 1 == 1


def _frame_starts(stream: bytes, units: list[NalUnit]) -> list[bool]:
    flags = []
    for nal in units:
        started = False
        if nal.is_vcl:
            payload = stream[nal.payload_offset : nal.payload_offset + nal.payload_size]
            try:
                started = is_frame_start(nal, payload)
            except MalformedCode:
                log.warning(
                    "malformed slice header at offset %d; treated as continuation",
                    nal.payload_offset,
                )
        flags.append(started)
    return flags


def build_access_units(stream: bytes, units: list[NalUnit]) -> list[AccessUnitSpan]:
    """Partition the NAL list into access units.

    A frame-starting VCL unit opens a new AU and pulls in the run of
    non-VCL units directly before it; an access-unit delimiter always
    opens a new AU. Trailing non-VCL units stay with the last frame.
    """
    starts = _frame_starts(stream, units)
    boundaries = [0]
    cur_has_vcl = False
    run_start: int | None = None  # first index of the pending non-VCL run
    for i, nal in enumerate(units):
        if nal.is_vcl:
            if starts[i] and cur_has_vcl:
                boundaries.append(i if run_start is None else run_start)
            cur_has_vcl = True
            run_start = None
        elif nal.is_aud and cur_has_vcl:
            boundaries.append(i)
            cur_has_vcl = False
            run_start = None
        elif run_start is None:
            run_start = i

    spans: list[AccessUnitSpan] = []
    for k, first in enumerate(boundaries):
        last = (boundaries[k + 1] - 1) if k + 1 < len(boundaries) else len(units) - 1
        lo = units[first].start_offset if k > 0 else 0
        hi = units[boundaries[k + 1]].start_offset if k + 1 < len(boundaries) else len(stream)
        spans.append(AccessUnitSpan(first, last, (hi - lo) * 8))
    # A stream tail of pure non-VCL units (e.g. a closing delimiter) is not
    # a frame of its own; fold it into the preceding frame.
    if len(spans) > 1 and not any(
        units[i].is_vcl for i in range(spans[-1].first_nal_index, spans[-1].last_nal_index + 1)
    ):
        tail = spans.pop()
        prev = spans.pop()
        spans.append(
            AccessUnitSpan(prev.first_nal_index, tail.last_nal_index, prev.total_bits + tail.total_bits)
        )
    return spans


def extract_frames_annexb(
    stream: bytes, codec: Codec, fps: float = 0.0, source_id: str = ""
) -> FrameSizeSeries:
    """Per-frame sizes in bits for an Annex-B elementary stream.

    Sizes are byte spans between access-unit boundaries, so their sum is
    exactly 8x the stream length.
    """
    units = scan_annexb(stream, codec)
    if not any(u.is_vcl for u in units):
        raise NoFrames("stream has no coded-slice NAL units")
    spans = build_access_units(stream, units)
    sizes = [span.total_bits for span in spans]
    return FrameSizeSeries(sizes=sizes, codec=codec, fps=fps, source_id=source_id)


def detect_codec(stream: bytes) -> Codec:
    """Best-effort AVC/HEVC detection from NAL headers.

    Scores each hypothesis by how many units carry well-formed headers and
    recognizable parameter-set types; parameter sets are decisive when seen.
    """
    try:
        as_avc = scan_annexb(stream, Codec.AVC)
    except NoStartCode:
        raise
    avc_score = 0
    hevc_score = 0
    for nal in as_avc[:64]:
        first = stream[nal.payload_offset]
        second = stream[nal.payload_offset + 1] if nal.payload_size > 1 else 0
        avc_type = first & 0x1F
        hevc_type = (first >> 1) & 0x3F
        if first & 0x80:
            continue
        if avc_type in (7, 8):  # AVC SPS/PPS
            avc_score += 3
        if avc_type in _AVC_VCL or avc_type in (6, 9):
            avc_score += 1
        if hevc_type in (32, 33, 34):  # HEVC VPS/SPS/PPS
            hevc_score += 3
        # HEVC headers end with temporal_id_plus1 >= 1
        if second & 0x07:
            hevc_score += 1
        else:
            avc_score += 1
    return Codec.HEVC if hevc_score > avc_score else Codec.AVC
