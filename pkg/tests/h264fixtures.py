"""Hand-built H.264/HEVC/MP4 fixtures for parser tests.

The H.264 builder emits genuinely decodable baseline streams using only
I_PCM macroblocks for intra frames and all-skip P frames, which keeps the
bit syntax simple enough to write by hand while remaining acceptable to a
real decoder. The module also provides the reference emulation-prevention
escaper and an independent start-code counter used as test oracles.
"""

from __future__ import annotations

import re
import struct


class BitWriter:
    """MSB-first bit accumulator."""

    def __init__(self):
        self._bits: list[int] = []

    def bit(self, value: int) -> "BitWriter":
        self._bits.append(value & 1)
        return self

    def bits(self, value: int, width: int) -> "BitWriter":
        for shift in range(width - 1, -1, -1):
            self.bit((value >> shift) & 1)
        return self

    def ue(self, value: int) -> "BitWriter":
        # Exp-Golomb: zeros(len(bin(v+1))-1) then bin(v+1)
        plus = value + 1
        width = plus.bit_length()
        self.bits(0, width - 1)
        self.bits(plus, width)
        return self

    def se(self, value: int) -> "BitWriter":
        mapped = 2 * value - 1 if value > 0 else -2 * value
        return self.ue(mapped)

    def byte_align(self, fill: int = 0) -> "BitWriter":
        while len(self._bits) % 8:
            self.bit(fill)
        return self

    def rbsp_trailing(self) -> "BitWriter":
        self.bit(1)
        return self.byte_align(0)

    def raw_bytes(self, blob: bytes) -> "BitWriter":
        for byte in blob:
            self.bits(byte, 8)
        return self

    def tobytes(self) -> bytes:
        assert len(self._bits) % 8 == 0, "writer not byte-aligned"
        out = bytearray()
        for at in range(0, len(self._bits), 8):
            byte = 0
            for bit in self._bits[at : at + 8]:
                byte = (byte << 1) | bit
            out.append(byte)
        return bytes(out)


def escape_rbsp(rbsp: bytes) -> bytes:
    """Reference emulation-prevention escaper: after two zero bytes, a byte
    <= 3 forces an inserted 0x03."""
    out = bytearray()
    zeros = 0
    for byte in rbsp:
        if zeros >= 2 and byte <= 3:
            out.append(3)
            zeros = 0
        out.append(byte)
        zeros = zeros + 1 if byte == 0 else 0
    return bytes(out)


def count_nals_independent(stream: bytes) -> int:
    """Start-code counter written without the package's scanner: regex over
    4-byte codes first, then 3-byte codes."""
    matches = list(re.finditer(rb"\x00\x00\x00\x01|\x00\x00\x01", stream))
    return sum(1 for m in matches if len(stream) > m.end())


def nal(payload_rbsp: bytes, header: int, long_code: bool = True) -> bytes:
    code = b"\x00\x00\x00\x01" if long_code else b"\x00\x00\x01"
    return code + bytes([header]) + escape_rbsp(payload_rbsp)


def avc_sps(mb_width: int, mb_height: int) -> bytes:
    w = BitWriter()
    w.bits(66, 8)        # profile_idc: baseline
    w.bits(0xC0, 8)      # constraint_set0/1
    w.bits(10, 8)        # level_idc 1.0
    w.ue(0)              # seq_parameter_set_id
    w.ue(0)              # log2_max_frame_num_minus4 -> frame_num is u(4)
    w.ue(2)              # pic_order_cnt_type 2: no POC fields in slices
    w.ue(1)              # max_num_ref_frames
    w.bit(0)             # gaps_in_frame_num_value_allowed_flag
    w.ue(mb_width - 1)
    w.ue(mb_height - 1)
    w.bit(1)             # frame_mbs_only_flag
    w.bit(1)             # direct_8x8_inference_flag
    w.bit(0)             # frame_cropping_flag
    w.bit(0)             # vui_parameters_present_flag
    w.rbsp_trailing()
    return w.tobytes()


def avc_pps() -> bytes:
    w = BitWriter()
    w.ue(0)              # pic_parameter_set_id
    w.ue(0)              # seq_parameter_set_id
    w.bit(0)             # entropy_coding_mode_flag: CAVLC
    w.bit(0)             # bottom_field_pic_order_in_frame_present_flag
    w.ue(0)              # num_slice_groups_minus1
    w.ue(0)              # num_ref_idx_l0_default_active_minus1
    w.ue(0)              # num_ref_idx_l1_default_active_minus1
    w.bit(0)             # weighted_pred_flag
    w.bits(0, 2)         # weighted_bipred_idc
    w.se(0)              # pic_init_qp_minus26
    w.se(0)              # pic_init_qs_minus26
    w.se(0)              # chroma_qp_index_offset
    w.bit(0)             # deblocking_filter_control_present_flag
    w.bit(0)             # constrained_intra_pred_flag
    w.bit(0)             # redundant_pic_cnt_present_flag
    w.rbsp_trailing()
    return w.tobytes()


def avc_idr_pcm_slice(mb_width: int, mb_height: int, idr_pic_id: int, luma: int = 128) -> bytes:
    """IDR slice made entirely of I_PCM macroblocks."""
    w = BitWriter()
    w.ue(0)              # first_mb_in_slice
    w.ue(7)              # slice_type: I (all slices in picture)
    w.ue(0)              # pic_parameter_set_id
    w.bits(0, 4)         # frame_num (IDR resets to 0)
    w.ue(idr_pic_id)
    w.bit(0)             # no_output_of_prior_pics_flag
    w.bit(0)             # long_term_reference_flag
    w.se(0)              # slice_qp_delta
    for mb in range(mb_width * mb_height):
        w.ue(25)         # mb_type I_PCM
        w.byte_align(0)  # pcm_alignment_zero_bit
        shade = (luma + 11 * mb) % 200 + 20
        w.raw_bytes(bytes([shade]) * 256)   # luma 16x16
        w.raw_bytes(bytes([120]) * 64)      # cb 8x8
        w.raw_bytes(bytes([130]) * 64)      # cr 8x8
    w.rbsp_trailing()
    return w.tobytes()


def avc_pskip_slice(mb_count: int, frame_num: int) -> bytes:
    """P slice in which every macroblock is skipped."""
    w = BitWriter()
    w.ue(0)              # first_mb_in_slice
    w.ue(5)              # slice_type: P (all slices in picture)
    w.ue(0)              # pic_parameter_set_id
    w.bits(frame_num & 0xF, 4)
    w.bit(0)             # num_ref_idx_active_override_flag
    w.bit(0)             # ref_pic_list_modification_flag_l0
    w.bit(0)             # adaptive_ref_pic_marking_mode_flag
    w.se(0)              # slice_qp_delta
    w.ue(mb_count)       # mb_skip_run covering the whole picture
    w.rbsp_trailing()
    return w.tobytes()


def build_pcm_stream(
    mb_width: int = 4,
    mb_height: int = 4,
    n_frames: int = 12,
    gop: int = 6,
    long_codes: bool = True,
    with_aud: bool = False,
    with_sei: bool = False,
) -> tuple[bytes, list[int]]:
    """Decodable baseline H.264 stream; returns (bytes, per-frame bit sizes).

    Expected sizes follow the attribution rule under test: a frame spans
    from the start code of its first NAL (parameter sets and SEI lead the
    frame they precede) to the next frame's first start code.
    """
    chunks: list[bytes] = []
    frame_of: list[int] = []  # frame index owning each chunk

    def push(blob: bytes, frame_idx: int):
        chunks.append(blob)
        frame_of.append(frame_idx)

    frame_index = 0
    idr_pic_id = 0
    mb_count = mb_width * mb_height
    for t in range(n_frames):
        if t % gop == 0:
            if with_aud:
                push(nal(BitWriter().ue(0).rbsp_trailing().tobytes(), 0x09, long_codes), t)
            push(nal(avc_sps(mb_width, mb_height), 0x67, long_codes), t)
            push(nal(avc_pps(), 0x68, long_codes), t)
            if with_sei:
                sei = bytes([5, 4]) + b"test" + b"\x80"  # user_data payload
                push(nal(sei, 0x06, long_codes), t)
            push(nal(avc_idr_pcm_slice(mb_width, mb_height, idr_pic_id), 0x65, long_codes), t)
            idr_pic_id += 1
        else:
            push(nal(avc_pskip_slice(mb_count, t % 16), 0x41, long_codes), t)
    stream = b"".join(chunks)
    sizes = [0] * n_frames
    for blob, t in zip(chunks, frame_of):
        sizes[t] += len(blob) * 8
    return stream, sizes


def hevc_structural_stream(n_frames: int = 5) -> tuple[bytes, list[int]]:
    """Structurally valid HEVC Annex-B stream (headers and slice flags only;
    slice bodies are filler, so this is for layout parsing, not decoding)."""

    def hevc_nal(nal_type: int, body: bytes) -> bytes:
        header = bytes([(nal_type << 1) & 0x7E, 0x01])  # layer 0, tid+1 = 1
        return b"\x00\x00\x00\x01" + header + escape_rbsp(body)

    chunks = []
    frame_of = []
    for t in range(n_frames):
        if t == 0:
            chunks += [
                hevc_nal(32, b"\x10" * 6),  # VPS
                hevc_nal(33, b"\x20" * 8),  # SPS
                hevc_nal(34, b"\x30" * 4),  # PPS
            ]
            frame_of += [0, 0, 0]
            # IDR_W_RADL (19), first_slice_segment_in_pic_flag = 1
            chunks.append(hevc_nal(19, b"\x80" + bytes(range(40))))
            frame_of.append(0)
        else:
            # TRAIL_R (1), first slice flag set, then a continuation slice
            chunks.append(hevc_nal(1, b"\x80" + bytes(range(24))))
            frame_of.append(t)
            chunks.append(hevc_nal(1, b"\x00" + bytes(range(16))))
            frame_of.append(t)
    stream = b"".join(chunks)
    sizes = [0] * n_frames
    for blob, t in zip(chunks, frame_of):
        sizes[t] += len(blob) * 8
    return stream, sizes


# --- minimal MP4 construction -------------------------------------------------


def box(box_type: bytes, payload: bytes) -> bytes:
    return struct.pack(">I", len(payload) + 8) + box_type + payload


def full_box(box_type: bytes, version: int, flags: int, payload: bytes) -> bytes:
    return box(box_type, struct.pack(">B", version) + flags.to_bytes(3, "big") + payload)


def make_stsz(sample_sizes: list[int], uniform: int = 0, count: int | None = None) -> bytes:
    if uniform:
        return full_box(b"stsz", 0, 0, struct.pack(">II", uniform, count or 0))
    payload = struct.pack(">II", 0, len(sample_sizes))
    payload += struct.pack(f">{len(sample_sizes)}I", *sample_sizes)
    return full_box(b"stsz", 0, 0, payload)


def make_minimal_mp4(
    sample_sizes: list[int],
    uniform: int = 0,
    uniform_count: int = 0,
    handler: bytes = b"vide",
    codec: bytes = b"avc1",
    timescale: int = 30000,
    sample_delta: int = 1000,
    mdat_payload: bytes = b"",
) -> bytes:
    n = uniform_count if uniform else len(sample_sizes)
    stts = full_box(b"stts", 0, 0, struct.pack(">III", 1, n, sample_delta))
    stsc = full_box(b"stsc", 0, 0, struct.pack(">IIII", 1, 1, n or 1, 1))
    stco = full_box(b"stco", 0, 0, struct.pack(">II", 1, 0))
    stsd_entry = box(codec, b"\x00" * 6 + struct.pack(">H", 1) + b"\x00" * 70)
    stsd = full_box(b"stsd", 0, 0, struct.pack(">I", 1) + stsd_entry)
    stbl = box(b"stbl", stsd + stts + stsc + make_stsz(sample_sizes, uniform, n) + stco)
    dref = full_box(b"dref", 0, 0, struct.pack(">I", 1) + full_box(b"url ", 0, 1, b""))
    dinf = box(b"dinf", dref)
    vmhd = full_box(b"vmhd", 0, 1, b"\x00" * 8)
    minf = box(b"minf", vmhd + dinf + stbl)
    hdlr = full_box(b"hdlr", 0, 0, b"\x00" * 4 + handler + b"\x00" * 12 + b"h\x00")
    mdhd = full_box(b"mdhd", 0, 0, struct.pack(">IIII", 0, 0, timescale, n * sample_delta) + b"\x55\xc4\x00\x00")
    mdia = box(b"mdia", mdhd + hdlr + minf)
    tkhd = full_box(b"tkhd", 0, 7, struct.pack(">III", 0, 0, 1) + b"\x00" * 68)
    trak = box(b"trak", tkhd + mdia)
    mvhd = full_box(b"mvhd", 0, 0, struct.pack(">IIII", 0, 0, timescale, n * sample_delta) + b"\x00" * 80)
    moov = box(b"moov", mvhd + trak)
    ftyp = box(b"ftyp", b"isom" + struct.pack(">I", 512) + b"isomiso2mp41")
    mdat = box(b"mdat", mdat_payload)
    return ftyp + moov + mdat


def make_fragmented_mp4(
    trun_sizes: list[list[int | None]],
    trex_default: int = 111,
    tfhd_default: int | None = None,
) -> bytes:
    """Fragmented file: sizes given per fragment; None entries fall back to
    tfhd/trex defaults."""
    stts = full_box(b"stts", 0, 0, struct.pack(">I", 0))
    stsc = full_box(b"stsc", 0, 0, struct.pack(">I", 0))
    stco = full_box(b"stco", 0, 0, struct.pack(">I", 0))
    stsd_entry = box(b"avc1", b"\x00" * 6 + struct.pack(">H", 1) + b"\x00" * 70)
    stsd = full_box(b"stsd", 0, 0, struct.pack(">I", 1) + stsd_entry)
    stbl = box(b"stbl", stsd + stts + stsc + make_stsz([], 0, 0) + stco)
    dref = full_box(b"dref", 0, 0, struct.pack(">I", 1) + full_box(b"url ", 0, 1, b""))
    minf = box(b"minf", full_box(b"vmhd", 0, 1, b"\x00" * 8) + box(b"dinf", dref) + stbl)
    hdlr = full_box(b"hdlr", 0, 0, b"\x00" * 4 + b"vide" + b"\x00" * 12 + b"h\x00")
    mdhd = full_box(b"mdhd", 0, 0, struct.pack(">IIII", 0, 0, 30000, 0) + b"\x55\xc4\x00\x00")
    mdia = box(b"mdia", mdhd + hdlr + minf)
    tkhd = full_box(b"tkhd", 0, 7, struct.pack(">III", 0, 0, 1) + b"\x00" * 68)
    trak = box(b"trak", tkhd + mdia)
    trex = full_box(b"trex", 0, 0, struct.pack(">IIIII", 1, 1, 1000, trex_default, 0))
    mvex = box(b"mvex", trex)
    mvhd = full_box(b"mvhd", 0, 0, struct.pack(">IIII", 0, 0, 30000, 0) + b"\x00" * 80)
    moov = box(b"moov", mvhd + trak + mvex)
    ftyp = box(b"ftyp", b"isom" + struct.pack(">I", 512) + b"isomiso2mp41")

    fragments = b""
    for seq, sizes in enumerate(trun_sizes, start=1):
        mfhd = full_box(b"mfhd", 0, 0, struct.pack(">I", seq))
        tfhd_flags = 0
        tfhd_payload = struct.pack(">I", 1)
        if tfhd_default is not None:
            tfhd_flags |= 0x10
            tfhd_payload += struct.pack(">I", tfhd_default)
        tfhd = full_box(b"tfhd", 0, tfhd_flags, tfhd_payload)
        explicit = [s for s in sizes if s is not None]
        if len(explicit) == len(sizes):
            trun_flags = 0x200 | 0x1
            payload = struct.pack(">Ii", len(sizes), 0)
            for s in sizes:
                payload += struct.pack(">I", s)
        else:
            assert not explicit, "mixed explicit/default sizes unsupported in fixture"
            trun_flags = 0x1
            payload = struct.pack(">Ii", len(sizes), 0)
        trun = full_box(b"trun", 0, trun_flags, payload)
        moof = box(b"moof", mfhd + box(b"traf", tfhd + trun))
        fragments += moof + box(b"mdat", b"")
    return ftyp + moov + fragments
