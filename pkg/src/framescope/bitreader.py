"""MSB-first bit reader with Exp-Golomb decode and RBSP unescaping."""

from __future__ import annotations

from .errors import MalformedCode

_EP_ESCAPE = b"\x00\x00\x03"


def unescape_rbsp(payload: bytes) -> bytes:
    """Remove emulation-prevention bytes: every 00 00 03 becomes 00 00.

    Left-to-right, non-overlapping; scanning resumes after the removed 03,
    so an escaped 03 (00 00 03 03) survives as 00 00 03. Malformed tails
    pass through unchanged.
    """
    if _EP_ESCAPE not in payload:
        return payload
    return payload.replace(_EP_ESCAPE, b"\x00\x00")


class BitReader:
    """Reads bits MSB-first from a byte buffer."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # bit cursor

    @property
    def bits_left(self) -> int:
        return len(self._data) * 8 - self._pos

    def read_bit(self) -> int:
        if self._pos >= len(self._data) * 8:
            raise MalformedCode("bit reader exhausted")
        byte = self._data[self._pos >> 3]
        bit = (byte >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, n: int) -> int:
        value = 0
        for _ in range(n):
            value = (value << 1) | self.read_bit()
        return value


def read_ue(bits: BitReader) -> int:
    """Decode one unsigned Exp-Golomb codeword: 2^z - 1 + read(z).

    z is the count of leading zero bits; more than 32 leading zeros means
    the stream is not positioned on a valid codeword.
    """
    zeros = 0
    while bits.read_bit() == 0:
        zeros += 1
        if zeros > 32:
            raise MalformedCode("Exp-Golomb prefix longer than 32 zeros")
    return (1 << zeros) - 1 + bits.read_bits(zeros)
