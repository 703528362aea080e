"""Binary framing of round messages.

Frame layout (all header integers big-endian)::

    offset  size  field
    0       4     magic b"RNSS"
    4       1     version (0x01)
    5       1     protocol tag
    6       4     round counter (u32)
    10      2     sender index (u16)
    12      4     payload count (u32)
    16      8*c   payload, little-endian IEEE-754 doubles
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"RNSS"
VERSION = 0x01
HEADER = struct.Struct(">4sBBIHI")
HEADER_SIZE = HEADER.size  # 16

TAG_HELLO = 0x00
TAG_OPEN = 0x01
TAG_DEAL = 0x02
TAG_OUTPUT = 0x03
TAG_BYE = 0x7F

CONTROL_TAGS = frozenset({TAG_HELLO, TAG_BYE})

MAX_PAYLOAD = 1 << 24


class FrameError(ValueError):
    """Malformed frame on the wire."""


@dataclass(frozen=True)
class RoundMessage:
    protocol_tag: int
    round: int
    sender: int
    payload: tuple[float, ...]

    def array(self) -> np.ndarray:
        return np.asarray(self.payload, dtype=np.float64)


def encode_frame(msg: RoundMessage) -> bytes:
    payload = np.asarray(msg.payload, dtype="<f8")
    header = HEADER.pack(MAGIC, VERSION, msg.protocol_tag, msg.round, msg.sender, payload.size)
    return header + payload.tobytes()


def decode_header(header: bytes) -> tuple[int, int, int, int]:
    """Validate a 16-byte header; returns ``(tag, round, sender, count)``."""
    if len(header) != HEADER_SIZE:
        raise FrameError(f"short header ({len(header)} bytes)")
    magic, version, tag, rnd, sender, count = HEADER.unpack(header)
    if magic != MAGIC:
        raise FrameError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameError(f"unsupported version {version}")
    if count > MAX_PAYLOAD:
        raise FrameError(f"payload count {count} exceeds limit")
    return tag, rnd, sender, count


def decode_frame(data: bytes) -> RoundMessage:
    tag, rnd, sender, count = decode_header(data[:HEADER_SIZE])
    body = data[HEADER_SIZE:]
    if len(body) != 8 * count:
        raise FrameError(f"payload length {len(body)} does not match count {count}")
    payload = np.frombuffer(body, dtype="<f8")
    return RoundMessage(tag, rnd, sender, tuple(payload.tolist()))


def read_frame(sock) -> RoundMessage | None:
    """Read one frame from a blocking socket; ``None`` on clean EOF."""
    header = _read_exact(sock, HEADER_SIZE)
    if header is None:
        return None
    tag, rnd, sender, count = decode_header(header)
    body = _read_exact(sock, 8 * count) if count else b""
    if body is None:
        raise FrameError("connection closed mid-frame")
    payload = np.frombuffer(body, dtype="<f8")
    return RoundMessage(tag, rnd, sender, tuple(payload.tolist()))


def _read_exact(sock, size: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < size:
        chunk = sock.recv(size - len(buf))
        if not chunk:
            if buf:
                raise FrameError("connection closed mid-frame")
            return None
        buf.extend(chunk)
    return bytes(buf)


def digest_payload(digest: bytes) -> tuple[float, ...]:
    """Pack the first 24 bytes of a digest into four exactly representable doubles."""
    return tuple(float(int.from_bytes(digest[i:i + 6], "big")) for i in range(0, 24, 6))
