"""Frame layout, payload codecs and byte-stream transports.

Frame: ``length u32 BE | type u8 | payload``; ``length`` counts payload bytes.
"""

from __future__ import annotations

import enum
import math
import socket
import struct
import threading
import time

MAX_FRAME_PAYLOAD = 1_048_576
HEADER = struct.Struct(">IB")


class WireError(Exception):
    pass


class StreamClosed(WireError):
    pass


class FrameType(enum.IntEnum):
    HELLO = 0x01
    PSI_REQ = 0x02
    PSI_RESP = 0x03
    MSGS = 0x04
    DONE = 0x05
    ERROR = 0x7F


def frame_header(ftype: int, length: int) -> bytes:
    if length > MAX_FRAME_PAYLOAD:
        raise WireError(f"frame payload of {length} bytes exceeds {MAX_FRAME_PAYLOAD}")
    return HEADER.pack(length, ftype)


def encode_frame(ftype: int, payload: bytes) -> bytes:
    return frame_header(ftype, len(payload)) + payload


def recv_exact(stream, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = stream.recv(n - len(buf))
        if not chunk:
            raise StreamClosed(f"stream closed after {len(buf)} of {n} bytes")
        buf += chunk
    return bytes(buf)


def read_frame(stream) -> tuple[int, bytes]:
    """Return ``(type, payload)``; unknown types and oversize lengths are errors."""
    length, ftype = HEADER.unpack(recv_exact(stream, HEADER.size))
    if length > MAX_FRAME_PAYLOAD:
        raise WireError(f"frame length {length} exceeds {MAX_FRAME_PAYLOAD}")
    try:
        ftype = FrameType(ftype)
    except ValueError:
        raise WireError(f"unknown frame type 0x{ftype:02x}") from None
    return ftype, recv_exact(stream, length)


# Message list payload: count u32, then per entry priority f64 BE | len u16 | body.

def encode_messages_payload(entries) -> bytes:
    parts = [struct.pack(">I", len(entries))]
    for body, priority in entries:
        raw = body.encode("utf-8") if isinstance(body, str) else bytes(body)
        if len(raw) > 0xFFFF:
            raise WireError("message body too long for u16 length")
        parts.append(struct.pack(">dH", float(priority), len(raw)))
        parts.append(raw)
    return b"".join(parts)


def decode_messages_payload(data: bytes, max_count: int | None = None) -> list[tuple[str, float]]:
    if len(data) < 4:
        raise WireError("message payload truncated")
    (count,) = struct.unpack_from(">I", data, 0)
    if max_count is not None and count > max_count:
        raise WireError(f"payload carries {count} messages, budget is {max_count}")
    off = 4
    out = []
    for _ in range(count):
        if len(data) < off + 10:
            raise WireError("message entry truncated")
        priority, blen = struct.unpack_from(">dH", data, off)
        off += 10
        if len(data) < off + blen:
            raise WireError("message body truncated")
        if not (0.0 <= priority <= 1.0) or math.isnan(priority):
            raise WireError("advertised priority outside [0, 1]")
        try:
            body = data[off : off + blen].decode("utf-8")
        except UnicodeDecodeError:
            raise WireError("message body is not UTF-8") from None
        off += blen
        out.append((body, priority))
    if off != len(data):
        raise WireError("trailing bytes in message payload")
    return out


class _Pipe:
    def __init__(self):
        self.buf = bytearray()
        self.closed = False
        self.cond = threading.Condition()


class MemoryStream:
    """One end of an in-memory duplex byte stream with socket-like methods."""

    def __init__(self, inbound: _Pipe, outbound: _Pipe, timeout: float | None = 10.0):
        self._in = inbound
        self._out = outbound
        self.timeout = timeout
        self.sent = bytearray()

    def sendall(self, data: bytes) -> None:
        with self._out.cond:
            if self._out.closed:
                raise StreamClosed("peer closed the stream")
            self._out.buf += data
            self._out.cond.notify_all()
        self.sent += data

    def recv(self, n: int) -> bytes:
        deadline = None if self.timeout is None else time.monotonic() + self.timeout
        with self._in.cond:
            while not self._in.buf and not self._in.closed:
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    raise socket.timeout("read timed out")
                self._in.cond.wait(remaining)
            chunk = bytes(self._in.buf[:n])
            del self._in.buf[:n]
            return chunk

    def close(self) -> None:
        for pipe in (self._in, self._out):
            with pipe.cond:
                pipe.closed = True
                pipe.cond.notify_all()


def memory_duplex(timeout: float | None = 10.0) -> tuple[MemoryStream, MemoryStream]:
    a_to_b, b_to_a = _Pipe(), _Pipe()
    return MemoryStream(b_to_a, a_to_b, timeout), MemoryStream(a_to_b, b_to_a, timeout)


def loopback_pair(timeout: float | None = 10.0):
    """Connected OS socket pair."""
    a, b = socket.socketpair()
    a.settimeout(timeout)
    b.settimeout(timeout)
    return a, b


class FaultyStream:
    """Wraps a stream and corrupts the outbound byte sequence.

    ``cut_at``: close the stream once that many bytes have been sent.
    ``flip_at``: xor ``flip_mask`` into the byte at that absolute offset.
    """

    def __init__(self, inner, cut_at=None, flip_at=None, flip_mask=0x01):
        self.inner = inner
        self.cut_at = cut_at
        self.flip_at = flip_at
        self.flip_mask = flip_mask
        self.offset = 0

    def sendall(self, data: bytes) -> None:
        data = bytearray(data)
        start = self.offset
        if self.flip_at is not None and start <= self.flip_at < start + len(data):
            data[self.flip_at - start] ^= self.flip_mask
        if self.cut_at is not None and start + len(data) > self.cut_at:
            keep = max(0, self.cut_at - start)
            if keep:
                self.inner.sendall(bytes(data[:keep]))
            self.offset += keep
            self.inner.close()
            raise StreamClosed("stream cut by fault injector")
        self.inner.sendall(bytes(data))
        self.offset += len(data)

    def recv(self, n: int) -> bytes:
        return self.inner.recv(n)

    def close(self) -> None:
        self.inner.close()
