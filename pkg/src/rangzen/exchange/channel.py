"""Ephemeral, unauthenticated encrypted channel.

Each side sends a plaintext HELLO (version, X25519 public key, nonce). Keys
come from HKDF over the shared secret, salted with the hash of both HELLOs,
so tampering with either HELLO yields mismatched keys. Every later frame is
sealed with ChaCha20-Poly1305 under a per-direction key and a counter nonce;
the frame header is authenticated as associated data.
"""

from __future__ import annotations

import hashlib
import os
import struct

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .wire import FrameType, WireError, encode_frame, frame_header, read_frame

PROTOCOL_VERSION = 1
_HELLO = struct.Struct(">B32s16s")
_TAG = 16


class ChannelError(Exception):
    pass


class HandshakeError(ChannelError):
    pass


class VersionMismatch(HandshakeError):
    pass


class IntegrityError(ChannelError):
    pass


class PeerAborted(ChannelError):
    pass


def error_payload(code: int, text: str) -> bytes:
    return bytes([code & 0xFF]) + text.encode("utf-8")[:200]


class SecureChannel:
    def __init__(self, stream, role, send_key, recv_key, transcript):
        self.stream = stream
        self.role = role
        self._send = ChaCha20Poly1305(send_key)
        self._recv = ChaCha20Poly1305(recv_key)
        self._send_ctr = 0
        self._recv_ctr = 0
        self.transcript = transcript
        self.bytes_received = 0
        self.bytes_sent = 0

    @staticmethod
    def _nonce(ctr):
        return b"\x00\x00\x00\x00" + struct.pack(">Q", ctr)

    def send(self, ftype: FrameType, payload: bytes) -> None:
        header = frame_header(ftype, len(payload) + _TAG)
        ct = self._send.encrypt(self._nonce(self._send_ctr), payload, header)
        self._send_ctr += 1
        self.stream.sendall(header + ct)
        self.bytes_sent += len(header) + len(ct)

    def send_error(self, text: str, code: int = 1) -> None:
        # plaintext: the peer may no longer share our keys
        self.stream.sendall(encode_frame(FrameType.ERROR, error_payload(code, text)))

    def recv(self, expected: FrameType) -> bytes:
        ftype, ct = read_frame(self.stream)
        self.bytes_received += 5 + len(ct)
        if ftype == FrameType.ERROR:
            raise PeerAborted(ct[1:].decode("utf-8", "replace"))
        if ftype != expected:
            raise ChannelError(f"expected {expected.name} frame, got {ftype.name}")
        header = frame_header(ftype, len(ct))
        try:
            pt = self._recv.decrypt(self._nonce(self._recv_ctr), ct, header)
        except InvalidTag:
            raise IntegrityError("frame failed authentication") from None
        self._recv_ctr += 1
        return pt


def _derive(shared: bytes, transcript: bytes) -> tuple[bytes, bytes]:
    okm = HKDF(
        algorithm=hashes.SHA256(),
        length=64,
        salt=hashlib.sha256(transcript).digest(),
        info=b"rangzen channel v1",
    ).derive(shared)
    return okm[:32], okm[32:]


def _parse_hello(stream, own_version):
    ftype, payload = read_frame(stream)
    if ftype == FrameType.ERROR:
        raise PeerAborted(payload[1:].decode("utf-8", "replace"))
    if ftype != FrameType.HELLO:
        raise HandshakeError(f"expected HELLO, got {ftype.name}")
    if len(payload) < 1:
        raise HandshakeError("empty HELLO")
    if payload[0] != own_version:
        raise VersionMismatch(f"peer speaks version {payload[0]}, we speak {own_version}")
    if len(payload) != _HELLO.size:
        raise HandshakeError("malformed HELLO")
    return payload


def handshake(stream, role: str, randbytes=os.urandom, version: int = PROTOCOL_VERSION):
    """Run the HELLO handshake; returns a SecureChannel or raises ChannelError."""
    if role not in ("initiator", "responder"):
        raise ValueError("role must be 'initiator' or 'responder'")
    priv = X25519PrivateKey.from_private_bytes(randbytes(32))
    pub = priv.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
    own_hello = _HELLO.pack(version, pub, randbytes(16))
    try:
        if role == "initiator":
            stream.sendall(encode_frame(FrameType.HELLO, own_hello))
        try:
            peer_hello = _parse_hello(stream, version)
        except VersionMismatch as exc:
            stream.sendall(encode_frame(FrameType.ERROR, error_payload(2, str(exc))))
            raise
        if role == "responder":
            stream.sendall(encode_frame(FrameType.HELLO, own_hello))
    except WireError as exc:
        raise HandshakeError(str(exc)) from None
    _, peer_pub, peer_nonce = _HELLO.unpack(peer_hello)
    if peer_pub == pub or peer_nonce == own_hello[33:]:
        raise HandshakeError("peer replayed our HELLO")
    try:
        shared = priv.exchange(X25519PublicKey.from_public_bytes(peer_pub))
    except ValueError as exc:
        raise HandshakeError(f"key agreement failed: {exc}") from None
    if role == "initiator":
        transcript = own_hello + peer_hello
        k_i2r, k_r2i = _derive(shared, transcript)
        return SecureChannel(stream, role, k_i2r, k_r2i, transcript)
    transcript = peer_hello + own_hello
    k_i2r, k_r2i = _derive(shared, transcript)
    return SecureChannel(stream, role, k_r2i, k_i2r, transcript)
