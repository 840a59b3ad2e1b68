"""Friend identities, QR payloads and the local friend store.

A device draws a random 128-bit identity once. Friends never see the raw
id: the QR code carries ``version || sha256(id)``, and a scanner stores only
that digest. The digests are also the elements fed into PSI.
"""

from __future__ import annotations

import hashlib
import secrets
import struct
import threading
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

ID_BYTES = 16
DIGEST_BYTES = 32
QR_VERSION = 1
DEFAULT_FRIEND_CAP = 40
DEFAULT_PSI_CAP = 30

_MAGIC = b"RZID"
_FILE_VERSION = 1


class IdentityError(Exception):
    pass


class FriendCapError(IdentityError):
    def __init__(self, cap: int):
        super().__init__(f"friend store is full (cap {cap})")
        self.cap = cap


class CorruptFileError(IdentityError):
    pass


@dataclass(frozen=True)
class FriendId:
    bytes: bytes

    def __post_init__(self):
        if not isinstance(self.bytes, (bytes, bytearray)) or len(self.bytes) != ID_BYTES:
            raise IdentityError(f"FriendId must be exactly {ID_BYTES} bytes")
        if not any(self.bytes):
            raise IdentityError("FriendId must not be all-zero")
        object.__setattr__(self, "bytes", bytes(self.bytes))

    def hex(self) -> str:
        return self.bytes.hex()


@dataclass(frozen=True)
class QrPayload:
    digest: bytes
    version: int = QR_VERSION

    def __post_init__(self):
        if len(self.digest) != DIGEST_BYTES:
            raise IdentityError(f"QR digest must be {DIGEST_BYTES} bytes")
        if not 0 <= self.version <= 0xFF:
            raise IdentityError("QR version must fit in one byte")

    def to_hex(self) -> str:
        return (bytes([self.version]) + self.digest).hex()

    @classmethod
    def from_hex(cls, text: str) -> "QrPayload":
        try:
            raw = bytes.fromhex(text.strip())
        except ValueError as exc:
            raise IdentityError(f"malformed QR payload: {exc}") from None
        if len(raw) != 1 + DIGEST_BYTES:
            raise IdentityError(f"QR payload must be {1 + DIGEST_BYTES} bytes, got {len(raw)}")
        if raw[0] != QR_VERSION:
            raise IdentityError(f"unsupported QR payload version {raw[0]}")
        return cls(digest=raw[1:], version=raw[0])


def generate_identity(randbytes: Callable[[int], bytes] = secrets.token_bytes) -> FriendId:
    """Draw a fresh identity from ``randbytes`` (the OS CSPRNG by default).

    Any failure of the source propagates; there is no fallback generator.
    """
    raw = randbytes(ID_BYTES)
    if len(raw) != ID_BYTES:
        raise IdentityError("randomness source returned a short read")
    return FriendId(raw)


def id_digest(raw: bytes) -> bytes:
    return hashlib.sha256(raw).digest()


def qr_payload(fid: FriendId) -> QrPayload:
    return QrPayload(digest=id_digest(fid.bytes))


class FriendStore:
    """Own identity plus the digests of scanned friends.

    Scanning creates a one-way edge: the scanner stores the scannee. Reads
    return copies, so a snapshot never observes a half-applied mutation.
    """

    def __init__(self, own_id: FriendId, cap: int = DEFAULT_FRIEND_CAP):
        if cap < 0:
            raise IdentityError("cap must be nonnegative")
        self.own_id = own_id
        self.cap = cap
        self._friends: dict[bytes, int] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._friends)

    def __contains__(self, digest: bytes) -> bool:
        return digest in self._friends

    def entries(self) -> dict[bytes, int]:
        with self._lock:
            return dict(self._friends)

    def digests(self) -> list[bytes]:
        """Stored digests in insertion order."""
        with self._lock:
            return list(self._friends)

    def add_friend(self, payload: QrPayload, now: int) -> "FriendStore":
        with self._lock:
            if payload.digest in self._friends:
                return self
            if len(self._friends) >= self.cap:
                raise FriendCapError(self.cap)
            self._friends[payload.digest] = int(now)
        return self

    def remove_friend(self, digest: bytes) -> None:
        with self._lock:
            self._friends.pop(digest, None)

    def to_bytes(self) -> bytes:
        with self._lock:
            items = list(self._friends.items())
        parts = [_MAGIC, bytes([_FILE_VERSION]), self.own_id.bytes, struct.pack(">I", len(items))]
        for digest, added in items:
            parts.append(digest)
            parts.append(struct.pack(">Q", added))
        body = b"".join(parts)
        return body + struct.pack(">I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data: bytes, cap: int = DEFAULT_FRIEND_CAP) -> "FriendStore":
        head = len(_MAGIC) + 1 + ID_BYTES + 4
        if len(data) < head + 4:
            raise CorruptFileError("identity file truncated")
        body, (crc,) = data[:-4], struct.unpack(">I", data[-4:])
        if zlib.crc32(body) != crc:
            raise CorruptFileError("identity file checksum mismatch")
        if body[:4] != _MAGIC:
            raise CorruptFileError("not an identity file (bad magic)")
        if body[4] != _FILE_VERSION:
            raise CorruptFileError(f"unsupported identity file version {body[4]}")
        own = FriendId(body[5 : 5 + ID_BYTES])
        (count,) = struct.unpack(">I", body[5 + ID_BYTES : head])
        rec = DIGEST_BYTES + 8
        if len(body) != head + count * rec:
            raise CorruptFileError("identity file length does not match entry count")
        store = cls(own, cap=max(cap, count))
        for i in range(count):
            off = head + i * rec
            digest = body[off : off + DIGEST_BYTES]
            (added,) = struct.unpack(">Q", body[off + DIGEST_BYTES : off + rec])
            if digest in store._friends:
                raise CorruptFileError("duplicate friend entry")
            store._friends[digest] = added
        return store

    def save(self, path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(self.to_bytes())
        tmp.replace(path)

    @classmethod
    def load(cls, path, cap: int = DEFAULT_FRIEND_CAP) -> "FriendStore":
        return cls.from_bytes(Path(path).read_bytes(), cap=cap)


def select_psi_inputs(store, max_inputs: int = DEFAULT_PSI_CAP, include_prob: float = 1.0,
                      rng=None) -> list[bytes]:
    """Pick the digests to submit to one PSI run.

    Each entry survives independently with ``include_prob``; survivors are
    then uniformly subsampled down to ``max_inputs`` and shuffled. ``store``
    may be a FriendStore or any iterable of digests. ``rng`` is a
    ``random.Random``-like object (``secrets.SystemRandom()`` by default).
    """
    if not 0.0 < include_prob <= 1.0:
        raise ValueError("include_prob must be in (0, 1]")
    if max_inputs < 1:
        raise ValueError("max_inputs must be at least 1")
    if rng is None:
        rng = secrets.SystemRandom()
    pool = store.digests() if isinstance(store, FriendStore) else list(store)
    if include_prob < 1.0:
        pool = [d for d in pool if rng.random() < include_prob]
    if len(pool) > max_inputs:
        return rng.sample(pool, max_inputs)
    rng.shuffle(pool)
    return pool
