"""Prioritised, content-addressed message store."""

from __future__ import annotations

import hashlib
import struct
import threading
import zlib
from dataclasses import dataclass
from pathlib import Path

from .trust import TrustParams, decay_priority

MAX_BODY_BYTES = 560
DEFAULT_CAPACITY = 10_000

_MAGIC = b"RZMS"
_FILE_VERSION = 1


class StoreError(Exception):
    pass


class MessageValidationError(StoreError):
    pass


class MessageNotFound(StoreError, KeyError):
    pass


def encode_body(body) -> bytes:
    if isinstance(body, str):
        raw = body.encode("utf-8")
    else:
        raw = bytes(body)
        try:
            raw.decode("utf-8")
        except UnicodeDecodeError:
            raise MessageValidationError("message body is not valid UTF-8") from None
    if not raw:
        raise MessageValidationError("message body is empty")
    if len(raw) > MAX_BODY_BYTES:
        raise MessageValidationError(f"message body is {len(raw)} bytes (max {MAX_BODY_BYTES})")
    return raw


def message_id(body) -> bytes:
    return hashlib.sha256(encode_body(body)).digest()


@dataclass
class Message:
    id: bytes
    body: str
    priority: float
    first_seen: float
    # time at which ``priority`` was last set; decay runs from here
    updated: float

    def priority_at(self, now, params):
        return decay_priority(self.priority, max(0.0, now - self.updated), params)


class MessageStore:
    """Holds at most ``capacity`` messages; the lowest priority goes first.

    Priorities decay lazily: each entry keeps the time its priority was set
    and reads apply the half-life from there. Eviction order is decayed
    priority ascending, then oldest ``first_seen``, then id.
    """

    def __init__(self, capacity: int = DEFAULT_CAPACITY, params: TrustParams | None = None,
                 min_priority: float = 0.0):
        if capacity < 1:
            raise StoreError("capacity must be at least 1")
        if not 0.0 <= min_priority <= 1.0:
            raise StoreError("min_priority must be in [0, 1]")
        self.capacity = capacity
        self.params = params or TrustParams()
        # received copies arriving below this are discarded outright
        self.min_priority = min_priority
        self.entries: dict[bytes, Message] = {}
        self._lock = threading.RLock()

    def __len__(self):
        return len(self.entries)

    def __contains__(self, mid):
        return mid in self.entries

    def get(self, mid) -> Message:
        try:
            return self.entries[mid]
        except KeyError:
            raise MessageNotFound(mid.hex()) from None

    def _key(self, m, now):
        return (m.priority_at(now, self.params), m.first_seen, m.id)

    def _evict(self, now):
        excess = len(self.entries) - self.capacity
        if excess <= 0:
            return
        if excess == 1:
            victim = min(self.entries.values(), key=lambda m: self._key(m, now))
            del self.entries[victim.id]
            return
        for m in sorted(self.entries.values(), key=lambda m: self._key(m, now))[:excess]:
            del self.entries[m.id]

    def author(self, body, now) -> "MessageStore":
        raw = encode_body(body)
        mid = hashlib.sha256(raw).digest()
        with self._lock:
            m = self.entries.get(mid)
            if m is not None:
                m.priority = 1.0
                m.updated = now
            else:
                self.entries[mid] = Message(mid, raw.decode("utf-8"), 1.0, now, now)
                self._evict(now)
        return self

    def upvote(self, mid, now) -> "MessageStore":
        with self._lock:
            m = self.get(mid)
            m.priority = 1.0
            m.updated = now
        return self

    def _merge_one(self, body, priority, now) -> bool:
        if not 0.0 <= priority <= 1.0:
            raise MessageValidationError("priority outside [0, 1]")
        raw = encode_body(body)
        if priority < self.min_priority:
            return False
        mid = hashlib.sha256(raw).digest()
        m = self.entries.get(mid)
        if m is None:
            self.entries[mid] = Message(mid, raw.decode("utf-8"), float(priority), now, now)
            return True
        if priority > m.priority_at(now, self.params):
            m.priority = float(priority)
            m.updated = now
        return False

    def merge_received(self, body, priority, now) -> "MessageStore":
        """Keep the higher of the held (decayed) and received priority."""
        with self._lock:
            if self._merge_one(body, priority, now):
                self._evict(now)
        return self

    def merge_many(self, items, now) -> "MessageStore":
        """Merge a batch, then evict once.

        Retains the same priorities as calling ``merge_received`` on each
        item in turn (the ``capacity`` largest under the eviction key). On
        exact priority ties the survivors can differ, because one-at-a-time
        merging may evict a held entry and re-admit it with a new
        ``first_seen``. Validation happens before anything is changed.
        """
        items = [(encode_body(b), float(p)) for b, p in items]
        if any(not 0.0 <= p <= 1.0 for _, p in items):
            raise MessageValidationError("priority outside [0, 1]")
        with self._lock:
            for raw, p in items:
                self._merge_one(raw, p, now)
            self._evict(now)
        return self

    def _sorted(self, now):
        ranked = [(m.priority_at(now, self.params), m) for m in self.entries.values()]
        ranked.sort(key=lambda pm: (-pm[0], pm[1].first_seen, pm[1].id))
        return ranked

    def ordered_view(self, limit=None, now=0.0, threshold=None) -> list[Message]:
        """Feed order. ``threshold`` hides entries whose decayed priority is below it."""
        with self._lock:
            ranked = self._sorted(now)
        if threshold is not None:
            ranked = [pm for pm in ranked if pm[0] >= threshold]
        if limit is not None:
            ranked = ranked[:limit]
        return [m for _, m in ranked]

    def exchange_order(self, now) -> list[tuple[Message, float]]:
        with self._lock:
            return [(m, p) for p, m in self._sorted(now)]

    def snapshot(self) -> bytes:
        """Canonical bytes of the full in-memory state (for equality checks)."""
        with self._lock:
            items = sorted(self.entries.values(), key=lambda m: m.id)
            return b"".join(
                m.id + struct.pack(">ddd", m.priority, m.first_seen, m.updated) + m.body.encode()
                for m in items
            )

    def copy(self) -> "MessageStore":
        other = MessageStore(self.capacity, self.params, self.min_priority)
        with self._lock:
            other.entries = {
                k: Message(m.id, m.body, m.priority, m.first_seen, m.updated)
                for k, m in self.entries.items()
            }
        return other

    # On-disk: magic, version u8, count u32, records, crc32.
    # record = id(32) | body_len u16 | body | priority f64 BE | first_seen u64
    # Priorities are written decayed to ``now``; on load their decay restarts at ``now``.
    def to_bytes(self, now=0.0) -> bytes:
        with self._lock:
            items = sorted(self.entries.values(), key=lambda m: (m.first_seen, m.id))
            parts = [_MAGIC, bytes([_FILE_VERSION]), struct.pack(">I", len(items))]
            for m in items:
                raw = m.body.encode("utf-8")
                parts.append(m.id)
                parts.append(struct.pack(">H", len(raw)))
                parts.append(raw)
                parts.append(struct.pack(">dQ", m.priority_at(now, self.params), int(m.first_seen)))
        body = b"".join(parts)
        return body + struct.pack(">I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data, now=0.0, capacity=DEFAULT_CAPACITY, params=None) -> "MessageStore":
        if len(data) < 13:
            raise StoreError("message file truncated")
        body, (crc,) = data[:-4], struct.unpack(">I", data[-4:])
        if zlib.crc32(body) != crc:
            raise StoreError("message file checksum mismatch")
        if body[:4] != _MAGIC:
            raise StoreError("not a message file (bad magic)")
        if body[4] != _FILE_VERSION:
            raise StoreError(f"unsupported message file version {body[4]}")
        (count,) = struct.unpack(">I", body[5:9])
        store = cls(max(capacity, count), params)
        off = 9
        for _ in range(count):
            if len(body) < off + 34:
                raise StoreError("message record truncated")
            mid = body[off : off + 32]
            (blen,) = struct.unpack(">H", body[off + 32 : off + 34])
            end = off + 34 + blen + 16
            if len(body) < end:
                raise StoreError("message record truncated")
            raw = body[off + 34 : off + 34 + blen]
            prio, first = struct.unpack(">dQ", body[off + 34 + blen : end])
            if hashlib.sha256(raw).digest() != mid:
                raise StoreError("message id does not match body")
            if not 0.0 <= prio <= 1.0:
                raise StoreError("stored priority outside [0, 1]")
            store.entries[mid] = Message(mid, raw.decode("utf-8"), prio, float(first), now)
            off = end
        if off != len(body):
            raise StoreError("trailing bytes in message file")
        return store

    def save(self, path, now=0.0):
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(self.to_bytes(now))
        tmp.replace(path)

    @classmethod
    def load(cls, path, now=0.0, capacity=DEFAULT_CAPACITY, params=None):
        return cls.from_bytes(Path(path).read_bytes(), now, capacity, params)
