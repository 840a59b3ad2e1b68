"""One-round PSI-Ca by blinded exponentiation.

Client sends ``H1(c_i)^Rc`` (shuffled). Server returns those raised to
``Rs`` (reshuffled) plus tags ``H2(H1(s_j)^Rs)`` (shuffled). Client strips
``Rc`` and counts tag matches. Only the count is learned; the shuffles hide
which elements matched.
"""

from __future__ import annotations

import secrets
import struct
from dataclasses import dataclass, field

from .groups import GroupError, default_group

PSI_CAP = 30
TAG_BYTES = 32


class PsiError(Exception):
    pass


class PsiCapError(PsiError):
    def __init__(self, size, cap=PSI_CAP):
        super().__init__(f"PSI input list of {size} exceeds protocol cap {cap}")
        self.size = size
        self.cap = cap


class PsiAbort(PsiError):
    """Protocol run must be discarded."""


@dataclass
class PsiRequest:
    blinded: list[bytes]


@dataclass
class PsiResponse:
    doubly_blinded: list[bytes]
    server_tags: list[bytes]


@dataclass
class PsiClientState:
    secret: int | None
    count: int
    group: object = field(repr=False, default=None)

    def erase(self):
        self.secret = None


def _dedupe(inputs):
    seen = []
    uniq = set()
    for x in inputs:
        x = bytes(x)
        if x not in uniq:
            uniq.add(x)
            seen.append(x)
    return seen


def _rng(rng):
    return rng if rng is not None else secrets.SystemRandom()


def _randbytes(rng):
    if isinstance(rng, secrets.SystemRandom):
        return secrets.token_bytes
    return rng.randbytes


class Precomputed:
    """Cached ``H1`` of stored entries; the online run then skips hashing."""

    def __init__(self, inputs, group=None):
        self.group = group or default_group()
        self._h = {bytes(x): self.group.hash_to_group(bytes(x)) for x in inputs}

    def h1(self, x):
        h = self._h.get(x)
        return h if h is not None else self.group.hash_to_group(x)


def _h1_all(group, inputs, precomputed):
    if precomputed is not None:
        return [precomputed.h1(x) for x in inputs]
    return [group.hash_to_group(x) for x in inputs]


def psi_initiate(inputs, rng=None, group=None, cap=PSI_CAP, precomputed=None):
    group = group or default_group()
    rng = _rng(rng)
    inputs = _dedupe(inputs)
    if len(inputs) > cap:
        raise PsiCapError(len(inputs), cap)
    secret = group.random_scalar(_randbytes(rng))
    blinded = [group.exp(h, secret) for h in _h1_all(group, inputs, precomputed)]
    rng.shuffle(blinded)
    return PsiClientState(secret=secret, count=len(inputs), group=group), PsiRequest(blinded)


def psi_respond(inputs, request, rng=None, group=None, cap=PSI_CAP, precomputed=None):
    """Answer a request. Returns ``(response, None)``: the responder learns
    nothing from this step; its own count comes from the reverse run."""
    group = group or default_group()
    rng = _rng(rng)
    inputs = _dedupe(inputs)
    if len(inputs) > cap:
        raise PsiCapError(len(inputs), cap)
    if len(request.blinded) > cap:
        raise PsiAbort(f"request of {len(request.blinded)} elements exceeds cap {cap}")
    try:
        for a in request.blinded:
            group.validate(a)
    except GroupError as exc:
        raise PsiAbort(str(exc)) from None
    secret = group.random_scalar(_randbytes(rng))
    doubly = [group.exp(a, secret) for a in request.blinded]
    rng.shuffle(doubly)
    tags = [group.element_hash(group.exp(h, secret)) for h in _h1_all(group, inputs, precomputed)]
    rng.shuffle(tags)
    secret = 0
    return PsiResponse(doubly, tags), None


def psi_finalize(state, response):
    if state.secret is None:
        raise PsiAbort("client state already used")
    group = state.group or default_group()
    try:
        if len(response.doubly_blinded) != state.count:
            raise PsiAbort(
                f"response carries {len(response.doubly_blinded)} elements, expected {state.count}"
            )
        if any(len(t) != TAG_BYTES for t in response.server_tags):
            raise PsiAbort("malformed server tag")
        inv = group.inverse(state.secret)
        tags = set(response.server_tags)
        count = 0
        for e in response.doubly_blinded:
            try:
                group.validate(e)
            except GroupError as exc:
                raise PsiAbort(str(exc)) from None
            if group.element_hash(group.exp(e, inv)) in tags:
                count += 1
        return count
    finally:
        state.erase()


def psi_cardinality(client_inputs, server_inputs, rng=None, group=None):
    """Run both halves locally; convenience for tests and simulation checks."""
    state, req = psi_initiate(client_inputs, rng=rng, group=group)
    resp, _ = psi_respond(server_inputs, req, rng=rng, group=group)
    return psi_finalize(state, resp)


# Wire encodings: u32 count then fixed-width items.

def _encode_list(items, width):
    for it in items:
        if len(it) != width:
            raise PsiError("item has wrong width")
    return struct.pack(">I", len(items)) + b"".join(items)


def _decode_list(data, offset, width, cap):
    if len(data) < offset + 4:
        raise PsiAbort("truncated list header")
    (n,) = struct.unpack_from(">I", data, offset)
    if n > cap:
        raise PsiAbort(f"list of {n} items exceeds cap {cap}")
    end = offset + 4 + n * width
    if len(data) < end:
        raise PsiAbort("truncated list body")
    items = [bytes(data[offset + 4 + i * width : offset + 4 + (i + 1) * width]) for i in range(n)]
    return items, end


def encode_request(req, group=None):
    group = group or default_group()
    return _encode_list(req.blinded, group.element_bytes)


def decode_request(data, group=None, cap=PSI_CAP):
    group = group or default_group()
    items, end = _decode_list(data, 0, group.element_bytes, cap)
    if end != len(data):
        raise PsiAbort("trailing bytes after PSI request")
    try:
        for a in items:
            group.validate(a)
    except GroupError as exc:
        raise PsiAbort(str(exc)) from None
    return PsiRequest(items)


def encode_response(resp, group=None):
    group = group or default_group()
    return _encode_list(resp.doubly_blinded, group.element_bytes) + _encode_list(
        resp.server_tags, TAG_BYTES
    )


def decode_response(data, group=None, cap=PSI_CAP):
    group = group or default_group()
    doubly, off = _decode_list(data, 0, group.element_bytes, cap)
    tags, end = _decode_list(data, off, TAG_BYTES, cap)
    if end != len(data):
        raise PsiAbort("trailing bytes after PSI response")
    return PsiResponse(doubly, tags)
