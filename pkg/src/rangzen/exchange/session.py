"""The peer-encounter session.

Order on the wire after the handshake:

    initiator PSI_REQ   -> responder PSI_RESP      (initiator learns its count)
    responder PSI_REQ   -> initiator PSI_RESP      (responder learns its count)
    initiator MSGS, responder MSGS
    initiator DONE, responder DONE

Received messages are staged and only merged into the store once the
closing DONE has been seen; any error before that discards the stage.
"""

from __future__ import annotations

import enum
import os
import secrets
import threading
from dataclasses import dataclass, field

import numpy as np

from .. import psi
from ..identity import DEFAULT_PSI_CAP
from ..trust import TrustParams, trust_score, update_priorities
from .channel import PROTOCOL_VERSION, ChannelError, handshake
from .wire import FrameType, WireError, decode_messages_payload, encode_messages_payload


class Phase(enum.IntEnum):
    HELLO = 0
    PSI_A_TO_B = 1
    PSI_B_TO_A = 2
    MSGS_A_TO_B = 3
    MSGS_B_TO_A = 4
    DONE = 5
    ABORTED = 6


class ExchangeAborted(Exception):
    def __init__(self, reason, phase):
        super().__init__(f"exchange aborted in {phase.name}: {reason}")
        self.reason = reason
        self.phase = phase


class BudgetExceeded(Exception):
    pass


class RateLimited(Exception):
    pass


@dataclass(frozen=True)
class EncounterBudget:
    max_exchange_bytes: int = 4 * 1_048_576
    max_messages_per_exchange: int = 500
    min_interval_between_encounters: float = 1.0

    def __post_init__(self):
        if min(self.max_exchange_bytes, self.max_messages_per_exchange) <= 0:
            raise ValueError("budget limits must be positive")
        if self.min_interval_between_encounters <= 0:
            raise ValueError("min_interval_between_encounters must be positive")


class EncounterRateLimiter:
    """Refuses encounters closer together than the budget's minimum interval."""

    def __init__(self, budget: EncounterBudget):
        self.interval = budget.min_interval_between_encounters
        self.last = None
        self._lock = threading.Lock()

    def admit(self, now: float) -> None:
        with self._lock:
            if self.last is not None and now - self.last < self.interval:
                raise RateLimited(f"next encounter allowed at t={self.last + self.interval}")
            self.last = now


@dataclass
class ExchangeOutcome:
    peer_cardinality: int
    messages_committed: int
    trust: float
    submitted: int


@dataclass
class Session:
    channel: object
    role: str
    phase: Phase = Phase.PSI_A_TO_B
    cardinality: int | None = None
    staged: list = field(default_factory=list)

    def advance(self, phase: Phase) -> None:
        if self.phase == Phase.ABORTED or phase <= self.phase:
            raise RuntimeError(f"illegal transition {self.phase.name} -> {phase.name}")
        self.phase = phase

    def abort(self, reason) -> ExchangeAborted:
        failed_in = self.phase
        self.staged = []
        self.phase = Phase.ABORTED
        try:
            self.channel.send_error(str(reason)[:200])
        except Exception:  # noqa: BLE001 - best effort on a broken stream
            pass
        return ExchangeAborted(reason, failed_in)


def establish_channel(stream, role, randbytes=os.urandom, version=PROTOCOL_VERSION) -> Session:
    try:
        ch = handshake(stream, role, randbytes=randbytes, version=version)
    except (ChannelError, WireError, OSError) as exc:
        raise ExchangeAborted(exc, Phase.HELLO) from exc
    return Session(ch, role)


_commit_lock = threading.Lock()


def run_exchange(session: Session, friend_inputs, store, trust_params: TrustParams | None = None,
                 budget: EncounterBudget | None = None, rng=None, now: float = 0.0,
                 psi_rng=None, group=None, commit_lock=None) -> ExchangeOutcome:
    """Run PSI both ways and swap message lists over an established session.

    ``rng`` (numpy Generator) draws the priority noise; ``psi_rng`` the PSI
    shuffles and blinding scalars (system randomness by default).
    """
    params = trust_params or store.params
    budget = budget or EncounterBudget()
    rng = rng if rng is not None else np.random.default_rng()
    psi_rng = psi_rng if psi_rng is not None else secrets.SystemRandom()
    group = group or psi.default_group()
    lock = commit_lock or _commit_lock
    ch = session.channel
    inputs = list(dict.fromkeys(bytes(x) for x in friend_inputs))
    if len(inputs) > DEFAULT_PSI_CAP:
        raise psi.PsiCapError(len(inputs), DEFAULT_PSI_CAP)

    def recv(ftype):
        data = ch.recv(ftype)
        if ch.bytes_received > budget.max_exchange_bytes:
            raise BudgetExceeded(f"exchange exceeded {budget.max_exchange_bytes} bytes")
        return data

    def as_client():
        state, req = psi.psi_initiate(inputs, rng=psi_rng, group=group)
        ch.send(FrameType.PSI_REQ, psi.encode_request(req, group))
        resp = psi.decode_response(recv(FrameType.PSI_RESP), group)
        return psi.psi_finalize(state, resp)

    def as_server():
        req = psi.decode_request(recv(FrameType.PSI_REQ), group)
        resp, _ = psi.psi_respond(inputs, req, rng=psi_rng, group=group)
        ch.send(FrameType.PSI_RESP, psi.encode_response(resp, group))

    def outgoing():
        order = store.exchange_order(now)[: budget.max_messages_per_exchange]
        return encode_messages_payload([(m.body, p) for m, p in order])

    def stage(payload, t):
        received = decode_messages_payload(payload, budget.max_messages_per_exchange)
        if not received:
            return []
        prios = update_priorities([p for _, p in received], t, params, rng)
        return [(body, float(p)) for (body, _), p in zip(received, prios)]

    initiator = session.role == "initiator"
    try:
        if initiator:
            session.cardinality = as_client()
            session.advance(Phase.PSI_B_TO_A)
            as_server()
        else:
            as_server()
            session.advance(Phase.PSI_B_TO_A)
            session.cardinality = as_client()
        t = trust_score(session.cardinality, len(inputs), params)
        session.advance(Phase.MSGS_A_TO_B)
        if initiator:
            ch.send(FrameType.MSGS, outgoing())
            session.advance(Phase.MSGS_B_TO_A)
            session.staged = stage(recv(FrameType.MSGS), t)
            ch.send(FrameType.DONE, b"")
            recv(FrameType.DONE)
        else:
            session.staged = stage(recv(FrameType.MSGS), t)
            session.advance(Phase.MSGS_B_TO_A)
            ch.send(FrameType.MSGS, outgoing())
            recv(FrameType.DONE)
            ch.send(FrameType.DONE, b"")
    except (ChannelError, WireError, psi.PsiError, BudgetExceeded, OSError, ValueError) as exc:
        raise session.abort(exc) from exc
    with lock:
        store.merge_many(session.staged, now)
    committed = len(session.staged)
    session.staged = []
    session.advance(Phase.DONE)
    return ExchangeOutcome(session.cardinality, committed, t, len(inputs))
