"""Encrypted peer-to-peer exchange sessions."""

from .channel import PROTOCOL_VERSION, ChannelError, HandshakeError, IntegrityError, PeerAborted
from .session import (
    BudgetExceeded,
    EncounterBudget,
    EncounterRateLimiter,
    ExchangeAborted,
    ExchangeOutcome,
    Phase,
    RateLimited,
    Session,
    establish_channel,
    run_exchange,
)
from .wire import (
    FaultyStream,
    FrameType,
    MemoryStream,
    StreamClosed,
    WireError,
    decode_messages_payload,
    encode_messages_payload,
    loopback_pair,
    memory_duplex,
)

__all__ = [
    "PROTOCOL_VERSION",
    "ChannelError",
    "HandshakeError",
    "IntegrityError",
    "PeerAborted",
    "BudgetExceeded",
    "EncounterBudget",
    "EncounterRateLimiter",
    "ExchangeAborted",
    "ExchangeOutcome",
    "Phase",
    "RateLimited",
    "Session",
    "establish_channel",
    "run_exchange",
    "FaultyStream",
    "FrameType",
    "MemoryStream",
    "StreamClosed",
    "WireError",
    "decode_messages_payload",
    "encode_messages_payload",
    "loopback_pair",
    "memory_duplex",
]
