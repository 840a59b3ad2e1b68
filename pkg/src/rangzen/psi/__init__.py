"""Private set intersection cardinality."""

from .groups import Ed25519Group, GroupError, ModPGroup, default_group
from .protocol import (
    PSI_CAP,
    Precomputed,
    PsiAbort,
    PsiCapError,
    PsiClientState,
    PsiError,
    PsiRequest,
    PsiResponse,
    decode_request,
    decode_response,
    encode_request,
    encode_response,
    psi_cardinality,
    psi_finalize,
    psi_initiate,
    psi_respond,
)

__all__ = [
    "Ed25519Group",
    "GroupError",
    "ModPGroup",
    "default_group",
    "PSI_CAP",
    "Precomputed",
    "PsiAbort",
    "PsiCapError",
    "PsiClientState",
    "PsiError",
    "PsiRequest",
    "PsiResponse",
    "decode_request",
    "decode_response",
    "encode_request",
    "encode_response",
    "psi_cardinality",
    "psi_finalize",
    "psi_initiate",
    "psi_respond",
]
