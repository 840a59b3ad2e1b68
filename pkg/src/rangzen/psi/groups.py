"""Prime-order groups for the PSI-Ca protocol.

The protocol only needs: hash bytes into the group, raise elements to secret
scalars, invert scalars, hash an element to 32 bytes, and encode/decode
elements canonically. Anything that provides those methods can be swapped in.
"""

from __future__ import annotations

import hashlib
import secrets

try:
    from nacl import bindings as _sodium
except ImportError:  # pragma: no cover - exercised only without PyNaCl
    _sodium = None


class GroupError(Exception):
    """Invalid, non-canonical or identity group element."""


class Ed25519Group:
    """The prime-order subgroup of edwards25519, via libsodium.

    Order l = 2^252 + 27742317777372353535851937790883648493. Hash-to-group is
    Elligator 2 with cofactor clearing (``crypto_core_ed25519_from_uniform``),
    which is constant time and lands in the prime-order subgroup. Decoding
    goes through ``is_valid_point``, which rejects non-canonical encodings,
    small-order points (including the identity) and points outside the
    subgroup.
    """

    name = "ed25519-prime-subgroup"
    order = 2**252 + 27742317777372353535851937790883648493
    element_bytes = 32

    def __init__(self):
        if _sodium is None:
            raise RuntimeError("PyNaCl is required for Ed25519Group")

    def hash_to_group(self, data: bytes) -> bytes:
        uniform = hashlib.sha512(b"rangzen-psi-h1" + data).digest()[:32]
        return _sodium.crypto_core_ed25519_from_uniform(uniform)

    def element_hash(self, element: bytes) -> bytes:
        return hashlib.sha256(b"rangzen-psi-h2" + element).digest()

    def random_scalar(self, randbytes=secrets.token_bytes) -> int:
        while True:
            wide = randbytes(64)
            s = int.from_bytes(_sodium.crypto_core_ed25519_scalar_reduce(wide), "little")
            if s != 0:
                return s

    def exp(self, element: bytes, scalar: int) -> bytes:
        n = (scalar % self.order).to_bytes(32, "little")
        return _sodium.crypto_scalarmult_ed25519_noclamp(n, element)

    def inverse(self, scalar: int) -> int:
        return pow(scalar, -1, self.order)

    def validate(self, element: bytes) -> bytes:
        if len(element) != self.element_bytes:
            raise GroupError("group element has wrong length")
        if not _sodium.crypto_core_ed25519_is_valid_point(element):
            raise GroupError("invalid, non-canonical or small-order group element")
        return element


# RFC 3526 group 14: p = 2q + 1 is a safe prime. We work in the subgroup of
# quadratic residues, which has prime order q.
_MODP_2048 = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)


class ModPGroup:
    """Quadratic residues mod the 2048-bit RFC 3526 safe prime.

    Pure Python and slower; kept as a drop-in alternative group. Hash-to-group
    squares an expanded hash, which is not constant time.
    """

    name = "modp2048-qr"
    p = _MODP_2048
    order = (_MODP_2048 - 1) // 2
    element_bytes = 256

    def hash_to_group(self, data: bytes) -> bytes:
        wide = b"".join(
            hashlib.sha512(b"rangzen-psi-h1" + bytes([i]) + data).digest() for i in range(5)
        )
        h = int.from_bytes(wide, "big") % self.p
        if h in (0, 1, self.p - 1):
            h = 2
        return pow(h, 2, self.p).to_bytes(self.element_bytes, "big")

    def element_hash(self, element: bytes) -> bytes:
        return hashlib.sha256(b"rangzen-psi-h2" + element).digest()

    def random_scalar(self, randbytes=secrets.token_bytes) -> int:
        while True:
            s = int.from_bytes(randbytes(self.element_bytes + 8), "big") % self.order
            if s != 0:
                return s

    def exp(self, element: bytes, scalar: int) -> bytes:
        x = int.from_bytes(element, "big")
        return pow(x, scalar % self.order, self.p).to_bytes(self.element_bytes, "big")

    def inverse(self, scalar: int) -> int:
        return pow(scalar, -1, self.order)

    def validate(self, element: bytes) -> bytes:
        if len(element) != self.element_bytes:
            raise GroupError("group element has wrong length")
        x = int.from_bytes(element, "big")
        if not 1 < x < self.p:
            raise GroupError("group element out of range or identity")
        if pow(x, self.order, self.p) != 1:
            raise GroupError("element is not in the prime-order subgroup")
        return element


_default = None


def default_group():
    global _default
    if _default is None:
        _default = Ed25519Group() if _sodium is not None else ModPGroup()
    return _default
