import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rangzen import psi
from rangzen.psi import Ed25519Group, ModPGroup, PsiAbort, PsiCapError

import oracles


def items(names):
    return [n.encode() for n in names]


@pytest.mark.parametrize(
    "client,server,expected",
    [
        ("abc", "bcd", 2),
        ("abc", "xyz", 0),
        ("abcde", "abcde", 5),
        ("aab", "a", 1),
        ("", "abc", 0),
        ("abc", "", 0),
    ],
)
def test_cardinality_examples(client, server, expected):
    c, s = items(client), items(server)
    assert oracles.intersection_size(c, s) == expected
    assert psi.psi_cardinality(c, s, rng=random.Random(7)) == expected


def test_empty_request():
    state, req = psi.psi_initiate([], rng=random.Random(1))
    assert req.blinded == []
    resp, _ = psi.psi_respond(items("xyz"), req, rng=random.Random(2))
    assert resp.doubly_blinded == [] and len(resp.server_tags) == 3
    assert psi.psi_finalize(state, resp) == 0


def test_response_length_follows_request():
    state, req = psi.psi_initiate(items("abcde"))
    for server in ("", "a", "abcdefghij"):
        resp, _ = psi.psi_respond(items(server), req)
        assert len(resp.doubly_blinded) == 5


def test_fresh_blinding_per_run():
    inputs = items("abc")
    _, r1 = psi.psi_initiate(inputs)
    _, r2 = psi.psi_initiate(inputs)
    assert set(r1.blinded) != set(r2.blinded)


def test_cap_enforced():
    with pytest.raises(PsiCapError):
        psi.psi_initiate([bytes([i]) for i in range(31)])
    psi.psi_initiate([bytes([i]) for i in range(30)])


def test_identity_element_aborts():
    g = Ed25519Group()
    _, req = psi.psi_initiate(items("ab"), group=g)
    req.blinded[0] = b"\x01" + b"\x00" * 31  # encoding of the neutral element
    with pytest.raises(PsiAbort):
        psi.psi_respond(items("a"), req, group=g)


def test_noncanonical_element_aborts():
    g = Ed25519Group()
    _, req = psi.psi_initiate(items("ab"), group=g)
    req.blinded[1] = b"\xff" * 32
    with pytest.raises(PsiAbort):
        psi.psi_respond(items("a"), req, group=g)


def test_length_mismatch_aborts():
    state, req = psi.psi_initiate(items("abc"))
    resp, _ = psi.psi_respond(items("bcd"), req)
    resp.doubly_blinded.pop()
    with pytest.raises(PsiAbort):
        psi.psi_finalize(state, resp)


def test_state_single_use():
    state, req = psi.psi_initiate(items("abc"))
    resp, _ = psi.psi_respond(items("bcd"), req)
    assert psi.psi_finalize(state, resp) == 2
    assert state.secret is None
    with pytest.raises(PsiAbort):
        psi.psi_finalize(state, resp)


def test_wire_roundtrip_and_sizes():
    g = Ed25519Group()
    state, req = psi.psi_initiate(items("abcd"), group=g)
    data = psi.encode_request(req, g)
    assert len(data) == 4 + 4 * 32
    req2 = psi.decode_request(data, g)
    resp, _ = psi.psi_respond(items("cdef"), req2, group=g)
    rdata = psi.encode_response(resp, g)
    assert len(rdata) == 8 + 4 * 32 + 4 * 32
    assert psi.psi_finalize(state, psi.decode_response(rdata, g)) == 2


@pytest.mark.parametrize("blob", [b"", b"\x00\x00\x00\x02" + b"\x00" * 10, b"\x00\x00\x00\x20" + b"\x00" * 10])
def test_decode_rejects_malformed(blob):
    with pytest.raises(PsiAbort):
        psi.decode_request(blob)


def test_response_hides_plaintext():
    secret_items = [b"friend-digest-%d" % i for i in range(5)]
    _, req = psi.psi_initiate(secret_items)
    resp, _ = psi.psi_respond(secret_items, req)
    wire = psi.encode_request(req) + psi.encode_response(resp)
    g = psi.default_group()
    for x in secret_items:
        assert x not in wire
        assert g.hash_to_group(x) not in wire


def test_modp_group_agrees():
    g = ModPGroup()
    assert psi.psi_cardinality(items("abcdef"), items("defghi"), group=g) == 3


def test_precomputed_matches():
    client = items("abcde")
    pre = psi.Precomputed(client)
    state, req = psi.psi_initiate(client, precomputed=pre)
    resp, _ = psi.psi_respond(items("ace"), req)
    assert psi.psi_finalize(state, resp) == 3


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(0, 60), max_size=30),
    st.lists(st.integers(0, 60), max_size=30),
)
def test_cardinality_property(a, b):
    ca = [b"%d" % x for x in a]
    cb = [b"%d" % x for x in b]
    assert psi.psi_cardinality(ca, cb) == oracles.intersection_size(ca, cb)
