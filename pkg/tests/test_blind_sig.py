import math

import pytest

from blindlab.core_math import SeededRng, gen_schnorr_group
from blindlab.classic_sig import (
    RsaKeyPair,
    SchnorrSignature,
    rsa_hash,
    rsa_keygen,
    rsa_sign,
    rsa_verify,
    schnorr_keygen,
    schnorr_sign,
    schnorr_verify,
)
from blindlab.blind_sig import (
    AttributeKeyRing,
    NaiveRsaOracle,
    ProtocolStateError,
    RsaBlindSigner,
    RsaBlindUserSession,
    SchnorrBlindSigner,
    SchnorrBlindUserSession,
    UnknownAttributeError,
    blindness_witness_rsa,
    blindness_witness_schnorr,
    partial_blind_issue,
    partial_blind_verify,
    rsa_fdh_blind_run,
    rsa_naive_blind_demo,
    rsa_naive_decrypt_attack,
    rsa_naive_multiplicative_forgery,
    rsa_naive_verify,
    schnorr_blind_run,
    transcripts_from_text,
    transcripts_to_text,
    view_of,
)
from blindlab.core_math import NotInvertibleError

TOY = RsaKeyPair.from_primes(3, 11, 3)
GRP = gen_schnorr_group(32, 128, SeededRng(21))


def test_naive_chain_toy_values():
    assert rsa_naive_blind_demo(5, 2, TOY) == (7, 28, 14)
    m_blind, s_blind, s = rsa_naive_blind_demo(5, 1, TOY)
    assert m_blind == 5 and s_blind == s
    with pytest.raises(NotInvertibleError):
        rsa_naive_blind_demo(5, 3, TOY)


def test_naive_chain_equals_raw_signing():
    key = rsa_keygen(32, 65537, SeededRng(1))
    rng = SeededRng(2)
    for _ in range(100):
        m, r = rng.randrange(key.n), rng.unit(key.n)
        assert rsa_naive_blind_demo(m, r, key)[2] == pow(m, key.d, key.n)


def test_decrypt_attack():
    oracle = NaiveRsaOracle(TOY)
    assert rsa_naive_decrypt_attack(26, TOY.public, oracle, SeededRng(1)) == 5
    assert rsa_naive_decrypt_attack(1, TOY.public, oracle, SeededRng(1)) == 1
    key = rsa_keygen(32, 65537, SeededRng(3))
    oracle = NaiveRsaOracle(key)
    rng = SeededRng(4)
    for _ in range(50):
        m = rng.randrange(key.n)
        c = pow(m, key.e, key.n)
        assert rsa_naive_decrypt_attack(c, key.public, oracle, rng) == m
        assert oracle.queries[-1] != c


def test_multiplicative_forgery_toy():
    oracle = NaiveRsaOracle(TOY)
    s = rsa_naive_multiplicative_forgery(5, TOY.public, oracle, m1=2)
    assert s == 14 and oracle.queries == [2, 19]
    assert rsa_naive_verify(5, s, TOY.public) and 5 not in oracle.queries
    assert rsa_naive_multiplicative_forgery(1, TOY.public, NaiveRsaOracle(TOY), m1=1) == 1
    with pytest.raises(NotInvertibleError):
        rsa_naive_multiplicative_forgery(3, TOY.public, oracle)


def test_fdh_blind_equals_plain_signing():
    key = rsa_keygen(64, 65537, SeededRng(5))
    signer = RsaBlindSigner(key)
    for i in range(100):
        m = b"fdh-%d" % i
        out = rsa_fdh_blind_run(m, rng=SeededRng(i), signer=signer)
        assert out.signature == rsa_sign(m, key)
        assert rsa_verify(m, out.signature, key.public)
    assert signer.ledger.completed == 100


def test_blinded_value_is_bijection_over_units():
    units = [r for r in range(1, 33) if math.gcd(r, 33) == 1]
    h = 5
    images = sorted(h * pow(r, 3, 33) % 33 for r in units)
    assert images == units


def test_signer_view_contains_only_blinded_values():
    key = rsa_keygen(64, 65537, SeededRng(6))
    signer = RsaBlindSigner(key)
    rsa_fdh_blind_run(b"secret", rng=SeededRng(1), signer=signer)
    tr = signer.ledger.transcripts[-1]
    assert [(m.direction, m.step) for m in tr.messages] == [("U->S", "blinded"), ("S->U", "signed")]
    h = rsa_hash(b"secret", key.n)
    assert tr.payload("blinded") != h and tr.payload("signed") != rsa_sign(b"secret", key)


def test_rsa_blindness_cross_pairings():
    key = rsa_keygen(64, 65537, SeededRng(7))
    signer = RsaBlindSigner(key)
    outs = [rsa_fdh_blind_run(b"u%d" % i, rng=SeededRng(100 + i), signer=signer) for i in range(20)]
    views = [(t.payload("blinded"), t.payload("signed")) for t in signer.ledger.transcripts]
    for v in views:
        for o in outs:
            assert blindness_witness_rsa(v, (o.message, o.signature), key.public)


def test_schnorr_zero_blinding_matches_plain_signing():
    key = schnorr_keygen(GRP, SeededRng(1))
    signer = SchnorrBlindSigner(key, SeededRng(2))
    out = schnorr_blind_run(b"m", signer=signer, rng=SeededRng(3), alpha=0, beta=0)
    R, c, s = view_of(signer.ledger.transcripts[-1])
    assert out.signature == SchnorrSignature(R, s)
    nonce = next(r for r in range(1, GRP.q) if pow(GRP.g, r, GRP.p) == R) if GRP.q < 10**6 else None
    if nonce is not None:
        assert schnorr_sign(b"m", key, SeededRng(0), nonce=nonce) == out.signature


def test_schnorr_blind_correctness_chain():
    key = schnorr_keygen(GRP, SeededRng(4))
    signer = SchnorrBlindSigner(key, SeededRng(5))
    rng = SeededRng(6)
    p, q, g, X = GRP.p, GRP.q, GRP.g, key.X
    for i in range(1000):
        alpha, beta = rng.randrange(q), rng.randrange(q)
        out = schnorr_blind_run(b"c%d" % i, signer=signer, rng=rng, alpha=alpha, beta=beta)
        R, c, s = view_of(signer.ledger.transcripts[-1])
        sig = out.signature
        assert sig.s == (s + alpha) % q
        assert sig.R == R * pow(g, alpha, p) * pow(X, beta, p) % p
        assert schnorr_verify(out.message, sig, key.public)
    assert signer.responses == 1000


def test_schnorr_perfect_blindness():
    key = schnorr_keygen(GRP, SeededRng(7))
    signer = SchnorrBlindSigner(key, SeededRng(8))
    outs = [schnorr_blind_run(b"b%d" % i, signer=signer, rng=SeededRng(50 + i)) for i in range(10)]
    views = [view_of(t) for t in signer.ledger.transcripts]
    for v in views:
        for o in outs:
            assert blindness_witness_schnorr(v, (o.message, o.signature), key.public)
    bad = SchnorrSignature(outs[0].signature.R, (outs[0].signature.s + 1) % GRP.q)
    assert not schnorr_verify(outs[0].message, bad, key.public)
    assert not blindness_witness_schnorr(views[0], (outs[0].message, bad), key.public)


def test_protocol_steps_out_of_order():
    key = schnorr_keygen(GRP, SeededRng(1))
    signer = SchnorrBlindSigner(key, SeededRng(2))
    session = signer.open_session()
    with pytest.raises(ProtocolStateError):
        session.respond(3)
    user = SchnorrBlindUserSession(key.public, b"m", SeededRng(3))
    with pytest.raises(ProtocolStateError):
        user.finish(1)
    rsa_user = RsaBlindUserSession(TOY.public, b"m", SeededRng(1))
    with pytest.raises(ProtocolStateError):
        rsa_user.unblind(1)
    rsa_user.blind()
    with pytest.raises(ProtocolStateError):
        rsa_user.blind()


def test_transcript_text_round_trip():
    key = schnorr_keygen(GRP, SeededRng(1))
    signer = SchnorrBlindSigner(key, SeededRng(2))
    for i in range(3):
        schnorr_blind_run(b"t%d" % i, signer=signer, rng=SeededRng(i))
    text = transcripts_to_text(signer.ledger.transcripts)
    back = transcripts_from_text(text)
    assert [view_of(t) for t in back] == [view_of(t) for t in signer.ledger.transcripts]


def test_partial_blindness_key_separation():
    ring = AttributeKeyRing(bits_per_prime=48, rng=SeededRng(3))
    ring.register("denom:1")
    ring.register("denom:5")
    out = partial_blind_issue(b"coin", "denom:1", ring, SeededRng(4))
    pub = ring.published()
    assert partial_blind_verify(b"coin", out.signature, "denom:1", pub)
    assert not partial_blind_verify(b"coin", out.signature, "denom:5", pub)
    assert not partial_blind_verify(b"coin", out.signature, "denom:9", pub)
    with pytest.raises(UnknownAttributeError):
        partial_blind_issue(b"coin", "denom:9", ring, SeededRng(4))


def test_partial_blindness_unlinkable_within_attribute():
    ring = AttributeKeyRing(bits_per_prime=48, rng=SeededRng(5))
    public = ring.register("denom:1")
    outs = [partial_blind_issue(b"user%d" % i, "denom:1", ring, SeededRng(i)) for i in range(2)]
    signer = ring.signer_for("denom:1")
    views = [(t.payload("blinded"), t.payload("signed")) for t in signer.ledger.transcripts]
    for v in views:
        for o in outs:
            assert blindness_witness_rsa(v, (o.message, o.signature), public)


def test_one_signature_per_completed_session():
    key = schnorr_keygen(GRP, SeededRng(1))
    signer = SchnorrBlindSigner(key, SeededRng(2))
    sigs = [schnorr_blind_run(b"x%d" % i, signer=signer, rng=SeededRng(i)) for i in range(5)]
    assert signer.ledger.completed == len(sigs) == len(signer.ledger.transcripts)
    signer.open_session().commit()
    assert signer.ledger.completed == 5
