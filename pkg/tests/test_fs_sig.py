import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blindlab.core_math import SeededRng
from blindlab.fs_sig import (
    FsParams,
    FsSignature,
    ParametersInfeasible,
    dump_fs_key,
    dump_fs_sig,
    fs_keygen,
    fs_sign,
    fs_sign_detailed,
    fs_verify,
    high,
    highlow,
    load_fs_key,
    load_fs_sig,
)
from blindlab.textfmt import FormatError

from oracles import high_low

P = FsParams()
KEY = fs_keygen(P, SeededRng(1))


def test_highlow_examples():
    hi, lo = highlow([13], 257, 2)
    assert (int(hi[0]), int(lo[0])) == (3, 1)
    hi, lo = highlow([0, 8, 16, 248], 257, 3)
    assert not lo.any()


def test_highlow_exhaustive_q257():
    v = np.arange(257)
    hi, lo = highlow(v, 257, 3)
    assert np.array_equal(hi * 8 + lo, v)
    for r in range(257):
        assert (int(hi[r]), int(lo[r])) == high_low(r, 3)


@given(st.lists(st.integers(-(2**40), 2**40), min_size=1, max_size=20))
def test_highlow_reconstructs_mod_q(v):
    hi, lo = highlow(v, P.q, P.D)
    assert np.array_equal((hi * 2**P.D + lo) % P.q, np.array(v) % P.q)
    assert (lo > -(2 ** (P.D - 1))).all() and (lo <= 2 ** (P.D - 1)).all()


def test_params_validation():
    with pytest.raises(ValueError):
        FsParams(gamma=4, weight=4, eta=2)
    with pytest.raises(ValueError):
        FsParams(q=1000)
    with pytest.raises(ValueError):
        FsParams(weight=20, k=16)
    assert FsParams.from_ints(P.as_ints()) == P


def test_keygen_rejects_high_failure_parameters():
    with pytest.raises(ParametersInfeasible):
        fs_keygen(FsParams(D=8), SeededRng(1))


def test_keygen_norms_and_consistency():
    for seed in range(100):
        key = fs_keygen(P, SeededRng(seed))
        assert key.is_consistent()
        assert np.abs(key.s1).max() <= P.eta and np.abs(key.s2).max() <= P.eta
        assert np.array_equal((key.A @ key.s1 + key.s2) % P.q, key.t)


def test_keygen_deterministic():
    a, b = fs_keygen(P, SeededRng(5)), fs_keygen(P, SeededRng(5))
    assert np.array_equal(a.A, b.A) and np.array_equal(a.s1, b.s1) and np.array_equal(a.t, b.t)


def test_challenge_shape():
    for i in range(100):
        sig, _ = fs_sign(b"c%d" % i, KEY, SeededRng(i))
        c = np.array(sig.c)
        assert len(c) == P.k and np.count_nonzero(c) == P.weight and set(np.abs(c)) <= {0, 1}


def test_round_trip_and_rejection_contract():
    rng = SeededRng(2)
    for i in range(200):
        m = b"msg%d" % i
        res = fs_sign_detailed(m, KEY, rng)
        z = np.array(res.signature.z)
        assert np.abs(z).max() <= P.z_bound
        assert fs_verify(m, res.signature, KEY.public)
        assert res.stats.attempts >= 1


def test_verification_identity_exact():
    rng = SeededRng(3)
    for i in range(100):
        res = fs_sign_detailed(b"id%d" % i, KEY, rng)
        z = np.array(res.signature.z)
        c = np.array(res.signature.c)
        lhs = (KEY.A @ z - KEY.t @ c) % P.q
        rhs = (KEY.A @ res.y - KEY.s2 @ c) % P.q
        assert np.array_equal(lhs, rhs)
        assert np.array_equal(res.w, KEY.A @ res.y % P.q)


def test_degenerate_key_gives_z_equal_y():
    key = fs_keygen(P, SeededRng(4), zero_secret=True)
    rng = SeededRng(5)
    for i in range(100):
        res = fs_sign_detailed(b"z%d" % i, key, rng)
        assert np.array_equal(np.array(res.signature.z), res.y)
        assert res.stats.low_rejections == 0 and res.stats.high_disagreements == 0
        assert fs_verify(b"z%d" % i, res.signature, key.public)


def test_z_just_over_bound_rejected():
    sig, _ = fs_sign(b"m", KEY, SeededRng(6))
    z = list(sig.z)
    z[0] = P.z_bound + 1
    assert not fs_verify(b"m", FsSignature(tuple(z), sig.c), KEY.public)
    z[0] = -(P.z_bound + 1)
    assert not fs_verify(b"m", FsSignature(tuple(z), sig.c), KEY.public)


def test_mutation_suite():
    rng = SeededRng(7)
    for i in range(100):
        m = b"mut%d" % i
        sig, _ = fs_sign(m, KEY, rng)
        j = rng.randrange(P.n)
        z = list(sig.z)
        z[j] += 1 if z[j] < P.z_bound else -1
        assert not fs_verify(m, FsSignature(tuple(z), sig.c), KEY.public)
        c = list(sig.c)
        nz = [x for x in range(P.k) if c[x]]
        c[nz[0]] = -c[nz[0]]
        assert not fs_verify(m, FsSignature(sig.z, tuple(c)), KEY.public)
        assert not fs_verify(m + b"!", sig, KEY.public)
        assert not fs_verify(m, sig, fs_keygen(P, SeededRng(1000 + i)).public)


def test_malformed_challenge_rejected():
    sig, _ = fs_sign(b"m", KEY, SeededRng(8))
    assert not fs_verify(b"m", FsSignature(sig.z, (0,) * P.k), KEY.public)
    assert not fs_verify(b"m", FsSignature(sig.z, sig.c[:-1]), KEY.public)
    assert not fs_verify(b"m", FsSignature(sig.z, tuple(2 * x for x in sig.c)), KEY.public)


def test_verify_uses_public_data_only_and_is_pure():
    sig, _ = fs_sign(b"p", KEY, SeededRng(9))
    pub = load_fs_key(dump_fs_key(KEY))
    assert not hasattr(pub, "s1")
    assert [fs_verify(b"p", sig, pub) for _ in range(3)] == [True] * 3


def test_high_failure_rate_reported():
    rng = SeededRng(10)
    total = None
    for i in range(300):
        res = fs_sign_detailed(b"h%d" % i, KEY, rng)
        if total is None:
            total = res.stats
        else:
            total.merge(res.stats)
    assert total.z_passes >= 300
    assert total.high_failure_rate() < 0.01
    assert 0 < 300 / total.attempts <= 1


def test_file_round_trips():
    assert load_fs_key(dump_fs_key(KEY, include_secret=True)).is_consistent()
    back = load_fs_key(dump_fs_key(KEY, include_secret=True))
    assert np.array_equal(back.s1, KEY.s1) and np.array_equal(back.s2, KEY.s2)
    sig, _ = fs_sign(b"f", KEY, SeededRng(11))
    assert load_fs_sig(dump_fs_sig(sig)) == sig
    with pytest.raises(FormatError):
        load_fs_sig("fs-sig v1\n1 2 3\n")
    with pytest.raises(FormatError):
        load_fs_key("fs-key v1\n" + " ".join(map(str, P.as_ints())) + "\n1 2\n")


def test_high_is_first_component():
    v = np.arange(0, P.q, 99991)
    assert np.array_equal(high(v, P.q, P.D), highlow(v, P.q, P.D)[0])
