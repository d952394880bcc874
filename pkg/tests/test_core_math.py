import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from blindlab.core_math import (
    HashSpec,
    NotInvertibleError,
    SchnorrGroup,
    SeededRng,
    centered,
    encode,
    gen_prime,
    gen_schnorr_group,
    hash_to_range,
    is_probable_prime,
    mod_exp,
    mod_inv,
    solve_linear_mod,
)

from oracles import is_prime


@pytest.mark.parametrize("args, expected", [((5, 7, 33), 14), ((4, 11, 23), 1), ((10, 0, 7), 1)])
def test_mod_exp_examples(args, expected):
    assert mod_exp(*args) == expected


@pytest.mark.parametrize("a, m, expected", [(7, 20, 3), (1, 9, 1), (2, 33, 17)])
def test_mod_inv_examples(a, m, expected):
    assert mod_inv(a, m) == expected


def test_mod_inv_rejects_non_units():
    with pytest.raises(NotInvertibleError):
        mod_inv(6, 33)


@given(st.integers(2, 10**12), st.integers(-(10**12), 10**12))
def test_inverse_property(m, a):
    from math import gcd

    if gcd(a, m) != 1:
        return
    assert mod_exp(a * mod_inv(a, m) % m, 1, m) == 1 % m


def test_gen_prime_small_and_pinned():
    assert gen_prime(2, SeededRng(5)) in (2, 3)
    # value frozen from the first run; any change to the sampler shows up here
    assert gen_prime(16, SeededRng(1)) == 49871
    assert gen_prime(16, SeededRng(1)) == gen_prime(16, SeededRng(1))


def test_gen_prime_512_bits():
    p = gen_prime(512, SeededRng(9))
    assert p.bit_length() == 512 and is_prime(p)


@settings(max_examples=300)
@given(st.integers(0, 10**6))
def test_miller_rabin_matches_sympy(n):
    assert is_probable_prime(n) == is_prime(n)


def test_carmichael_numbers_rejected():
    for n in (561, 1105, 1729, 2465, 2821, 6601, 8911, 3215031751):
        assert not is_probable_prime(n)


def test_group_validate_examples():
    assert SchnorrGroup(23, 11, 4).validate()
    assert not SchnorrGroup(23, 11, 1).validate()
    assert not SchnorrGroup(23, 11, 5).validate()  # 5 has order 22


def test_gen_schnorr_group_contract_and_determinism():
    grp = gen_schnorr_group(160, 1024, SeededRng(2))
    assert grp.validate()
    assert grp.q.bit_length() == 160 and grp.p.bit_length() == 1024
    assert is_prime(grp.p) and is_prime(grp.q)
    assert gen_schnorr_group(32, 128, SeededRng(4)) == gen_schnorr_group(32, 128, SeededRng(4))


@given(st.integers(1, 10**6))
def test_powers_of_g_stay_in_subgroup(x):
    grp = gen_schnorr_group(32, 96, SeededRng(11))
    h = grp.exp(x % (grp.q - 1) + 1)
    assert grp.contains(h) and pow(h, grp.q, grp.p) == 1


def test_group_text_round_trip():
    grp = gen_schnorr_group(32, 96, SeededRng(1))
    assert SchnorrGroup.from_text(grp.to_text()) == grp


def test_hash_to_range_determinism_and_range():
    for q in (2, 97, 2**61 - 1, 10**40 + 3):
        for i in range(50):
            v = hash_to_range(b"x%d" % i, q)
            assert 0 <= v < q
            assert v == hash_to_range(b"x%d" % i, q)


def test_hash_to_range_chi_square_uniform():
    q = 97
    counts = [0] * q
    for i in range(10_000):
        counts[hash_to_range(i.to_bytes(4, "big"), q)] += 1
    stat, _ = stats.chisquare(counts)
    assert stat < stats.chi2.ppf(0.999, q - 1)


def test_hash_spec_variants():
    assert HashSpec(64, "sha256").digest(b"a") < 2**64
    with pytest.raises(ValueError):
        HashSpec(512, "sha256")
    assert len(HashSpec(algorithm="sha256").stream(b"a", 100)) == 100


def test_encode_is_injective_on_boundaries():
    assert encode(b"ab", b"c") != encode(b"a", b"bc")
    assert encode(1, -1) != encode(-1, 1)
    assert encode("a") != encode(b"a")


def test_rng_spawn_is_deterministic_and_label_separated():
    a, b = SeededRng(3), SeededRng(3)
    assert a.spawn("x").random() == b.spawn("x").random()
    assert SeededRng(3).spawn("x").random() != SeededRng(3).spawn("y").random()
    u = SeededRng(1).unit(33)
    assert 1 <= u < 33 and u % 3 and u % 11


def test_centered_and_linear_solver():
    assert centered(10, 11) == -1 and centered(5, 11) == 5 and centered(2, 4) == 2
    x = solve_linear_mod([[1, 2], [3, 4]], [5, 6], 7)
    assert [(1 * x[0] + 2 * x[1]) % 7, (3 * x[0] + 4 * x[1]) % 7] == [5, 6]
    assert solve_linear_mod([[1, 2], [2, 4]], [1, 2], 7) is None
