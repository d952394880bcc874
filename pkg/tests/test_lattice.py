import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blindlab.core_math import SeededRng
from blindlab.lattice import (
    BudgetError,
    RankError,
    SisInstance,
    cvp_bruteforce,
    dump_basis,
    gadget_inverse,
    gadget_matrix,
    gadget_vector,
    bit_decompose,
    gauss_reduce_2d,
    gen_gadget_trapdoor,
    gram_schmidt,
    hadamard_ratio,
    hadamard_ratio_exact,
    int_det,
    is_lll_reduced,
    is_unimodular_transform,
    lll_reduce,
    load_basis,
    lwe_bruteforce,
    lwe_check,
    lwe_gen,
    lwe_solve_exact,
    lwe_uniform_samples,
    matmul,
    sis_bruteforce,
    sis_check,
    sis_gen,
    svp_bruteforce,
    trapdoor_check_type1,
    trapdoor_check_type2,
)

from oracles import det, gram_schmidt_sympy, hadamard_ratio_float, lll_bound_holds, rank, shortest_vector_sq


def random_basis(rng, n, lo, hi):
    while True:
        b = [[rng.randint(lo, hi) for _ in range(n)] for _ in range(n)]
        if det(b) != 0:
            return b


square_bases = st.integers(2, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-20, 20), min_size=n, max_size=n), min_size=n, max_size=n)
).filter(lambda b: det(b) != 0)


def test_gram_schmidt_hand_case():
    gs = gram_schmidt([[1, 1], [2, 0]])
    assert gs.mu[1][0] == 1
    assert gs.bstar[1] == [1, -1]
    assert sum(a * b for a, b in zip([1, 1], gs.bstar[1])) == 0


def test_gram_schmidt_orthogonal_input_unchanged():
    basis = [[2, 0, 0], [0, 3, 0], [0, 0, 5]]
    gs = gram_schmidt(basis)
    assert gs.bstar == basis
    assert all(gs.mu[k][i] == 0 for k in range(3) for i in range(k))


@settings(max_examples=80, deadline=None)
@given(square_bases)
def test_gram_schmidt_exact_identities(basis):
    gs = gram_schmidt(basis)
    n = len(basis)
    for i in range(n):
        for j in range(i):
            assert sum(a * b for a, b in zip(gs.bstar[i], gs.bstar[j])) == 0
    for k in range(n):
        rebuilt = [gs.bstar[k][c] + sum(gs.mu[k][i] * gs.bstar[i][c] for i in range(k)) for c in range(n)]
        assert rebuilt == basis[k]
    assert gs.bstar == gram_schmidt_sympy(basis)


def test_gram_schmidt_dependent_rows():
    with pytest.raises(RankError):
        gram_schmidt([[1, 2], [2, 4]])


def test_hadamard_examples():
    assert hadamard_ratio([[1, 0], [0, 1]]) == 1
    assert hadamard_ratio([[1, 0], [1, 1]]) == pytest.approx((1 / math.sqrt(2)) ** 0.5, abs=1e-12)
    assert hadamard_ratio_exact([[1, 0], [1, 1]]) == Fraction(1, 2)
    with pytest.raises(RankError):
        hadamard_ratio([[1, 2], [2, 4]])
    with pytest.raises(ValueError):
        hadamard_ratio([[1, 0, 0], [0, 1, 0]])


@settings(max_examples=100, deadline=None)
@given(square_bases)
def test_hadamard_ratio_bounded_and_matches_oracle(basis):
    h = hadamard_ratio(basis)
    assert 0 < h <= 1
    assert h == pytest.approx(hadamard_ratio_float(basis), rel=1e-9)
    assert (hadamard_ratio_exact(basis) == 1) == all(
        sum(a * b for a, b in zip(basis[i], basis[j])) == 0 for i in range(len(basis)) for j in range(i)
    )


def test_gauss_hand_case_and_fixed_point():
    res = gauss_reduce_2d([[1, 0], [4, 1]])
    assert res.basis == [[1, 0], [0, 1]]
    assert is_unimodular_transform(res.transform, [[1, 0], [4, 1]], res.basis)
    assert gauss_reduce_2d([[1, 0], [0, 1]]).basis == [[1, 0], [0, 1]]


def test_gauss_matches_svp_oracle():
    rng = random.Random(2024)
    for _ in range(100):
        b = random_basis(rng, 2, -50, 50)
        res = gauss_reduce_2d(b)
        b1, b2 = res.basis
        n1, n2 = sum(x * x for x in b1), sum(x * x for x in b2)
        assert n1 <= n2
        assert 2 * abs(sum(x * y for x, y in zip(b1, b2))) <= n1
        assert is_unimodular_transform(res.transform, b, res.basis)
        assert n1 == shortest_vector_sq(res.basis, 3)
        assert n1 == svp_bruteforce(res.basis).norm_sq


def test_lll_hand_cases():
    assert lll_reduce([[1, 0], [0, 1]]).basis == [[1, 0], [0, 1]]
    res = lll_reduce([[1, 0], [4, 1]])
    assert is_lll_reduced(res.basis)
    assert min(sum(x * x for x in r) for r in res.basis) == 1
    check = is_lll_reduced([[1, 0], [4, 1]])
    assert not check and check.condition == "size" and check.indices == (0, 1) and check.value == 4


def test_lll_reports_lovasz_violation():
    check = is_lll_reduced([[3, 0], [0, 1]])
    assert not check and check.condition == "lovasz" and check.indices == (0, 1)


def test_lll_rejects_bad_delta_and_rank():
    with pytest.raises(ValueError):
        lll_reduce([[1, 0], [0, 1]], Fraction(1, 4))
    with pytest.raises(RankError):
        lll_reduce([[1, 2, 3], [2, 4, 6], [0, 0, 1]])


@settings(max_examples=60, deadline=None)
@given(square_bases)
def test_lll_contract_and_approximation_bound(basis):
    res = lll_reduce(basis)
    n = len(basis)
    assert is_lll_reduced(res.basis)
    assert is_unimodular_transform(res.transform, basis, res.basis)
    assert abs(det(res.transform)) == 1
    assert abs(det(res.basis)) == abs(det(basis))
    svp = svp_bruteforce(res.basis)
    assert svp.exact
    assert lll_bound_holds(sum(x * x for x in res.basis[0]), svp.norm_sq, n)


def test_lll_non_square_basis():
    b = [[1, 2, 3, 4], [5, 6, 7, 9], [2, 1, 0, 1]]
    res = lll_reduce(b)
    assert is_lll_reduced(res.basis)
    assert matmul(res.transform, b) == res.basis and abs(int_det(res.transform)) == 1


def test_lll_with_delta_one():
    res = lll_reduce([[5, 3], [8, 5]], Fraction(1))
    assert is_lll_reduced(res.basis, Fraction(1))


@settings(max_examples=50, deadline=None)
@given(square_bases)
def test_int_det_matches_sympy(basis):
    assert int_det(basis) == det(basis)


def test_svp_examples():
    r = svp_bruteforce([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert r.norm_sq == 1
    r = svp_bruteforce([[1, 0], [4, 1]])
    assert r.norm_sq == 1 and r.exact
    with pytest.raises(BudgetError):
        svp_bruteforce([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], coeff_bound=100)


def test_svp_box_flag():
    r = svp_bruteforce([[1, 0], [1000, 1]], coeff_bound=1)
    assert not r.exact and r.norm_sq == 1


def test_svp_agrees_with_oracle_on_reduced_bases():
    rng = random.Random(7)
    for _ in range(30):
        b = lll_reduce(random_basis(rng, 3, -30, 30)).basis
        assert svp_bruteforce(b).norm_sq == shortest_vector_sq(b, 3)


def test_cvp_distance():
    v, d = cvp_bruteforce([[1, 0], [0, 1]], [3, -2])
    assert v == (3, -2) and d == 0
    v, d = cvp_bruteforce([[2, 0], [0, 2]], [3, 3])
    assert d == 2


def test_basis_text_round_trip():
    b = [[1, -2, 3], [4, 5, -6]]
    assert load_basis(dump_basis(b)) == b


def test_sis_plant_and_zero():
    inst, x = sis_gen(3, 8, 97, 3, SeededRng(1))
    assert sis_check(inst, x)
    assert not sis_check(inst, [0] * 8)
    assert all(0 <= a < 97 for row in inst.A for a in row)
    with pytest.raises(ValueError):
        sis_gen(4, 4, 97, 3, SeededRng(1))


def test_sis_exhaustive_small():
    inst, x = sis_gen(2, 4, 7, 2, SeededRng(3))
    found = sis_bruteforce(inst, coeff_bound=1)
    assert x in found
    for w in found:
        assert sis_check(inst, w)
        assert all(sum(a * b for a, b in zip(row, w)) % 7 == 0 for row in inst.A)
        assert sum(v * v for v in w) <= 4


def test_lwe_planted_and_decoys():
    inst, s = lwe_gen(4, 20, 3329, 2, SeededRng(5))
    assert lwe_check(inst.samples, s, 3329, 2)
    decoys = lwe_uniform_samples(4, 20, 3329, SeededRng(6))
    assert not lwe_check(decoys, s, 3329, 2)


def test_lwe_bruteforce_recovers_secret():
    inst, s = lwe_gen(2, 10, 101, 2, SeededRng(8))
    assert lwe_bruteforce(inst) == [s]


def test_lwe_zero_error_elimination():
    inst, s = lwe_gen(3, 6, 101, 0, SeededRng(9))
    assert lwe_solve_exact(inst) == s
    assert lwe_check(inst.samples, s, 101, 0)
    with pytest.raises(ValueError):
        lwe_solve_exact(lwe_gen(2, 4, 101, 1, SeededRng(1))[0])


def test_gadget_identity_k8():
    g = gadget_vector(256)
    assert g == [1, 2, 4, 8, 16, 32, 64, 128]
    for x in range(256):
        assert sum(a * b for a, b in zip(g, bit_decompose(x, 8))) == x


def test_gadget_matrix_inverse():
    q = 97
    G = gadget_matrix(3, q)
    rng = SeededRng(2)
    for _ in range(50):
        v = [rng.randrange(q) for _ in range(3)]
        bits = gadget_inverse(v, q)
        assert set(bits) <= {0, 1}
        assert [sum(a * b for a, b in zip(row, bits)) for row in G] == v


def test_trapdoor_type1_scaled_identity():
    q = 13
    A = [[3, 5, 7], [1, 2, 9], [4, 4, 4]]
    T = [[q * int(i == j) for j in range(3)] for i in range(3)]
    assert trapdoor_check_type1(A, T, q, q)
    assert not trapdoor_check_type1(A, T, q, q - 1)
    with pytest.raises(ValueError):
        trapdoor_check_type1(A, [[1, 0], [0, 1]], q, 5)


def test_trapdoor_type1_random_T_fails():
    rng = SeededRng(4)
    q = 97
    A = [[rng.randrange(q) for _ in range(4)] for _ in range(2)]
    fails = 0
    for _ in range(200):
        T = [[rng.randint(-3, 3) for _ in range(4)] for _ in range(4)]
        fails += not trapdoor_check_type1(A, T, q, 100)
    assert fails == 200


def test_gadget_trapdoor_type2():
    q = 97
    A, R, G = gen_gadget_trapdoor(2, 4, q, SeededRng(3))
    bound = math.sqrt(5)
    assert trapdoor_check_type2(A, R, G, q, bound)
    R_bad = [row[:] for row in R]
    R_bad[0][0] += 1
    assert not trapdoor_check_type2(A, R_bad, G, q, 10)
    assert rank(R) == len(R[0])


def test_lwe_trapdoor_identity():
    q = 97
    rng = SeededRng(10)
    for _ in range(20):
        A, R, G = gen_gadget_trapdoor(2, 3, q, rng)
        m = len(A[0])
        s = [rng.randrange(q) for _ in range(2)]
        e = [rng.randint(-2, 2) for _ in range(m)]
        b = [(sum(s[i] * A[i][j] for i in range(2)) + e[j]) % q for j in range(m)]
        lhs = [sum(b[i] * R[i][j] for i in range(m)) % q for j in range(len(R[0]))]
        sG = [sum(s[i] * G[i][j] for i in range(2)) for j in range(len(G[0]))]
        eR = [sum(e[i] * R[i][j] for i in range(m)) for j in range(len(R[0]))]
        assert lhs == [(x + y) % q for x, y in zip(sG, eR)]
