"""Blind-issuance algebra over R_q = Z_q[X]/(X^d + 1).

The user commits to a message ring element I with a BDLOP commitment

    [t0; t1] = [b0; b1] R + [0; I g]

(b0 is r0 x r, b1 is 1 x r, R is r x k with entries in {-1, 0, 1}, g is the
length-k gadget row).  The signer returns a short e = [e1 | e2] with

    [a1 | a2 + t1] e^T = u.

Because t1 = b1 R + I g the user can move the commitment randomness into the
witness:

    [a1 | a2 + t1] e^T = [a1 | a2 + I g | b1] [e^T ; R e2^T]          (unblind)
    [a1 | a2 + I g] e^T = [a1 | a2 + t1 | b1] [e^T ; -R e2^T]         (group-signature direction)

Signing here is test mode: no trapdoor sampler exists, so keys are made per
session by choosing the short e first and publishing u = [a1 | a2 + t1] e^T.
That exercises every identity above without any unforgeability claim.  The
zero-knowledge proofs are replaced by revealing the witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from blindlab import textfmt
from blindlab.core_math import DEFAULT_HASH, HashSpec, SeededRng, encode

PBS_HEADER = "pbs-bundle v1"
TAG_HM = b"\x20"
TAG_HMC = b"\x21"


class ModulusMismatch(ValueError):
    pass


class OpenFailure(ValueError):
    pass


class TestModeError(RuntimeError):
    """Test-mode keys were generated for a different commitment."""


class RingElement:
    """Element of Z_q[X]/(X^d + 1), coefficients stored low degree first."""

    __slots__ = ("coeffs", "q", "d")

    def __init__(self, coeffs, q: int, d: int | None = None):
        coeffs = list(coeffs)
        d = len(coeffs) if d is None else d
        if d < 1 or d & (d - 1):
            raise ValueError("d must be a power of two")
        if len(coeffs) > d:
            raise ValueError("too many coefficients")
        self.q = q
        self.d = d
        self.coeffs = tuple(int(c) % q for c in coeffs) + (0,) * (d - len(coeffs))

    @classmethod
    def zero(cls, q, d):
        return cls([], q, d)

    @classmethod
    def const(cls, c, q, d):
        return cls([c], q, d)

    @classmethod
    def monomial(cls, power, q, d):
        """X^power with the negacyclic sign folded in."""
        sign = -1 if (power // d) % 2 else 1
        coeffs = [0] * d
        coeffs[power % d] = sign
        return cls(coeffs, q, d)

    def _check(self, other):
        if not isinstance(other, RingElement):
            return RingElement.const(other, self.q, self.d)
        if (other.q, other.d) != (self.q, self.d):
            raise ModulusMismatch(f"({self.q}, {self.d}) vs ({other.q}, {other.d})")
        return other

    def __add__(self, other):
        other = self._check(other)
        return RingElement([a + b for a, b in zip(self.coeffs, other.coeffs)], self.q, self.d)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        return RingElement([a - b for a, b in zip(self.coeffs, other.coeffs)], self.q, self.d)

    def __neg__(self):
        return RingElement([-a for a in self.coeffs], self.q, self.d)

    def __mul__(self, other):
        other = self._check(other)
        d = self.d
        out = [0] * d
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if i + j < d:
                    out[i + j] += a * b
                else:
                    out[i + j - d] -= a * b  # X^d = -1
        return RingElement(out, self.q, d)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, RingElement) and (self.q, self.d, self.coeffs) == (other.q, other.d, other.coeffs)

    def __hash__(self):
        return hash((self.q, self.d, self.coeffs))

    def __repr__(self):
        return f"RingElement({list(self.coeffs)}, q={self.q})"

    def centered(self) -> list[int]:
        return [c - self.q if c > self.q // 2 else c for c in self.coeffs]

    def inf_norm(self) -> int:
        return max(abs(c) for c in self.centered())

    def norm_sq(self) -> int:
        return sum(c * c for c in self.centered())

    def is_zero(self) -> bool:
        return not any(self.coeffs)


def schoolbook_reduce(a, b, q: int, d: int) -> list[int]:
    """Full 2d-1 product followed by folding X^(d+i) onto -X^i."""
    full = [0] * (2 * d - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            full[i + j] += x * y
    return [(full[i] - (full[i + d] if i + d < len(full) else 0)) % q for i in range(d)]


# ------------------------------------------------------ vectors/matrices


def vec_dot(u, v) -> RingElement:
    if len(u) != len(v) or not u:
        raise ValueError(f"length mismatch {len(u)} vs {len(v)}")
    acc = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        acc = acc + a * b
    return acc


def mat_vec(M, v) -> list[RingElement]:
    return [vec_dot(row, v) for row in M]


def row_mat(v, M) -> list[RingElement]:
    """Row vector times matrix: (v M)_j = sum_i v_i M[i][j]."""
    if len(v) != len(M):
        raise ValueError("row length does not match matrix height")
    return [vec_dot(v, [row[j] for row in M]) for j in range(len(M[0]))]


def vec_add(u, v):
    if len(u) != len(v):
        raise ValueError("length mismatch")
    return [a + b for a, b in zip(u, v)]


def uniform_element(rng: SeededRng, q, d) -> RingElement:
    return RingElement([rng.randrange(q) for _ in range(d)], q, d)


def short_element(rng: SeededRng, q, d, bound: int = 1) -> RingElement:
    return RingElement([rng.randint(-bound, bound) for _ in range(d)], q, d)


# ------------------------------------------------------------- parameters


@dataclass(frozen=True)
class PbsParams:
    d: int = 8
    q: int = 97
    k: int = 2  # length of a1, a2, t1 and the gadget row
    r: int = 2  # commitment randomness rows
    r0: int = 1  # rows of b0

    @property
    def gadget_base(self) -> int:
        """b = ceil(q^(1/k)), so (1, b, ..., b^(k-1)) spans Z_q digits."""
        b = max(2, math.ceil(self.q ** (1 / self.k)))
        while (b - 1) ** self.k >= self.q and b > 2:
            b -= 1
        while b**self.k < self.q:
            b += 1
        return b

    def gadget(self) -> list[RingElement]:
        b = self.gadget_base
        return [RingElement.const(b**i, self.q, self.d) for i in range(self.k)]

    def norm_bound(self) -> float:
        """Euclidean bound for the unblinded witness [e | R e2].

        e has ternary coefficients; each entry of R e2 is a sum of k products
        of two ternary polynomials, so its coefficients are at most k d.
        """
        e_part = 2 * self.k * self.d
        re_part = self.r * self.d * (self.k * self.d) ** 2
        return math.sqrt(e_part + re_part)


def hash_message(message: bytes, params: PbsParams, spec: HashSpec = DEFAULT_HASH) -> RingElement:
    """I = H_m(M) as a ring element with binary coefficients."""
    bits = spec.widened(params.d).digest(TAG_HM + message)
    return RingElement([(bits >> i) & 1 for i in range(params.d)], params.q, params.d)


def hash_common(gamma: bytes, params: PbsParams, spec: HashSpec = DEFAULT_HASH) -> RingElement:
    """H_Mc(gamma): uniform ring element from the common message."""
    stream = spec.stream(TAG_HMC + encode(gamma), 8 * params.d)
    coeffs = [int.from_bytes(stream[8 * i : 8 * i + 8], "big") % params.q for i in range(params.d)]
    return RingElement(coeffs, params.q, params.d)


def zero_hash(gamma: bytes, params: PbsParams, spec: HashSpec = DEFAULT_HASH) -> RingElement:
    return RingElement.zero(params.q, params.d)


# ------------------------------------------------------------ commitment


@dataclass(frozen=True)
class CommitmentKey:
    b0: list[list[RingElement]]  # r0 x r
    b1: list[RingElement]  # 1 x r


@dataclass(frozen=True)
class BdlopCommitment:
    t0: list[RingElement]
    t1: list[RingElement]  # length k


def commitment_keygen(params: PbsParams, rng: SeededRng) -> CommitmentKey:
    q, d = params.q, params.d
    b0 = [[uniform_element(rng, q, d) for _ in range(params.r)] for _ in range(params.r0)]
    b1 = [uniform_element(rng, q, d) for _ in range(params.r)]
    return CommitmentKey(b0, b1)


def sample_randomness(params: PbsParams, rng: SeededRng) -> list[list[RingElement]]:
    return [[short_element(rng, params.q, params.d) for _ in range(params.k)] for _ in range(params.r)]


def zero_randomness(params: PbsParams) -> list[list[RingElement]]:
    return [[RingElement.zero(params.q, params.d) for _ in range(params.k)] for _ in range(params.r)]


def _check_R(R, params: PbsParams):
    if len(R) != params.r or any(len(row) != params.k for row in R):
        raise ValueError(f"R must be {params.r} x {params.k}")


def bdlop_commit(I: RingElement, ck: CommitmentKey, params: PbsParams, R) -> BdlopCommitment:
    _check_R(R, params)
    Ig = [I * g for g in params.gadget()]
    t0 = [row_mat(row, R) for row in ck.b0]
    t1 = vec_add(row_mat(ck.b1, R), Ig)
    return BdlopCommitment([x for row in t0 for x in row], t1)


def bdlop_open_check(com: BdlopCommitment, I: RingElement, R, ck: CommitmentKey, params: PbsParams) -> bool:
    try:
        expected = bdlop_commit(I, ck, params, R)
    except (ValueError, ModulusMismatch):
        return False
    return expected.t0 == com.t0 and expected.t1 == com.t1


# ------------------------------------------------------------ issuance


@dataclass
class IssuanceKeys:
    """Public (a1, a2, u) plus the test-mode record of which t1 they serve."""

    a1: list[RingElement]
    a2: list[RingElement]
    u: RingElement
    bound_t1: tuple[RingElement, ...]
    _e: list[RingElement]
    gamma: bytes | None = None

    @property
    def public(self):
        return (self.a1, self.a2, self.u)


def testmode_keygen(
    t1,
    params: PbsParams,
    rng: SeededRng,
    gamma: bytes | None = None,
    hash_mc=hash_common,
    spec: HashSpec = DEFAULT_HASH,
) -> IssuanceKeys:
    """Sample a1, a2 and a short e, then set u = [a1 | a2 + t1] e^T (+ H_Mc(gamma))."""
    q, d, k = params.q, params.d, params.k
    if len(t1) != k:
        raise ValueError(f"t1 must have length {k}")
    a1 = [uniform_element(rng, q, d) for _ in range(k)]
    a2 = [uniform_element(rng, q, d) for _ in range(k)]
    e = [short_element(rng, q, d) for _ in range(2 * k)]
    u = vec_dot(a1 + vec_add(a2, t1), e)
    if gamma is not None:
        u = u + hash_mc(gamma, params, spec)
    return IssuanceKeys(a1, a2, u, tuple(t1), e, gamma)


def signer_target(keys: IssuanceKeys, params: PbsParams, gamma=None, hash_mc=hash_common, spec=DEFAULT_HASH):
    if gamma is None:
        return keys.u
    return keys.u - hash_mc(gamma, params, spec)


def issuance_sign_testmode(t1, keys: IssuanceKeys, params: PbsParams) -> list[RingElement]:
    """Short e with [a1 | a2 + t1] e^T = u."""
    if keys.gamma is not None:
        raise TestModeError("keys were made for the partially blind variant")
    return _sign(t1, keys, keys.u)


def partial_blind_issue_testmode(
    t1, gamma: bytes, keys: IssuanceKeys, params: PbsParams, hash_mc=hash_common, spec: HashSpec = DEFAULT_HASH
) -> list[RingElement]:
    """Short e with [a1 | a2 + t1] e^T = u - H_Mc(gamma)."""
    if keys.gamma != gamma:
        raise TestModeError("keys were made for a different common message")
    return _sign(t1, keys, keys.u - hash_mc(gamma, params, spec))


def _sign(t1, keys: IssuanceKeys, target: RingElement) -> list[RingElement]:
    if tuple(t1) != keys.bound_t1:
        raise TestModeError("test-mode keys are bound to a different t1")
    e = list(keys._e)
    lhs = vec_dot(keys.a1 + vec_add(keys.a2, list(t1)), e)
    if lhs != target or max(x.inf_norm() for x in e) > 1:
        raise TestModeError("test-mode key record is inconsistent")
    return e


# ------------------------------------------------------------ unblinding


@dataclass
class BlindIssuanceBundle:
    params: PbsParams
    e: list[RingElement]
    witness: list[RingElement]  # [e | R e2^T]
    statement: list[RingElement]  # [a1 | a2 + I g | b1]
    norm_bound: float

    def witness_norm(self) -> float:
        return math.sqrt(sum(x.norm_sq() for x in self.witness))


def unblind_transform(
    e, com: BdlopCommitment, R, I: RingElement, keys: IssuanceKeys, ck: CommitmentKey, params: PbsParams
) -> BlindIssuanceBundle:
    """Build the revealed-witness bundle and recheck both transformation identities."""
    if not bdlop_open_check(com, I, R, ck, params):
        raise OpenFailure("commitment does not open to (I, R)")
    k = params.k
    e2 = list(e[k:])
    Re2 = mat_vec(R, e2)
    Ig = [I * g for g in params.gadget()]
    statement = keys.a1 + vec_add(keys.a2, Ig) + list(ck.b1)
    witness = list(e) + Re2

    lhs_blind = vec_dot(keys.a1 + vec_add(keys.a2, com.t1), list(e))
    if vec_dot(statement, witness) != lhs_blind:
        raise AssertionError("unblinding identity failed")
    if group_direction_lhs(e, keys, I, params) != group_direction_rhs(e, com, R, keys, ck, params):
        raise AssertionError("group-signature identity failed")
    return BlindIssuanceBundle(params, list(e), witness, statement, params.norm_bound())


def group_direction_lhs(e, keys: IssuanceKeys, I: RingElement, params: PbsParams) -> RingElement:
    """[a1 | a2 + I g] e^T."""
    Ig = [I * g for g in params.gadget()]
    return vec_dot(keys.a1 + vec_add(keys.a2, Ig), list(e))


def group_direction_rhs(e, com, R, keys: IssuanceKeys, ck: CommitmentKey, params: PbsParams) -> RingElement:
    """[a1 | a2 + t1 | b1] [e^T ; -R e2^T]."""
    e2 = list(e[params.k :])
    neg = [-x for x in mat_vec(R, e2)]
    return vec_dot(keys.a1 + vec_add(keys.a2, com.t1) + list(ck.b1), list(e) + neg)


def expansion_identity(e, com, R, I, keys: IssuanceKeys, ck: CommitmentKey, params: PbsParams) -> bool:
    """[a1 | a2 + t1] e^T == [a1 | a2 + b1 R + I g] e^T."""
    Ig = [I * g for g in params.gadget()]
    expanded = vec_add(vec_add(keys.a2, row_mat(ck.b1, R)), Ig)
    return vec_dot(keys.a1 + vec_add(keys.a2, com.t1), list(e)) == vec_dot(keys.a1 + expanded, list(e))


def transparent_verify(bundle: BlindIssuanceBundle, u: RingElement, norm_bound: float | None = None) -> bool:
    """Accept iff statement . witness == u and the witness is short."""
    bound = bundle.norm_bound if norm_bound is None else norm_bound
    if len(bundle.statement) != len(bundle.witness):
        return False
    try:
        if vec_dot(bundle.statement, bundle.witness) != u:
            return False
    except ModulusMismatch:
        return False
    return bundle.witness_norm() <= bound


def transparent_verify_partial(
    bundle: BlindIssuanceBundle,
    u: RingElement,
    gamma: bytes,
    norm_bound: float | None = None,
    hash_mc=hash_common,
    spec: HashSpec = DEFAULT_HASH,
) -> bool:
    """Same check against the target u - H_Mc(gamma), recomputed from gamma."""
    return transparent_verify(bundle, u - hash_mc(gamma, bundle.params, spec), norm_bound)


# ------------------------------------------------------------- sessions


@dataclass
class Session:
    params: PbsParams
    ck: CommitmentKey
    I: RingElement
    R: list
    com: BdlopCommitment
    keys: IssuanceKeys
    e: list[RingElement]
    bundle: BlindIssuanceBundle


def run_session(
    message: bytes,
    params: PbsParams,
    rng: SeededRng,
    gamma: bytes | None = None,
    hash_mc=hash_common,
    spec: HashSpec = DEFAULT_HASH,
    R=None,
) -> Session:
    """Commit, sign in test mode, unblind; one full issuance."""
    ck = commitment_keygen(params, rng)
    I = hash_message(message, params, spec)
    R = sample_randomness(params, rng) if R is None else R
    com = bdlop_commit(I, ck, params, R)
    keys = testmode_keygen(com.t1, params, rng, gamma, hash_mc, spec)
    if gamma is None:
        e = issuance_sign_testmode(com.t1, keys, params)
    else:
        e = partial_blind_issue_testmode(com.t1, gamma, keys, params, hash_mc, spec)
    bundle = unblind_transform(e, com, R, I, keys, ck, params)
    return Session(params, ck, I, R, com, keys, e, bundle)


# ---------------------------------------------------------------- files


def dump_bundle(bundle: BlindIssuanceBundle) -> str:
    p = bundle.params
    rows = [[p.d, p.q, p.k, p.r, p.r0], [len(bundle.e), len(bundle.witness)]]
    rows += [list(x.coeffs) for x in bundle.e]
    rows += [list(x.coeffs) for x in bundle.witness]
    rows += [list(x.coeffs) for x in bundle.statement]
    return textfmt.dump_rows(PBS_HEADER, rows)


def load_bundle(text: str) -> BlindIssuanceBundle:
    rows = textfmt.load_rows(PBS_HEADER, text)
    if len(rows) < 2 or len(rows[0]) != 5 or len(rows[1]) != 2:
        raise textfmt.FormatError("missing parameter lines")
    d, q, k, r, r0 = rows[0]
    params = PbsParams(d, q, k, r, r0)
    n_e, n_w = rows[1]
    body = rows[2:]
    if len(body) != n_e + 2 * n_w or any(len(row) != d for row in body):
        raise textfmt.FormatError("bundle body has the wrong shape")
    elems = [RingElement(row, q, d) for row in body]
    return BlindIssuanceBundle(params, elems[:n_e], elems[n_e : n_e + n_w], elems[n_e + n_w :], params.norm_bound())
