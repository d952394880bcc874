"""Fiat-Shamir-with-aborts signature over plain Z_q matrices.

Key:        t = A s1 + s2  (A is m x n; s1 is n x k, s2 is m x k, entries in [-eta, eta])
Sign:       y <- [-gamma, gamma]^n, w = A y, c = H(High(w), M), z = y + s1 c
Verify:     ||z||_inf <= gamma - beta and H(High(A z - t c), M) == c

The challenge c is a vector in {-1, 0, 1}^k with exactly `weight` nonzero
entries, so s1 c is a short length-n vector with ||s1 c||_inf <= weight*eta.

The signer restarts when ||z||_inf > gamma - beta or
||Low(w - s2 c)||_inf > gamma - beta.  Real Dilithium ships a hint so the
verifier can fix carries in High(.).  This version has no hint; the signer
also restarts whenever High(w - s2 c) != High(w), so every emitted signature
verifies.  How often that check fires is reported as the High-agreement
failure rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from blindlab import textfmt
from blindlab.core_math import DEFAULT_HASH, HashSpec, SeededRng, encode

FS_KEY_HEADER = "fs-key v1"
FS_SIG_HEADER = "fs-sig v1"
TAG_FS = b"\x10"


class ParametersInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class FsParams:
    n: int = 8
    m: int = 8
    q: int = 8380417
    eta: int = 2
    gamma: int = 2**17
    weight: int = 4
    k: int = 16  # challenge length
    D: int = 15
    beta: int | None = None  # defaults to weight * eta
    max_attempts: int = 10_000

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", self.weight * self.eta)
        if not self.gamma > self.beta > 0:
            raise ValueError("need gamma > beta > 0")
        if not self.q > 4 * self.gamma:
            raise ValueError("need q > 4 gamma")
        if not 0 < self.weight <= self.k:
            raise ValueError("challenge weight must be in [1, k]")
        if 2 ** (self.D - 1) <= self.beta:
            raise ValueError("2^(D-1) must exceed beta")

    @property
    def z_bound(self) -> int:
        return self.gamma - self.beta

    @property
    def low_bound(self) -> int:
        # same margin as z; never binds once 2^(D-1) <= gamma - beta
        return self.gamma - self.beta

    def high_failure_bound(self) -> float:
        """Upper estimate of P[High(w - s2 c) != High(w)] for uniform w."""
        return self.m * (2 * self.beta + 1) / 2**self.D

    def as_ints(self) -> list[int]:
        return [self.n, self.m, self.q, self.eta, self.gamma, self.weight, self.k, self.D, self.beta]

    @classmethod
    def from_ints(cls, vals) -> "FsParams":
        n, m, q, eta, gamma, weight, k, D, beta = vals
        return cls(n, m, q, eta, gamma, weight, k, D, beta)


@dataclass
class FsPublicKey:
    params: FsParams
    A: np.ndarray  # m x n
    t: np.ndarray  # m x k


@dataclass
class FsKeyPair:
    params: FsParams
    A: np.ndarray
    t: np.ndarray
    s1: np.ndarray  # n x k
    s2: np.ndarray  # m x k

    @property
    def public(self) -> FsPublicKey:
        return FsPublicKey(self.params, self.A, self.t)

    def is_consistent(self) -> bool:
        p = self.params
        ok_t = np.array_equal((self.A @ self.s1 + self.s2) % p.q, self.t)
        short = np.abs(self.s1).max(initial=0) <= p.eta and np.abs(self.s2).max(initial=0) <= p.eta
        return bool(ok_t and short)


@dataclass(frozen=True)
class FsSignature:
    z: tuple[int, ...]
    c: tuple[int, ...]


@dataclass
class SignStats:
    attempts: int = 0
    z_rejections: int = 0
    low_rejections: int = 0
    high_disagreements: int = 0  # among attempts whose z passed

    @property
    def z_passes(self) -> int:
        return self.attempts - self.z_rejections

    def high_failure_rate(self) -> float:
        return self.high_disagreements / self.z_passes if self.z_passes else 0.0

    def merge(self, other: "SignStats") -> None:
        self.attempts += other.attempts
        self.z_rejections += other.z_rejections
        self.low_rejections += other.low_rejections
        self.high_disagreements += other.high_disagreements


# ------------------------------------------------------------- High/Low


def highlow(v, q: int, D: int):
    """Split each entry r of v mod q as r = High * 2^D + Low, Low in (-2^(D-1), 2^(D-1)]."""
    r = np.asarray(v, dtype=np.int64) % q
    base = 1 << D
    low = r % base
    low = np.where(low > base // 2, low - base, low)
    return (r - low) >> D, low


def high(v, q: int, D: int) -> np.ndarray:
    return highlow(v, q, D)[0]


# ------------------------------------------------------------- challenge


def challenge(high_bits, message: bytes, params: FsParams, spec: HashSpec = DEFAULT_HASH) -> np.ndarray:
    """Weight-w ternary vector from H(High(w), M) via a Fisher-Yates shuffle."""
    seed = TAG_FS + encode([int(x) for x in high_bits], message)
    nbytes = 8 + 4 * params.k
    while True:
        c = _decode_challenge(spec.stream(seed, nbytes), params)
        if c is not None:
            return c
        nbytes *= 2


def _decode_challenge(stream: bytes, params: FsParams):
    signs = int.from_bytes(stream[:8], "little")
    draws = [int.from_bytes(stream[i : i + 2], "little") for i in range(8, len(stream) - 1, 2)]
    c = [0] * params.k
    for i in range(params.k - params.weight, params.k):
        limit = 65536 - 65536 % (i + 1)
        while True:  # j uniform in [0, i]
            if not draws:
                return None
            j = draws.pop(0)
            if j < limit:
                j %= i + 1
                break
        c[i] = c[j]
        c[j] = 1 - 2 * (signs & 1)
        signs >>= 1
    return np.array(c, dtype=np.int64)


# ------------------------------------------------------------- scheme


def _uniform(rng: SeededRng, bound: int, shape) -> np.ndarray:
    size = int(np.prod(shape))
    return np.array([rng.randint(-bound, bound) for _ in range(size)], dtype=np.int64).reshape(shape)


def fs_keygen(params: FsParams, rng: SeededRng, zero_secret: bool = False) -> FsKeyPair:
    """Uniform A and secrets from [-eta, eta].

    Rejects parameter sets whose High-agreement failure estimate is >= 1%.
    `zero_secret` forces s1 = s2 = 0 for the degenerate-key checks.
    """
    if params.high_failure_bound() >= 0.01:
        raise ParametersInfeasible(
            f"estimated High-agreement failure {params.high_failure_bound():.4f} is not below 1%"
        )
    p = params
    A = np.array([[rng.randrange(p.q) for _ in range(p.n)] for _ in range(p.m)], dtype=np.int64)
    if zero_secret:
        s1 = np.zeros((p.n, p.k), dtype=np.int64)
        s2 = np.zeros((p.m, p.k), dtype=np.int64)
    else:
        s1 = _uniform(rng, p.eta, (p.n, p.k))
        s2 = _uniform(rng, p.eta, (p.m, p.k))
    t = (A @ s1 + s2) % p.q
    return FsKeyPair(params, A, t, s1, s2)


@dataclass
class SignResult:
    signature: FsSignature
    stats: SignStats
    y: np.ndarray = field(repr=False)  # mask of the accepted attempt
    w: np.ndarray = field(repr=False)


def fs_sign_detailed(
    message: bytes, key: FsKeyPair, rng: SeededRng, spec: HashSpec = DEFAULT_HASH
) -> SignResult:
    p = key.params
    stats = SignStats()
    for _ in range(p.max_attempts):
        stats.attempts += 1
        y = _uniform(rng, p.gamma, (p.n,))
        w = key.A @ y % p.q
        hi = high(w, p.q, p.D)
        c = challenge(hi, message, p, spec)
        z = y + key.s1 @ c
        if np.abs(z).max() > p.z_bound:
            stats.z_rejections += 1
            continue
        r = (w - key.s2 @ c) % p.q
        r_hi, r_lo = highlow(r, p.q, p.D)
        if not np.array_equal(r_hi, hi):
            stats.high_disagreements += 1
            continue
        if np.abs(r_lo).max() > p.low_bound:
            stats.low_rejections += 1
            continue
        sig = FsSignature(tuple(int(x) for x in z), tuple(int(x) for x in c))
        return SignResult(sig, stats, y, w)
    raise ParametersInfeasible(f"no signature after {p.max_attempts} attempts")


def fs_sign(message: bytes, key: FsKeyPair, rng: SeededRng, spec: HashSpec = DEFAULT_HASH):
    """Returns (signature, number of attempts)."""
    res = fs_sign_detailed(message, key, rng, spec)
    return res.signature, res.stats.attempts


def fs_verify(message: bytes, sig: FsSignature, public, spec: HashSpec = DEFAULT_HASH) -> bool:
    p = public.params
    if len(sig.z) != p.n or len(sig.c) != p.k:
        return False
    c = np.array(sig.c, dtype=np.int64)
    if np.abs(c).max() > 1 or np.count_nonzero(c) != p.weight:
        return False
    z = np.array(sig.z, dtype=np.int64)
    if np.abs(z).max() > p.z_bound:
        return False
    w_approx = (public.A @ z - public.t @ c) % p.q
    return np.array_equal(challenge(high(w_approx, p.q, p.D), message, p, spec), c)


# ------------------------------------------------------------- files


def dump_fs_key(key, include_secret: bool = False) -> str:
    p = key.params
    rows = [p.as_ints()]
    rows += key.A.tolist() + key.t.tolist()
    if include_secret and isinstance(key, FsKeyPair):
        rows += key.s1.tolist() + key.s2.tolist()
    return textfmt.dump_rows(FS_KEY_HEADER, rows)


def load_fs_key(text: str):
    rows = textfmt.load_rows(FS_KEY_HEADER, text)
    if not rows:
        raise textfmt.FormatError("missing parameter line")
    p = FsParams.from_ints(rows[0])
    body = rows[1:]
    if len(body) not in (2 * p.m, 2 * p.m + p.n + p.m):
        raise textfmt.FormatError("unexpected number of rows")
    A = np.array(body[: p.m], dtype=np.int64)
    t = np.array(body[p.m : 2 * p.m], dtype=np.int64)
    if A.shape != (p.m, p.n) or t.shape != (p.m, p.k):
        raise textfmt.FormatError("matrix shape does not match parameters")
    if len(body) == 2 * p.m:
        return FsPublicKey(p, A, t)
    s1 = np.array(body[2 * p.m : 2 * p.m + p.n], dtype=np.int64)
    s2 = np.array(body[2 * p.m + p.n :], dtype=np.int64)
    return FsKeyPair(p, A, t, s1, s2)


def dump_fs_sig(sig: FsSignature) -> str:
    return textfmt.dump_rows(FS_SIG_HEADER, [sig.z, sig.c])


def load_fs_sig(text: str) -> FsSignature:
    rows = textfmt.load_rows(FS_SIG_HEADER, text)
    if len(rows) != 2:
        raise textfmt.FormatError("expected a z row and a c row")
    return FsSignature(tuple(rows[0]), tuple(rows[1]))
