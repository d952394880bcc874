"""Modular arithmetic, primes, Schnorr groups, hashing and seeded randomness.

Everything else in the package is built on the helpers here.  Integers are
plain Python ints (arbitrary precision); nothing is constant-time.
"""

from __future__ import annotations

import hashlib
import math
import random
import struct
from dataclasses import dataclass

from blindlab import textfmt

__all__ = [
    "NotInvertibleError",
    "SeededRng",
    "SchnorrGroup",
    "HashSpec",
    "DEFAULT_HASH",
    "mod_exp",
    "mod_inv",
    "is_probable_prime",
    "gen_prime",
    "gen_schnorr_group",
    "hash_to_range",
    "encode",
    "solve_linear_mod",
    "centered",
]


class NotInvertibleError(ValueError):
    """Raised when an element has no inverse modulo the given modulus."""


class SeededRng(random.Random):
    """Deterministic generator (Mersenne Twister) with a 64-bit seed.

    Same seed gives the same stream on every run and platform.  Not for
    production secrets.  Single owner: do not share across threads.
    """

    def __init__(self, seed: int = 0):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed_value = seed
        super().__init__(seed)

    def unit(self, n: int) -> int:
        """Uniform element of [1, n) coprime to n."""
        while True:
            r = self.randrange(1, n)
            if math.gcd(r, n) == 1:
                return r

    def spawn(self, label: str) -> "SeededRng":
        """Child generator whose seed depends on this seed and `label`."""
        h = hashlib.sha256(struct.pack(">Q", self.seed_value) + label.encode()).digest()
        return SeededRng(int.from_bytes(h[:8], "big"))


def mod_exp(base: int, exponent: int, modulus: int) -> int:
    if modulus < 2:
        raise ValueError("modulus must be >= 2")
    if exponent < 0:
        raise ValueError("exponent must be non-negative; use mod_inv")
    return pow(base, exponent, modulus)


def mod_inv(a: int, m: int) -> int:
    if m < 2:
        raise ValueError("modulus must be >= 2")
    if math.gcd(a, m) != 1:
        raise NotInvertibleError(f"{a} is not invertible modulo {m}")
    return pow(a, -1, m)


_SMALL_PRIMES = [p for p in range(3, 1000) if all(p % d for d in range(2, int(p**0.5) + 1))]


def is_probable_prime(n: int, rounds: int = 64) -> bool:
    """Miller-Rabin; error probability at most 4**-rounds for composites.

    Witnesses are drawn from a generator seeded by `n` itself, so the answer
    is deterministic and does not consume the caller's randomness.
    """
    if n < 2:
        return False
    if n in (2, 3):
        return True
    if n % 2 == 0:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    witnesses = random.Random(n)
    for _ in range(rounds):
        a = witnesses.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def gen_prime(bits: int, rng: SeededRng) -> int:
    """Random prime with exactly `bits` bits."""
    if bits < 2:
        raise ValueError("bits must be >= 2")
    if bits == 2:
        return rng.choice((2, 3))
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if is_probable_prime(candidate):
            return candidate


@dataclass(frozen=True)
class SchnorrGroup:
    """Order-q subgroup of Z_p^* generated by g."""

    p: int
    q: int
    g: int

    def validate(self) -> bool:
        return (
            is_probable_prime(self.p)
            and is_probable_prime(self.q)
            and (self.p - 1) % self.q == 0
            and 1 < self.g < self.p
            and pow(self.g, self.q, self.p) == 1
        )

    def contains(self, h: int) -> bool:
        """True iff h is an element of the order-q subgroup."""
        return 0 < h < self.p and pow(h, self.q, self.p) == 1

    def exp(self, x: int) -> int:
        return pow(self.g, x % self.q, self.p)

    def to_text(self) -> str:
        return textfmt.dump_ints("schnorr-group v1", [self.p, self.q, self.g])

    @classmethod
    def from_text(cls, text: str) -> "SchnorrGroup":
        p, q, g = textfmt.load_ints("schnorr-group v1", text, counts=(3,))
        return cls(p, q, g)


def gen_schnorr_group(q_bits: int, p_bits: int, rng: SeededRng) -> SchnorrGroup:
    """Find prime q, then prime p = kq + 1 of `p_bits` bits, then g = h^((p-1)/q)."""
    if p_bits <= q_bits:
        raise ValueError("p_bits must exceed q_bits")
    while True:
        q = gen_prime(q_bits, rng)
        k_lo = -(-((1 << (p_bits - 1)) - 1) // q)
        k_hi = ((1 << p_bits) - 2) // q
        if k_lo > k_hi:
            continue
        for _ in range(100 * p_bits):
            k = rng.randint(k_lo, k_hi)
            p = k * q + 1
            if p.bit_length() == p_bits and is_probable_prime(p):
                break
        else:
            continue
        while True:
            h = rng.randrange(2, p - 1) if p > 3 else 2
            g = pow(h, (p - 1) // q, p)
            if g != 1:
                return SchnorrGroup(p, q, g)


@dataclass(frozen=True)
class HashSpec:
    """A fixed standard hash truncated or extended to `output_bits` bits.

    `shake128`/`shake256` give any length; the fixed-length algorithms from
    hashlib (sha256, sha512, sha3_256, ...) are limited to their digest size.
    """

    output_bits: int = 256
    algorithm: str = "shake256"

    def __post_init__(self):
        if self.output_bits <= 0:
            raise ValueError("output_bits must be positive")
        if not self.algorithm.startswith("shake"):
            size = hashlib.new(self.algorithm).digest_size * 8
            if self.output_bits > size:
                raise ValueError(f"{self.algorithm} gives at most {size} bits")

    def digest(self, data: bytes) -> int:
        """Hash `data` to an integer of at most `output_bits` bits."""
        nbytes = (self.output_bits + 7) // 8
        h = hashlib.new(self.algorithm, data)
        raw = h.digest(nbytes) if self.algorithm.startswith("shake") else h.digest()[:nbytes]
        return int.from_bytes(raw, "big") >> (8 * nbytes - self.output_bits)

    def widened(self, bits: int) -> "HashSpec":
        if bits <= self.output_bits:
            return self
        return HashSpec(bits, self.algorithm)

    def stream(self, data: bytes, nbytes: int) -> bytes:
        """Expand `data` to `nbytes` pseudo-random bytes (XOF, or counter mode)."""
        if self.algorithm.startswith("shake"):
            return hashlib.new(self.algorithm, data).digest(nbytes)
        out = bytearray()
        counter = 0
        while len(out) < nbytes:
            out += hashlib.new(self.algorithm, data + counter.to_bytes(4, "big")).digest()
            counter += 1
        return bytes(out[:nbytes])


DEFAULT_HASH = HashSpec()


def hash_to_range(data: bytes, q: int, spec: HashSpec = DEFAULT_HASH) -> int:
    """Map bytes into [0, q) by hashing to bitlen(q)+128 bits and reducing mod q."""
    if q < 2:
        raise ValueError("q must be >= 2")
    return spec.widened(q.bit_length() + 128).digest(data) % q


def encode(*parts) -> bytes:
    """Unambiguous length-prefixed encoding of ints, bytes and strings."""
    out = bytearray()
    for part in parts:
        if isinstance(part, bool):
            raise TypeError("bool is not encodable")
        if isinstance(part, int):
            sign = b"-" if part < 0 else b"+"
            n = abs(part)
            body = sign + n.to_bytes(max(1, (n.bit_length() + 7) // 8), "big")
            tag = b"i"
        elif isinstance(part, (bytes, bytearray)):
            body, tag = bytes(part), b"b"
        elif isinstance(part, str):
            body, tag = part.encode(), b"s"
        elif isinstance(part, (tuple, list)):
            body, tag = encode(*part), b"l"
        else:
            raise TypeError(f"cannot encode {type(part).__name__}")
        out += tag + struct.pack(">I", len(body)) + body
    return bytes(out)


def centered(x: int, q: int) -> int:
    """Representative of x mod q in (-q/2, q/2]."""
    r = x % q
    return r - q if r > q // 2 else r


def solve_linear_mod(a: list[list[int]], b: list[int], q: int) -> list[int] | None:
    """Solve a·x = b over Z_q (q prime) for square `a`; None if singular."""
    n = len(a)
    rows = [[v % q for v in row] + [b[i] % q] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col]), None)
        if pivot is None:
            return None
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv = pow(rows[col][col], -1, q)
        rows[col] = [v * inv % q for v in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                f = rows[r][col]
                rows[r] = [(v - f * w) % q for v, w in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]
