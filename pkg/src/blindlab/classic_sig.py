"""Textbook RSA, DSA and Schnorr signatures.

Each scheme is split into a hashing layer (``*_hash`` / ``*_challenge``) and
an algebra layer that works on the digest directly, so the algebra can be
exercised with hand-picked digests.

Schnorr uses the order-q subgroup of Z_p^* written multiplicatively: the
additive relation ``sG = R + cX`` becomes ``g^s = R * X^c (mod p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from blindlab import textfmt
from blindlab.core_math import (
    DEFAULT_HASH,
    HashSpec,
    SchnorrGroup,
    SeededRng,
    encode,
    gen_prime,
    hash_to_range,
    mod_inv,
)

TAG_RSA = b"\x01"
TAG_DSA = b"\x02"
TAG_SCHNORR = b"\x03"


# --------------------------------------------------------------------- RSA


@dataclass(frozen=True)
class RsaPublicKey:
    e: int
    n: int


@dataclass(frozen=True)
class RsaKeyPair:
    p: int
    q: int
    n: int
    e: int
    d: int
    phi: int

    @classmethod
    def from_primes(cls, p: int, q: int, e: int) -> "RsaKeyPair":
        phi = (p - 1) * (q - 1)
        return cls(p, q, p * q, e, mod_inv(e, phi), phi)

    @property
    def public(self) -> RsaPublicKey:
        return RsaPublicKey(self.e, self.n)

    def is_consistent(self) -> bool:
        return (
            self.n == self.p * self.q
            and self.phi == (self.p - 1) * (self.q - 1)
            and math.gcd(self.e, self.phi) == 1
            and self.d * self.e % self.phi == 1
        )


def rsa_keygen(bits_per_prime: int, e: int = 65537, rng: SeededRng | None = None) -> RsaKeyPair:
    if e < 3 or e % 2 == 0:
        raise ValueError("e must be odd and >= 3")
    rng = rng or SeededRng(0)
    while True:
        p = gen_prime(bits_per_prime, rng)
        q = gen_prime(bits_per_prime, rng)
        if p == q:
            continue
        if math.gcd(e, (p - 1) * (q - 1)) == 1:
            return RsaKeyPair.from_primes(p, q, e)


def rsa_hash(m: bytes, n: int, spec: HashSpec = DEFAULT_HASH) -> int:
    """Full-domain hash of `m` onto Z_n."""
    return hash_to_range(TAG_RSA + m, n, spec)


def rsa_sign_digest(h: int, key: RsaKeyPair) -> int:
    return pow(h, key.d, key.n)


def rsa_verify_digest(h: int, s: int, public: RsaPublicKey) -> bool:
    if not 0 <= s < public.n:
        return False
    return pow(s, public.e, public.n) == h % public.n


def rsa_sign(m: bytes, key: RsaKeyPair, spec: HashSpec = DEFAULT_HASH) -> int:
    return rsa_sign_digest(rsa_hash(m, key.n, spec), key)


def rsa_verify(m: bytes, s: int, public: RsaPublicKey, spec: HashSpec = DEFAULT_HASH) -> bool:
    return rsa_verify_digest(rsa_hash(m, public.n, spec), s, public)


# --------------------------------------------------------------------- DSA


@dataclass(frozen=True)
class DsaKeyPair:
    group: SchnorrGroup
    x: int
    y: int

    @property
    def public(self) -> "DsaPublicKey":
        return DsaPublicKey(self.group, self.y)


@dataclass(frozen=True)
class DsaPublicKey:
    group: SchnorrGroup
    y: int


@dataclass(frozen=True)
class DsaSignature:
    r: int
    s: int


def dsa_keygen(group: SchnorrGroup, rng: SeededRng) -> DsaKeyPair:
    x = rng.randrange(1, group.q)
    return DsaKeyPair(group, x, pow(group.g, x, group.p))


def dsa_hash(m: bytes, q: int, spec: HashSpec = DEFAULT_HASH) -> int:
    return hash_to_range(TAG_DSA + m, q, spec)


def dsa_sign_digest(h: int, key: DsaKeyPair, k: int) -> DsaSignature | None:
    """Sign digest `h` with nonce `k`; None when r or s comes out as zero."""
    g, p, q = key.group.g, key.group.p, key.group.q
    r = pow(g, k, p) % q
    if r == 0:
        return None
    s = mod_inv(k, q) * (h + key.x * r) % q
    if s == 0:
        return None
    return DsaSignature(r, s)


def dsa_sign(m: bytes, key: DsaKeyPair, rng: SeededRng, spec: HashSpec = DEFAULT_HASH) -> DsaSignature:
    h = dsa_hash(m, key.group.q, spec)
    while True:
        k = rng.randrange(1, key.group.q)
        sig = dsa_sign_digest(h, key, k)
        if sig is not None:
            return sig


def dsa_verify_digest(h: int, sig: DsaSignature, public: DsaPublicKey) -> bool:
    g, p, q = public.group.g, public.group.p, public.group.q
    if not (0 < sig.r < q and 0 < sig.s < q):
        return False
    w = mod_inv(sig.s, q)
    u1 = h * w % q
    u2 = sig.r * w % q
    v = pow(g, u1, p) * pow(public.y, u2, p) % p % q
    return v == sig.r


def dsa_verify(m: bytes, sig: DsaSignature, public: DsaPublicKey, spec: HashSpec = DEFAULT_HASH) -> bool:
    return dsa_verify_digest(dsa_hash(m, public.group.q, spec), sig, public)


# ----------------------------------------------------------------- Schnorr


@dataclass(frozen=True)
class SchnorrPublicKey:
    group: SchnorrGroup
    X: int


@dataclass(frozen=True)
class SchnorrKeyPair:
    group: SchnorrGroup
    x: int
    X: int

    @property
    def public(self) -> SchnorrPublicKey:
        return SchnorrPublicKey(self.group, self.X)


@dataclass(frozen=True)
class SchnorrSignature:
    R: int
    s: int


def schnorr_keygen(group: SchnorrGroup, rng: SeededRng) -> SchnorrKeyPair:
    x = rng.randrange(1, group.q)
    return SchnorrKeyPair(group, x, pow(group.g, x, group.p))


def schnorr_challenge(R: int, m: bytes, group: SchnorrGroup, spec: HashSpec = DEFAULT_HASH) -> int:
    """c = H(R, m) in [0, q)."""
    return hash_to_range(TAG_SCHNORR + encode(R, m), group.q, spec)


def schnorr_respond(nonce: int, c: int, x: int, q: int) -> int:
    return (nonce + c * x) % q


def schnorr_check(R: int, s: int, c: int, public: SchnorrPublicKey) -> bool:
    """The group equation g^s == R * X^c (mod p), with R in the subgroup."""
    grp = public.group
    if not grp.contains(R) or not 0 <= s < grp.q:
        return False
    return pow(grp.g, s, grp.p) == R * pow(public.X, c, grp.p) % grp.p


def schnorr_sign(
    m: bytes,
    key: SchnorrKeyPair,
    rng: SeededRng,
    spec: HashSpec = DEFAULT_HASH,
    nonce: int | None = None,
) -> SchnorrSignature:
    grp = key.group
    r = rng.randrange(1, grp.q) if nonce is None else nonce % grp.q
    R = pow(grp.g, r, grp.p)
    c = schnorr_challenge(R, m, grp, spec)
    return SchnorrSignature(R, schnorr_respond(r, c, key.x, grp.q))


def schnorr_verify(m: bytes, sig: SchnorrSignature, public: SchnorrPublicKey, spec: HashSpec = DEFAULT_HASH) -> bool:
    if not public.group.contains(sig.R):
        return False
    c = schnorr_challenge(sig.R, m, public.group, spec)
    return schnorr_check(sig.R, sig.s, c, public)


# ----------------------------------------------------------- key files

RSA_HEADER = "rsa-key v1"
DSA_HEADER = "dsa-key v1"
SCHNORR_HEADER = "schnorr-key v1"


def dump_key(key, include_secret: bool = False) -> str:
    """Serialize a key; secret fields are written only with `include_secret`."""
    if isinstance(key, RsaKeyPair):
        vals = [key.n, key.e] + ([key.d, key.p, key.q] if include_secret else [])
        return textfmt.dump_ints(RSA_HEADER, vals)
    if isinstance(key, RsaPublicKey):
        return textfmt.dump_ints(RSA_HEADER, [key.n, key.e])
    header = DSA_HEADER if isinstance(key, (DsaKeyPair, DsaPublicKey)) else SCHNORR_HEADER
    if isinstance(key, (DsaKeyPair, DsaPublicKey)):
        grp, pub, secret = key.group, key.y, getattr(key, "x", None)
    elif isinstance(key, (SchnorrKeyPair, SchnorrPublicKey)):
        grp, pub, secret = key.group, key.X, getattr(key, "x", None)
    else:
        raise TypeError(f"unsupported key type {type(key).__name__}")
    vals = [grp.p, grp.q, grp.g, pub]
    if include_secret and secret is not None:
        vals.append(secret)
    return textfmt.dump_ints(header, vals)


def load_key(text: str):
    """Inverse of `dump_key`; returns a key pair when secrets are present."""
    header = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    if header == RSA_HEADER:
        vals = textfmt.load_ints(RSA_HEADER, text, counts=(2, 5))
        if len(vals) == 2:
            return RsaPublicKey(e=vals[1], n=vals[0])
        n, e, d, p, q = vals
        return RsaKeyPair(p, q, n, e, d, (p - 1) * (q - 1))
    if header in (DSA_HEADER, SCHNORR_HEADER):
        vals = textfmt.load_ints(header, text, counts=(4, 5))
        grp = SchnorrGroup(*vals[:3])
        if header == DSA_HEADER:
            return DsaKeyPair(grp, vals[4], vals[3]) if len(vals) == 5 else DsaPublicKey(grp, vals[3])
        return SchnorrKeyPair(grp, vals[4], vals[3]) if len(vals) == 5 else SchnorrPublicKey(grp, vals[3])
    raise textfmt.FormatError(f"unknown key header {header!r}")
