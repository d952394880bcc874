"""Interactive blind signatures as explicit session state machines.

Covers the naive RSA blind signature and the two attacks on it, blind
RSA-FDH, blind Schnorr, blindness witness checks, and partial blindness via
per-attribute keys.

Signers keep a ledger of completed sessions.  Every session is single use:
calling a step out of order, or twice, raises `ProtocolStateError`.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

from blindlab import textfmt
from blindlab.classic_sig import (
    RsaKeyPair,
    RsaPublicKey,
    SchnorrKeyPair,
    SchnorrPublicKey,
    SchnorrSignature,
    rsa_hash,
    rsa_keygen,
    rsa_verify,
    schnorr_challenge,
    schnorr_respond,
    schnorr_verify,
)
from blindlab.core_math import DEFAULT_HASH, HashSpec, NotInvertibleError, SeededRng, mod_inv


class ProtocolStateError(RuntimeError):
    """A protocol step was called out of order or replayed."""


class UnknownAttributeError(KeyError):
    pass


@dataclass(frozen=True)
class Message:
    """One protocol message as the transcript records it."""

    direction: str  # "U->S" or "S->U"
    step: str
    payload: int


@dataclass
class Transcript:
    session_id: int
    messages: list[Message] = field(default_factory=list)

    def to_lines(self) -> list[str]:
        return [
            textfmt.record(session=self.session_id, dir=m.direction, step=m.step, payload=m.payload)
            for m in self.messages
        ]

    def payload(self, step: str) -> int:
        return next(m.payload for m in self.messages if m.step == step)


def transcripts_to_text(transcripts) -> str:
    return "".join(line + "\n" for t in transcripts for line in t.to_lines())


def transcripts_from_text(text: str) -> list[Transcript]:
    by_id: dict[int, Transcript] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = textfmt.parse_record(line)
        sid = int(rec["session"])
        t = by_id.setdefault(sid, Transcript(sid))
        t.messages.append(Message(rec["dir"], rec["step"], int(rec["payload"])))
    return list(by_id.values())


class _Ledger:
    """Append-only record of signer sessions; appends are serialized."""

    def __init__(self):
        self._lock = threading.Lock()
        self._next_id = 0
        self.transcripts: list[Transcript] = []
        self.completed = 0

    def open(self) -> Transcript:
        with self._lock:
            t = Transcript(self._next_id)
            self._next_id += 1
            self.transcripts.append(t)
            return t

    def mark_completed(self) -> None:
        with self._lock:
            self.completed += 1


class _Session:
    def __init__(self, steps):
        self._steps = list(steps)
        self._pos = 0

    def _advance(self, step: str) -> None:
        if self._pos >= len(self._steps) or self._steps[self._pos] != step:
            expected = self._steps[self._pos] if self._pos < len(self._steps) else "nothing (session finished)"
            raise ProtocolStateError(f"step {step!r} out of order; expected {expected}")
        self._pos += 1

    @property
    def finished(self) -> bool:
        return self._pos == len(self._steps)


# ------------------------------------------------------------- naive RSA


def rsa_naive_blind_demo(m: int, r: int, key: RsaKeyPair) -> tuple[int, int, int]:
    """Blind, sign and unblind the raw integer `m`; returns (m', s', s)."""
    n = key.n
    if math.gcd(r, n) != 1:
        raise NotInvertibleError("blinding factor must be coprime to n")
    m_blind = m * pow(r, key.e, n) % n
    s_blind = pow(m_blind, key.d, n)
    s = s_blind * mod_inv(r, n) % n
    return m_blind, s_blind, s


class NaiveRsaOracle:
    """Signer that raises anything it is sent to the private exponent.

    Every query is logged so attacks can prove what was (not) asked.
    """

    def __init__(self, key: RsaKeyPair):
        self._key = key
        self.public = key.public
        self.queries: list[int] = []

    def __call__(self, x: int) -> int:
        self.queries.append(x % self._key.n)
        return pow(x, self._key.d, self._key.n)


def rsa_naive_decrypt_attack(c: int, public: RsaPublicKey, signer_oracle, rng: SeededRng) -> int:
    """Recover m from c = m^e mod n by getting a blinded c signed."""
    n = public.n
    r = rng.unit(n)
    c_blind = c * pow(r, public.e, n) % n
    s_blind = signer_oracle(c_blind)
    return s_blind * mod_inv(r, n) % n


def rsa_naive_multiplicative_forgery(
    m: int,
    public: RsaPublicKey,
    signer_oracle,
    rng: SeededRng | None = None,
    m1: int | None = None,
) -> int:
    """Forge the naive signature on `m` from signatures on m1 and m/m1."""
    n = public.n
    if math.gcd(m, n) != 1:
        raise NotInvertibleError("target message must be a unit mod n")
    if m1 is None:
        rng = rng or SeededRng(0)
        while True:
            m1 = rng.unit(n)
            if m1 not in (1, m % n):
                break
    m2 = m * mod_inv(m1, n) % n
    s1 = signer_oracle(m1)
    s2 = signer_oracle(m2)
    return s1 * s2 % n


def rsa_naive_verify(m: int, s: int, public: RsaPublicKey) -> bool:
    return pow(s, public.e, public.n) == m % public.n


# -------------------------------------------------------------- RSA-FDH


@dataclass(frozen=True)
class BlindSignatureOutput:
    message: bytes
    signature: object
    transcript_id: int
    attribute: str | None = None


class RsaBlindSigner:
    def __init__(self, key: RsaKeyPair):
        self._key = key
        self.public = key.public
        self.ledger = _Ledger()

    def open_session(self) -> "RsaSignerSession":
        return RsaSignerSession(self._key, self.ledger)


class RsaSignerSession(_Session):
    def __init__(self, key: RsaKeyPair, ledger: _Ledger):
        super().__init__(["sign"])
        self._key = key
        self._ledger = ledger
        self.transcript = ledger.open()

    def sign(self, m_blind: int) -> int:
        self._advance("sign")
        n = self._key.n
        if not 0 <= m_blind < n:
            raise ValueError("blinded message out of range")
        s_blind = pow(m_blind, self._key.d, n)
        self.transcript.messages.append(Message("U->S", "blinded", m_blind))
        self.transcript.messages.append(Message("S->U", "signed", s_blind))
        self._ledger.mark_completed()
        return s_blind


class RsaBlindUserSession(_Session):
    """User side: blind() then unblind().  m and r never leave this object."""

    def __init__(self, public: RsaPublicKey, message: bytes, rng: SeededRng, spec: HashSpec = DEFAULT_HASH):
        super().__init__(["blind", "unblind"])
        self.public = public
        self.message = message
        self.spec = spec
        self._r = rng.unit(public.n)
        self._h = rsa_hash(message, public.n, spec)

    def blind(self) -> int:
        self._advance("blind")
        n = self.public.n
        return self._h * pow(self._r, self.public.e, n) % n

    def unblind(self, s_blind: int) -> int:
        self._advance("unblind")
        s = s_blind * mod_inv(self._r, self.public.n) % self.public.n
        if not rsa_verify(self.message, s, self.public, self.spec):
            raise ValueError("signer returned an invalid blind signature")
        return s


def rsa_fdh_blind_run(
    m: bytes,
    key: RsaKeyPair | None = None,
    rng: SeededRng | None = None,
    spec: HashSpec = DEFAULT_HASH,
    signer: RsaBlindSigner | None = None,
) -> BlindSignatureOutput:
    """One full blind RSA-FDH session; returns a signature s with s^e = H(m)."""
    signer = signer or RsaBlindSigner(key)
    rng = rng or SeededRng(0)
    user = RsaBlindUserSession(signer.public, m, rng, spec)
    session = signer.open_session()
    s_blind = session.sign(user.blind())
    s = user.unblind(s_blind)
    return BlindSignatureOutput(m, s, session.transcript.session_id)


def blindness_witness_rsa(view: tuple[int, int], pair: tuple[bytes, int], public: RsaPublicKey, spec: HashSpec = DEFAULT_HASH) -> bool:
    """True iff some unit r links the signer view (m', s') to (m, s)."""
    m_blind, s_blind = view
    m, s = pair
    n = public.n
    if math.gcd(s, n) != 1:
        return False
    r = s_blind * mod_inv(s, n) % n
    return math.gcd(r, n) == 1 and rsa_hash(m, n, spec) * pow(r, public.e, n) % n == m_blind


# ------------------------------------------------------------ blind Schnorr


class SchnorrBlindSigner:
    def __init__(self, key: SchnorrKeyPair, rng: SeededRng):
        self._key = key
        self._rng = rng
        self.public = key.public
        self.ledger = _Ledger()

    @property
    def responses(self) -> int:
        return self.ledger.completed

    def open_session(self, nonce: int | None = None) -> "SchnorrSignerSession":
        r = self._rng.randrange(1, self._key.group.q) if nonce is None else nonce
        return SchnorrSignerSession(self._key, r, self.ledger)


class SchnorrSignerSession(_Session):
    def __init__(self, key: SchnorrKeyPair, nonce: int, ledger: _Ledger):
        super().__init__(["commit", "respond"])
        self._key = key
        self._r = nonce % key.group.q
        self._ledger = ledger
        self.transcript = ledger.open()

    def commit(self) -> int:
        self._advance("commit")
        grp = self._key.group
        R = pow(grp.g, self._r, grp.p)
        self.transcript.messages.append(Message("S->U", "commit", R))
        return R

    def respond(self, c: int) -> int:
        self._advance("respond")
        q = self._key.group.q
        s = schnorr_respond(self._r, c % q, self._key.x, q)
        self.transcript.messages.append(Message("U->S", "challenge", c % q))
        self.transcript.messages.append(Message("S->U", "response", s))
        self._ledger.mark_completed()
        return s


class SchnorrBlindUserSession(_Session):
    """User side: challenge(R) then finish(s).  alpha, beta stay local."""

    def __init__(
        self,
        public: SchnorrPublicKey,
        message: bytes,
        rng: SeededRng,
        spec: HashSpec = DEFAULT_HASH,
        alpha: int | None = None,
        beta: int | None = None,
    ):
        super().__init__(["challenge", "finish"])
        q = public.group.q
        self.public = public
        self.message = message
        self.spec = spec
        # 0 is a legal blinding factor; correctness holds for every value
        self._alpha = rng.randrange(q) if alpha is None else alpha % q
        self._beta = rng.randrange(q) if beta is None else beta % q
        self._R_blind: int | None = None

    def challenge(self, R: int) -> int:
        self._advance("challenge")
        grp = self.public.group
        if not grp.contains(R):
            raise ValueError("commitment is not a subgroup element")
        self._R_blind = R * pow(grp.g, self._alpha, grp.p) * pow(self.public.X, self._beta, grp.p) % grp.p
        c_local = schnorr_challenge(self._R_blind, self.message, grp, self.spec)
        return (c_local + self._beta) % grp.q

    def finish(self, s: int) -> SchnorrSignature:
        self._advance("finish")
        sig = SchnorrSignature(self._R_blind, (s + self._alpha) % self.public.group.q)
        if not schnorr_verify(self.message, sig, self.public, self.spec):
            raise ValueError("signer returned an invalid response")
        return sig


def schnorr_blind_run(
    m: bytes,
    key: SchnorrKeyPair | None = None,
    rng: SeededRng | None = None,
    spec: HashSpec = DEFAULT_HASH,
    signer: SchnorrBlindSigner | None = None,
    alpha: int | None = None,
    beta: int | None = None,
) -> BlindSignatureOutput:
    """Full three-move blind Schnorr session: R, then c, then s."""
    rng = rng or SeededRng(0)
    signer = signer or SchnorrBlindSigner(key, rng)
    user = SchnorrBlindUserSession(signer.public, m, rng, spec, alpha, beta)
    session = signer.open_session()
    c = user.challenge(session.commit())
    sig = user.finish(session.respond(c))
    return BlindSignatureOutput(m, sig, session.transcript.session_id)


def blindness_witness_schnorr(
    transcript: tuple[int, int, int],
    pair: tuple[bytes, SchnorrSignature],
    public: SchnorrPublicKey,
    spec: HashSpec = DEFAULT_HASH,
) -> bool:
    """Does a blinding (alpha, beta) exist mapping the view (R, c, s) to the pair?

    alpha = s' - s and beta = c - H(R', m) are forced; the pair is consistent
    with the view iff R' = R * g^alpha * X^beta.
    """
    R, c, s = transcript
    m, sig = pair
    grp = public.group
    alpha = (sig.s - s) % grp.q
    beta = (c - schnorr_challenge(sig.R, m, grp, spec)) % grp.q
    rhs = R * pow(grp.g, alpha, grp.p) * pow(public.X, beta, grp.p) % grp.p
    return rhs == sig.R % grp.p


def view_of(transcript: Transcript) -> tuple[int, int, int]:
    """(R, c, s) from a blind Schnorr signer transcript."""
    return transcript.payload("commit"), transcript.payload("challenge"), transcript.payload("response")


def one_more_violation(signer, signatures) -> bool:
    """True when more distinct valid signatures exist than completed sessions.

    `signatures` is an iterable of (message, signature) already checked valid
    by the caller.
    """
    distinct = {(m, repr(sig)) for m, sig in signatures}
    return len(distinct) > signer.ledger.completed


# ------------------------------------------------------ partial blindness


class AttributeKeyRing:
    """Independent RSA key per public attribute string (denomination, expiry).

    The attribute -> public key binding is what gets published.
    """

    def __init__(self, bits_per_prime: int = 64, e: int = 65537, rng: SeededRng | None = None):
        self.bits_per_prime = bits_per_prime
        self.e = e
        self._rng = rng or SeededRng(0)
        self._keys: dict[str, RsaKeyPair] = {}
        self._signers: dict[str, RsaBlindSigner] = {}

    def register(self, attribute: str) -> RsaPublicKey:
        if attribute not in self._keys:
            key = rsa_keygen(self.bits_per_prime, self.e, self._rng.spawn(f"attr:{attribute}"))
            self._keys[attribute] = key
            self._signers[attribute] = RsaBlindSigner(key)
        return self._keys[attribute].public

    def public_for(self, attribute: str) -> RsaPublicKey:
        try:
            return self._keys[attribute].public
        except KeyError:
            raise UnknownAttributeError(attribute) from None

    def signer_for(self, attribute: str) -> RsaBlindSigner:
        try:
            return self._signers[attribute]
        except KeyError:
            raise UnknownAttributeError(attribute) from None

    def published(self) -> dict[str, RsaPublicKey]:
        return {a: k.public for a, k in self._keys.items()}


def partial_blind_issue(
    m: bytes, attribute: str, ring: AttributeKeyRing, rng: SeededRng, spec: HashSpec = DEFAULT_HASH
) -> BlindSignatureOutput:
    signer = ring.signer_for(attribute)
    out = rsa_fdh_blind_run(m, rng=rng, spec=spec, signer=signer)
    return BlindSignatureOutput(m, out.signature, out.transcript_id, attribute)


def partial_blind_verify(
    m: bytes, signature: int, attribute: str, published: dict[str, RsaPublicKey], spec: HashSpec = DEFAULT_HASH
) -> bool:
    public = published.get(attribute)
    return public is not None and rsa_verify(m, signature, public, spec)
