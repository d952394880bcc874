"""Coins, serial numbers, linking tags and double-spender identification.

A coin of value N carries a secret seed.  Its serials are SN_j = PRF(seed, j)
for j < N and the bank blind-signs the Merkle root of those serials under the
key for the public attribute "value:N|expiry:DATE".

Every disclosed serial carries a tag T = usk * H(info, SN) + k_SN (mod q)
with k_SN = PRF(seed, "tag", SN).  One tag reveals nothing about usk, but two
tags for the same serial under different info give two linear equations in
(usk, k_SN), which identify() solves.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

from blindlab.core_math import DEFAULT_HASH, SchnorrGroup, encode, hash_to_range, mod_inv

SERIAL_BITS = 128
TAG_PRF = b"\x30"
TAG_LEAF = b"\x31"
TAG_NODE = b"\x32"
TAG_LINK = b"\x33"


class OverspendError(ValueError):
    pass


def prf(seed: int, *inputs, modulus: int = 2**SERIAL_BITS) -> int:
    return hash_to_range(TAG_PRF + encode(seed, list(inputs)), modulus)


def derive_serials(seed: int, index: int, count: int, value: int) -> list[int]:
    """SN_j = PRF(seed, j) for j in [index, index + count)."""
    if index < 0 or count < 0 or index + count > value:
        raise OverspendError(f"serials {index}..{index + count - 1} exceed coin value {value}")
    serials = [prf(seed, j) for j in range(index, index + count)]
    if len(set(serials)) != len(serials):
        raise ValueError("serial collision inside one coin")
    return serials


def attribute_for(value: int, expiry: str) -> str:
    dt.date.fromisoformat(expiry)
    return f"value:{value}|expiry:{expiry}"


def parse_attribute(attribute: str) -> tuple[int, str]:
    fields = dict(part.split(":", 1) for part in attribute.split("|"))
    return int(fields["value"]), fields["expiry"]


# ----------------------------------------------------------------- Merkle


def _leaf(sn: int) -> bytes:
    return DEFAULT_HASH.stream(TAG_LEAF + encode(sn), 32)


def _node(a: bytes, b: bytes) -> bytes:
    return DEFAULT_HASH.stream(TAG_NODE + a + b, 32)


def merkle_levels(serials: list[int]) -> list[list[bytes]]:
    level = [_leaf(s) for s in serials]
    levels = [level]
    while len(level) > 1:
        if len(level) % 2:
            level = level + [level[-1]]
        level = [_node(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        levels.append(level)
    return levels


def merkle_root(serials: list[int]) -> bytes:
    return merkle_levels(serials)[-1][0]


def merkle_proof(levels: list[list[bytes]], index: int) -> list[str]:
    path = []
    for level in levels[:-1]:
        padded = level + [level[-1]] if len(level) % 2 else level
        path.append(padded[index ^ 1].hex())
        index //= 2
    return path


def merkle_verify(root: bytes, sn: int, index: int, path: list[str]) -> bool:
    h = _leaf(sn)
    for sibling in path:
        sib = bytes.fromhex(sibling)
        h = _node(h, sib) if index % 2 == 0 else _node(sib, h)
        index //= 2
    return h == root


# ------------------------------------------------------------------ tags


def link_hash(info: str, sn: int, q: int) -> int:
    return hash_to_range(TAG_LINK + encode(info, sn), q)


def link_tag(usk: int, seed: int, sn: int, info: str, q: int) -> int:
    return (usk * link_hash(info, sn, q) + prf(seed, "tag", sn, modulus=q)) % q


@dataclass
class Coin:
    """User-side coin; `seed` never leaves the owner's wallet."""

    label: str
    issuer: str
    value: int
    expiry: str
    seed: int
    root: bytes
    signature: int
    spent: int = 0

    @property
    def attribute(self) -> str:
        return attribute_for(self.value, self.expiry)

    @property
    def remaining(self) -> int:
        return self.value - self.spent

    def serials(self) -> list[int]:
        return derive_serials(self.seed, 0, self.value, self.value)


def new_coin_secrets(value: int, rng) -> tuple[int, list[int], bytes]:
    seed = rng.getrandbits(128)
    serials = derive_serials(seed, 0, value, value)
    return seed, serials, merkle_root(serials)


@dataclass
class SpendTranscript:
    """What the merchant receives: V serials with tags, plus validity evidence.

    The evidence is the coin's signed Merkle root and one opening per serial.
    """

    V: int
    info: str
    merchant: str
    issuer: str
    attribute: str
    root: str  # hex
    signature: int
    entries: list[dict] = field(default_factory=list)  # {sn, tag, index, path}

    @property
    def serials(self) -> list[int]:
        return [e["sn"] for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "V": self.V,
            "info": self.info,
            "merchant": self.merchant,
            "issuer": self.issuer,
            "attribute": self.attribute,
            "root": self.root,
            "signature": self.signature,
            "entries": self.entries,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpendTranscript":
        return cls(**d)

    def tid(self) -> str:
        return DEFAULT_HASH.stream(encode(self.info, self.merchant, self.serials, self.root), 8).hex()


def make_spend(coin: Coin, usk: int, q: int, V: int, info: str, merchant: str, index: int | None = None) -> SpendTranscript:
    """Disclose V serials starting at `index` (default: the coin's spent counter)."""
    start = coin.spent if index is None else index
    serials = derive_serials(coin.seed, start, V, coin.value)
    levels = merkle_levels(coin.serials())
    entries = [
        {"sn": sn, "tag": link_tag(usk, coin.seed, sn, info, q), "index": start + i, "path": merkle_proof(levels, start + i)}
        for i, sn in enumerate(serials)
    ]
    return SpendTranscript(V, info, merchant, coin.issuer, coin.attribute, coin.root.hex(), coin.signature, entries)


def check_transcript(tr: SpendTranscript, verify_sig, today: str | None = None) -> str | None:
    """None when valid, otherwise a short reason."""
    try:
        value, expiry = parse_attribute(tr.attribute)
    except (KeyError, ValueError):
        return "bad-attribute"
    if tr.V != len(tr.entries) or tr.V < 1:
        return "bad-length"
    if len(set(tr.serials)) != len(tr.serials):
        return "repeated-serial"
    if today is not None and dt.date.fromisoformat(today) > dt.date.fromisoformat(expiry):
        return "expired"
    root = bytes.fromhex(tr.root)
    if not verify_sig(root, tr.signature, tr.attribute):
        return "bad-signature"
    for e in tr.entries:
        if not 0 <= e["index"] < value or not merkle_verify(root, e["sn"], e["index"], e["path"]):
            return "bad-opening"
    return None


@dataclass(frozen=True)
class IdentifyResult:
    kind: str  # "double-spend", "replay" or "disjoint"
    upk: int | None = None
    serial: int | None = None


def identify(t1: SpendTranscript, t2: SpendTranscript, group: SchnorrGroup) -> IdentifyResult:
    """Recover the spender's public key g^usk from a serial shown under two infos."""
    q = group.q
    tags1 = {e["sn"]: e["tag"] for e in t1.entries}
    shared = [e for e in t2.entries if e["sn"] in tags1]
    if not shared:
        return IdentifyResult("disjoint")
    if t1.info == t2.info:
        return IdentifyResult("replay", serial=shared[0]["sn"])
    for e in shared:
        sn = e["sn"]
        dh = (link_hash(t1.info, sn, q) - link_hash(t2.info, sn, q)) % q
        if dh == 0:
            continue
        usk = (tags1[sn] - e["tag"]) * mod_inv(dh, q) % q
        return IdentifyResult("double-spend", pow(group.g, usk, group.p), sn)
    return IdentifyResult("replay", serial=shared[0]["sn"])
