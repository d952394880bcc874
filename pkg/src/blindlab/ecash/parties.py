"""Bank, user, merchant and trader state machines."""

from __future__ import annotations

from dataclasses import dataclass, field

from blindlab.blind_sig import AttributeKeyRing, RsaBlindUserSession, partial_blind_verify
from blindlab.classic_sig import (
    RsaPublicKey,
    SchnorrPublicKey,
    SchnorrSignature,
    schnorr_keygen,
    schnorr_sign,
    schnorr_verify,
)
from blindlab.core_math import SchnorrGroup, encode
from blindlab.ecash.harness import Party, ProtocolAbort
from blindlab.ecash.primitives import (
    Coin,
    SpendTranscript,
    attribute_for,
    check_transcript,
    identify,
    make_spend,
    new_coin_secrets,
    parse_attribute,
)


@dataclass
class Directory:
    """Public bulletin board: group, issuer keys, trader fees, current date."""

    group: SchnorrGroup
    today: str = "2026-01-01"
    bank: str = "bank"
    issuer_keys: dict = field(default_factory=dict)  # issuer -> {attribute: RsaPublicKey}
    order_keys: dict = field(default_factory=dict)  # trader -> SchnorrPublicKey
    fees: dict = field(default_factory=dict)  # trader -> fee

    def publish(self, issuer: str, attribute: str, public: RsaPublicKey) -> None:
        self.issuer_keys.setdefault(issuer, {})[attribute] = public

    def verifier(self, issuer: str):
        def verify(root: bytes, signature: int, attribute: str) -> bool:
            return partial_blind_verify(root, signature, attribute, self.issuer_keys.get(issuer, {}))

        return verify


def _check(tr: SpendTranscript, directory: Directory, issuer: str) -> None:
    if tr.issuer != issuer:
        raise ProtocolAbort(f"coin issued by {tr.issuer}, expected {issuer}")
    reason = check_transcript(tr, directory.verifier(issuer), directory.today)
    if reason:
        raise ProtocolAbort(reason)


class _Issuer(Party):
    """Holds one blind-RSA key per coin attribute."""

    def __init__(self, name, net, rng, directory: Directory, bits_per_prime: int = 64):
        super().__init__(name, net, rng)
        self.directory = directory
        self.ring = AttributeKeyRing(bits_per_prime, rng=rng.spawn("keys"))

    def on_key(self, payload, src):
        attribute = payload["attribute"]
        parse_attribute(attribute)
        public = self.ring.register(attribute)
        self.directory.publish(self.name, attribute, public)
        return {"n": public.n, "e": public.e}

    def _blind_sign(self, attribute: str, blinded: int) -> int:
        return self.ring.signer_for(attribute).open_session().sign(blinded)


class Bank(_Issuer):
    role = "bank"

    def __init__(self, name, net, rng, directory, bits_per_prime: int = 64):
        super().__init__(name, net, rng, directory, bits_per_prime)
        self.accounts: dict[str, int] = {}
        self.owners: dict[int, str] = {}  # upk -> account name
        self.L: dict[int, dict] = {}  # serial -> deposit record
        self.deposited_infos: set[tuple[str, str]] = set()
        self.stored: list[dict] = []  # (V, info, mpk, Z, Pi) per accepted deposit
        self.withdraw_views: list[dict] = []
        self.reports: list[dict] = []

    def on_open_account(self, payload, src):
        if src in self.accounts:
            raise ProtocolAbort("account exists")
        self.accounts[src] = payload.get("balance", 0)
        if payload.get("upk") is not None:
            self.owners[payload["upk"]] = src
        return {"balance": self.accounts[src]}

    def on_withdraw(self, payload, src):
        attribute = payload["attribute"]
        value, _ = parse_attribute(attribute)
        if self.accounts.get(src, 0) < value:
            raise ProtocolAbort("insufficient-funds")
        signed = self._blind_sign(attribute, payload["blinded"])
        self.accounts[src] -= value
        self.withdraw_views.append({"user": src, "attribute": attribute, "blinded": payload["blinded"], "signed": signed})
        return {"signed": signed}

    def on_deposit(self, payload, src):
        tr = SpendTranscript.from_dict(payload["transcript"])
        if tr.merchant != src:
            return {"status": "rejected", "reason": "wrong-merchant"}
        if (src, tr.info) in self.deposited_infos:
            return {"status": "rejected", "reason": "info-already-deposited"}
        reason = check_transcript(tr, self.directory.verifier(self.name), self.directory.today)
        if tr.issuer != self.name:
            reason = "wrong-issuer"
        if reason:
            return {"status": "rejected", "reason": reason}
        clash = next((self.L[sn] for sn in tr.serials if sn in self.L), None)
        if clash is not None:
            first = SpendTranscript.from_dict(clash["transcript"])
            res = identify(first, tr, self.directory.group)
            report = {
                "status": "double-spend" if res.kind == "double-spend" else "rejected",
                "reason": res.kind,
                "upk": res.upk,
                "cheater": self.owners.get(res.upk),
                "serial": res.serial,
                "first": first.tid(),
                "second": tr.tid(),
            }
            self.reports.append(report)
            return report
        record = {"transcript": tr.to_dict(), "merchant": src}
        for sn in tr.serials:
            self.L[sn] = record
        self.deposited_infos.add((src, tr.info))
        self.stored.append({"V": tr.V, "info": tr.info, "mpk": src, "Z": tr.serials, "tid": tr.tid()})
        self.accounts[src] = self.accounts.get(src, 0) + tr.V
        return {"status": "accepted", "value": tr.V}

    def on_transfer(self, payload, src):
        amount, to = payload["amount"], payload["to"]
        if amount < 0 or self.accounts.get(src, 0) < amount:
            raise ProtocolAbort("insufficient-funds")
        if to not in self.accounts:
            raise ProtocolAbort("unknown-account")
        self.accounts[src] -= amount
        self.accounts[to] += amount
        return {"balance": self.accounts[src]}


class User(Party):
    role = "user"

    def __init__(self, name, net, rng, directory: Directory):
        super().__init__(name, net, rng)
        self.directory = directory
        grp = directory.group
        self.usk = rng.randrange(1, grp.q)
        self.upk = pow(grp.g, self.usk, grp.p)
        self.wallet: dict[str, Coin] = {}
        self.history: dict[str, list[tuple[int, int]]] = {}  # label -> [(index, V)]

    def _obtain_coin(self, issuer: str, label: str, value: int, expiry: str, request: dict, kind: str) -> Coin:
        attribute = attribute_for(value, expiry)
        key = self.call(issuer, "key", {"attribute": attribute})
        public = RsaPublicKey(key["e"], key["n"])
        seed, _, root = new_coin_secrets(value, self.rng)
        session = RsaBlindUserSession(public, root, self.rng)
        reply = self.call(issuer, kind, dict(request, attribute=attribute, blinded=session.blind()))
        signature = session.unblind(reply["signed"])
        coin = Coin(label, issuer, value, expiry, seed, root, signature)
        self.wallet[label] = coin
        return coin

    def withdraw(self, bank: str, label: str, value: int, expiry: str) -> Coin:
        if label in self.wallet:
            raise ValueError(f"coin label {label!r} in use")
        return self._obtain_coin(bank, label, value, expiry, {}, "withdraw")

    def _transcript(self, coin: Coin, V: int, info: str, merchant: str, replay: bool) -> tuple[SpendTranscript, int]:
        past = self.history.setdefault(coin.label, [])
        if replay:
            if not past:
                raise ValueError(f"nothing to replay for {coin.label}")
            index = past[-1][0]
        else:
            if V > coin.remaining:
                raise ProtocolAbort("insufficient-value")
            index = coin.spent
        return make_spend(coin, self.usk, self.directory.group.q, V, info, merchant, index), index

    def _commit(self, coin: Coin, index: int, V: int, replay: bool) -> None:
        """Advance the spent counter once the counterparty accepted."""
        if not replay:
            coin.spent += V
            self.history[coin.label].append((index, V))

    def spend(self, label: str, V: int, merchant: str, replay: bool = False) -> SpendTranscript:
        coin = self.wallet[label]
        info = self.call(merchant, "quote", {"V": V})["info"]
        tr, index = self._transcript(coin, V, info, merchant, replay)
        self.call(merchant, "pay", {"transcript": tr.to_dict()})
        self._commit(coin, index, V, replay)
        return tr

    def trader_join(self, label: str, trader: str, new_label: str) -> Coin:
        coin = self.wallet[label]
        V = coin.remaining
        info = self.call(trader, "quote", {"V": V})["info"]
        tr, index = self._transcript(coin, V, info, trader, False)
        value = V - self.directory.fees[trader]
        new = self._obtain_coin(trader, new_label, value, coin.expiry, {"transcript": tr.to_dict()}, "join")
        self._commit(coin, index, V, False)
        return new

    def trader_spend(self, label: str, V: int, merchant: str, trader: str, replay: bool = False) -> dict:
        coin = self.wallet[label]
        order = self.call(merchant, "order", {"V": V, "trader": trader})["order"]
        tr, index = self._transcript(coin, V, order, merchant, replay)
        sig = self.call(trader, "spend", {"transcript": tr.to_dict()})
        self._commit(coin, index, V, replay)
        receipt = {"order": order, "V": V, "trader": trader, "R": sig["R"], "s": sig["s"]}
        self.call(merchant, "receipt", receipt)
        return receipt

    def trader_redeem(self, label: str, trader: str) -> dict:
        coin = self.wallet[label]
        V = coin.remaining
        info = self.call(trader, "quote", {"V": V})["info"]
        tr, index = self._transcript(coin, V, info, trader, False)
        res = self.call(trader, "redeem", {"transcript": tr.to_dict()})
        self._commit(coin, index, V, False)
        return res


class Merchant(Party):
    role = "merchant"

    def __init__(self, name, net, rng, directory: Directory):
        super().__init__(name, net, rng)
        self.directory = directory
        self.counter = 0
        self.issued: set[str] = set()
        self.pending: list[dict] = []
        self.receipts: list[dict] = []
        self.results: list[dict] = []

    def _fresh(self, prefix: str) -> str:
        self.counter += 1
        info = f"{prefix}:{self.name}:{self.counter}:{self.rng.getrandbits(32):08x}"
        self.issued.add(info)
        return info

    def on_quote(self, payload, src):
        return {"info": self._fresh("info")}

    def on_pay(self, payload, src):
        tr = SpendTranscript.from_dict(payload["transcript"])
        if tr.info not in self.issued or tr.merchant != self.name:
            raise ProtocolAbort("unknown-info")
        self.issued.discard(tr.info)
        _check(tr, self.directory, self.directory.bank)
        self.pending.append(tr.to_dict())
        return {"accepted": True}

    def on_order(self, payload, src):
        return {"order": self._fresh("order")}

    def on_receipt(self, payload, src):
        trader = payload["trader"]
        public = self.directory.order_keys.get(trader)
        if public is None:
            raise ProtocolAbort("unknown-trader")
        if payload["order"] not in self.issued:
            raise ProtocolAbort("unknown-order")
        msg = encode(payload["order"], self.name, payload["V"])
        if not schnorr_verify(msg, SchnorrSignature(payload["R"], payload["s"]), public):
            raise ProtocolAbort("bad-order-signature")
        self.issued.discard(payload["order"])
        self.receipts.append(payload)
        return {"shipped": True}

    def deposit(self, bank: str) -> list[dict]:
        out = []
        pending, self.pending = self.pending, []
        for tr in pending:
            res = self.call(bank, "deposit", {"transcript": tr})
            res["V"] = tr["V"]
            out.append(res)
        self.results.extend(out)
        return out

    def trader_redeem(self, trader: str) -> dict:
        return self.call(trader, "redeem", {})


class Trader(_Issuer):
    role = "trader"

    def __init__(self, name, net, rng, directory, fee: int = 1, bits_per_prime: int = 64):
        super().__init__(name, net, rng, directory, bits_per_prime)
        self.fee = fee
        self.bank = directory.bank
        self.key = schnorr_keygen(directory.group, rng.spawn("order-key"))
        directory.order_keys[name] = SchnorrPublicKey(directory.group, self.key.X)
        directory.fees[name] = fee
        self.counter = 0
        self.issued: set[str] = set()
        self.bank_serials: set[int] = set()  # bank-coin serials taken in
        self.spent: set[int] = set()  # local trader-coin spent database
        self.held: list[dict] = []  # bank transcripts not yet deposited
        self.credits: dict[str, int] = {}
        self.fees_collected = 0
        self.refusals: list[dict] = []

    def on_quote(self, payload, src):
        self.counter += 1
        info = f"trader:{self.name}:{self.counter}:{self.rng.getrandbits(32):08x}"
        self.issued.add(info)
        return {"info": info}

    def _take_info(self, info: str):
        if info not in self.issued:
            raise ProtocolAbort("unknown-info")
        self.issued.discard(info)

    def on_join(self, payload, src):
        tr = SpendTranscript.from_dict(payload["transcript"])
        self._take_info(tr.info)
        _check(tr, self.directory, self.bank)
        if any(sn in self.bank_serials for sn in tr.serials):
            self.refusals.append({"party": src, "reason": "spent-serial"})
            raise ProtocolAbort("spent-serial")
        value, expiry = parse_attribute(payload["attribute"])
        _, bank_expiry = parse_attribute(tr.attribute)
        if value != tr.V - self.fee or value < 1 or expiry != bank_expiry:
            raise ProtocolAbort("bad-exchange-terms")
        signed = self._blind_sign(payload["attribute"], payload["blinded"])
        self.bank_serials.update(tr.serials)
        self.held.append(tr.to_dict())
        self.fees_collected += self.fee
        return {"signed": signed}

    def on_spend(self, payload, src):
        tr = SpendTranscript.from_dict(payload["transcript"])
        _check(tr, self.directory, self.name)
        if any(sn in self.spent for sn in tr.serials):
            self.refusals.append({"party": src, "reason": "spent-serial"})
            raise ProtocolAbort("spent-serial")
        self.spent.update(tr.serials)
        self.credits[tr.merchant] = self.credits.get(tr.merchant, 0) + tr.V
        sig = schnorr_sign(encode(tr.info, tr.merchant, tr.V), self.key, self.rng)
        return {"R": sig.R, "s": sig.s}

    def on_redeem(self, payload, src):
        if "transcript" in payload:
            tr = SpendTranscript.from_dict(payload["transcript"])
            self._take_info(tr.info)
            _check(tr, self.directory, self.name)
            if any(sn in self.spent for sn in tr.serials):
                self.refusals.append({"party": src, "reason": "spent-serial"})
                raise ProtocolAbort("spent-serial")
            self.spent.update(tr.serials)
            amount = tr.V
        else:
            amount = self.credits.get(src, 0)
        payout = amount - self.fee
        if payout < 1:
            raise ProtocolAbort("nothing-to-redeem")
        self.settle()
        self.call(self.bank, "transfer", {"to": src, "amount": payout})
        if "transcript" not in payload:
            self.credits[src] = 0
        self.fees_collected += self.fee
        return {"paid": payout}

    def settle(self) -> None:
        """Deposit every held bank transcript into the trader's own account."""
        held, self.held = self.held, []
        for tr in held:
            res = self.call(self.bank, "deposit", {"transcript": tr})
            if res["status"] != "accepted":
                raise ProtocolAbort("insolvent: reserve coin rejected")
