"""Line-oriented scenario scripts driving the harness.

Commands (one per line, ``#`` starts a comment, options are ``key=value``)::

    party bank <name>
    party user <name> [balance=N]
    party merchant <name>
    party trader <name> [fee=N]
    date YYYY-MM-DD
    withdraw <user> <label> <value> <expiry>
    spend <user> <label> <V> <merchant> [mode=replay]
    deposit <merchant>
    trader-join <user> <label> <trader> <new-label>
    trader-spend <user> <label> <V> <merchant> <trader> [mode=replay]
    trader-redeem <party> <trader> [label]
    mark <name>
    assert <check> [args...]

Checks: no-identify, identify <user>, all-deposited, conservation,
bank-silent <mark> <mark>, refused <n>, balance <party> <n>, fees <trader> <n>.
"""

from __future__ import annotations

import datetime as dt
import shlex
from dataclasses import dataclass, field
from importlib import resources

from blindlab import textfmt
from blindlab.core_math import SeededRng, gen_schnorr_group
from blindlab.ecash.harness import Network, ProtocolAbort, UnknownParty
from blindlab.ecash.parties import Bank, Directory, Merchant, Trader, User


class ScenarioError(ValueError):
    pass


BUNDLED = ("honest_day", "double_spender", "trader_community", "trader_double_spend")


def bundled_script(name: str) -> str:
    name = name.removesuffix(".scn")
    path = resources.files("blindlab.ecash").joinpath("scenarios", name + ".scn")
    if not path.is_file():
        raise ScenarioError(f"no bundled scenario {name!r}")
    return path.read_text()


@dataclass
class ScenarioResult:
    trace: list[str]
    ledgers: str
    assertions: list[tuple[str, bool, str]] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _ in self.assertions)

    @property
    def trace_text(self) -> str:
        return "".join(line + "\n" for line in self.trace)


class Runner:
    def __init__(self, seed: int, q_bits: int = 64, p_bits: int = 256):
        self.rng = SeededRng(seed)
        self.net = Network()
        self.q_bits, self.p_bits = q_bits, p_bits
        self.directory: Directory | None = None
        self.bank: Bank | None = None
        self.initial_total = 0
        self.spent_value = 0  # bank-coin value handed to merchants and traders
        self.deposited_value = 0
        self.rejected_deposits = 0
        self.identify_events: list[dict] = []
        self.refusals = 0
        self.aborts = 0
        self.marks: dict[str, int] = {}

    # ------------------------------------------------------------ setup

    def _dir(self) -> Directory:
        if self.directory is None:
            group = gen_schnorr_group(self.q_bits, self.p_bits, self.rng.spawn("group"))
            self.directory = Directory(group)
        return self.directory

    def _party(self, name: str, cls=None):
        party = self.net.get(name)
        if cls is not None and not isinstance(party, cls):
            raise ScenarioError(f"{name} is a {party.role}, expected {cls.role}")
        return party

    def _require_bank(self) -> Bank:
        if self.bank is None:
            raise ScenarioError("declare the bank before other parties")
        return self.bank

    def cmd_party(self, role, name, balance="0", fee="1"):
        directory = self._dir()
        rng = self.rng.spawn("party:" + name)
        if role == "bank":
            if self.bank is not None:
                raise ScenarioError("only one bank")
            directory.bank = name
            self.bank = self.net.add(Bank(name, self.net, rng, directory))
            return
        bank = self._require_bank()
        if role == "user":
            party = self.net.add(User(name, self.net, rng, directory))
            party.call(bank.name, "open-account", {"balance": int(balance), "upk": party.upk})
            self.initial_total += int(balance)
        elif role == "merchant":
            party = self.net.add(Merchant(name, self.net, rng, directory))
            party.call(bank.name, "open-account", {"balance": 0})
        elif role == "trader":
            party = self.net.add(Trader(name, self.net, rng, directory, fee=int(fee)))
            party.call(bank.name, "open-account", {"balance": 0})
        else:
            raise ScenarioError(f"unknown role {role!r}")

    def cmd_date(self, day):
        dt.date.fromisoformat(day)
        self._dir().today = day

    # ------------------------------------------------------------ actions

    def cmd_withdraw(self, user, label, value, expiry):
        coin = self._party(user, User).withdraw(self._require_bank().name, label, int(value), expiry)
        self.net.event(event="withdraw", user=user, coin=label, value=coin.value)

    def cmd_spend(self, user, label, V, merchant, mode="normal"):
        self._party(merchant, Merchant)
        tr = self._party(user, User).spend(label, int(V), merchant, replay=mode == "replay")
        self.spent_value += tr.V
        self.net.event(event="spend", user=user, merchant=merchant, value=tr.V, tid=tr.tid())

    def cmd_deposit(self, merchant):
        for res in self._party(merchant, Merchant).deposit(self._require_bank().name):
            self._record_deposit(merchant, res)

    def _record_deposit(self, merchant, res):
        if res["status"] == "accepted":
            self.deposited_value += res["value"]
            self.net.event(event="deposit", merchant=merchant, status="accepted", value=res["value"])
            return
        self.rejected_deposits += 1
        if res["status"] == "double-spend":
            self.identify_events.append(res)
            self.net.event(
                event="identify",
                merchant=merchant,
                cheater=res["cheater"] or "unknown",
                upk=res["upk"],
                serial=res["serial"],
                first=res["first"],
                second=res["second"],
            )
        else:
            self.net.event(event="deposit", merchant=merchant, status="rejected", reason=res["reason"], value=res["V"])

    def cmd_trader_join(self, user, label, trader, new_label):
        self._party(trader, Trader)
        u = self._party(user, User)
        value = u.wallet[label].remaining
        coin = u.trader_join(label, trader, new_label)
        self.spent_value += value
        self.net.event(event="trader-join", user=user, trader=trader, value=value, issued=coin.value)

    def cmd_trader_spend(self, user, label, V, merchant, trader, mode="normal"):
        self._party(merchant, Merchant)
        self._party(trader, Trader)
        receipt = self._party(user, User).trader_spend(label, int(V), merchant, trader, replay=mode == "replay")
        self.net.event(event="trader-spend", user=user, merchant=merchant, trader=trader, value=receipt["V"])

    def cmd_trader_redeem(self, party, trader, label=None):
        t = self._party(trader, Trader)
        p = self._party(party)
        before = len(t.held)
        held_value = sum(tr["V"] for tr in t.held)
        if isinstance(p, User):
            if label is None:
                raise ScenarioError("a user redeems a specific trader coin")
            res = p.trader_redeem(label, trader)
        else:
            res = p.trader_redeem(trader)
        if before:
            self.deposited_value += held_value
            self.net.event(event="settle", trader=trader, deposits=before, value=held_value)
        self.net.event(event="trader-redeem", party=party, trader=trader, paid=res["paid"])

    def cmd_mark(self, name):
        bank = self.bank.name if self.bank else None
        self.marks[name] = self.net.messages_to(bank) if bank else 0
        self.net.event(event="mark", name=name, bank_messages=self.marks[name])

    # ------------------------------------------------------------ audit

    def bank_value_total(self) -> int:
        """Accounts + unspent bank coins + bank transcripts not yet deposited."""
        bank = self._require_bank()
        total = sum(bank.accounts.values())
        for party in self.net.parties.values():
            if isinstance(party, User):
                total += sum(c.remaining for c in party.wallet.values() if c.issuer == bank.name)
            elif isinstance(party, Merchant):
                total += sum(tr["V"] for tr in party.pending)
            elif isinstance(party, Trader):
                total += sum(tr["V"] for tr in party.held)
        return total

    def trader_books(self, trader: Trader) -> tuple[int, int, int]:
        """(reserve, liabilities, fees) for one trader."""
        reserve = self.bank.accounts.get(trader.name, 0) + sum(tr["V"] for tr in trader.held)
        outstanding = sum(
            c.remaining
            for p in self.net.parties.values()
            if isinstance(p, User)
            for c in p.wallet.values()
            if c.issuer == trader.name
        )
        return reserve, outstanding + sum(trader.credits.values()), trader.fees_collected

    def check(self, what, *args) -> tuple[bool, str]:
        if what == "no-identify":
            return not self.identify_events, f"identify_events={len(self.identify_events)}"
        if what == "identify":
            user = self._party(args[0], User)
            hits = [e for e in self.identify_events if e["upk"] == user.upk and e["cheater"] == user.name]
            return bool(hits), f"named={[e['cheater'] for e in self.identify_events]}"
        if what == "all-deposited":
            ok = self.spent_value == self.deposited_value and self.rejected_deposits == 0
            return ok, f"spent={self.spent_value} deposited={self.deposited_value} rejected={self.rejected_deposits}"
        if what == "conservation":
            total = self.bank_value_total()
            ok = total == self.initial_total
            detail = [f"total={total}", f"initial={self.initial_total}"]
            for p in self.net.parties.values():
                if isinstance(p, Trader):
                    reserve, liabilities, fees = self.trader_books(p)
                    ok = ok and reserve == liabilities + fees
                    detail.append(f"{p.name}:reserve={reserve},liabilities={liabilities},fees={fees}")
            return ok, " ".join(detail)
        if what == "bank-silent":
            a, b = (self.marks[m] for m in args)
            return a == b, f"bank_messages={b - a}"
        if what == "refused":
            return self.refusals == int(args[0]), f"refusals={self.refusals}"
        if what == "balance":
            bal = self._require_bank().accounts.get(args[0])
            return bal == int(args[1]), f"balance={bal}"
        if what == "fees":
            fees = self._party(args[0], Trader).fees_collected
            return fees == int(args[1]), f"fees={fees}"
        raise ScenarioError(f"unknown check {what!r}")

    # ------------------------------------------------------------ driver

    def ledgers(self) -> str:
        lines = []
        if self.bank is not None:
            for name, bal in sorted(self.bank.accounts.items()):
                lines.append(textfmt.record(ledger="account", name=name, balance=bal))
            lines.append(textfmt.record(ledger="deposits", serials=len(self.bank.L), transcripts=len(self.bank.stored)))
        for p in self.net.parties.values():
            if isinstance(p, User):
                for c in p.wallet.values():
                    lines.append(textfmt.record(ledger="coin", owner=p.name, label=c.label, issuer=c.issuer, value=c.value, spent=c.spent))
            elif isinstance(p, Trader):
                reserve, liabilities, fees = self.trader_books(p)
                lines.append(
                    textfmt.record(ledger="trader", name=p.name, reserve=reserve, liabilities=liabilities, fees=fees, spent_serials=len(p.spent))
                )
        for (src, dst), n in sorted(self.net.messages.items()):
            lines.append(textfmt.record(ledger="traffic", src=src, dst=dst, messages=n, bytes=self.net.bytes[(src, dst)]))
        return "".join(line + "\n" for line in lines)


def parse_script(text: str) -> list[tuple[int, str, list[str], dict[str, str]]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = shlex.split(line)
        args = [w for w in words[1:] if "=" not in w]
        opts = dict(w.split("=", 1) for w in words[1:] if "=" in w)
        out.append((lineno, words[0], args, opts))
    return out


def run_scenario(script: str, seed: int = 0) -> ScenarioResult:
    """Execute a script deterministically; returns trace, ledgers and checks."""
    runner = Runner(seed)
    results = []
    for lineno, cmd, args, opts in parse_script(script):
        if cmd == "assert":
            if not args:
                raise ScenarioError(f"line {lineno}: empty assert")
            passed, detail = runner.check(*args)
            results.append((" ".join(args), passed, detail))
            runner.net.trace.append(textfmt.record(check=" ".join(args).replace(" ", ":"), result="pass" if passed else "fail", detail=detail.replace(" ", ";")))
            continue
        method = getattr(runner, "cmd_" + cmd.replace("-", "_"), None)
        if method is None:
            raise ScenarioError(f"line {lineno}: unknown command {cmd!r}")
        runner.net.trace.append(textfmt.record(line=lineno, cmd=cmd, args=args or "-"))
        try:
            method(*args, **opts)
        except UnknownParty as exc:
            raise ScenarioError(f"line {lineno}: unknown party {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ScenarioError(f"line {lineno}: bad arguments for {cmd}: {exc}") from None
        except ProtocolAbort as exc:
            reason = str(exc)
            if reason == "spent-serial":
                runner.refusals += 1
                runner.net.event(event="refused", line=lineno, reason=reason)
            else:
                runner.aborts += 1
                runner.net.event(event="abort", line=lineno, reason=reason.replace(" ", "_"))
    stats = {
        "spent": runner.spent_value,
        "deposited": runner.deposited_value,
        "identify": len(runner.identify_events),
        "refusals": runner.refusals,
        "aborts": runner.aborts,
        "messages": sum(runner.net.messages.values()),
        "bytes": sum(runner.net.bytes.values()),
    }
    return ScenarioResult(runner.net.trace, runner.ledgers(), results, stats)
