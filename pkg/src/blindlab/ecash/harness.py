"""Deterministic message-passing harness.

Parties are isolated objects that only see JSON payloads delivered through
`Network.call`.  Delivery is synchronous and in order, so FIFO per pair of
parties holds trivially.  Every request and reply becomes one trace record.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter

from blindlab import textfmt


class ProtocolAbort(RuntimeError):
    """A party refused or aborted; carries the reason string."""


class UnknownParty(KeyError):
    pass


def _canonical(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


class Party:
    role = "party"

    def __init__(self, name: str, net: "Network", rng):
        self.name = name
        self.net = net
        self.rng = rng

    def handle(self, kind: str, payload: dict, src: str) -> dict:
        method = getattr(self, "on_" + kind.replace("-", "_"), None)
        if method is None:
            raise ProtocolAbort(f"{self.name} does not understand {kind!r}")
        return method(payload, src)

    def call(self, dst: str, kind: str, payload: dict) -> dict:
        return self.net.call(self.name, dst, kind, payload)


class Network:
    def __init__(self):
        self.parties: dict[str, Party] = {}
        self.trace: list[str] = []
        self.messages = Counter()  # (src, dst) -> count
        self.bytes = Counter()
        self.received = Counter()  # dst -> count
        self._seq = 0

    def add(self, party: Party) -> Party:
        if party.name in self.parties:
            raise ValueError(f"duplicate party {party.name!r}")
        self.parties[party.name] = party
        return party

    def get(self, name: str) -> Party:
        try:
            return self.parties[name]
        except KeyError:
            raise UnknownParty(name) from None

    def _deliver(self, src, dst, kind, payload) -> dict:
        body = _canonical(payload)
        self._seq += 1
        self.messages[(src, dst)] += 1
        self.bytes[(src, dst)] += len(body)
        self.received[dst] += 1
        digest = hashlib.sha256(body.encode()).hexdigest()[:16]
        self.trace.append(textfmt.record(seq=self._seq, src=src, dst=dst, kind=kind, bytes=len(body), sha=digest))
        return json.loads(body)

    def call(self, src: str, dst: str, kind: str, payload: dict) -> dict:
        """Send a request, run the receiver, deliver its reply back to src."""
        target = self.get(dst)
        request = self._deliver(src, dst, kind, payload)
        try:
            reply = target.handle(kind, request, src)
        except ProtocolAbort as exc:
            self._deliver(dst, src, kind + ".abort", {"reason": str(exc)})
            raise
        return self._deliver(dst, src, kind + ".ok", reply)

    def event(self, **fields) -> None:
        self.trace.append(textfmt.record(event=fields.pop("event"), **fields))

    def messages_to(self, dst: str) -> int:
        return self.received[dst]
