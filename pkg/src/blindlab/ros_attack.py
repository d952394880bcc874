"""ROS problem solvers and the parallel one-more forgery on blind Schnorr.

An instance fixes ell open signer sessions with commitments g_1..g_ell and
ell+1 target messages.  The oracle is the concrete one the forger sees:

    F(a, k) = H(prod g_i^{a_i}, m_k)

A solution is ell+1 distinct coefficient rows a_k (row k paired with
message m_k) and one challenge vector c with <a_k, c> = F(a_k, k) mod q for
every row.  Sending c to the signer and combining the responses with the
rows yields ell+1 valid signatures from ell responses.

Two solvers are provided:

* ``ros_solve_bruteforce`` enumerates invertible choices of the first ell
  rows, solves for c, then scans every candidate last row.  Toy sizes only.
* ``ros_solve_klist`` uses the generalized birthday (k-tree) algorithm.
  Rows are lambda_i * e_i for the per-session equations (so session i may
  use any candidate c_i = F(lambda e_i, i) / lambda) plus the all-ones row
  for the last message, which leaves sum(c_i) = F(1, ell) as a k-sum
  problem over Z_q.
"""

from __future__ import annotations

import bisect
import math
import time
from dataclasses import dataclass, field
from typing import Callable

from blindlab.blind_sig import SchnorrBlindSigner, Transcript
from blindlab.classic_sig import SchnorrSignature, schnorr_challenge, schnorr_verify
from blindlab.core_math import DEFAULT_HASH, HashSpec, SchnorrGroup, centered, solve_linear_mod


class AttackFailed(RuntimeError):
    """The solver found no ROS solution; no challenges were sent."""


class BudgetExhausted(RuntimeError):
    pass


@dataclass
class RosInstance:
    ell: int
    q: int
    messages: list[bytes]
    oracle: Callable[[tuple, bytes], int]
    evaluations: int = 0

    def __post_init__(self):
        if len(self.messages) != self.ell + 1:
            raise ValueError("an instance needs ell + 1 messages")
        if len(set(self.messages)) != len(self.messages):
            raise ValueError("messages must be distinct")

    def F(self, coeffs: tuple, k: int) -> int:
        """Counted oracle evaluation for row `coeffs` paired with message k."""
        self.evaluations += 1
        return self.oracle(tuple(coeffs), self.messages[k]) % self.q

    @classmethod
    def from_commitments(
        cls, group: SchnorrGroup, commitments: list[int], messages: list[bytes], spec: HashSpec = DEFAULT_HASH
    ) -> "RosInstance":
        def oracle(coeffs, message):
            f = 1
            for g_i, a in zip(commitments, coeffs):
                f = f * pow(g_i, a % group.q, group.p) % group.p
            return schnorr_challenge(f, message, group, spec)

        return cls(len(commitments), group.q, list(messages), oracle)


@dataclass(frozen=True)
class RosSolution:
    rows: tuple[tuple[int, ...], ...]  # rows[k] goes with messages[k]
    c: tuple[int, ...]


def verify_solution(inst: RosInstance, sol: RosSolution) -> bool:
    """Re-evaluate the raw oracle on every row; does not touch the counter."""
    if len(sol.rows) != inst.ell + 1 or len(sol.c) != inst.ell:
        return False
    if len(set(sol.rows)) != len(sol.rows):
        return False
    for k, row in enumerate(sol.rows):
        if len(row) != inst.ell:
            return False
        lhs = sum(a * c for a, c in zip(row, sol.c)) % inst.q
        if lhs != inst.oracle(tuple(row), inst.messages[k]) % inst.q:
            return False
    return True


# ------------------------------------------------------------ brute force


def _nonzero_vectors(ell: int, q: int):
    """All nonzero vectors of Z_q^ell in lexicographic order, lazily."""
    for idx in range(1, q**ell):
        v = []
        for _ in range(ell):
            idx, r = divmod(idx, q)
            v.append(r)
        yield tuple(reversed(v))


def _first_rows(ell: int, q: int, depth: int = 0, prefix=()):
    if depth == ell:
        yield prefix
        return
    for v in _nonzero_vectors(ell, q):
        if v in prefix:
            continue
        yield from _first_rows(ell, q, depth + 1, prefix + (v,))


def _rank_full(rows, q) -> bool:
    return solve_linear_mod([list(r) for r in rows], [0] * len(rows), q) is not None


def ros_solve_bruteforce(inst: RosInstance, budget: int = 10**6) -> RosSolution | None:
    """Exhaustive search; `budget` caps oracle evaluations.  None if not found."""
    ell, q = inst.ell, inst.q
    cache: dict[tuple, int] = {}

    def F(row, k):
        key = (row, k)
        if key not in cache:
            if len(cache) >= budget:
                raise BudgetExhausted
            cache[key] = inst.F(row, k)
        return cache[key]

    try:
        for first in _first_rows(ell, q):
            if not _rank_full(first, q):
                continue
            rhs = [F(row, k) for k, row in enumerate(first)]
            c = solve_linear_mod([list(r) for r in first], rhs, q)
            for last in _nonzero_vectors(ell, q):
                if last in first:
                    continue
                if sum(a * x for a, x in zip(last, c)) % q == F(last, ell):
                    sol = RosSolution(tuple(first) + (last,), tuple(c))
                    if verify_solution(inst, sol):
                        return sol
    except BudgetExhausted:
        return None
    return None


# ---------------------------------------------------------------- k-list


def _merge_window(left, right, width: int, q: int):
    """Pairs whose sum, centered mod q, lies strictly inside (-width, width)."""
    keyed = sorted(((v % q, v, prov) for v, prov in left), key=lambda t: t[0])
    keys = [t[0] for t in keyed]
    out = []
    for b, prov_b in right:
        lo = (-b - width + 1) % q
        span = 2 * width - 2
        ranges = [(lo, lo + span)] if lo + span < q else [(lo, q - 1), (0, lo + span - q)]
        for a_lo, a_hi in ranges:
            i = bisect.bisect_left(keys, a_lo)
            j = bisect.bisect_right(keys, a_hi)
            for _, a, prov_a in keyed[i:j]:
                out.append((centered(a + b, q), prov_a + prov_b))
    return out


def _merge_exact(left, right, q: int):
    table: dict[int, list] = {}
    for v, prov in left:
        table.setdefault(v % q, []).append(prov)
    out = []
    for b, prov_b in right:
        for prov_a in table.get(-b % q, ()):
            out.append((0, prov_a + prov_b))
    return out


def default_list_size(ell: int, q: int) -> int:
    t = int(math.log2(ell))
    return min(q - 1, math.ceil(2 * q ** (1 / (t + 1))))


def ros_solve_klist(inst: RosInstance, list_size: int | None = None) -> RosSolution | None:
    """Generalized-birthday solver; falls back to brute force when ell == 1."""
    ell, q = inst.ell, inst.q
    if ell == 1:
        return ros_solve_bruteforce(inst)
    t = int(math.log2(ell))
    k = 2**t
    n_lists = list_size or default_list_size(ell, q)
    n_lists = min(n_lists, q - 1)
    base = q ** (1 / (t + 1))  # each merge level removes about log2(base) bits

    def unit(i, lam):
        row = [0] * ell
        row[i] = lam
        return tuple(row)

    fixed_c = {i: inst.F(unit(i, 1), i) for i in range(k, ell)}
    target = (inst.F((1,) * ell, ell) - sum(fixed_c.values())) % q

    lists = []
    for i in range(k):
        entries = []
        for lam in range(1, n_lists + 1):
            c_i = pow(lam, -1, q) * inst.F(unit(i, lam), i) % q
            entries.append((c_i, ((i, lam, c_i),)))
        lists.append(entries)
    lists[-1] = [((v - target) % q, prov) for v, prov in lists[-1]]

    cap = 64 * n_lists
    for level in range(1, t + 1):
        merged = []
        for a, b in zip(lists[0::2], lists[1::2]):
            if level == t:
                out = _merge_exact(a, b, q)
            else:
                width = max(1, int(q / (2 * base**level)))
                out = _merge_window(a, b, width, q)
            merged.append(out[:cap])
        lists = merged

    for _, picks in lists[0]:
        c = [0] * ell
        rows = [None] * (ell + 1)
        for i, lam, c_i in picks:
            c[i] = c_i
            rows[i] = unit(i, lam)
        for i, c_i in fixed_c.items():
            c[i] = c_i
            rows[i] = unit(i, 1)
        rows[ell] = (1,) * ell
        sol = RosSolution(tuple(rows), tuple(c))
        if verify_solution(inst, sol):
            return sol
    return None


SOLVERS = {"bruteforce": ros_solve_bruteforce, "klist": ros_solve_klist}


# --------------------------------------------------------------- forgery


@dataclass(frozen=True)
class Forgery:
    message: bytes
    c: int  # c'_k = <a_k, c> = H(f_k, m_k)
    z: int  # z'_k = <a_k, z>
    R: int  # f_k = prod g_l^{a_{k,l}}

    @property
    def signature(self) -> SchnorrSignature:
        return SchnorrSignature(self.R, self.z)


@dataclass
class ForgeryBatch:
    forgeries: list[Forgery]
    solution: RosSolution
    transcripts: list[Transcript]
    oracle_evaluations: int
    responses_consumed: int
    solver: str
    seconds: float = 0.0
    identity_checks: list[bool] = field(default_factory=list)


def one_more_forgery(
    signer: SchnorrBlindSigner,
    ell: int,
    messages: list[bytes],
    solver: str | Callable = "klist",
    spec: HashSpec = DEFAULT_HASH,
    **solver_args,
) -> ForgeryBatch:
    """Open ell sessions, solve ROS on their commitments, forge ell+1 signatures."""
    solve = SOLVERS[solver] if isinstance(solver, str) else solver
    solver_name = solver if isinstance(solver, str) else getattr(solver, "__name__", "custom")
    public = signer.public
    grp = public.group
    start = time.perf_counter()
    before = signer.responses

    sessions = [signer.open_session() for _ in range(ell)]
    commitments = [s.commit() for s in sessions]
    inst = RosInstance.from_commitments(grp, commitments, messages, spec)
    sol = solve(inst, **solver_args)
    if sol is None or not verify_solution(inst, sol):
        raise AttackFailed(f"{solver_name} found no ROS solution ({inst.evaluations} oracle evaluations)")

    z = [session.respond(c) for session, c in zip(sessions, sol.c)]
    forgeries, checks = [], []
    X_inv = pow(public.X, -1, grp.p)
    for row, m in zip(sol.rows, messages):
        f = 1
        for g_l, a in zip(commitments, row):
            f = f * pow(g_l, a % grp.q, grp.p) % grp.p
        c_k = sum(a * c for a, c in zip(row, sol.c)) % grp.q
        z_k = sum(a * zl for a, zl in zip(row, z)) % grp.q
        # g^{z'} h^{-c'} = f_k
        checks.append(pow(grp.g, z_k, grp.p) * pow(X_inv, c_k, grp.p) % grp.p == f)
        forgeries.append(Forgery(m, c_k, z_k, f))

    return ForgeryBatch(
        forgeries=forgeries,
        solution=sol,
        transcripts=[s.transcript for s in sessions],
        oracle_evaluations=inst.evaluations,
        responses_consumed=signer.responses - before,
        solver=solver_name,
        seconds=time.perf_counter() - start,
        identity_checks=checks,
    )


def verified_count(batch: ForgeryBatch, public, spec: HashSpec = DEFAULT_HASH) -> int:
    return sum(schnorr_verify(f.message, f.signature, public, spec) for f in batch.forgeries)
