"""Exact lattice tools: Gram-Schmidt, Gauss/LLL reduction, SVP/CVP by
enumeration, SIS/LWE instances and trapdoor checks.

Bases are lists of integer rows.  All Gram-Schmidt data uses
``fractions.Fraction`` so the reduction conditions are checked exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from blindlab import textfmt
from blindlab.core_math import SeededRng, centered, solve_linear_mod

Basis = list[list[int]]

BASIS_HEADER = "lattice-basis v1"


class RankError(ValueError):
    """Rows are linearly dependent."""


class BudgetError(ValueError):
    """An enumeration box is larger than the allowed budget."""


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _as_basis(basis) -> Basis:
    rows = [[int(x) for x in row] for row in basis]
    if not rows:
        raise ValueError("empty basis")
    if len({len(r) for r in rows}) != 1:
        raise ValueError("rows have different lengths")
    return rows


def dump_basis(basis) -> str:
    return textfmt.dump_rows(BASIS_HEADER, basis)


def load_basis(text: str) -> Basis:
    return _as_basis(textfmt.load_rows(BASIS_HEADER, text))


# ---------------------------------------------------------- Gram-Schmidt


@dataclass(frozen=True)
class GramSchmidtDecomp:
    """b*_i and mu[k][i] = u_{i,k} = <b_k, b*_i> / <b*_i, b*_i> for i < k."""

    bstar: list[list[Fraction]]
    mu: list[list[Fraction]]

    def norms_sq(self) -> list[Fraction]:
        return [_dot(b, b) for b in self.bstar]


def gram_schmidt(basis) -> GramSchmidtDecomp:
    rows = _as_basis(basis)
    n = len(rows)
    bstar: list[list[Fraction]] = []
    norms: list[Fraction] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    for k, b in enumerate(rows):
        v = [Fraction(x) for x in b]
        for i in range(k):
            mu[k][i] = _dot(b, bstar[i]) / norms[i]
            v = [vj - mu[k][i] * bj for vj, bj in zip(v, bstar[i])]
        nv = _dot(v, v)
        if nv == 0:
            raise RankError(f"row {k} is in the span of the previous rows")
        bstar.append(v)
        norms.append(nv)
    for k in range(n):
        mu[k][k] = Fraction(1)
    return GramSchmidtDecomp(bstar, mu)


def hadamard_ratio_exact(basis) -> Fraction:
    """det(L)^2 / prod ||b_i||^2, exactly; in (0, 1] by Hadamard's inequality.

    The Hadamard ratio itself is this value raised to 1/(2n).
    """
    rows = _as_basis(basis)
    if len(rows) != len(rows[0]):
        raise ValueError("Hadamard ratio needs a square basis")
    try:
        gs = gram_schmidt(rows)
    except RankError:
        raise RankError("singular basis") from None
    det_sq = math.prod(gs.norms_sq())
    return det_sq / math.prod(_dot(b, b) for b in rows)


def hadamard_ratio(basis) -> float:
    """(|det| / prod ||b_i||)^(1/n), a float in (0, 1]."""
    n = len(basis)
    return float(hadamard_ratio_exact(basis)) ** (1 / (2 * n))


def is_orthogonal(basis) -> bool:
    rows = _as_basis(basis)
    return all(_dot(rows[i], rows[j]) == 0 for i in range(len(rows)) for j in range(i))


# -------------------------------------------------------------- reduction


@dataclass
class ReductionResult:
    basis: Basis
    transform: list[list[int]]  # basis == transform @ input
    swaps: int = 0


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def gauss_reduce_2d(basis) -> ReductionResult:
    """Lagrange-Gauss reduction of a rank-2 basis."""
    b1, b2 = _as_basis(basis)
    if len(basis) != 2:
        raise ValueError("Gauss reduction needs exactly two rows")
    u = _identity(2)
    if _dot(b1, b1) * _dot(b2, b2) == _dot(b1, b2) ** 2:
        raise RankError("rows are dependent")
    swaps = 0
    while True:
        if _dot(b1, b1) > _dot(b2, b2):
            b1, b2 = b2, b1
            u.reverse()
            swaps += 1
        m = _round_half_up(Fraction(_dot(b1, b2), _dot(b1, b1)))
        if m == 0:
            return ReductionResult([b1, b2], u, swaps)
        b2 = [y - m * x for x, y in zip(b1, b2)]
        u[1] = [y - m * x for x, y in zip(u[0], u[1])]


def lll_reduce(basis, delta: Fraction = Fraction(3, 4)) -> ReductionResult:
    """LLL in two alternating steps: size-reduce every row, then swap at the
    first Lovasz violation; repeat until no violation remains.
    """
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta <= 1:
        raise ValueError("delta must lie in (1/4, 1]")
    b = _as_basis(basis)
    n = len(b)
    u = _identity(n)
    gram_schmidt(b)  # rank check
    swaps = 0
    while True:
        gs = gram_schmidt(b)
        mu = [row[:] for row in gs.mu]
        for i in range(1, n):
            for k in range(i - 1, -1, -1):
                m = _round_half_up(mu[i][k])
                if m:
                    b[i] = [x - m * y for x, y in zip(b[i], b[k])]
                    u[i] = [x - m * y for x, y in zip(u[i], u[k])]
                    for j in range(k):
                        mu[i][j] -= m * mu[k][j]
                    mu[i][k] -= m
        norms = gs.norms_sq()
        for i in range(n - 1):
            if norms[i + 1] + mu[i + 1][i] ** 2 * norms[i] < delta * norms[i]:
                b[i], b[i + 1] = b[i + 1], b[i]
                u[i], u[i + 1] = u[i + 1], u[i]
                swaps += 1
                break
        else:
            return ReductionResult(b, u, swaps)


@dataclass(frozen=True)
class LLLCheck:
    ok: bool
    condition: str | None = None  # "size" or "lovasz"
    indices: tuple[int, int] | None = None
    value: Fraction | None = None

    def __bool__(self):
        return self.ok


def is_lll_reduced(basis, delta: Fraction = Fraction(3, 4)) -> LLLCheck:
    """Size condition |u_{i,k}| <= 1/2 (i < k) and the Lovasz condition.

    Reports the first violated condition with its (i, k) indices, 0-based.
    """
    delta = Fraction(delta)
    gs = gram_schmidt(basis)
    n = len(gs.bstar)
    for k in range(n):
        for i in range(k):
            if abs(gs.mu[k][i]) > Fraction(1, 2):
                return LLLCheck(False, "size", (i, k), gs.mu[k][i])
    norms = gs.norms_sq()
    for i in range(n - 1):
        lhs = norms[i + 1] + gs.mu[i + 1][i] ** 2 * norms[i]
        if lhs < delta * norms[i]:
            return LLLCheck(False, "lovasz", (i, i + 1), lhs / norms[i])
    return LLLCheck(True)


def int_det(m: list[list[int]]) -> int:
    """Exact determinant of a square integer matrix (Bareiss)."""
    a = [row[:] for row in m]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k]), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def matmul(a, b):
    cols = list(zip(*b))
    return [[_dot(row, col) for col in cols] for row in a]


def is_unimodular_transform(transform, before, after) -> bool:
    return abs(int_det(transform)) == 1 and matmul(transform, before) == [list(r) for r in after]


# ---------------------------------------------------------------- SVP/CVP


def dual_basis(basis) -> list[list[Fraction]]:
    """Rows d_i with <b_j, d_i> = [i == j], spanning the same space."""
    rows = _as_basis(basis)
    n = len(rows)
    gram = [[Fraction(_dot(x, y)) for y in rows] for x in rows]
    inv = _invert_fraction(gram)
    return [[sum(inv[i][k] * rows[k][j] for k in range(n)) for j in range(len(rows[0]))] for i in range(n)]


def _invert_fraction(m):
    n = len(m)
    a = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise RankError("singular Gram matrix")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def svp_coefficient_bounds(basis) -> list[int]:
    """Per-coordinate bounds containing every shortest vector's coefficients.

    A vector v = sum x_i b_i has x_i = <v, d_i>, so |x_i| <= ||v|| ||d_i||,
    and a shortest vector is no longer than the shortest basis row.
    """
    rows = _as_basis(basis)
    r_sq = min(_dot(b, b) for b in rows)
    bounds = []
    for d in dual_basis(rows):
        bound_sq = r_sq * _dot(d, d)
        k = math.isqrt(bound_sq.numerator // bound_sq.denominator)
        while (k + 1) ** 2 <= bound_sq:
            k += 1
        bounds.append(k)
    return bounds


@dataclass(frozen=True)
class SvpResult:
    vector: tuple[int, ...]
    norm_sq: int
    coefficients: tuple[int, ...]
    exact: bool  # True when the searched box provably contains a shortest vector


def _enumerate(rows, bounds, budget, center=None):
    """Yield (coeff array, vector array) chunks over the box, using numpy."""
    total = math.prod(2 * b + 1 for b in bounds)
    if total > budget:
        raise BudgetError(f"box has {total} points, budget is {budget}")
    big = max(abs(x) for r in rows for x in r) * max(bounds + [1]) * len(rows) > 2**30
    dtype = object if big else np.int64
    B = np.array(rows, dtype=dtype)
    center = center or [0] * len(rows)
    ranges = [np.arange(c - b, c + b + 1) for b, c in zip(bounds, center)]
    grid = np.array(np.meshgrid(*ranges, indexing="ij"), dtype=dtype).reshape(len(rows), -1).T
    return grid, grid @ B


def svp_bruteforce(basis, coeff_bound: int | None = None, budget: int = 2_000_000) -> SvpResult:
    """Shortest nonzero vector among coefficient vectors in a box.

    With ``coeff_bound=None`` the box comes from `svp_coefficient_bounds`
    and the answer is exact.  With an explicit bound the answer is exact
    within the box, and `exact` says whether the box covers those bounds.
    """
    rows = _as_basis(basis)
    safe = svp_coefficient_bounds(rows)
    bounds = safe if coeff_bound is None else [coeff_bound] * len(rows)
    coeffs, vecs = _enumerate(rows, bounds, budget)
    norms = (vecs * vecs).sum(axis=1)
    nonzero = np.any(coeffs != 0, axis=1)
    norms = np.where(nonzero, norms, -1)
    candidates = np.flatnonzero(nonzero)
    best = candidates[np.argmin(norms[candidates].astype(object) if norms.dtype == object else norms[candidates])]
    return SvpResult(
        vector=tuple(int(x) for x in vecs[best]),
        norm_sq=int(norms[best]),
        coefficients=tuple(int(x) for x in coeffs[best]),
        exact=all(b >= s for b, s in zip(bounds, safe)),
    )


def cvp_bruteforce(basis, target, coeff_bound: int = 3, budget: int = 2_000_000):
    """Closest lattice vector to `target` (distance ||v - t||) in a box
    around the rounded real coefficients of `target`.  Returns (v, dist_sq).
    """
    rows = _as_basis(basis)
    duals = dual_basis(rows)
    center = [_round_half_up(_dot(d, target)) for d in duals]
    _, vecs = _enumerate(rows, [coeff_bound] * len(rows), budget, center)
    t = np.array(target, dtype=vecs.dtype)
    diff = vecs - t
    dist = (diff * diff).sum(axis=1)
    best = int(np.argmin(dist))
    return tuple(int(x) for x in vecs[best]), int(dist[best])


# ------------------------------------------------------------------- SIS


@dataclass(frozen=True)
class SisInstance:
    A: list[list[int]]  # n x m over Z_q
    n: int
    m: int
    q: int
    B: float  # bound on the Euclidean norm of a witness


def sis_check(inst: SisInstance, x) -> bool:
    if len(x) != inst.m or not any(x):
        return False
    if sum(v * v for v in x) > inst.B * inst.B:
        return False
    return all(_dot(row, x) % inst.q == 0 for row in inst.A)


def sis_gen(n: int, m: int, q: int, B: float, rng: SeededRng) -> tuple[SisInstance, list[int]]:
    """Uniform A with a planted short x in {-1,0,1}^m, last column solved for."""
    if m <= n or q < 2 or B < 1:
        raise ValueError("need m > n, q >= 2 and B >= 1")
    max_weight = int(B * B)
    while True:
        x = [rng.choice((-1, 0, 0, 1)) for _ in range(m - 1)] + [rng.choice((-1, 1))]
        if sum(v * v for v in x) <= max_weight:
            break
    cols = [[rng.randrange(q) for _ in range(n)] for _ in range(m - 1)]
    last_inv = x[-1]  # x_m is +-1, its own inverse
    last = [(-last_inv * sum(x[j] * cols[j][i] for j in range(m - 1))) % q for i in range(n)]
    cols.append(last)
    A = [[cols[j][i] for j in range(m)] for i in range(n)]
    inst = SisInstance(A, n, m, q, B)
    assert sis_check(inst, x)
    return inst, x


def sis_bruteforce(inst: SisInstance, coeff_bound: int | None = None) -> list[list[int]]:
    """Every witness with entries in [-coeff_bound, coeff_bound]."""
    bound = int(inst.B) if coeff_bound is None else coeff_bound
    found = []
    for x in itertools.product(range(-bound, bound + 1), repeat=inst.m):
        if sis_check(inst, x):
            found.append(list(x))
    return found


# ------------------------------------------------------------------- LWE


@dataclass(frozen=True)
class LweInstance:
    n: int
    q: int
    error_bound: int
    samples: list[tuple[list[int], int]]


def lwe_gen(n: int, m: int, q: int, error_bound: int, rng: SeededRng) -> tuple[LweInstance, list[int]]:
    """m samples (a, <a, s> + e mod q), e uniform on [-error_bound, error_bound]."""
    s = [rng.randrange(q) for _ in range(n)]
    samples = []
    for _ in range(m):
        a = [rng.randrange(q) for _ in range(n)]
        e = rng.randint(-error_bound, error_bound)
        samples.append((a, (_dot(a, s) + e) % q))
    return LweInstance(n, q, error_bound, samples), s


def lwe_uniform_samples(n: int, m: int, q: int, rng: SeededRng) -> list[tuple[list[int], int]]:
    """Decoy samples for the decision game."""
    return [([rng.randrange(q) for _ in range(n)], rng.randrange(q)) for _ in range(m)]


def lwe_check(samples, s, q: int, error_bound: int) -> bool:
    return all(abs(centered(b - _dot(a, s), q)) <= error_bound for a, b in samples)


def lwe_bruteforce(inst: LweInstance) -> list[list[int]]:
    """Every secret in Z_q^n consistent with the samples."""
    return [
        list(s)
        for s in itertools.product(range(inst.q), repeat=inst.n)
        if lwe_check(inst.samples, s, inst.q, inst.error_bound)
    ]


def lwe_solve_exact(inst: LweInstance) -> list[int] | None:
    """Gaussian elimination on the first invertible n x n block (error 0, q prime)."""
    if inst.error_bound != 0:
        raise ValueError("elimination only applies to error-free samples")
    for combo in itertools.combinations(inst.samples, inst.n):
        s = solve_linear_mod([a for a, _ in combo], [b for _, b in combo], inst.q)
        if s is not None:
            return s
    return None


# ------------------------------------------------------ gadget/trapdoors


def gadget_vector(q: int) -> list[int]:
    """(1, 2, ..., 2^(k-1)) with k = ceil(log2 q)."""
    k = max(1, (q - 1).bit_length())
    return [1 << i for i in range(k)]


def gadget_matrix(n: int, q: int) -> list[list[int]]:
    """I_n tensor g: an n x (n k) block-diagonal matrix."""
    g = gadget_vector(q)
    k = len(g)
    return [[g[j - i * k] if i * k <= j < (i + 1) * k else 0 for j in range(n * k)] for i in range(n)]


def bit_decompose(x: int, k: int) -> list[int]:
    if not 0 <= x < 2**k:
        raise ValueError("value out of range for k bits")
    return [(x >> i) & 1 for i in range(k)]


def gadget_inverse(v: list[int], q: int) -> list[int]:
    """Binary decomposition of a vector so that G · bits = v."""
    k = len(gadget_vector(q))
    return [bit for x in v for bit in bit_decompose(x % q, k)]


def _col_norm_sq(m, j):
    return sum(row[j] ** 2 for row in m)


def rank_int(m) -> int:
    rows = [[Fraction(x) for x in row] for row in m]
    rank, cols = 0, len(rows[0]) if rows else 0
    for col in range(cols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / rows[rank][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def trapdoor_check_type1(A, T, q: int, norm_bound: float) -> bool:
    """AT = 0 mod q, T full rank over the integers, every column short."""
    n, m = len(A), len(A[0])
    if len(T) != m or any(len(r) != m for r in T):
        raise ValueError("T must be m x m for an n x m matrix A")
    if any(x % q for row in matmul(A, T) for x in row):
        return False
    if rank_int(T) != m:
        return False
    return all(_col_norm_sq(T, j) <= norm_bound**2 for j in range(m))


def trapdoor_check_type2(A, R, G, q: int, norm_bound: float) -> bool:
    """AR = G mod q and every column of R short."""
    if len(R) != len(A[0]) or len(G) != len(A) or any(len(r) != len(G[0]) for r in R):
        raise ValueError("shape mismatch between A, R and G")
    AR = matmul(A, R)
    if any((x - y) % q for ra, rg in zip(AR, G) for x, y in zip(ra, rg)):
        return False
    return all(_col_norm_sq(R, j) <= norm_bound**2 for j in range(len(R[0])))


def gen_gadget_trapdoor(n: int, m_bar: int, q: int, rng: SeededRng):
    """A = [A_bar | G - A_bar R_bar] with R = [R_bar; I], so A R = G exactly.

    Returns (A, R, G) with R_bar entries in {-1, 0, 1}.
    """
    G = gadget_matrix(n, q)
    w = len(G[0])
    A_bar = [[rng.randrange(q) for _ in range(m_bar)] for _ in range(n)]
    R_bar = [[rng.choice((-1, 0, 1)) for _ in range(w)] for _ in range(m_bar)]
    AR = matmul(A_bar, R_bar)
    right = [[(G[i][j] - AR[i][j]) % q for j in range(w)] for i in range(n)]
    A = [A_bar[i] + right[i] for i in range(n)]
    R = R_bar + _identity(w)
    return A, R, G
