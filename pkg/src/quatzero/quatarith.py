"""Definite rational quaternion algebras of squarefree discriminant: maximal
orders, right ideal classes with unit weights, and Brandt matrices.

Everything is exact.  Lattices are stored as Hermite-normal-form integer
bases over a common denominator; short-vector enumeration runs a
Fincke-Pohst search driven by an exact LDL decomposition, so no vector is
ever missed or spuriously reported.  Completeness of each ideal class list
is certified by the Eichler mass formula.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import sympy

from . import InternalDefect, PreconditionError
from .exactalg import is_squarefree, kronecker_symbol, prime_factors, primes_up_to

Vec4 = tuple[int, int, int, int]


def theta_prefix_len(level: int) -> int:
    """Length of the theta-series fingerprint used to bucket ideal classes.

    The normalized minimum of a class lattice grows like sqrt(level), so a
    fixed short prefix would be identically zero at large levels and every
    classification would fall through to expensive equivalence tests."""
    return max(8, math.isqrt(2 * level) + 2)


# ---------------------------------------------------------------------------
# Hilbert symbols and algebra construction
# ---------------------------------------------------------------------------


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def hilbert_symbol(a: int, b: int, p: int) -> int:
    """Hilbert symbol (a,b)_p at a finite prime p, for nonzero integers."""
    if a == 0 or b == 0:
        raise PreconditionError("hilbert symbol needs nonzero entries")
    al, be = _vp(a, p), _vp(b, p)
    u, v = a // p**al, b // p**be
    if p != 2:
        s = 1
        if al % 2 and be % 2:
            s *= kronecker_symbol(-1, p)
        if be % 2:
            s *= kronecker_symbol(u, p)
        if al % 2:
            s *= kronecker_symbol(v, p)
        return s
    eps_u, eps_v = (u - 1) // 2 % 2, (v - 1) // 2 % 2
    om_u, om_v = (u * u - 1) // 8 % 2, (v * v - 1) // 8 % 2
    e = eps_u * eps_v + al * om_v + be * om_u
    return -1 if e % 2 else 1


def ramified_primes(a: int, b: int) -> tuple[int, ...]:
    """Finite primes where (a,b | Q) is division."""
    cand = sorted(set(prime_factors(2 * a * b)))
    return tuple(p for p in cand if hilbert_symbol(a, b, p) == -1)


@dataclass(frozen=True)
class QuaternionAlgebra:
    """B = (a,b | Q) with i^2 = a, j^2 = b, k = ij = -ji, both a,b < 0."""

    a: int
    b: int
    ramified: tuple[int, ...]

    @property
    def discriminant(self) -> int:
        return math.prod(self.ramified)

    def mul(self, x: Sequence, y: Sequence) -> tuple:
        a, b = self.a, self.b
        w1, x1, y1, z1 = x
        w2, x2, y2, z2 = y
        return (
            w1 * w2 + a * x1 * x2 + b * y1 * y2 - a * b * z1 * z2,
            w1 * x2 + x1 * w2 - b * (y1 * z2 - z1 * y2),
            w1 * y2 + y1 * w2 + a * (x1 * z2 - z1 * x2),
            w1 * z2 + z1 * w2 + x1 * y2 - y1 * x2,
        )

    @staticmethod
    def conj(x: Sequence) -> tuple:
        return (x[0], -x[1], -x[2], -x[3])

    @staticmethod
    def trd(x: Sequence):
        return 2 * x[0]

    def nrd(self, x: Sequence):
        w, xx, y, z = x
        return w * w - self.a * xx * xx - self.b * y * y + self.a * self.b * z * z

    def pair(self, x: Sequence, y: Sequence):
        """Polar form of nrd: pair(x,x) = nrd(x)."""
        return (
            x[0] * y[0]
            - self.a * x[1] * y[1]
            - self.b * x[2] * y[2]
            + self.a * self.b * x[3] * y[3]
        )


def build_algebra(N: int) -> QuaternionAlgebra:
    """Definite quaternion algebra with finite ramification exactly at the
    primes of N; smallest (|a|+|b|, |a|) wins, so the choice is reproducible."""
    if N < 1 or not is_squarefree(N):
        raise PreconditionError(f"level {N} is not squarefree")
    target = tuple(prime_factors(N))
    if len(target) % 2 == 0:
        raise PreconditionError(
            f"level {N} has an even number of prime factors; no definite algebra exists"
        )
    # an odd prime can only ramify when it divides ab, so most candidates
    # can be discarded without computing any Hilbert symbols
    odd_target = math.prod(p for p in target if p != 2)
    for s in itertools.count(2):
        for aa in range(1, s):
            a, b = -aa, -(s - aa)
            if (a * b) % odd_target:
                continue
            if ramified_primes(a, b) == target:
                return QuaternionAlgebra(a, b, target)
    raise InternalDefect("unreachable")


# ---------------------------------------------------------------------------
# integer 4x4 lattice utilities
# ---------------------------------------------------------------------------


def _hnf4(rows: list[list[int]]) -> tuple[Vec4, Vec4, Vec4, Vec4]:
    """Row Hermite normal form of a full-rank stack of integer row vectors:
    upper triangular, positive diagonal, entries above a pivot reduced into
    [0, pivot)."""
    work = [list(r) for r in rows if any(r)]
    out: list[list[int]] = []
    for col in range(4):
        while True:
            nz = [r for r in work if r[col]]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda r: abs(r[col]))
            piv = nz[0]
            for r in nz[1:]:
                q = r[col] // piv[col]
                for t in range(4):
                    r[t] -= q * piv[t]
            work = [r for r in work if any(r)]
        nz = [r for r in work if r[col]]
        if not nz:
            raise InternalDefect("lattice degenerate (rank < 4)")
        piv = nz[0]
        if piv[col] < 0:
            piv = [-v for v in piv]
        out.append(piv)
        work = [r for r in work if not r[col] or r is nz[0]]
        work = [r for r in work if r[col] == 0]
    for j in range(1, 4):
        for i in range(j):
            q = out[i][j] // out[j][j]
            if q:
                for t in range(4):
                    out[i][t] -= q * out[j][t]
    return tuple(tuple(r) for r in out)  # type: ignore[return-value]


def _det_upper(num) -> int:
    return num[0][0] * num[1][1] * num[2][2] * num[3][3]


def _mat_inv4(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    n = 4
    aug = [list(map(Fraction, rows[i])) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c]), None)
        if piv is None:
            raise InternalDefect("singular matrix")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [v * inv for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    return [row[n:] for row in aug]


@dataclass(frozen=True)
class Lattice:
    """Full-rank lattice in the (1,i,j,k) frame: rows of `num` over `den`.

    The pair is canonical: num is in HNF and gcd(content(num), den) = 1,
    so equal lattices compare equal componentwise.
    """

    num: tuple[Vec4, Vec4, Vec4, Vec4]
    den: int

    @staticmethod
    def from_int_rows(rows: list[list[int]], den: int) -> "Lattice":
        h = _hnf4(rows)
        g = 0
        for r in h:
            for v in r:
                g = math.gcd(g, v)
        g = math.gcd(g, den)
        if g > 1:
            h = tuple(tuple(v // g for v in r) for r in h)
            den //= g
        return Lattice(h, den)  # type: ignore[arg-type]

    @staticmethod
    def from_frac_rows(rows: list[Sequence[Fraction]]) -> "Lattice":
        den = 1
        for r in rows:
            for v in r:
                den = den * v.denominator // math.gcd(den, v.denominator)
        int_rows = [[int(v * den) for v in r] for r in rows]
        return Lattice.from_int_rows(int_rows, den)

    def frac_rows(self) -> list[tuple[Fraction, ...]]:
        return [tuple(Fraction(v, self.den) for v in r) for r in self.num]

    def det(self) -> Fraction:
        return Fraction(_det_upper(self.num), self.den**4)

    def scale(self, q: Fraction) -> "Lattice":
        q = Fraction(q)
        rows = [[v * q.numerator for v in r] for r in self.num]
        return Lattice.from_int_rows(rows, self.den * q.denominator)

    def contains(self, vec: Sequence[Fraction]) -> bool:
        # forward substitution: column j is touched only by basis rows i <= j
        target = [Fraction(v) * self.den for v in vec]
        for i in range(4):
            c = target[i] / self.num[i][i]
            if c.denominator != 1:
                return False
            for t in range(i, 4):
                target[t] -= c * self.num[i][t]
        return all(v == 0 for v in target)

    def coords(self, vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
        target = [Fraction(v) * self.den for v in vec]
        out = [Fraction(0)] * 4
        for i in range(4):
            c = target[i] / self.num[i][i]
            out[i] = c
            for t in range(i, 4):
                target[t] -= c * self.num[i][t]
        if any(target):
            raise InternalDefect("coords: vector not in the span")
        return tuple(out)

    def index_in(self, other: "Lattice") -> Fraction:
        return self.det() / other.det()

    def key(self) -> tuple:
        return (self.num, self.den)


def lattice_mul(alg: QuaternionAlgebra, L1: Lattice, L2: Lattice) -> Lattice:
    rows = []
    for u in L1.num:
        for w in L2.num:
            rows.append(list(alg.mul(u, w)))
    return Lattice.from_int_rows(rows, L1.den * L2.den)


def lattice_conj(L: Lattice) -> Lattice:
    rows = [list(QuaternionAlgebra.conj(r)) for r in L.num]
    return Lattice.from_int_rows(rows, L.den)


def lattice_add(L1: Lattice, L2: Lattice) -> Lattice:
    den = L1.den * L2.den // math.gcd(L1.den, L2.den)
    rows = [[v * (den // L1.den) for v in r] for r in L1.num]
    rows += [[v * (den // L2.den) for v in r] for r in L2.num]
    return Lattice.from_int_rows(rows, den)


ONE_LATTICE_ROWS = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))


def standard_order_lattice() -> Lattice:
    return Lattice(ONE_LATTICE_ROWS, 1)


# ---------------------------------------------------------------------------
# exact short-vector enumeration (Fincke-Pohst with rational LDL)
# ---------------------------------------------------------------------------


def gram_matrix(alg: QuaternionAlgebra, L: Lattice) -> list[list[Fraction]]:
    rows = L.num
    d2 = L.den * L.den
    return [
        [Fraction(alg.pair(rows[s], rows[t]), d2) for t in range(4)] for s in range(4)
    ]


def _ldl(gram: list[list[Fraction]]) -> tuple[list[Fraction], list[list[Fraction]]]:
    """Q(x) = sum_i d[i] * (x_i + sum_{j>i} u[i][j] x_j)^2."""
    n = 4
    g = [[Fraction(v) for v in row] for row in gram]
    d = [Fraction(0)] * n
    u = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        d[i] = g[i][i]
        if d[i] <= 0:
            raise InternalDefect("gram matrix not positive definite")
        for j in range(i + 1, n):
            u[i][j] = g[i][j] / d[i]
        for r in range(i + 1, n):
            for c in range(r, n):
                g[r][c] -= g[i][r] * g[i][c] / d[i]
                g[c][r] = g[r][c]
    return d, u


def _gram_lll(G: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[list[int]]]:
    """Gram-space LLL (delta = 3/4): returns (U G U^T, U) with U unimodular.
    Reduced bases keep the Fincke-Pohst tree close to the actual point count;
    the raw HNF bases of ideal lattices are far too skew for that."""
    G = [[Fraction(v) for v in row] for row in G]
    U = [[int(i == j) for j in range(4)] for i in range(4)]

    def gso():
        mu = [[Fraction(0)] * 4 for _ in range(4)]
        B = [Fraction(0)] * 4
        for i in range(4):
            B[i] = G[i][i]
            for j in range(i):
                mu[i][j] = G[i][j]
                for t in range(j):
                    mu[i][j] -= mu[j][t] * mu[i][t] * B[t]
                mu[i][j] /= B[j]
                B[i] -= mu[i][j] * mu[i][j] * B[j]
        return mu, B

    def rowop(i, j, q):
        # b_i -= q b_j
        for t in range(4):
            U[i][t] -= q * U[j][t]
        for t in range(4):
            G[i][t] -= q * G[j][t]
        for t in range(4):
            G[t][i] -= q * G[t][j]

    def swap(i, j):
        U[i], U[j] = U[j], U[i]
        G[i], G[j] = G[j], G[i]
        for row in G:
            row[i], row[j] = row[j], row[i]

    k = 1
    guard = 0
    while k < 4:
        guard += 1
        if guard > 10000:
            raise InternalDefect("LLL failed to terminate")
        mu, B = gso()
        for j in range(k - 1, -1, -1):
            q = math.floor(mu[k][j] + Fraction(1, 2))
            if q:
                rowop(k, j, q)
                mu, B = gso()
        if B[k] >= (Fraction(3, 4) - mu[k][k - 1] * mu[k][k - 1]) * B[k - 1]:
            k += 1
        else:
            swap(k, k - 1)
            k = max(k - 1, 1)
    return G, U


def _enum_data(
    gram: list[list[Fraction]],
) -> tuple[int, int, list[int], list[list[int]], list[list[int]]]:
    """Integerized, LLL-reduced LDL data for the enumeration core.

    Returns (den, D, DN, U, Umap): den clears the gram denominators, the
    reduced form is Q(x) = sum_i (DN[i]/D)(x_i + sum_{j>i} U[i][j]/D x_j)^2
    scaled by den, and a solution x corresponds to x @ Umap in the original
    basis coordinates.
    """
    den = 1
    for row in gram:
        for v in row:
            f = Fraction(v)
            den = den * f.denominator // math.gcd(den, f.denominator)
    G = [[Fraction(v) * den for v in row] for row in gram]
    G, Umap = _gram_lll(G)
    d, u = _ldl(G)
    D = 1
    for i in range(4):
        D = D * d[i].denominator // math.gcd(D, d[i].denominator)
        for j in range(i + 1, 4):
            D = D * u[i][j].denominator // math.gcd(D, u[i][j].denominator)
    DN = [int(d[i] * D) for i in range(4)]
    U = [[int(u[i][j] * D) if j > i else 0 for j in range(4)] for i in range(4)]
    return den, D, DN, U, Umap


def _enum_core(
    data: tuple[int, int, list[int], list[list[int]], list[list[int]]],
    bound_scaled: int,
    canonical_half: bool = True,
) -> Iterator[tuple[Vec4, int]]:
    """Nonzero integer vectors with den*Q(x) <= bound_scaled, yielding
    (vector, den*Q(x)) with everything in exact integer arithmetic.  The
    vectors are in the LLL-reduced coordinates of `data`."""
    _, D, DN, U, _ = data
    if bound_scaled < 0:
        return
    D3 = D * D * D
    R0 = bound_scaled * D3
    xs = [0, 0, 0, 0]

    def rec(i: int, R: int, upper_zero: bool):
        dn = DN[i]
        Ui = U[i]
        C = 0
        for j in range(i + 1, 4):
            if xs[j]:
                C += Ui[j] * xs[j]
        s = math.isqrt(R // dn)
        hi = (s - C) // D
        while dn * ((hi + 1) * D + C) ** 2 <= R:
            hi += 1
        while hi * D + C > 0 and dn * (hi * D + C) ** 2 > R:
            hi -= 1
        lo = -((s + C) // D)
        while dn * ((lo - 1) * D + C) ** 2 <= R:
            lo -= 1
        while lo * D + C < 0 and dn * (lo * D + C) ** 2 > R:
            lo += 1
        if canonical_half and upper_zero:
            if lo < 0:
                lo = 0
        for v in range(lo, hi + 1):
            t = v * D + C
            rem = R - dn * t * t
            if rem < 0:
                continue
            xs[i] = v
            if i == 0:
                if v or not upper_zero:
                    val = R0 - rem
                    if val % D3:
                        raise InternalDefect("enumeration value not integral")
                    yield (tuple(xs), val // D3)
            else:
                yield from rec(i - 1, rem, upper_zero and v == 0)
        xs[i] = 0

    yield from rec(3, R0, True)


def short_vectors(
    gram: list[list[Fraction]], bound: Fraction, canonical_half: bool = True
) -> Iterator[tuple[Vec4, Fraction]]:
    """All nonzero integer vectors x with x^T G x <= bound, exactly.

    With canonical_half=True only one of each pair {x,-x} is produced (the
    one whose highest-index nonzero coordinate is positive).  Yields
    (vector, value) pairs in a fixed deterministic order.
    """
    bound = Fraction(bound)
    if bound <= 0:
        return
    data = _enum_data(gram)
    den, umap = data[0], data[4]
    bscaled = (bound.numerator * den) // bound.denominator
    for vec, val in _enum_core(data, bscaled, canonical_half):
        orig = [sum(vec[s] * umap[s][t] for s in range(4)) for t in range(4)]
        if canonical_half:
            lead = max(t for t in range(4) if orig[t])
            if orig[lead] < 0:
                orig = [-v for v in orig]
        yield tuple(orig), Fraction(val, den)


def count_norm_values(
    alg: QuaternionAlgebra, L: Lattice, scale: Fraction, upto: int
) -> list[int]:
    """counts[n-1] = #{x in L : nrd(x)/scale = n} for n = 1..upto (both signs)."""
    data = _enum_data(gram_matrix(alg, L))
    den = data[0]
    step = Fraction(scale) * den  # val == n*step marks nrd(x)/scale == n
    counts = [0] * upto
    bscaled = (step.numerator * upto) // step.denominator
    for _, val in _enum_core(data, bscaled):
        q = Fraction(val) / step
        if q.denominator == 1 and q > 0:
            counts[int(q) - 1] += 2
    return counts


def exists_norm_exact(alg: QuaternionAlgebra, L: Lattice, value: Fraction) -> Optional[Vec4]:
    """A vector of exact reduced norm `value`, or None.  `value` must be the
    minimum possible norm on L for the principality test to be meaningful."""
    data = _enum_data(gram_matrix(alg, L))
    den, umap = data[0], data[4]
    target = Fraction(value) * den
    if target.denominator != 1:
        return None
    target = int(target)
    for vec, val in _enum_core(data, target):
        if val == target:
            return tuple(sum(vec[s] * umap[s][t] for s in range(4)) for t in range(4))
    return None


# ---------------------------------------------------------------------------
# orders
# ---------------------------------------------------------------------------


def trd_gram_noconj(alg: QuaternionAlgebra, L: Lattice) -> list[list[Fraction]]:
    rows = L.frac_rows()
    out = []
    for s in range(4):
        out.append([QuaternionAlgebra.trd(alg.mul(rows[s], rows[t])) for t in range(4)])
    return out


def reduced_discriminant(alg: QuaternionAlgebra, L: Lattice) -> Fraction:
    g = trd_gram_noconj(alg, L)
    det = _frac_det4(g)
    det = abs(det)
    num = math.isqrt(det.numerator)
    den = math.isqrt(det.denominator)
    if num * num != det.numerator or den * den != det.denominator:
        raise InternalDefect("discriminant determinant is not a perfect square")
    return Fraction(num, den)


def _frac_det4(rows: list[list[Fraction]]) -> Fraction:
    m = [list(map(Fraction, r)) for r in rows]
    det = Fraction(1)
    for c in range(4):
        piv = next((r for r in range(c, 4) if m[r][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        inv = 1 / m[c][c]
        for r in range(c + 1, 4):
            if m[r][c]:
                f = m[r][c] * inv
                for k in range(c, 4):
                    m[r][k] -= f * m[c][k]
    return det


def is_order(alg: QuaternionAlgebra, L: Lattice) -> bool:
    one = (Fraction(1), Fraction(0), Fraction(0), Fraction(0))
    if not L.contains(one):
        return False
    rows = L.frac_rows()
    for u in rows:
        if QuaternionAlgebra.trd(u).denominator != 1 or alg.nrd(u).denominator != 1:
            return False
        for w in rows:
            if not L.contains(alg.mul(u, w)):
                return False
    return True


def structure_constants(alg: QuaternionAlgebra, O: Lattice) -> list[list[tuple[int, ...]]]:
    """O-coordinates of all basis products b_s * b_t (integers for an order)."""
    rows = O.frac_rows()
    table = []
    for s in range(4):
        line = []
        for t in range(4):
            co = O.coords(alg.mul(rows[s], rows[t]))
            if any(c.denominator != 1 for c in co):
                raise InternalDefect("order not multiplicatively closed")
            line.append(tuple(int(c) for c in co))
        table.append(line)
    return table


def _fp_kernel(rows: list[list[int]], p: int) -> list[list[int]]:
    n = len(rows)
    m = [[v % p for v in r] for r in rows]
    nc = len(m[0])
    pivots = []
    r = 0
    for c in range(nc):
        piv = next((i for i in range(r, n) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], -1, p)
        m[r] = [v * inv % p for v in m[r]]
        for i in range(n):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(nc) if c not in pivots]
    basis = []
    for fc in free:
        vec = [0] * nc
        vec[fc] = 1
        for ri, pc in enumerate(pivots):
            vec[pc] = (-m[ri][fc]) % p
        basis.append(vec)
    return basis


def p_radical(alg: QuaternionAlgebra, O: Lattice, p: int) -> Lattice:
    """Preimage in O of the Jacobson radical of O/pO."""
    if p != 2:
        g = trd_gram_noconj(alg, O)
        gi = [[int(v) for v in row] for row in g]
        kern = _fp_kernel(gi, p)
    else:
        C = structure_constants(alg, O)

        def mul2(x, y):
            out = [0, 0, 0, 0]
            for s in range(4):
                if x[s] % 2:
                    for t in range(4):
                        if y[t] % 2:
                            cst = C[s][t]
                            for r in range(4):
                                out[r] ^= cst[r] & 1
            return out

        def strongly_nil(x) -> bool:
            for bits in range(16):
                y = [(bits >> t) & 1 for t in range(4)]
                z = mul2(x, y)
                z = mul2(z, z)
                z = mul2(z, z)
                if any(z):
                    return False
            return True

        members = []
        for bits in range(1, 16):
            x = [(bits >> t) & 1 for t in range(4)]
            if strongly_nil(x):
                members.append(x)
        # row reduce members over F_2
        kern = _fp_kernel_from_span(members)
    rows = [[v * p for v in r] for r in O.num]
    for cvec in kern:
        lift = [0, 0, 0, 0]
        for s in range(4):
            if cvec[s]:
                for t in range(4):
                    lift[t] += cvec[s] * O.num[s][t]
        rows.append(lift)
    return Lattice.from_int_rows(rows, O.den)


def _fp_kernel_from_span(members: list[list[int]]) -> list[list[int]]:
    basis: list[list[int]] = []
    for m in members:
        v = list(m)
        for b in basis:
            lead = next(i for i, x in enumerate(b) if x)
            if v[lead]:
                v = [(a ^ c) for a, c in zip(v, b)]
        if any(v):
            basis.append(v)
    return basis


def left_order(alg: QuaternionAlgebra, L: Lattice) -> Lattice:
    """{x in B : x L <= L} via duality against the constraint functionals."""
    return _multiplier_order(alg, L, side="left")


def right_order(alg: QuaternionAlgebra, L: Lattice) -> Lattice:
    return _multiplier_order(alg, L, side="right")


def _multiplier_order(alg: QuaternionAlgebra, L: Lattice, side: str) -> Lattice:
    basis = L.frac_rows()
    binv = _mat_inv4([list(r) for r in basis])
    e = [tuple(Fraction(int(i == t)) for i in range(4)) for t in range(4)]
    funcs: list[list[Fraction]] = []
    for u in basis:
        # row s of m: coordinates of e_s * u (or u * e_s) in the L-basis
        m = []
        for s in range(4):
            prod = alg.mul(e[s], u) if side == "left" else alg.mul(u, e[s])
            m.append([sum(Fraction(prod[t]) * binv[t][c] for t in range(4)) for c in range(4)])
        for c in range(4):
            funcs.append([m[s][c] for s in range(4)])
    R = Lattice.from_frac_rows(funcs)
    rinv = _mat_inv4([list(r) for r in R.frac_rows()])
    dual_rows = [[rinv[s][c] for s in range(4)] for c in range(4)]
    return Lattice.from_frac_rows(dual_rows)


def _split_unramified(alg: QuaternionAlgebra, O: Lattice, p: int) -> Lattice:
    """Enlarge a hereditary-but-not-maximal order at a split prime p by
    conjugating with an idempotent of O/pO."""
    C = structure_constants(alg, O)
    one = O.coords((Fraction(1), Fraction(0), Fraction(0), Fraction(0)))
    one = [int(v) % p for v in one]

    def mulp(x, y):
        out = [0, 0, 0, 0]
        for s in range(4):
            if x[s]:
                for t in range(4):
                    if y[t]:
                        cst = C[s][t]
                        xy = x[s] * y[t]
                        for r in range(4):
                            out[r] = (out[r] + xy * cst[r]) % p
        return out

    rows = O.frac_rows()

    def idempotents():
        if p == 2:
            for bits in range(1, 16):
                ev = [(bits >> t) & 1 for t in range(4)]
                if ev != one and mulp(ev, ev) == ev:
                    yield ev
            return
        seen = set()
        rng = random.Random(10**6 + p)
        stream = itertools.chain(
            (list(bits) for bits in itertools.product(range(min(p, 3)), repeat=4) if any(bits)),
            ([rng.randrange(p) for _ in range(4)] for _ in range(500)),
        )
        for c in stream:
            elem = [sum(Fraction(c[s]) * rows[s][t] for s in range(4)) for t in range(4)]
            t = QuaternionAlgebra.trd(elem)
            n = alg.nrd(elem)
            disc = int(t * t - 4 * n)
            if kronecker_symbol(disc, p) != 1:
                continue
            s = int(sympy.ntheory.sqrt_mod(disc, p))
            inv2 = pow(2, -1, p)
            r1, r2 = (int(t) + s) * inv2 % p, (int(t) - s) * inv2 % p
            if r1 == r2:
                continue
            inv = pow((r1 - r2) % p, -1, p)
            ev = [(v - r2 * o) * inv % p for v, o in zip(c, one)]
            # sharpen to an exact idempotent of O/pO through the radical
            for _ in range(8):
                e2 = mulp(ev, ev)
                if e2 == ev:
                    break
                e3 = mulp(e2, ev)
                ev = [(3 * a - 2 * b) % p for a, b in zip(e2, e3)]
            if mulp(ev, ev) != ev or not any(ev) or ev == one:
                continue
            key = tuple(ev)
            if key in seen:
                continue
            seen.add(key)
            yield ev

    for ev in idempotents():
        fv = [(o - v) % p for o, v in zip(one, ev)]
        for left, rightv in ((ev, fv), (fv, ev)):
            el = [sum(Fraction(left[s]) * rows[s][t] for s in range(4)) for t in range(4)]
            fr = [sum(Fraction(rightv[s]) * rows[s][t] for s in range(4)) for t in range(4)]
            new_rows = [list(r) for r in rows]
            for brow in rows:
                prod = alg.mul(alg.mul(el, brow), fr)
                new_rows.append([Fraction(v, p) for v in prod])
            cand = Lattice.from_frac_rows(new_rows)
            if cand.det() != O.det() and is_order(alg, cand):
                return cand
    raise InternalDefect(f"could not split order at p={p}")


def maximal_order(alg: QuaternionAlgebra) -> OrderLattice:
    """Maximal order containing the standard order Z<1,i,j,k>, built by the
    radical-idealizer process (plus an idempotent split at stalls)."""
    O = standard_order_lattice()
    ram = set(alg.ramified)
    d0 = reduced_discriminant(alg, O)
    for p in prime_factors(int(d0)):
        target = 1 if p in ram else 0
        while True:
            d = reduced_discriminant(alg, O)
            if d.denominator != 1:
                raise InternalDefect("order discriminant not integral")
            v = _vp(int(d), p)
            if v <= target:
                break
            if v == 1 and p not in ram:
                O = _split_unramified(alg, O, p)
                continue
            J = p_radical(alg, O, p)
            O2 = left_order(alg, J)
            if O2 == O:
                if p not in ram:
                    O = _split_unramified(alg, O, p)
                else:
                    raise InternalDefect(f"radical idealizer stalled at ramified p={p}")
            else:
                O = O2
    d = reduced_discriminant(alg, O)
    if d != alg.discriminant:
        raise InternalDefect(f"maximal order has discriminant {d}, expected {alg.discriminant}")
    if not is_order(alg, O):
        raise InternalDefect("maximalization produced a non-order")
    return OrderLattice(alg, O)


@dataclass(frozen=True)
class OrderLattice:
    """An order in a definite quaternion algebra, as a lattice basis."""

    algebra: QuaternionAlgebra
    lattice: Lattice

    @property
    def level(self) -> int:
        return self.algebra.discriminant

    def unit_half_count(self) -> int:
        """[O^x : {+-1}] = half the number of reduced-norm-1 vectors."""
        cnt = count_norm_values(self.algebra, self.lattice, Fraction(1), 1)[0]
        if cnt % 2:
            raise InternalDefect("odd unit count")
        return cnt // 2


# ---------------------------------------------------------------------------
# right ideals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RightIdeal:
    lattice: Lattice
    norm: Fraction

    @staticmethod
    def of(order: OrderLattice, lat: Lattice) -> "RightIdeal":
        ratio = lat.det() / order.lattice.det()
        num = math.isqrt(ratio.numerator)
        den = math.isqrt(ratio.denominator)
        if num * num != ratio.numerator or den * den != ratio.denominator:
            raise InternalDefect("ideal index is not a perfect square")
        return RightIdeal(lat, Fraction(num, den))

    def primitive(self, order: OrderLattice) -> "RightIdeal":
        """Canonical representative of the ray Q^+ * I: drop the denominator,
        then divide out the content of the HNF numerator."""
        lat = self.lattice
        g = 0
        for r in lat.num:
            for v in r:
                g = math.gcd(g, v)
        if lat.den == 1 and g == 1:
            return self
        new = Lattice(tuple(tuple(v // g for v in r) for r in lat.num), 1)
        return RightIdeal.of(order, new)


def is_right_ideal(order: OrderLattice, L: Lattice) -> bool:
    rows = L.frac_rows()
    orows = order.lattice.frac_rows()
    return all(L.contains(order.algebra.mul(u, b)) for u in rows for b in orows)


def ideal_equivalent(order: OrderLattice, I: RightIdeal, J: RightIdeal) -> bool:
    """I ~ J iff I = beta*J for some beta:  the product lattice I*conj(J)
    contains an element of reduced norm exactly Nr(I)*Nr(J)."""
    alg = order.algebra
    M = lattice_mul(alg, I.lattice, lattice_conj(J.lattice))
    return exists_norm_exact(alg, M, I.norm * J.norm) is not None


def theta_key(order: OrderLattice, I: RightIdeal, upto: Optional[int] = None) -> tuple[int, ...]:
    if upto is None:
        upto = theta_prefix_len(order.level)
    return tuple(count_norm_values(order.algebra, I.lattice, I.norm, upto))


def left_order_of(order: OrderLattice, I: RightIdeal) -> OrderLattice:
    lat = lattice_mul(order.algebra, I.lattice, lattice_conj(I.lattice)).scale(1 / I.norm)
    return OrderLattice(order.algebra, lat)


def two_sided_prime(order: OrderLattice, p: int) -> RightIdeal:
    """The unique two-sided prime ideal of norm p at a ramified prime p."""
    if order.level % p:
        raise PreconditionError(f"{p} does not divide the level")
    J = p_radical(order.algebra, order.lattice, p)
    ideal = RightIdeal.of(order, J)
    if ideal.norm != p:
        raise InternalDefect(f"two-sided ideal at {p} has norm {ideal.norm}")
    return ideal


def p_neighbors(order: OrderLattice, I: RightIdeal, p: int) -> list[RightIdeal]:
    """The integral sublattices of I of norm p*Nr(I): images I*J over the
    norm-p integral right ideals J of the order."""
    alg = order.algebra
    L = I.lattice
    # right action of the order basis on L/pL
    lrows = L.frac_rows()
    orows = order.lattice.frac_rows()
    action = []
    for t in range(4):
        mat = []
        for s in range(4):
            co = L.coords(alg.mul(lrows[s], orows[t]))
            if any(c.denominator != 1 for c in co):
                raise InternalDefect("not a right ideal")
            mat.append([int(c) % p for c in co])
        action.append(mat)

    def vecmat(v, m):
        return [sum(v[s] * m[s][c] for s in range(4)) % p for c in range(4)]

    found: dict[tuple, list[list[int]]] = {}
    for rep in _proj_points(p):
        span = [list(rep)]
        frontier = [list(rep)]
        while frontier:
            v = frontier.pop()
            for t in range(4):
                w = vecmat(v, action[t])
                red = _fp_reduce_against(w, span, p)
                if any(red):
                    span.append(red)
                    frontier.append(red)
        if len(span) == 2:
            canon = _fp_rref(span, p)
            found.setdefault(canon, span)
    expected = p + 1 if order.level % p else 1
    if len(found) != expected:
        raise InternalDefect(f"found {len(found)} neighbors at p={p}, expected {expected}")
    out = []
    for canon in sorted(found):
        rows = [[v * p for v in r] for r in L.num]
        for cvec in canon:
            lift = [0, 0, 0, 0]
            for s in range(4):
                if cvec[s]:
                    for t in range(4):
                        lift[t] += cvec[s] * L.num[s][t]
            rows.append(lift)
        out.append(RightIdeal.of(order, Lattice.from_int_rows(rows, L.den)))
    return out


def _proj_points(p: int) -> Iterator[tuple[int, ...]]:
    """Representatives of P^3(F_p): leading nonzero coordinate 1."""
    for lead in range(4):
        for rest in itertools.product(range(p), repeat=3 - lead):
            yield (0,) * lead + (1,) + rest


def _fp_reduce_against(v: list[int], span: list[list[int]], p: int) -> list[int]:
    v = [x % p for x in v]
    basis = _fp_rref(span, p)
    for b in basis:
        lead = next(i for i, x in enumerate(b) if x)
        if v[lead]:
            f = v[lead] * pow(b[lead], -1, p) % p
            v = [(a - f * c) % p for a, c in zip(v, b)]
    return v


@lru_cache(maxsize=4096)
def _fp_rref_cached(key: tuple, p: int) -> tuple:
    rows = [list(r) for r in key]
    out: list[list[int]] = []
    for v in rows:
        v = [x % p for x in v]
        for b in out:
            lead = next(i for i, x in enumerate(b) if x)
            if v[lead]:
                f = v[lead] * pow(b[lead], -1, p) % p
                v = [(a - f * c) % p for a, c in zip(v, b)]
        if any(v):
            lead = next(i for i, x in enumerate(v) if x)
            inv = pow(v[lead], -1, p)
            v = [x * inv % p for x in v]
            for b in out:
                if b[lead]:
                    f = b[lead]
                    for t in range(4):
                        b[t] = (b[t] - f * v[t]) % p
            out.append(v)
    out.sort(key=lambda r: next(i for i, x in enumerate(r) if x))
    return tuple(tuple(r) for r in out)


def _fp_rref(rows: list[list[int]], p: int) -> tuple:
    return _fp_rref_cached(tuple(tuple(r) for r in rows), p)


# ---------------------------------------------------------------------------
# the ideal class set
# ---------------------------------------------------------------------------


def eichler_mass(N: int) -> Fraction:
    m = Fraction(1, 12)
    for p in prime_factors(N):
        m *= p - 1
    return m


class IdealClassSet:
    """The ordered right ideal class set of a maximal order, with unit
    weights and the two-sided involution data.

    Ordering is reproducible: breadth-first discovery by p-neighbors at the
    smallest good prime, neighbors visited sorted by theta-series prefix.
    Completeness is certified by the mass formula sum(1/e_i) = prod(p-1)/12.
    """

    def __init__(self, order: OrderLattice, reps, weights, neighbor_prime, thetas=None):
        self.order = order
        self.level = order.level
        self.reps: list[RightIdeal] = reps
        self.weights: list[int] = weights
        self.neighbor_prime = neighbor_prime
        self._theta = thetas if thetas is not None else [theta_key(order, I) for I in reps]
        self._sigma: dict[int, tuple[int, ...]] = {}
        self._left_orders: dict[int, OrderLattice] = {}
        self._pair: dict[tuple[int, int], tuple] = {}
        self._class_of_lattice: dict[tuple, int] = {
            I.lattice.key(): i for i, I in enumerate(reps)
        }

    def pair_enum_data(self, i: int, k: int) -> tuple[tuple, Fraction]:
        """Cached enumeration data for I_i * conj(I_k) with its norm scale."""
        if (i, k) not in self._pair:
            alg = self.order.algebra
            M = lattice_mul(alg, self.reps[i].lattice, lattice_conj(self.reps[k].lattice))
            data = _enum_data(gram_matrix(alg, M))
            self._pair[(i, k)] = (data, self.reps[i].norm * self.reps[k].norm)
        return self._pair[(i, k)]

    @property
    def h(self) -> int:
        return len(self.reps)

    def left_order(self, i: int) -> OrderLattice:
        if i not in self._left_orders:
            self._left_orders[i] = left_order_of(self.order, self.reps[i])
        return self._left_orders[i]

    def classify(self, I: RightIdeal) -> int:
        """Index of the class of I among the stored representatives."""
        I = I.primitive(self.order)
        lk = I.lattice.key()
        hit = self._class_of_lattice.get(lk)
        if hit is not None:
            return hit
        key = theta_key(self.order, I)
        for idx, k in enumerate(self._theta):
            if k == key and ideal_equivalent(self.order, I, self.reps[idx]):
                self._class_of_lattice[lk] = idx
                return idx
        raise InternalDefect("ideal does not match any class representative")

    def sigma(self, p: int) -> tuple[int, ...]:
        """Permutation of class indices induced by the two-sided prime at p|N."""
        if p not in self._sigma:
            P = two_sided_prime(self.order, p)
            perm = []
            for I in self.reps:
                prod = RightIdeal.of(self.order, lattice_mul(self.order.algebra, I.lattice, P.lattice))
                perm.append(self.classify(prod))
            pt = tuple(perm)
            if any(pt[pt[i]] != i for i in range(self.h)):
                raise InternalDefect(f"two-sided action at {p} is not an involution")
            self._sigma[p] = pt
        return self._sigma[p]

    def orbit_partition(self) -> list[list[int]]:
        """Connected components under all sigma_p, p | N (the left-order
        isomorphism classes)."""
        parent = list(range(self.h))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for p in prime_factors(self.level):
            perm = self.sigma(p)
            for i, j in enumerate(perm):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
        groups: dict[int, list[int]] = {}
        for i in range(self.h):
            groups.setdefault(find(i), []).append(i)
        return sorted(groups.values())


def ideal_classes(order: OrderLattice) -> IdealClassSet:
    alg = order.algebra
    N = order.level
    target = eichler_mass(N)
    p0 = next(p for p in primes_up_to(200) if N % p)
    base = RightIdeal.of(order, order.lattice)
    reps = [base]
    weights = [order.unit_half_count()]
    thetas = [theta_key(order, base)]
    seen = {base.lattice.key(): 0}
    mass = Fraction(1, weights[0])
    qhead = 0
    while mass != target:
        if qhead >= len(reps):
            raise InternalDefect(
                f"neighbor closure exhausted at mass {mass} < {target} (N={N})"
            )
        I = reps[qhead]
        qhead += 1
        nbrs = p_neighbors(order, I, p0)
        prims = [J.primitive(order) for J in nbrs]
        fresh = [J for J in prims if J.lattice.key() not in seen]
        keyed = sorted(
            ((theta_key(order, J), J.lattice.key(), J) for J in fresh),
            key=lambda t: (t[0], t[1]),
        )
        for key, lk, J in keyed:
            known = None
            for idx, k in enumerate(thetas):
                if k == key and ideal_equivalent(order, J, reps[idx]):
                    known = idx
                    break
            if known is None:
                reps.append(J)
                thetas.append(key)
                seen[lk] = len(reps) - 1
                w = left_order_of(order, J).unit_half_count()
                weights.append(w)
                mass += Fraction(1, w)
                if mass > target:
                    raise InternalDefect(f"mass overshoot at N={N}: {mass} > {target}")
            else:
                seen[lk] = known
        if mass == target:
            break
    return IdealClassSet(order, reps, weights, p0, thetas=thetas)


# ---------------------------------------------------------------------------
# Brandt matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BrandtMatrix:
    level: int
    n: int
    entries: tuple[tuple[int, ...], ...]

    def row_sums(self) -> list[int]:
        return [sum(r) for r in self.entries]

    def trace(self) -> int:
        return sum(self.entries[i][i] for i in range(len(self.entries)))

    def is_permutation(self) -> bool:
        h = len(self.entries)
        return all(sum(r) == 1 for r in self.entries) and all(
            sum(self.entries[i][j] for i in range(h)) == 1 for j in range(h)
        )

    def apply(self, vec: Sequence) -> list:
        return [sum(e * v for e, v in zip(row, vec) if e) for row in self.entries]

    def mul(self, other: "BrandtMatrix") -> list[list[int]]:
        h = len(self.entries)
        return [
            [
                sum(self.entries[i][k] * other.entries[k][j] for k in range(h))
                for j in range(h)
            ]
            for i in range(h)
        ]


def brandt_matrix(classes: IdealClassSet, n: int) -> BrandtMatrix:
    """Hecke operator T_n in the basis of class characteristic functions:
    entry (i,k) counts the integral sublattices of I_i of norm n*Nr(I_i)
    lying in class k, i.e. #{y in I_i*conj(I_k) : nrd(y) = n Nr_i Nr_k}/(2 e_k)."""
    if n < 1:
        raise PreconditionError("Brandt index must be positive")
    order = classes.order
    alg = order.algebra
    h = classes.h
    if classes.level % n == 0 and n > 1 and sympy.isprime(n):
        # ramified prime: the permutation induced by the two-sided ideal
        perm = classes.sigma(n)
        ent = [[1 if perm[i] == k else 0 for k in range(h)] for i in range(h)]
        return BrandtMatrix(classes.level, n, tuple(tuple(r) for r in ent))
    if sympy.isprime(n):
        # row i classifies the p+1 index-p^2 sublattices of I_i directly;
        # far cheaper than scanning all h pair lattices for counts
        ent = [[0] * h for _ in range(h)]
        for i in range(h):
            for nbr in p_neighbors(order, classes.reps[i], n):
                ent[i][classes.classify(nbr)] += 1
        return BrandtMatrix(classes.level, n, tuple(tuple(r) for r in ent))
    ent = [[0] * h for _ in range(h)]
    for i in range(h):
        for k in range(i, h):
            data, scale = classes.pair_enum_data(i, k)
            target = Fraction(scale) * n * data[0]
            cnt = 0
            if target.denominator == 1:
                target = int(target)
                for _, val in _enum_core(data, target):
                    if val == target:
                        cnt += 2
            if cnt % (2 * classes.weights[k]):
                raise InternalDefect("Brandt count not divisible by unit weight")
            ent[i][k] = cnt // (2 * classes.weights[k])
            if k != i:
                if cnt % (2 * classes.weights[i]):
                    raise InternalDefect("Brandt count not divisible by unit weight")
                ent[k][i] = cnt // (2 * classes.weights[i])
    return BrandtMatrix(classes.level, n, tuple(tuple(r) for r in ent))


# ---------------------------------------------------------------------------
# canonical JSON serialization (used by the on-disk level cache)
# ---------------------------------------------------------------------------


def classes_to_json(classes: IdealClassSet) -> dict:
    order = classes.order
    return {
        "level": classes.level,
        "algebra": [order.algebra.a, order.algebra.b],
        "order": _lattice_json(order.lattice),
        "neighbor_prime": classes.neighbor_prime,
        "reps": [
            {"lattice": _lattice_json(I.lattice), "norm": str(I.norm)}
            for I in classes.reps
        ],
        "weights": list(classes.weights),
        "sigma": {str(p): list(classes.sigma(p)) for p in prime_factors(classes.level)},
    }


def classes_from_json(doc: dict) -> IdealClassSet:
    a, b = doc["algebra"]
    alg = QuaternionAlgebra(a, b, tuple(prime_factors(doc["level"])))
    order = OrderLattice(alg, _lattice_from_json(doc["order"]))
    reps = [
        RightIdeal(_lattice_from_json(r["lattice"]), Fraction(r["norm"]))
        for r in doc["reps"]
    ]
    classes = IdealClassSet(order, reps, list(doc["weights"]), doc["neighbor_prime"])
    classes._sigma = {int(p): tuple(v) for p, v in doc["sigma"].items()}
    return classes


def brandt_to_json(mat: BrandtMatrix) -> dict:
    return {"level": mat.level, "n": mat.n, "entries": [list(r) for r in mat.entries]}


def brandt_from_json(doc: dict) -> BrandtMatrix:
    return BrandtMatrix(doc["level"], doc["n"], tuple(tuple(r) for r in doc["entries"]))


def _lattice_json(L: Lattice) -> dict:
    return {"num": [list(r) for r in L.num], "den": L.den}


def _lattice_from_json(doc: dict) -> Lattice:
    return Lattice(tuple(tuple(r) for r in doc["num"]), doc["den"])


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))
