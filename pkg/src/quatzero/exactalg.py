"""Exact base-layer arithmetic: integers mod squares, integer polynomials,
number fields presented by an irreducible modulus, and dense linear algebra
over the rationals or a number field.

No floating point is used anywhere in this module.  Factorization of
integer polynomials is delegated to sympy's Zassenhaus implementation and
re-normalized here so the output order is deterministic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import sympy

from . import PreconditionError, InternalDefect

# ---------------------------------------------------------------------------
# elementary number theory
# ---------------------------------------------------------------------------

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond the ranges used here."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SMALL_PRIMES:
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


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [i for i, v in enumerate(sieve) if v]


def prime_factors(n: int) -> list[int]:
    """Distinct prime divisors of |n|, ascending."""
    return sorted(int(p) for p in sympy.factorint(abs(n)))


def is_squarefree(n: int) -> bool:
    n = abs(n)
    if n == 0:
        return False
    return all(e == 1 for e in sympy.factorint(n).values())


def kronecker_symbol(a: int, n: int) -> int:
    """Kronecker symbol (a|n) with the standard 2-adic and sign conventions."""
    if n == 0:
        raise PreconditionError("kronecker_symbol: modulus must be nonzero")
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -1
    t = 0
    while n % 2 == 0:
        n //= 2
        t += 1
    if t:
        if a % 2 == 0:
            return 0
        if t % 2 == 1 and a % 8 in (3, 5):
            result = -result
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def reduced_forms(disc: int) -> list[tuple[int, int, int]]:
    """All reduced primitive positive-definite forms (a,b,c) of the given
    negative discriminant: b^2-4ac = disc, |b| <= a <= c, and b >= 0
    whenever |b| = a or a = c."""
    if disc >= 0 or disc % 4 not in (0, 1):
        raise PreconditionError(f"not a negative discriminant: {disc}")
    forms = []
    amax = math.isqrt(-disc // 3)
    for a in range(1, amax + 1):
        for b in range(-a, a + 1):
            if (b - disc) % 2:
                continue
            num = b * b - disc
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if (abs(b) == a or a == c) and b < 0:
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            forms.append((a, b, c))
    forms.sort()
    return forms


def iq_class_number(disc: int) -> int:
    """Class number h(disc) of an imaginary quadratic discriminant,
    counted by enumerating reduced forms."""
    return len(reduced_forms(disc))


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int]:
    g, u, _ = _xgcd(m1, m2)
    if g != 1:
        raise InternalDefect("crt moduli not coprime")
    m = m1 * m2
    return (r1 + (r2 - r1) * u % m2 * m1) % m, m


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


# ---------------------------------------------------------------------------
# integer / rational polynomials (coefficients stored lowest degree first)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntPoly:
    """Univariate integer polynomial; coefficients lowest degree first,
    trailing zeros stripped, so the zero polynomial has empty coefficients."""

    coeffs: tuple[int, ...]

    @staticmethod
    def of(seq: Iterable[int]) -> "IntPoly":
        c = list(seq)
        while c and c[-1] == 0:
            c.pop()
        return IntPoly(tuple(int(v) for v in c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def __add__(self, other: "IntPoly") -> "IntPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, v in enumerate(b):
            out[i] += v
        return IntPoly.of(out)

    def __neg__(self) -> "IntPoly":
        return IntPoly(tuple(-v for v in self.coeffs))

    def __sub__(self, other: "IntPoly") -> "IntPoly":
        return self + (-other)

    def __mul__(self, other: "IntPoly") -> "IntPoly":
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return IntPoly(())
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return IntPoly.of(out)

    def scale(self, k: int) -> "IntPoly":
        return IntPoly.of(v * k for v in self.coeffs)

    def divmod_monic(self, d: "IntPoly") -> tuple["IntPoly", "IntPoly"]:
        """Division with remainder by a monic divisor (stays in Z[x])."""
        if not d.is_monic():
            raise PreconditionError("divisor must be monic")
        rem = list(self.coeffs)
        dd = d.degree
        q = [0] * max(0, len(rem) - dd)
        for i in range(len(rem) - 1, dd - 1, -1):
            f = rem[i]
            if f:
                q[i - dd] = f
                for j, v in enumerate(d.coeffs):
                    rem[i - dd + j] -= f * v
        return IntPoly.of(q), IntPoly.of(rem)

    def derivative(self) -> "IntPoly":
        return IntPoly.of(i * v for i, v in enumerate(self.coeffs) if i)

    def content(self) -> int:
        return math.gcd(*self.coeffs) if self.coeffs else 0

    def primitive(self) -> "IntPoly":
        c = self.content()
        if c in (0, 1):
            return self
        return IntPoly(tuple(v // c for v in self.coeffs))

    def eval_at(self, x):
        out = 0
        for v in reversed(self.coeffs):
            out = out * x + v
        return out

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for i in range(self.degree, -1, -1):
            v = self.coeffs[i]
            if not v:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            if i > 0 and abs(v) == 1:
                term = mono if v == 1 else "-" + mono
            else:
                term = f"{v}{mono}"
            if parts and not term.startswith("-"):
                parts.append("+")
            parts.append(term)
        return "".join(parts)


_X = sympy.Symbol("x")


def _to_sympy(p: IntPoly) -> sympy.Poly:
    return sympy.Poly(list(reversed(p.coeffs)), _X, domain=sympy.ZZ)


def _from_sympy(sp: sympy.Poly) -> IntPoly:
    return IntPoly.of(int(c) for c in reversed(sp.all_coeffs()))


def factor_int_poly(p: IntPoly) -> list[tuple[IntPoly, int]]:
    """Factor a nonzero integer polynomial into primitive irreducible factors
    with positive leading coefficients (monic whenever the primitive part of
    the input is monic).  The integer content is dropped.  Factors come back
    sorted by (degree, coefficient tuple) so results are reproducible.
    """
    if p.is_zero():
        raise PreconditionError("cannot factor the zero polynomial")
    if p.degree == 0:
        return []
    _, factors = _to_sympy(p).factor_list()
    out = []
    for f, mult in factors:
        fp = _from_sympy(sympy.Poly(f, _X))
        if fp.coeffs[-1] < 0:
            fp = -fp
        out.append((fp, int(mult)))
    out.sort(key=lambda fm: (fm[0].degree, fm[0].coeffs))
    prod = IntPoly.of([1])
    for f, m in out:
        for _ in range(m):
            prod = prod * f
    lead = Fraction(p.coeffs[-1], prod.coeffs[-1])
    if prod.scale(lead.numerator).coeffs != p.scale(lead.denominator).coeffs:
        raise InternalDefect("factorization does not multiply back")
    return out


def poly_gcd(p: IntPoly, q: IntPoly) -> IntPoly:
    g = sympy.gcd(_to_sympy(p), _to_sympy(q))
    return _from_sympy(sympy.Poly(g, _X))


def is_squarefree_poly(p: IntPoly) -> bool:
    return poly_gcd(p, p.derivative()).degree == 0


def is_irreducible(p: IntPoly) -> bool:
    fl = factor_int_poly(p)
    return len(fl) == 1 and fl[0][1] == 1 and fl[0][0].degree == p.degree


# ---------------------------------------------------------------------------
# number fields and their elements
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _field_cache(modulus_coeffs: tuple[int, ...]) -> "NumberField":
    return NumberField(IntPoly(modulus_coeffs), _checked=True)


class NumberField:
    """Q[x]/(c(x)) for a monic irreducible integer polynomial c.

    No canonicalization across isomorphic presentations is attempted: two
    fields are the same object only if their defining polynomials agree.
    """

    def __init__(self, modulus: IntPoly, _checked: bool = False):
        if not modulus.is_monic() or modulus.degree < 1:
            raise PreconditionError("modulus must be monic of positive degree")
        if not _checked and not is_irreducible(modulus):
            raise PreconditionError(f"modulus {modulus} is reducible")
        self.modulus = modulus
        self.degree = modulus.degree
        # x^k mod c for k < 2*degree - 1, used by element multiplication
        d = self.degree
        rows = []
        cur = [Fraction(0)] * d
        if d >= 1:
            cur[0] = Fraction(1)
        rows.append(tuple(cur))
        for _ in range(2 * d - 2):
            nxt = [Fraction(0)] + list(cur[: d - 1])
            top = cur[d - 1]
            if top:
                for t in range(d):
                    nxt[t] -= top * modulus.coeffs[t]
            rows.append(tuple(nxt))
            cur = nxt
        self._xpow = rows

    @staticmethod
    def make(modulus: IntPoly) -> "NumberField":
        if not is_irreducible(modulus):
            raise PreconditionError(f"modulus {modulus} is reducible")
        return _field_cache(modulus.coeffs)

    def __eq__(self, other) -> bool:
        return isinstance(other, NumberField) and self.modulus == other.modulus

    def __hash__(self) -> int:
        return hash(self.modulus)

    def __repr__(self) -> str:
        return f"NumberField({self.modulus})"

    def zero(self) -> "NFElem":
        return NFElem(self, (Fraction(0),) * self.degree)

    def one(self) -> "NFElem":
        return self.from_rational(Fraction(1))

    def gen(self) -> "NFElem":
        rep = [Fraction(0)] * self.degree
        if self.degree == 1:
            rep[0] = Fraction(-self.modulus.coeffs[0])
        else:
            rep[1] = Fraction(1)
        return NFElem(self, tuple(rep))

    def from_rational(self, q) -> "NFElem":
        rep = [Fraction(0)] * self.degree
        rep[0] = Fraction(q)
        return NFElem(self, tuple(rep))

    def from_coeffs(self, seq: Sequence) -> "NFElem":
        rep = [Fraction(v) for v in seq]
        if len(rep) > self.degree:
            raise PreconditionError("representative degree too large")
        rep += [Fraction(0)] * (self.degree - len(rep))
        return NFElem(self, tuple(rep))


@dataclass(frozen=True)
class NFElem:
    """Element of a NumberField, stored as the reduced residue polynomial."""

    field: NumberField
    rep: tuple[Fraction, ...]

    def _chk(self, other: "NFElem") -> None:
        if self.field != other.field:
            raise PreconditionError("elements of different number fields")

    def __bool__(self) -> bool:
        return any(self.rep)

    def is_zero(self) -> bool:
        return not any(self.rep)

    def __add__(self, other: "NFElem") -> "NFElem":
        self._chk(other)
        return NFElem(self.field, tuple(a + b for a, b in zip(self.rep, other.rep)))

    def __sub__(self, other: "NFElem") -> "NFElem":
        self._chk(other)
        return NFElem(self.field, tuple(a - b for a, b in zip(self.rep, other.rep)))

    def __neg__(self) -> "NFElem":
        return NFElem(self.field, tuple(-a for a in self.rep))

    def __mul__(self, other: "NFElem") -> "NFElem":
        self._chk(other)
        d = self.field.degree
        prod = [Fraction(0)] * (2 * d - 1)
        for i, a in enumerate(self.rep):
            if a:
                for j, b in enumerate(other.rep):
                    if b:
                        prod[i + j] += a * b
        out = [Fraction(0)] * d
        xpow = self.field._xpow
        for k, coeff in enumerate(prod):
            if coeff:
                row = xpow[k]
                for t in range(d):
                    if row[t]:
                        out[t] += coeff * row[t]
        return NFElem(self.field, tuple(out))

    def scale(self, q) -> "NFElem":
        q = Fraction(q)
        return NFElem(self.field, tuple(q * a for a in self.rep))

    def __rmul__(self, other) -> "NFElem":
        # scalar * element, so integer matrices can act on NFElem vectors
        return self.scale(other)

    def __radd__(self, other) -> "NFElem":
        if other == 0:
            return self
        return self + self.field.from_rational(other)

    def inverse(self) -> "NFElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero field element")
        # extended Euclid in Q[x] against the modulus
        a = [Fraction(v) for v in self.field.modulus.coeffs]
        b = list(self.rep)
        s0, s1 = [], [Fraction(1)]
        while any(b):
            q, r = _qpoly_divmod(a, b)
            a, b = b, r
            s0, s1 = s1, _qpoly_sub(s0, _qpoly_mul(q, s1))
        if len(a) != 1:
            raise InternalDefect("modulus not coprime to element")
        inv = [c / a[0] for c in s0]
        return self.field.from_coeffs(_qpoly_mod_reduce(inv, self.field))

    def __truediv__(self, other: "NFElem") -> "NFElem":
        return self * other.inverse()

    def norm(self) -> Fraction:
        """Field norm: determinant of the multiplication-by-self matrix."""
        d = self.field.degree
        gen = self.field.gen()
        cols = []
        pw = self.field.one()
        for _ in range(d):
            cols.append((self * pw).rep)
            pw = pw * gen
        return _qmat_det([[cols[j][i] for j in range(d)] for i in range(d)])

    def trace(self) -> Fraction:
        """Field trace: trace of the multiplication-by-self matrix."""
        d = self.field.degree
        gen = self.field.gen()
        t = Fraction(0)
        pw = self.field.one()
        for k in range(d):
            t += (self * pw).rep[k]
            pw = pw * gen
        return t

    def __str__(self) -> str:
        terms = []
        for i, c in enumerate(self.rep):
            if not c:
                continue
            if i == 0:
                terms.append(str(c))
            else:
                mono = "a" if i == 1 else f"a^{i}"
                terms.append(mono if c == 1 else ("-" + mono if c == -1 else f"{c}*{mono}"))
        return " + ".join(terms).replace("+ -", "- ") if terms else "0"


def _qpoly_divmod(a: list[Fraction], b: list[Fraction]):
    a = list(a)
    while a and not a[-1]:
        a.pop()
    db = len(b) - 1
    while b and not b[-1]:
        b.pop()
        db -= 1
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b) and a:
        f = a[-1] / b[-1]
        k = len(a) - len(b)
        q[k] = f
        for j, v in enumerate(b):
            a[k + j] -= f * v
        while a and not a[-1]:
            a.pop()
    return q, a


def _qpoly_mul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _qpoly_sub(a, b):
    out = list(a) + [Fraction(0)] * max(0, len(b) - len(a))
    for i, v in enumerate(b):
        out[i] -= v
    while out and not out[-1]:
        out.pop()
    return out


def _qpoly_mod_reduce(rep, field: NumberField):
    out = list(rep[: field.degree])
    out += [Fraction(0)] * (field.degree - len(out))
    for k in range(field.degree, len(rep)):
        if rep[k]:
            row = field._xpow[k] if k < len(field._xpow) else None
            if row is None:
                raise InternalDefect("reduction table too small")
            for t in range(field.degree):
                out[t] += rep[k] * row[t]
    return out


def _qmat_det(rows: list[list[Fraction]]) -> Fraction:
    n = len(rows)
    m = [list(r) for r in rows]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        inv = 1 / m[c][c]
        for r in range(c + 1, n):
            if m[r][c]:
                f = m[r][c] * inv
                for k in range(c, n):
                    m[r][k] -= f * m[c][k]
    return det


# ---------------------------------------------------------------------------
# exact linear algebra
# ---------------------------------------------------------------------------


def kernel_over_field(rows: Sequence[Sequence]) -> list[list]:
    """Exact right-kernel basis of a matrix over a field.

    Entries may be Fractions/ints or NFElems of one common field; the basis
    is echelonized with pivots chosen by ascending column index, and basis
    vectors come out ordered by their free column.
    """
    nr = len(rows)
    if nr == 0:
        return []
    nc = len(rows[0])
    field = None
    for row in rows:
        if len(row) != nc:
            raise PreconditionError("ragged matrix")
        for v in row:
            if isinstance(v, NFElem):
                if field is None:
                    field = v.field
                elif field != v.field:
                    raise PreconditionError("matrix entries in different fields")
    if field is not None:
        one, zero = field.one(), field.zero()
        m = [[v if isinstance(v, NFElem) else field.from_rational(v) for v in row] for row in rows]
    else:
        one, zero = Fraction(1), Fraction(0)
        m = [[Fraction(v) for v in row] for row in rows]

    pivots: list[int] = []
    r = 0
    for c in range(nc):
        piv = next((i for i in range(r, nr) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = one / m[r][c]
        m[r] = [inv * v for v in m[r]]
        for i in range(nr):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nr:
            break
    free = [c for c in range(nc) if c not in pivots]
    basis = []
    for fc in free:
        vec = [zero] * nc
        vec[fc] = one
        for ri, pc in enumerate(pivots):
            vec[pc] = -m[ri][fc]
        basis.append(vec)
    return basis


def rational_kernel(rows: Sequence[Sequence]) -> list[list[Fraction]]:
    return kernel_over_field(rows)


def matvec(rows, vec):
    return [sum(a * b for a, b in zip(row, vec)) for row in rows]


# ---------------------------------------------------------------------------
# exact characteristic polynomials via CRT over word-size primes
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def _crt_primes() -> list[int]:
    out = []
    p = 2**31
    while len(out) < 128:
        p = int(sympy.prevprime(p))
        out.append(p)
    return out


def _charpoly_mod(mat, p: int) -> list[int]:
    """Characteristic polynomial mod p via Hessenberg reduction; `mat` is a
    square numpy int64 array with entries already reduced mod p."""
    import numpy as np

    n = mat.shape[0]
    H = mat % p
    for k in range(n - 2):
        piv = -1
        for i in range(k + 1, n):
            if H[i, k]:
                piv = i
                break
        if piv < 0:
            continue
        if piv != k + 1:
            H[[k + 1, piv]] = H[[piv, k + 1]]
            H[:, [k + 1, piv]] = H[:, [piv, k + 1]]
        inv = pow(int(H[k + 1, k]), -1, p)
        for i in range(k + 2, n):
            if H[i, k]:
                f = int(H[i, k]) * inv % p
                H[i] = (H[i] - f * H[k + 1]) % p
                H[:, k + 1] = (H[:, k + 1] + f * H[:, i]) % p
    # charpoly of a Hessenberg matrix by the leading-minor recurrence
    polys: list[list[int]] = [[1]]
    Hl = H.tolist()
    for m in range(1, n + 1):
        prev = polys[m - 1]
        pm = [0] * (m + 1)
        hmm = Hl[m - 1][m - 1]
        for t, c in enumerate(prev):
            pm[t + 1] = (pm[t + 1] + c) % p
            pm[t] = (pm[t] - hmm * c) % p
        prod = 1
        for i in range(m - 1, 0, -1):
            prod = prod * Hl[i][i - 1] % p
            coef = Hl[i - 1][m - 1] * prod % p
            if coef:
                for t, c in enumerate(polys[i - 1]):
                    pm[t] = (pm[t] - coef * c) % p
        polys.append([v % p for v in pm])
    return polys[n]


def charpoly_int(rows: Sequence[Sequence[int]], root_bound: int) -> IntPoly:
    """Exact characteristic polynomial of an integer matrix all of whose
    complex eigenvalues are bounded by `root_bound` in absolute value
    (e.g. the maximum row sum of a nonnegative matrix).  Computed modulo
    enough word-size primes to certify the result unconditionally."""
    import numpy as np

    n = len(rows)
    if n == 0:
        return IntPoly.of([1])
    R = max(1, int(root_bound))
    bound = max(math.comb(n, k) * R ** (n - k) for k in range(n + 1))
    mat = np.array([[int(v) for v in row] for row in rows], dtype=np.int64)
    residues = []
    primes = []
    prod = 1
    for p in _crt_primes():
        primes.append(p)
        residues.append(_charpoly_mod(mat, p))
        prod *= p
        if prod > 2 * bound:
            break
    else:
        raise InternalDefect("prime pool exhausted in charpoly_int")
    coeffs = []
    for t in range(n + 1):
        r, m = residues[0][t], primes[0]
        for res, p in zip(residues[1:], primes[1:]):
            r, m = crt_pair(r, m, res[t], p)
        if r > m // 2:
            r -= m
        coeffs.append(r)
    return IntPoly.of(coeffs)


def _berlekamp_massey(seq: list[int], p: int) -> list[int]:
    """Minimal LFSR polynomial (monic, low-first) of a sequence mod p."""
    C = [1]
    B = [1]
    L, m, b = 0, 1, 1
    for i, s in enumerate(seq):
        d = s % p
        for t in range(1, L + 1):
            d = (d + C[t] * seq[i - t]) % p
        if d == 0:
            m += 1
            continue
        coef = d * pow(b, -1, p) % p
        T = list(C)
        if len(C) < len(B) + m:
            C += [0] * (len(B) + m - len(C))
        for t in range(len(B)):
            C[t + m] = (C[t + m] - coef * B[t]) % p
        if 2 * L <= i:
            L = i + 1 - L
            B, b, m = T, d, 1
        else:
            m += 1
    # connection poly C(x) = 1 + c1 x + ...: reverse to the monic annihilator
    C = C[: L + 1] + [0] * (L + 1 - len(C))
    rev = list(reversed([c % p for c in C[: L + 1]]))
    lead = rev[-1]
    if lead != 1:
        inv = pow(lead, -1, p)
        rev = [c * inv % p for c in rev]
    return rev


def charpoly_if_squarefree_sparse(
    rows: Sequence[Sequence[int]], root_bound: int
) -> Optional[IntPoly]:
    """Characteristic polynomial via Krylov sequences and Berlekamp-Massey,
    valid exactly when it is squarefree (minimal = characteristic); returns
    None when the modular minimal polynomials keep coming out of degree < n,
    which certifies nothing but strongly suggests a repeated factor.

    Every prime whose recovered degree equals n contributes charpoly mod p
    (the monic degree-n divisor of the charpoly), so the CRT result is exact
    once the included moduli exceed twice the proven coefficient bound."""
    import numpy as np

    n = len(rows)
    if n == 0:
        return IntPoly.of([1])
    R = max(1, int(root_bound))
    bound = max(math.comb(n, k) * R ** (n - k) for k in range(n + 1))
    mat = np.array([[int(v) for v in row] for row in rows], dtype=np.int64)
    maxe = max((abs(int(v)) for row in rows for v in row), default=0)
    if maxe * n * (1 << 31) >= 1 << 62:
        return None  # entries too large for the int64 Krylov path
    rng = random.Random(n * 1000003 + R)
    residues: list[list[int]] = []
    primes: list[int] = []
    prod = 1
    misses = 0
    for p in _crt_primes():
        found = None
        for _ in range(3):
            # u kept to 15-bit entries so the dot products stay inside int64
            u = np.array([rng.randrange(1, 1 << 15) for _ in range(n)], dtype=np.int64)
            v = np.array([rng.randrange(1, 1 << 15) for _ in range(n)], dtype=np.int64)
            seq = []
            w = v
            for _ in range(2 * n):
                seq.append(int(u @ w % p))
                w = mat @ w % p
            m = _berlekamp_massey(seq, p)
            if len(m) == n + 1:
                found = m
                break
        if found is None:
            misses += 1
            if misses >= 3:
                return None
            continue
        residues.append(found)
        primes.append(p)
        prod *= p
        if prod > 2 * bound:
            break
    else:
        raise InternalDefect("prime pool exhausted in sparse charpoly")
    coeffs = []
    for t in range(n + 1):
        r, m = residues[0][t], primes[0]
        for res, p in zip(residues[1:], primes[1:]):
            r, m = crt_pair(r, m, res[t], p)
        if r > m // 2:
            r -= m
        coeffs.append(r)
    out = IntPoly.of(coeffs)
    if not is_squarefree_poly(out):
        return None
    return out


# ---------------------------------------------------------------------------
# real root isolation (Sturm) for totally real defining polynomials
# ---------------------------------------------------------------------------


def _sturm_chain(p: IntPoly) -> list[list[Fraction]]:
    chain = [[Fraction(v) for v in p.coeffs], [Fraction(v) for v in p.derivative().coeffs]]
    while chain[-1] and len(chain[-1]) > 1:
        _, r = _qpoly_divmod(list(chain[-2]), list(chain[-1]))
        r = [-v for v in r]
        if not r:
            break
        chain.append(r)
    return chain


def _qpoly_eval(coeffs: list[Fraction], x: Fraction) -> Fraction:
    out = Fraction(0)
    for v in reversed(coeffs):
        out = out * x + v
    return out


def _sign_changes(chain: list[list[Fraction]], x: Fraction) -> int:
    signs = []
    for c in chain:
        v = _qpoly_eval(c, x)
        if v:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def isolate_real_roots(p: IntPoly) -> list[tuple[Fraction, Fraction]]:
    """Disjoint isolating intervals for the real roots of a squarefree
    integer polynomial, sorted ascending.  Interval endpoints are exact
    rationals and are never themselves roots."""
    if p.is_zero() or p.degree == 0:
        return []
    if not is_squarefree_poly(p):
        raise PreconditionError("root isolation expects a squarefree polynomial")
    chain = _sturm_chain(p)
    lead = abs(p.coeffs[-1])
    bound = Fraction(1) + Fraction(max(abs(c) for c in p.coeffs), lead)
    # nudge endpoints off any root
    lo, hi = -bound, bound
    while p.eval_at(lo) == 0:
        lo -= 1
    while p.eval_at(hi) == 0:
        hi += 1
    total = _sign_changes(chain, lo) - _sign_changes(chain, hi)
    out: list[tuple[Fraction, Fraction]] = []

    def split(a: Fraction, b: Fraction, na: int, nb: int) -> None:
        count = na - nb
        if count == 0:
            return
        if count == 1:
            out.append((a, b))
            return
        mid = (a + b) / 2
        while p.eval_at(mid) == 0:
            mid = (a + mid) / 2
        nm = _sign_changes(chain, mid)
        split(a, mid, na, nm)
        split(mid, b, nm, nb)

    split(lo, hi, _sign_changes(chain, lo), _sign_changes(chain, hi))
    out.sort()
    if len(out) != total:
        raise InternalDefect("root isolation miscounted")
    return out


def refine_root(p: IntPoly, interval: tuple[Fraction, Fraction], width: Fraction) -> tuple[Fraction, Fraction]:
    """Bisect an isolating interval until it is narrower than `width`."""
    lo, hi = interval
    flo = p.eval_at(lo)
    while hi - lo >= width:
        mid = (lo + hi) / 2
        fm = p.eval_at(mid)
        if fm == 0:
            eps = (hi - lo) / 4
            lo, hi = mid - eps, mid + eps
            flo = p.eval_at(lo)
            continue
        if (flo > 0) == (fm > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return lo, hi
