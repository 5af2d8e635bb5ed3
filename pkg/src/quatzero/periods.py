"""Imaginary quadratic class groups, their embeddings into definite
quaternion orders, the induced map on ideal classes, and toric periods of
eigenforms with nonvanishing verdicts for twisted central L-values.

Class groups are built from reduced binary quadratic forms under Gauss
composition; their structure (elementary divisors plus explicit generators
and discrete logs) comes from a Smith-normal-form computation on the
relation lattice, so no lucky generator choices are needed.  Periods
against quadratic characters are exact number-field sums; higher-order
characters go through rigorous interval arithmetic and can only ever
upgrade "undecided" to "nonzero", never to "zero".
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

from . import InternalDefect, PreconditionError
from .eigen import Eigenform, GaloisOrbit
from .exactalg import (
    IntPoly,
    NFElem,
    isolate_real_roots,
    kronecker_symbol,
    prime_factors,
    refine_root,
)
from .quatarith import (
    IdealClassSet,
    Lattice,
    RightIdeal,
    lattice_mul,
    short_vectors,
    gram_matrix,
)
from .trivzero import OrbitPartition, orbit_structure

Form = tuple[int, int, int]


# ---------------------------------------------------------------------------
# binary quadratic forms: reduction and composition
# ---------------------------------------------------------------------------


def reduce_form(f: Form) -> Form:
    a, b, c = f
    while True:
        if not (-a < b <= a):
            r = (a - b) // (2 * a)
            b, c = b + 2 * r * a, a * r * r + b * r + c
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return (a, b, c)


def _solve_linmod(a: int, b: int, m: int) -> tuple[int, int]:
    """x with a x = b (mod m), as x = u + v Z."""
    g = math.gcd(a, m)
    if b % g:
        raise InternalDefect("linear congruence has no solution")
    aa, bb, mm = a // g, b // g, m // g
    u = bb * pow(aa, -1, mm) % mm
    return u, mm


def compose_forms(f1: Form, f2: Form) -> Form:
    """Gauss composition of primitive forms of one negative discriminant,
    followed by reduction."""
    a1, b1, c1 = f1
    a2, b2, c2 = f2
    g = (b1 + b2) // 2
    h = -(b1 - b2) // 2
    w = math.gcd(math.gcd(a1, a2), g)
    j = w
    s = a1 // w
    t = a2 // w
    u = g // w
    mu, nu = _solve_linmod(t * u, h * u + s * c1, s * t)
    if s == 1:
        lam = 0
    else:
        lam = _solve_linmod(t * nu, h - t * mu, s)[0]
    k = mu + nu * lam
    ll = (k * t - h) // s
    m = (t * u * k - h * u - c1 * s) // (s * t)
    A = s * t
    B = j * u - (k * t + ll * s)
    C = k * ll - j * m
    return reduce_form((A, B, C))


def principal_form(disc: int) -> Form:
    k = disc % 2
    return (1, k, (k * k - disc) // 4)


def form_inverse(f: Form) -> Form:
    a, b, c = f
    return reduce_form((a, -b, c))


def form_pow(f: Form, n: int, disc: int) -> Form:
    out = principal_form(disc)
    base = f
    if n < 0:
        base, n = form_inverse(base), -n
    while n:
        if n & 1:
            out = compose_forms(out, base)
        base = compose_forms(base, base)
        n >>= 1
    return out


# ---------------------------------------------------------------------------
# abelian group structure by Smith normal form of the relation lattice
# ---------------------------------------------------------------------------


def _smith_normal_form(mat: list[list[int]], cols: int) -> tuple[list[int], list[list[int]]]:
    """Smith normal form diagonal of a relation matrix, with the inverse of
    the accumulated column transform: returns (divisors, W) where W[i] is
    the exponent vector of the i-th new generator in the old generators."""
    m = [list(r) for r in mat if any(r)]
    if len(m) < cols:
        m += [[0] * cols for _ in range(cols - len(m))]
    rows = len(m)
    V = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def swap_cols(i, j):
        for row in m:
            row[i], row[j] = row[j], row[i]
        V[i], V[j] = V[j], V[i]

    def addmul_col(dst, src, q):
        for row in m:
            row[dst] += q * row[src]
        for t in range(cols):
            V[dst][t] += q * V[src][t]

    t = 0
    while t < cols:
        piv, best = None, None
        for i in range(t, rows):
            for j in range(t, cols):
                if m[i][j] and (best is None or abs(m[i][j]) < best):
                    best, piv = abs(m[i][j]), (i, j)
        if piv is None:
            break
        while True:
            pi, pj = piv
            m[t], m[pi] = m[pi], m[t]
            if pj != t:
                swap_cols(t, pj)
            dirty = False
            for i in range(rows):
                if i != t and m[i][t]:
                    q = m[i][t] // m[t][t]
                    if q:
                        for c in range(cols):
                            m[i][c] -= q * m[t][c]
                    if m[i][t]:
                        dirty = True
            for j in range(cols):
                if j != t and m[t][j]:
                    q = m[t][j] // m[t][t]
                    if q:
                        addmul_col(j, t, -q)
                    if m[t][j]:
                        dirty = True
            if not dirty and all(m[i][t] == 0 for i in range(rows) if i != t) and all(
                m[t][j] == 0 for j in range(cols) if j != t
            ):
                # pivot must divide the remaining block for the divisor chain
                offender = None
                for i in range(t + 1, rows):
                    for j in range(t + 1, cols):
                        if m[i][j] % m[t][t]:
                            offender = i
                            break
                    if offender is not None:
                        break
                if offender is None:
                    break
                for c in range(cols):
                    m[t][c] += m[offender][c]
            piv, best = None, None
            for i in range(t, rows):
                for j in range(t, cols):
                    if m[i][j] and (best is None or abs(m[i][j]) < best):
                        best, piv = abs(m[i][j]), (i, j)
        if m[t][t] < 0:
            for c in range(cols):
                m[t][c] = -m[t][c]
        t += 1
    diag = [m[i][i] if i < rows else 0 for i in range(cols)]
    W = _int_inverse([row[:] for row in V])
    return diag, W


def _int_inverse(mat: list[list[int]]) -> list[list[int]]:
    n = len(mat)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for c in range(n):
        piv = next(r for r in range(c, n) if aug[r][c])
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [v * inv for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    out = [[v for v in row[n:]] for row in aug]
    if any(v.denominator != 1 for row in out for v in row):
        raise InternalDefect("unimodular matrix inverse not integral")
    return [[int(v) for v in row] for row in out]


# ---------------------------------------------------------------------------
# the imaginary quadratic field object
# ---------------------------------------------------------------------------


def _is_fundamental(disc: int) -> bool:
    if disc >= 0:
        return False
    if disc % 4 == 1:
        from .exactalg import is_squarefree

        return is_squarefree(disc)
    if disc % 4 == 0:
        m = disc // 4
        from .exactalg import is_squarefree

        return m % 4 in (2, 3) and is_squarefree(m)
    return False


@dataclass(frozen=True)
class ClassCharacter:
    orders: tuple[int, ...]
    exps: tuple[int, ...]
    modulus: int  # lcm of the orders; values are modulus-th roots of unity

    def exponent_of(self, dlog: tuple[int, ...]) -> int:
        """m with chi(element) = exp(2 pi i m / modulus)."""
        m = 0
        for a, e, d in zip(self.exps, dlog, self.orders):
            m += a * e * (self.modulus // d)
        return m % self.modulus

    @property
    def order(self) -> int:
        g = self.modulus
        for a, d in zip(self.exps, self.orders):
            g = math.gcd(g, a * (self.modulus // d))
        return self.modulus // g if self.modulus else 1

    @property
    def is_quadratic(self) -> bool:
        return self.order <= 2

    def label(self) -> str:
        return "chi(" + ",".join(map(str, self.exps)) + ")"


class IQField:
    """Q(sqrt(-D)) for a fundamental discriminant -D: reduced forms, Gauss
    composition, elementary divisors with explicit generators and discrete
    logs, and the full character table."""

    def __init__(self, D: int):
        disc = -D
        if not _is_fundamental(disc):
            raise PreconditionError(f"-{D} is not a fundamental discriminant")
        self.D = D
        self.disc = disc
        from .exactalg import reduced_forms

        self.forms: list[Form] = reduced_forms(disc)
        self.h = len(self.forms)
        self.identity = principal_form(disc)
        self._build_structure()
        # genus theory: the 2-torsion subgroup has order 2^(omega(D)-1)
        two_torsion = 1
        for d in self.orders:
            if d % 2 == 0:
                two_torsion *= 2
        if two_torsion != 2 ** (len(prime_factors(D)) - 1):
            raise InternalDefect(f"genus check failed for D={D}")

    def op(self, f: Form, g: Form) -> Form:
        return compose_forms(f, g)

    def _build_structure(self) -> None:
        gens: list[Form] = []
        span: dict[Form, tuple[int, ...]] = {self.identity: ()}
        relations: list[list[int]] = []
        for f in self.forms:
            if f in span:
                continue
            gens.append(f)
            r = len(gens)
            relations = [rel + [0] for rel in relations]
            new_span: dict[Form, tuple[int, ...]] = {}
            frontier = list(span.items())
            for elt, vec in frontier:
                new_span[elt] = vec + (0,)
            # close under the new generator
            queue = list(new_span.items())
            while queue:
                elt, vec = queue.pop()
                nxt = self.op(elt, f)
                nvec = vec[:r - 1] + (vec[r - 1] + 1,)
                if nxt in new_span:
                    rel = [a - b for a, b in zip(nvec, new_span[nxt])]
                    if any(rel):
                        relations.append(rel)
                else:
                    new_span[nxt] = nvec
                    queue.append((nxt, nvec))
            # close under the older generators too (collisions give relations)
            for t, g0 in enumerate(gens[:-1]):
                for elt, vec in list(new_span.items()):
                    nxt = self.op(elt, g0)
                    nvec = tuple(v + (1 if s == t else 0) for s, v in enumerate(vec))
                    if nxt in new_span:
                        rel = [a - b for a, b in zip(nvec, new_span[nxt])]
                        if any(rel):
                            relations.append(rel)
                    else:
                        new_span[nxt] = nvec
                        raise InternalDefect("span closure missed an element")
            span = new_span
            if len(span) == self.h:
                break
        if len(span) != self.h:
            raise InternalDefect("generators do not span the class group")
        if not gens:
            self.gens: tuple[Form, ...] = ()
            self.orders: tuple[int, ...] = ()
            self.dlog: dict[Form, tuple[int, ...]] = {self.identity: ()}
            return
        # dedupe relations
        seen = sorted({tuple(r) for r in relations})
        diag, W = _smith_normal_form([list(r) for r in seen], len(gens))
        new_gens = []
        new_orders = []
        for i, d in enumerate(diag):
            if d == 0:
                raise InternalDefect("class group relation lattice not full rank")
            if d == 1:
                continue
            g = self.identity
            for t, e in enumerate(W[i]):
                g = self.op(g, form_pow(gens[t], e, self.disc))
            new_gens.append(g)
            new_orders.append(d)
        # descending order sizes read better in labels; keep SNF divisibility
        self.gens = tuple(new_gens)
        self.orders = tuple(new_orders)
        dlog: dict[Form, tuple[int, ...]] = {}
        for exps in itertools.product(*[range(d) for d in self.orders]):
            g = self.identity
            for t, e in enumerate(exps):
                g = self.op(g, form_pow(self.gens[t], e, self.disc))
            if g in dlog:
                raise InternalDefect("generator combination collision")
            dlog[g] = exps
        if len(dlog) != self.h:
            raise InternalDefect("structure does not enumerate the class group")
        self.dlog = dlog

    def characters(self) -> list[ClassCharacter]:
        L = 1
        for d in self.orders:
            L = L * d // math.gcd(L, d)
        out = []
        for exps in itertools.product(*[range(d) for d in self.orders]):
            out.append(ClassCharacter(self.orders, exps, L if self.orders else 1))
        return out

    def trivial_character(self) -> ClassCharacter:
        L = 1
        for d in self.orders:
            L = L * d // math.gcd(L, d)
        return ClassCharacter(self.orders, tuple(0 for _ in self.orders), L if self.orders else 1)

    def inverse(self, f: Form) -> Form:
        return form_inverse(f)

    def ramified_prime_class(self, p: int) -> Form:
        """Class of the prime ideal above a ramified prime p | D."""
        if self.D % p:
            raise PreconditionError(f"{p} is not ramified in Q(sqrt(-{self.D}))")
        disc = self.disc
        if p == 2:
            m = self.D // 4
            if m % 2 == 0:
                f = (2, 0, m // 2)
            else:
                f = (2, 2, (m + 1) // 2)
        else:
            if disc % 2 == 0:
                # b must be even and divisible by p: b = 0 works iff 4p | -disc
                f = (p, 0, (self.D // 4) // p) if (self.D // 4) % p == 0 else None
                if f is None:
                    raise InternalDefect("odd ramified prime in even discriminant")
            else:
                f = (p, p, (p * p + self.D) // (4 * p))
        a, b, c = f
        if b * b - 4 * a * c != disc:
            raise InternalDefect("ramified prime form has wrong discriminant")
        return reduce_form(f)


# ---------------------------------------------------------------------------
# embeddings and the ideal class map
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Embedding:
    D: int
    target_orbit: int
    target_class: int
    beta: tuple[Fraction, Fraction, Fraction, Fraction]
    trace: int
    norm: int
    conjugator: Optional[tuple[Fraction, Fraction, Fraction, Fraction]] = None


class NotEmbeddable(PreconditionError):
    pass


def _omega_trace_norm(D: int) -> tuple[int, int]:
    if D % 4 == 0:
        return 0, D // 4
    return 1, (1 + D) // 4


def embeds(D: int, N: int) -> bool:
    return all(kronecker_symbol(-D, p) != 1 for p in prime_factors(N))


def _int_left_kernel(A: list[list[int]]) -> list[list[int]]:
    """All integer row vectors c with c*A = 0, as a basis (row reduction with
    a tracked unimodular transform)."""
    rows = len(A)
    cols = len(A[0]) if A else 0
    work = [list(r) for r in A]
    U = [[int(i == j) for j in range(rows)] for i in range(rows)]
    r = 0
    for c in range(cols):
        while True:
            nz = [i for i in range(r, rows) if work[i][c]]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda i: abs(work[i][c]))
            piv = nz[0]
            for i in nz[1:]:
                q = work[i][c] // work[piv][c]
                for t in range(cols):
                    work[i][t] -= q * work[piv][t]
                for t in range(rows):
                    U[i][t] -= q * U[piv][t]
        nz = [i for i in range(r, rows) if work[i][c]]
        if nz:
            work[r], work[nz[0]] = work[nz[0]], work[r]
            U[r], U[nz[0]] = U[nz[0]], U[r]
            r += 1
    return [U[i] for i in range(rows) if not any(work[i])]


def _binary_lattice_represents(
    A: Fraction, B: Fraction, C: Fraction, target: int
) -> Optional[tuple[int, int]]:
    """Integer (x, y) with A x^2 + B x y + C y^2 = target for a positive
    definite rational form, by exact enumeration of y."""
    import math as _m

    disc = 4 * A * C - B * B
    if disc <= 0:
        raise InternalDefect("binary form not positive definite")
    ybound2 = Fraction(4 * A * target) / disc
    ymax = _m.isqrt(ybound2.numerator // ybound2.denominator) + 1
    for y in range(-ymax, ymax + 1):
        # A x^2 + (B y) x + (C y^2 - target) = 0
        b, c = B * y, C * y * y - target
        d = b * b - 4 * A * c
        if d < 0:
            continue
        num = d.numerator * d.denominator
        s = _m.isqrt(num)
        if s * s != num:
            continue
        sq = Fraction(s, d.denominator)
        for sgn in (1, -1):
            x = (-b + sgn * sq) / (2 * A)
            if x.denominator == 1 and (x or y):
                return int(x), y
    return None


def _find_conjugator(
    alg, Ol, delta: tuple[Fraction, ...], N: int
) -> Optional[tuple[Fraction, ...]]:
    """Element of the order orthogonal to 1 and to delta with reduced norm N.
    Conjugation by it inverts the embedded quadratic field, which is exactly
    what the conjugation identity of the class map needs."""
    rows = Ol.lattice.frac_rows()
    one = (Fraction(1), Fraction(0), Fraction(0), Fraction(0))
    conds = []
    for s in range(4):
        conds.append([alg.pair(rows[s], one), alg.pair(rows[s], delta)])
    den = 1
    for row in conds:
        for v in row:
            den = den * Fraction(v).denominator // math.gcd(den, Fraction(v).denominator)
    A = [[int(Fraction(v) * den) for v in row] for row in conds]
    kern = _int_left_kernel(A)
    if len(kern) != 2:
        raise InternalDefect("orthogonal complement has wrong rank")
    u = tuple(sum(Fraction(kern[0][s]) * rows[s][c] for s in range(4)) for c in range(4))
    v = tuple(sum(Fraction(kern[1][s]) * rows[s][c] for s in range(4)) for c in range(4))
    qa, qc = alg.nrd(u), alg.nrd(v)
    qb = 2 * alg.pair(u, v)
    hit = _binary_lattice_represents(Fraction(qa), Fraction(qb), Fraction(qc), N)
    if hit is None:
        return None
    x, y = hit
    return tuple(x * a + y * b for a, b in zip(u, v))


def embed(
    K: IQField,
    classes: IdealClassSet,
    partition: Optional[OrbitPartition] = None,
    require_conjugator: bool = True,
) -> Embedding:
    """Embed the maximal order of K into the left order of some ideal class.

    Each left-order type is searched in orbit order for an element with the
    trace and norm of the ring generator.  Among the candidates, preference
    goes to an embedding that admits an integral conjugator (a norm-N
    element of the order inverting the embedded field): the conjugation
    identity of the induced class map holds for those embeddings and can
    genuinely fail for the others, so "first found" alone is not enough.
    """
    if not embeds(K.D, classes.level):
        raise NotEmbeddable(f"Q(sqrt(-{K.D})) does not embed at level {classes.level}")
    partition = partition or orbit_structure(classes)
    t, n = _omega_trace_norm(K.D)
    alg = classes.order.algebra
    N = classes.level
    fallback: Optional[Embedding] = None
    for orbit_idx, orbit in enumerate(partition.orbits):
        rep = min(orbit)
        Ol = classes.left_order(rep)
        gram = gram_matrix(alg, Ol.lattice)
        rows = Ol.lattice.frac_rows()
        for vec, val in short_vectors(gram, Fraction(n)):
            if val != n:
                continue
            elem = tuple(
                sum(Fraction(vec[s]) * rows[s][c] for s in range(4)) for c in range(4)
            )
            tr = 2 * elem[0]
            if tr == -t and t != 0:
                elem = tuple(-v for v in elem)
            elif tr != t:
                continue
            if fallback is None:
                fallback = Embedding(K.D, orbit_idx, rep, elem, t, n)
            delta = tuple(2 * v - (t if c == 0 else 0) for c, v in enumerate(elem))
            alpha = _find_conjugator(alg, Ol, delta, N)
            if alpha is not None:
                return Embedding(K.D, orbit_idx, rep, elem, t, n, conjugator=alpha)
    if fallback is None:
        raise InternalDefect(
            f"no order of level {classes.level} admits the ring of Q(sqrt(-{K.D}))"
        )
    # No conjugator anywhere: the conjugation/fixed-point identities of the
    # class map are not guaranteed for this pair (and genuinely fail for
    # some, e.g. level 37 against discriminant -15, where the embedding is
    # forced into the type whose two-sided prime is non-principal).  The
    # fallback is still a perfectly good embedding; its table just carries
    # conjugator=None so downstream logic knows the guarantees are weaker.
    return fallback


@dataclass(frozen=True)
class ClassMapTable:
    D: int
    level: int
    embedding: Embedding
    images: tuple[int, ...]  # aligned with K.forms

    def image_of(self, K: IQField, f: Form) -> int:
        return self.images[K.forms.index(reduce_form(f))]


def ideal_class_map(emb: Embedding, K: IQField, classes: IdealClassSet) -> ClassMapTable:
    """Map each ideal class of K to the class of the extended quaternion
    ideal, translated back to the reference order's class set."""
    alg = classes.order.algebra
    base = classes.reps[emb.target_class]
    Ol = classes.left_order(emb.target_class)
    beta = emb.beta
    # iota(sqrt(-D)) = 2*beta - trace
    delta = tuple(2 * v - (emb.trace if c == 0 else 0) for c, v in enumerate(beta))
    images = []
    for a, b, c in K.forms:
        # the ideal Z a + Z (b + sqrt(-D))/2, whose norm form is (a,b,c); the
        # (-b + sqrt(-D))/2 generator would land in the inverse class and
        # silently flip the composition convention
        g1 = (Fraction(a), Fraction(0), Fraction(0), Fraction(0))
        g2 = tuple((Fraction(b if t == 0 else 0) + delta[t]) / 2 for t in range(4))
        rows = []
        for gen in (g1, g2):
            for w in Ol.lattice.frac_rows():
                rows.append(list(alg.mul(gen, w)))
        lat = Lattice.from_frac_rows(rows)
        ideal = RightIdeal.of(Ol, lat)
        if ideal.norm != a:
            raise InternalDefect("extended ideal has unexpected norm")
        full = RightIdeal.of(classes.order, lattice_mul(alg, lat, base.lattice))
        images.append(classes.classify(full))
    return ClassMapTable(K.D, classes.level, emb, tuple(images))


# ---------------------------------------------------------------------------
# periods
# ---------------------------------------------------------------------------


@dataclass
class PeriodValue:
    is_zero: str  # "zero" | "nonzero" | "undecided"
    exact: Optional[NFElem] = None
    interval: Optional[tuple[str, str, str, str]] = None
    precision: Optional[int] = None


def _iv_from_fraction(q: Fraction):
    return mpmath.iv.mpf(q.numerator) / mpmath.iv.mpf(q.denominator)


def _value_interval(v: NFElem, root_iv):
    acc = mpmath.iv.mpf(0)
    for c in reversed(v.rep):
        acc = acc * root_iv + _iv_from_fraction(c)
    return acc


def period(
    form: Eigenform,
    K: IQField,
    chi: ClassCharacter,
    table: ClassMapTable,
    prec: int = 128,
    prec_cap: int = 2048,
) -> PeriodValue:
    """P(form) = sum over the class group of form(image) * chi^{-1}(class).

    Exact in the form's number field when chi is (at most) quadratic;
    otherwise a rigorous interval evaluation under the designated (smallest)
    real embedding, which can certify "nonzero" but reports "undecided" when
    the enclosure contains zero.
    """
    Kf = form.field
    if chi.is_quadratic:
        acc = Kf.zero()
        for f, img in zip(K.forms, table.images):
            m = chi.exponent_of(K.dlog[f])
            if (2 * m) % chi.modulus:
                raise InternalDefect("quadratic character with a non-real value")
            acc = acc + form.values[img].scale(1 if m == 0 else -1)
        return PeriodValue(is_zero="zero" if acc.is_zero() else "nonzero", exact=acc)
    L = chi.modulus
    coeff_sums: dict[int, NFElem] = {}
    for f, img in zip(K.forms, table.images):
        m = (-chi.exponent_of(K.dlog[f])) % L
        coeff_sums[m] = coeff_sums.get(m, Kf.zero()) + form.values[img]
    poly = Kf.modulus
    roots = isolate_real_roots(poly)
    working = min(prec, prec_cap)
    interval = None
    while True:
        old = mpmath.iv.prec
        mpmath.iv.prec = working + 16
        try:
            width = Fraction(1, 2 ** (working + 8))
            lo, hi = refine_root(poly, roots[0], width)
            a = _iv_from_fraction(lo)
            b = _iv_from_fraction(hi)
            root_iv = mpmath.iv.mpf([a.a, b.b])
            total_re = mpmath.iv.mpf(0)
            total_im = mpmath.iv.mpf(0)
            for m, s in sorted(coeff_sums.items()):
                if s.is_zero():
                    continue
                sval = _value_interval(s, root_iv)
                angle = 2 * mpmath.iv.pi * mpmath.iv.mpf(m) / L
                total_re += sval * mpmath.iv.cos(angle)
                total_im += sval * mpmath.iv.sin(angle)
            contains_zero = (total_re.a <= 0 <= total_re.b) and (
                total_im.a <= 0 <= total_im.b
            )
            from mpmath.libmp import to_str as _mpf_to_str

            interval = tuple(
                _mpf_to_str(end, max(working // 3, 20))
                for end in (*total_re._mpi_, *total_im._mpi_)
            )
        finally:
            mpmath.iv.prec = old
        if not contains_zero:
            return PeriodValue(is_zero="nonzero", interval=interval, precision=working)
        if working >= prec_cap:
            return PeriodValue(is_zero="undecided", interval=interval, precision=working)
        working = min(working * 2, prec_cap)


# ---------------------------------------------------------------------------
# nonvanishing verdicts
# ---------------------------------------------------------------------------

FORCED_ZERO = "FORCED_ZERO"
L_NONZERO = "L_NONZERO"
L_ZERO = "L_ZERO"
UNDECIDED = "UNDECIDED"


@dataclass
class Verdict:
    level: int
    D: int
    chi: tuple[int, ...]
    verdict: str
    condition_global_sign: Optional[bool]
    condition_ramified: bool
    period: Optional[PeriodValue]
    fast_path: Optional[str]
    provenance: dict = field(default_factory=dict)


def _ramified_condition(form: Eigenform, K: IQField, chi: ClassCharacter) -> bool:
    """eps_p(form) must match chi at the ramified prime class for every
    p dividing gcd(level, D)."""
    for p in prime_factors(math.gcd(form.level, K.D)):
        cls = K.ramified_prime_class(p)
        m = chi.exponent_of(K.dlog[cls])
        if (2 * m) % chi.modulus:
            raise InternalDefect("ramified prime class is not 2-torsion under chi")
        chival = 1 if m % chi.modulus == 0 else -1
        if form.sign_pattern.at(p) != chival:
            return False
    return True


def nonvanishing_verdict(
    form: Eigenform,
    K: IQField,
    chi: ClassCharacter,
    table: ClassMapTable,
    prec: int = 128,
    prec_cap: int = 2048,
) -> Verdict:
    """Decide the vanishing of the twisted central L-value attached to the
    form and the class-group character, through the period."""
    if form.is_eisenstein:
        raise PreconditionError("verdicts are defined for cuspidal eigenforms")
    cond_global: Optional[bool] = None
    if chi.is_quadratic:
        cond_global = form.sign_pattern.global_sign == 1
    cond_ram = _ramified_condition(form, K, chi)
    fast = None
    one_class_per_genus = all(d <= 2 for d in K.orders)
    if one_class_per_genus:
        if K.h == 1 or (
            all(form.level % p == 0 for p in prime_factors(K.D)) and cond_ram
        ):
            img1 = table.images[K.forms.index(K.identity)]
            fast = L_NONZERO if not form.values[img1].is_zero() else L_ZERO
    certified = table.embedding.conjugator is not None
    prov = {
        "embedding_orbit": table.embedding.target_orbit,
        "embedding_class": table.embedding.target_class,
        "embedding_certified": certified,
        "chi_order": chi.order,
    }
    if (cond_global is not None and not cond_global) or not cond_ram:
        pv = period(form, K, chi, table, prec, prec_cap)
        # with a certified embedding the vanishing is a theorem; without one
        # only the ramified-condition half is forced (local uniformizers)
        if chi.is_quadratic and pv.is_zero != "zero" and (certified or not cond_ram):
            raise InternalDefect("period fails to vanish despite failed local conditions")
        return Verdict(
            form.level, K.D, chi.exps, FORCED_ZERO, cond_global, cond_ram, pv, fast, prov
        )
    pv = period(form, K, chi, table, prec, prec_cap)
    if pv.is_zero == "nonzero":
        verdict = L_NONZERO
    elif pv.is_zero == "zero":
        verdict = L_ZERO
    else:
        verdict = UNDECIDED
    if fast is not None and verdict in (L_NONZERO, L_ZERO) and chi.is_quadratic:
        if fast != verdict:
            raise InternalDefect("fast path disagrees with the period")
    return Verdict(form.level, K.D, chi.exps, verdict, cond_global, cond_ram, pv, fast, prov)


def existence_search(
    form: Eigenform,
    K: IQField,
    table: ClassMapTable,
    prec: int = 128,
    prec_cap: int = 2048,
) -> Optional[ClassCharacter]:
    """First character with a certified nonvanishing twisted L-value; exists
    whenever the form is nonzero at the image of the principal class (the
    character sum equals h_K times that value)."""
    img1 = table.images[K.forms.index(K.identity)]
    if form.values[img1].is_zero():
        return None
    for chi in K.characters():
        v = nonvanishing_verdict(form, K, chi, table, prec, prec_cap)
        if v.verdict == L_NONZERO:
            return chi
    return None


def verdict_to_json(v: Verdict) -> dict:
    pv = None
    if v.period is not None:
        pv = {
            "is_zero": v.period.is_zero,
            "exact": [str(c) for c in v.period.exact.rep] if v.period.exact else None,
            "interval": v.period.interval,
            "precision": v.period.precision,
        }
    return {
        "level": v.level,
        "D": v.D,
        "chi": list(v.chi),
        "verdict": v.verdict,
        "condition_global_sign": v.condition_global_sign,
        "condition_ramified": v.condition_ramified,
        "period": pv,
        "fast_path": v.fast_path,
        "provenance": v.provenance,
    }
