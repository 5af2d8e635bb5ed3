"""Hecke eigenforms on an ideal class set, grouped in Galois orbits.

The space of class functions is split by one separating Hecke operator
whose characteristic polynomial is squarefree; each irreducible factor c_i
yields one orbit of conjugate eigenforms, stored as a single vector with
values in Q[x]/(c_i).  The eigenvector for a factor is obtained exactly by
applying the complementary factor of the characteristic polynomial to a
standard basis vector and then projecting onto the root's eigenline by
synthetic division, so no linear solve over the number field is needed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import InternalDefect, PreconditionError
from .exactalg import (
    IntPoly,
    NFElem,
    NumberField,
    charpoly_int,
    factor_int_poly,
    is_squarefree_poly,
    primes_up_to,
    prime_factors,
)
from .quatarith import BrandtMatrix, IdealClassSet, brandt_matrix
from .trivzero import (
    InvolutionSet,
    OrbitPartition,
    SignPattern,
    TrivialZeroReport,
    admissibility,
    classify_zero_set,
)


class HeckeAction:
    """Memoized Brandt matrices for one class set."""

    def __init__(self, classes: IdealClassSet, matrices: Optional[dict[int, BrandtMatrix]] = None):
        self.classes = classes
        self._memo: dict[int, BrandtMatrix] = dict(matrices or {})

    def matrix(self, n: int) -> BrandtMatrix:
        if n not in self._memo:
            self._memo[n] = brandt_matrix(self.classes, n)
        return self._memo[n]


@dataclass
class Eigenform:
    level: int
    field: NumberField
    values: tuple[NFElem, ...]
    degree: int
    sign_pattern: SignPattern
    eigenvalues: dict[int, NFElem]
    is_eisenstein: bool

    def zero_set(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.values) if v.is_zero())

    def value_strings(self) -> list[str]:
        return [str(v) for v in self.values]


@dataclass
class GaloisOrbit:
    defining_factor: IntPoly
    form: Eigenform
    zero_set: frozenset[int]

    @property
    def degree(self) -> int:
        return self.form.degree

    @property
    def is_eisenstein(self) -> bool:
        return self.form.is_eisenstein


@dataclass
class SpectrumSplit:
    level: int
    orbits: list[GaloisOrbit]
    operator: str
    charpoly: IntPoly


def _apply(mat: BrandtMatrix, values: Sequence) -> list:
    return mat.apply(values)


def _eigenvector_for_factor(
    T: Sequence[Sequence[int]], cpoly: IntPoly, factor: IntPoly, h: int
) -> tuple[NumberField, list[NFElem]]:
    """Exact eigenvector of T for the eigenvalue presented by `factor`."""
    rest, rem = cpoly.divmod_monic(factor)
    if not rem.is_zero():
        raise InternalDefect("factor does not divide the characteristic polynomial")
    K = NumberField.make(factor)
    d = factor.degree
    alpha = K.gen()

    def matvec(vec: list[int]) -> list[int]:
        return [sum(t * v for t, v in zip(row, vec) if t) for row in T]

    for basis_idx in range(h):
        w = [0] * h
        w[basis_idx] = 1
        # W = rest(T) w by Horner
        W = [0] * h
        for coeff in reversed(rest.coeffs):
            W = matvec(W)
            if coeff:
                W = [x + coeff * y for x, y in zip(W, w)]
        if not any(W):
            continue
        if d == 1:
            vals = [K.from_rational(x) for x in W]
            return K, vals
        powers = [W]
        for _ in range(d - 1):
            powers.append(matvec(powers[-1]))
        # synthetic division: factor(y)/(y - alpha) = sum b_t y^t with b in K
        b = [K.zero()] * d
        b[d - 1] = K.one()
        for t in range(d - 1, 0, -1):
            b[t - 1] = K.from_rational(factor.coeffs[t]) + alpha * b[t]
        vals = []
        for k in range(h):
            acc = K.zero()
            for t in range(d):
                if powers[t][k]:
                    acc = acc + b[t].scale(powers[t][k])
            vals.append(acc)
        if any(not v.is_zero() for v in vals):
            return K, vals
    raise InternalDefect("no starting vector produced a nonzero eigenvector")


def _normalize(K: NumberField, vals: list[NFElem]) -> tuple[NFElem, ...]:
    """Scale to integral coefficients with overall content 1, then fix the
    sign so the first nonzero value has positive leading coefficient."""
    import math

    den = 1
    for v in vals:
        for c in v.rep:
            den = den * c.denominator // math.gcd(den, c.denominator)
    num = 0
    for v in vals:
        for c in v.rep:
            num = math.gcd(num, int(c * den))
    scale = Fraction(den, num) if num else Fraction(1)
    out = [v.scale(scale) for v in vals]
    for v in out:
        if not v.is_zero():
            lead = max(i for i, c in enumerate(v.rep) if c)
            if v.rep[lead] < 0:
                out = [w.scale(-1) for w in out]
            break
    return tuple(out)


def _extract_eigenvalue(K: NumberField, mat: BrandtMatrix, vals: Sequence[NFElem]) -> NFElem:
    out = _apply(mat, vals)
    k0 = next(i for i, v in enumerate(vals) if not v.is_zero())
    a = out[k0] / vals[k0]
    for got, v in zip(out, vals):
        got = got if isinstance(got, NFElem) else K.from_rational(got)
        if not (got - a * v).is_zero():
            raise InternalDefect("vector is not an exact eigenvector")
    return a


def split_spectrum(
    classes: IdealClassSet,
    hecke: Optional[HeckeAction] = None,
    prime_bound: int = 200,
    eigenvalue_primes: int = 20,
) -> SpectrumSplit:
    """Decompose the space of class functions into Galois orbits of Hecke
    eigenforms, normalized integral-primitive, sorted by (degree, factor)."""
    hecke = hecke or HeckeAction(classes)
    N, h = classes.level, classes.h
    Tmat: Optional[list[list[int]]] = None
    cpoly = None
    desc = ""
    for p in primes_up_to(prime_bound):
        if N % p == 0:
            continue
        T = hecke.matrix(p)
        c = charpoly_int(T.entries, p + 1)
        if is_squarefree_poly(c):
            Tmat, cpoly, desc = [list(r) for r in T.entries], c, f"T_{p}"
            break
    if Tmat is None:
        good = [p for p in primes_up_to(prime_bound) if N % p][:2]
        if len(good) < 2:
            raise PreconditionError("no separating operator below the prime bound")
        p, q = good
        Tp, Tq = hecke.matrix(p), hecke.matrix(q)
        rng = random.Random(N)
        for _ in range(64):
            cmix = rng.randint(1, 9)
            M = [
                [a + cmix * b for a, b in zip(ra, rb)]
                for ra, rb in zip(Tp.entries, Tq.entries)
            ]
            c = charpoly_int(M, (p + 1) + cmix * (q + 1))
            if is_squarefree_poly(c):
                Tmat, cpoly, desc = M, c, f"T_{p} + {cmix}*T_{q}"
                break
        if Tmat is None:
            raise InternalDefect("random Hecke combinations never separated the spectrum")

    factors = factor_int_poly(cpoly)
    if any(m != 1 for _, m in factors):
        raise InternalDefect("separating operator has repeated factors")
    qs = sorted(set([p for p in primes_up_to(eigenvalue_primes)] + prime_factors(N)))
    orbits = []
    eis_count = 0
    for fac, _ in factors:
        K, vals = _eigenvector_for_factor(Tmat, cpoly, fac, h)
        vals = list(_normalize(K, vals))
        eigenvalues: dict[int, NFElem] = {}
        for qq in qs:
            eigenvalues[qq] = _extract_eigenvalue(K, hecke.matrix(qq), vals)
        signs = {}
        for p in prime_factors(N):
            a = eigenvalues[p]
            if a == K.one():
                signs[p] = 1
            elif a == K.from_rational(-1):
                signs[p] = -1
            else:
                raise InternalDefect(f"ramified eigenvalue at {p} is not a sign")
        pattern = SignPattern.of(N, signs)
        wsum = K.zero()
        for v, e in zip(vals, classes.weights):
            wsum = wsum + v.scale(Fraction(1, e))
        is_eis = not wsum.is_zero()
        if is_eis:
            eis_count += 1
            if any(v != vals[0] for v in vals):
                raise InternalDefect("non-constant form fails the cusp condition")
        form = Eigenform(
            level=N,
            field=K,
            values=tuple(vals),
            degree=fac.degree,
            sign_pattern=pattern,
            eigenvalues=eigenvalues,
            is_eisenstein=is_eis,
        )
        orbits.append(GaloisOrbit(fac, form, form.zero_set()))
    if eis_count != 1:
        raise InternalDefect(f"expected exactly one Eisenstein orbit, found {eis_count}")
    if sum(o.degree for o in orbits) != h:
        raise InternalDefect("orbit degrees do not add up to the class number")
    orbits.sort(key=lambda o: (o.degree, o.defining_factor.coeffs))
    return SpectrumSplit(N, orbits, desc, cpoly)


def sign_pattern_of(form: Eigenform) -> SignPattern:
    return form.sign_pattern


def zero_set(form: Eigenform) -> frozenset[int]:
    return form.zero_set()


def classify_orbit_zeroes(
    orbit: GaloisOrbit, report: TrivialZeroReport
) -> tuple[frozenset[int], frozenset[int]]:
    if report.pattern != orbit.form.sign_pattern:
        raise PreconditionError("report computed for a different sign pattern")
    return classify_zero_set(orbit.zero_set, report)


@dataclass
class BoundsReport:
    level: int
    violations: list[str] = field(default_factory=list)
    single_orbit_eigenspaces: bool = False
    checked_orbits: int = 0


def verify_orbit_bounds(
    split: SpectrumSplit,
    invs: InvolutionSet,
    partition: OrbitPartition,
) -> BoundsReport:
    """Check the fundamental-domain and total zero-count bounds for every
    orbit, and the no-nontrivial-zero conclusion when every eigenspace
    carries at most one cuspidal orbit.  Violations are returned, never
    raised; an empty list is the expected outcome."""
    N = split.level
    omega = len(prime_factors(N))
    reports: dict[str, TrivialZeroReport] = {}
    for pattern in SignPattern.all_patterns(N):
        reports[pattern.bits()] = admissibility(invs, partition, pattern)
    out = BoundsReport(level=N)
    cusp_by_pattern: dict[str, int] = {}
    for orbit in split.orbits:
        bits = orbit.form.sign_pattern.bits()
        rep = reports[bits]
        d = orbit.degree
        domain_zeros = sum(1 for i in rep.fundamental_domain if i in orbit.zero_set)
        if domain_zeros > rep.dim - d:
            out.violations.append(
                f"N={N} factor={orbit.defining_factor}: {domain_zeros} domain zeroes"
                f" > {rep.dim} - {d}"
            )
        # zeroes on admissible orbits (the ones not already forced) obey the
        # orbit-size bound; forced zeroes live on inadmissible orbits
        free_zeros = len(orbit.zero_set - rep.trivial_zero_classes)
        if free_zeros > 2**omega * (rep.dim - d):
            out.violations.append(
                f"N={N} factor={orbit.defining_factor}: {free_zeros} nonforced zeroes"
                f" exceed 2^{omega}*({rep.dim} - {d})"
            )
        if not orbit.is_eisenstein:
            cusp_by_pattern[bits] = cusp_by_pattern.get(bits, 0) + 1
        out.checked_orbits += 1
    if all(v <= 1 for v in cusp_by_pattern.values()):
        out.single_orbit_eigenspaces = True
        for orbit in split.orbits:
            rep = reports[orbit.form.sign_pattern.bits()]
            _, nontrivial = classify_zero_set(orbit.zero_set, rep)
            if nontrivial:
                out.violations.append(
                    f"N={N} factor={orbit.defining_factor}: nontrivial zeroes"
                    f" {sorted(nontrivial)} despite single-orbit eigenspaces"
                )
    return out


def orbits_to_json(split: SpectrumSplit, classes: IdealClassSet) -> dict:
    return {
        "level": split.level,
        "operator": split.operator,
        "charpoly": list(split.charpoly.coeffs),
        "orbits": [
            {
                "factor": list(o.defining_factor.coeffs),
                "degree": o.degree,
                "eisenstein": o.is_eisenstein,
                "pattern": o.form.sign_pattern.bits(),
                "values": [[str(c) for c in v.rep] for v in o.form.values],
                "zero_set": sorted(o.zero_set),
                "eigenvalues": {
                    str(p): [str(c) for c in a.rep] for p, a in o.form.eigenvalues.items()
                },
            }
            for o in split.orbits
        ],
    }
