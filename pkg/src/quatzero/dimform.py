"""Closed-form side of the trivial-zero theory for odd squarefree levels:
weighted class numbers, the tabulated b-constants, the dimension-bias sum
that counts inadmissible orbits without any Brandt computation, the
no-trivial-zero divisor criterion, and fixed-point predicates for the
ramified involutions.

Everything here runs off Kronecker symbols and reduced-form class numbers,
so whole ranges of levels can be scanned in seconds; the graph-theoretic
path in `trivzero` computes the same numbers independently, which is the
main cross-validation of the package.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import InternalDefect, PreconditionError
from .exactalg import iq_class_number, is_squarefree, kronecker_symbol, prime_factors
from .trivzero import SignPattern


def b_constant(d: int) -> int:
    """The 8-periodic constant attached to an odd divisor d."""
    if d % 2 == 0:
        raise PreconditionError("b-constant is only defined for odd arguments")
    if d % 4 == 1:
        return 1
    if d % 8 == 7:
        return 2
    return 4  # d = 3 mod 8


def field_discriminant(d: int) -> int:
    """Discriminant of Q(sqrt(-d)) for squarefree d > 0."""
    if d <= 0 or not is_squarefree(d):
        raise PreconditionError(f"{d} is not squarefree positive")
    return -d if d % 4 == 3 else -4 * d


def weighted_class_number(disc: int) -> Fraction:
    """h'(disc): the class number with the unit-weighted conventions
    h'(-3) = 1/3 and h'(-4) = 1/2."""
    if disc == -3:
        return Fraction(1, 3)
    if disc == -4:
        return Fraction(1, 2)
    return Fraction(iq_class_number(disc))


@dataclass(frozen=True)
class BiasTerm:
    d: int
    h_weighted: Fraction
    b: int
    kronecker_product: int
    contribution: Fraction


def _check_odd_level(N: int) -> list[int]:
    if N % 2 == 0:
        raise PreconditionError("formula path handles odd levels only")
    ps = prime_factors(N)
    if not is_squarefree(N) or len(ps) % 2 == 0:
        raise PreconditionError(f"{N} is not an odd-omega squarefree level")
    return ps


def bias_terms(N: int, pattern: SignPattern) -> tuple[list[BiasTerm], Fraction]:
    """Per-divisor terms of the dimension-bias sum plus the 3|N correction.

    Each term is (1 - eps_d)/2 * h'(disc_d) * b(d) * prod_{p | N/d}(1 - (disc_d|p));
    for odd N every term is >= 0.
    """
    ps = _check_odd_level(N)
    if pattern.level != N:
        raise PreconditionError("pattern level mismatch")
    divisors = [1]
    for p in ps:
        divisors += [d * p for d in divisors]
    terms = []
    for d in sorted(divisors):
        if d == 1:
            continue
        disc = field_discriminant(d)
        kprod = 1
        for p in ps:
            if d % p:
                kprod *= 1 - kronecker_symbol(disc, p)
        hw = weighted_class_number(disc)
        contrib = Fraction(1 - pattern.epsilon(d), 2) * hw * b_constant(d) * kprod
        if contrib < 0:
            raise InternalDefect("negative bias term at odd level")
        terms.append(BiasTerm(d, hw, b_constant(d), kprod, contrib))
    correction = Fraction(0)
    if N % 3 == 0:
        kprod = 1
        for p in ps:
            if p != 3:
                kprod *= 1 - kronecker_symbol(-3, p)
        correction = Fraction(1 - pattern.at(3), 3) * kprod
    return terms, correction


def dim_bias(N: int, pattern: SignPattern) -> int:
    """Number of orbits forced to vanish for this sign pattern, computed
    purely from class numbers and Kronecker symbols (no Brandt matrices)."""
    terms, correction = bias_terms(N, pattern)
    total = sum((t.contribution for t in terms), correction)
    omega = len(prime_factors(N))
    out = total / 2**omega
    if out.denominator != 1 or out < 0:
        raise InternalDefect(f"dimension bias {out} is not a nonnegative integer")
    return int(out)


def no_trivial_zeroes_criterion(N: int, pattern: SignPattern) -> bool:
    """Divisor-set criterion deciding dim_bias(N, pattern) == 0 for odd N and
    pattern != all-plus: every d in S must carry sign +1, and if 3 | N either
    eps_3 = +1 or some prime factor is 1 mod 3."""
    ps = _check_odd_level(N)
    if pattern.level != N:
        raise PreconditionError("pattern level mismatch")
    if all(s == 1 for _, s in pattern.signs):
        raise PreconditionError("criterion applies to patterns other than all-plus")
    divisors = [1]
    for p in ps:
        divisors += [d * p for d in divisors]
    for d in divisors:
        if d == 1:
            continue
        disc = field_discriminant(d)
        if all(kronecker_symbol(disc, p) == -1 for p in ps if d % p):
            if pattern.epsilon(d) != 1:
                return False
    if N % 3 == 0:
        if pattern.at(3) != 1 and not any(p % 3 == 1 for p in ps):
            return False
    return True


def sigma_p_fixed_point_free(p: int, N: int) -> bool:
    """Whether the involution at p acts without fixed points on the class
    set, decided by the local splitting conditions."""
    if N % p:
        raise PreconditionError(f"{p} does not divide {N}")
    ps = prime_factors(N)
    if p % 2 == 1 and any(q % 2 == 1 and kronecker_symbol(-p, q) == 1 for q in ps):
        return True
    if p % 8 == 7 and N % 2 == 0:
        return True
    if p == 2 and any(kronecker_symbol(-2, q) == 1 for q in ps) and any(
        q % 4 == 1 for q in ps
    ):
        return True
    return False


def prime_level_trivial_zero_count(N: int) -> int:
    """Exact count of trivial zeroes of the all-minus pattern at prime level
    N > 3: half the class number of Q(sqrt(-N)) times the b-constant."""
    from .exactalg import is_prime

    if not is_prime(N) or N <= 3:
        raise PreconditionError("prime level > 3 required")
    disc = field_discriminant(N)
    total = Fraction(iq_class_number(disc) * b_constant(N), 2)
    if total.denominator != 1:
        raise InternalDefect("fixed point count not integral")
    return int(total)


def scan_rows(levels: Iterable[int]) -> Iterable[dict]:
    """Range scan over odd-omega squarefree odd levels: one row per
    (level, sign pattern) with the bias and criterion verdict."""
    for N in levels:
        for pattern in SignPattern.all_patterns(N):
            bias = dim_bias(N, pattern)
            verdict = (
                True
                if all(s == 1 for _, s in pattern.signs)
                else no_trivial_zeroes_criterion(N, pattern)
            )
            if verdict != (bias == 0):
                raise InternalDefect(
                    f"criterion disagrees with dimension bias at N={N}, {pattern.bits()}"
                )
            yield {
                "level": N,
                "pattern": pattern.bits(),
                "dim_bias": bias,
                "no_trivial_zeroes": verdict,
            }


def write_scan_csv(levels: Sequence[int], path) -> int:
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["level", "pattern", "dim_bias", "no_trivial_zeroes"])
        w.writeheader()
        for row in scan_rows(levels):
            w.writerow(row)
            rows += 1
    return rows
