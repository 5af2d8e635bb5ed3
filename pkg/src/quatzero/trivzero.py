"""Sign patterns, the local involutions at ramified primes, Picard orbits,
and the signed-graph criterion that forces eigenforms to vanish on whole
orbits ("trivial zeroes").

A sign pattern assigns +-1 to each ramified prime; an orbit survives
(supports nonzero forms with those local signs) iff its signed graph has no
closed walk of negative parity, which a parity-labelled union-find detects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

from . import InternalDefect, PreconditionError
from .exactalg import prime_factors
from .quatarith import IdealClassSet


@dataclass(frozen=True)
class SignPattern:
    """Multiplicative function d -> +-1 on the divisors of N, determined by
    its values at the primes dividing N."""

    level: int
    signs: tuple[tuple[int, int], ...]  # (prime, +-1), primes ascending

    @staticmethod
    def of(level: int, by_prime: dict[int, int]) -> "SignPattern":
        ps = prime_factors(level)
        if sorted(by_prime) != ps:
            raise PreconditionError(f"sign pattern must cover exactly the primes of {level}")
        if any(v not in (-1, 1) for v in by_prime.values()):
            raise PreconditionError("signs must be +-1")
        return SignPattern(level, tuple((p, by_prime[p]) for p in ps))

    @staticmethod
    def all_plus(level: int) -> "SignPattern":
        return SignPattern.of(level, {p: 1 for p in prime_factors(level)})

    @staticmethod
    def all_minus(level: int) -> "SignPattern":
        return SignPattern.of(level, {p: -1 for p in prime_factors(level)})

    @staticmethod
    def all_patterns(level: int) -> Iterator["SignPattern"]:
        ps = prime_factors(level)
        for bits in itertools.product((1, -1), repeat=len(ps)):
            yield SignPattern(level, tuple(zip(ps, bits)))

    def at(self, p: int) -> int:
        for q, s in self.signs:
            if q == p:
                return s
        raise PreconditionError(f"{p} does not divide {self.level}")

    def epsilon(self, d: int) -> int:
        """Value at a divisor d of the level (multiplicative extension)."""
        if d < 1 or self.level % d:
            raise PreconditionError(f"{d} is not a divisor of {self.level}")
        out = 1
        for q, s in self.signs:
            if d % q == 0:
                out *= s
        return out

    @property
    def global_sign(self) -> int:
        return self.epsilon(self.level)

    def bits(self) -> str:
        return "".join("+" if s == 1 else "-" for _, s in self.signs)

    def __str__(self) -> str:
        return f"eps({self.level})={self.bits()}"


@dataclass(frozen=True)
class InvolutionSet:
    level: int
    sigma: tuple[tuple[int, tuple[int, ...]], ...]  # (prime, permutation)

    def at(self, p: int) -> tuple[int, ...]:
        for q, perm in self.sigma:
            if q == p:
                return perm
        raise PreconditionError(f"{p} does not divide {self.level}")

    def product(self, d: int) -> tuple[int, ...]:
        """Composite involution over the primes dividing d."""
        h = len(self.sigma[0][1])
        out = list(range(h))
        for q, perm in self.sigma:
            if d % q == 0:
                out = [perm[i] for i in out]
        return tuple(out)


def involutions(classes: IdealClassSet) -> InvolutionSet:
    """The involution each ramified prime induces on the ideal classes; read
    off the permutation Brandt matrices."""
    sigma = []
    for p in prime_factors(classes.level):
        perm = classes.sigma(p)
        if any(perm[perm[i]] != i for i in range(classes.h)):
            raise InternalDefect(f"sigma_{p} is not an involution")
        sigma.append((p, perm))
    return InvolutionSet(classes.level, tuple(sigma))


@dataclass(frozen=True)
class OrbitPartition:
    level: int
    orbits: tuple[tuple[int, ...], ...]
    weights: tuple[int, ...]  # one unit weight per orbit

    @property
    def type_number(self) -> int:
        return len(self.orbits)

    def orbit_of(self, i: int) -> int:
        for idx, orb in enumerate(self.orbits):
            if i in orb:
                return idx
        raise PreconditionError(f"class index {i} out of range")


def orbit_structure(classes: IdealClassSet) -> OrbitPartition:
    """Connected components of the class set under all ramified involutions,
    with the (constant) unit weight of each component."""
    orbits = [tuple(o) for o in classes.orbit_partition()]
    omega = len(prime_factors(classes.level))
    weights = []
    for orb in orbits:
        ws = {classes.weights[i] for i in orb}
        if len(ws) != 1:
            raise InternalDefect(f"unit weight not constant on orbit {orb}")
        size = len(orb)
        if size & (size - 1) or size > 2**omega:
            raise InternalDefect(f"orbit size {size} is not a 2-power <= 2^{omega}")
        weights.append(ws.pop())
    return OrbitPartition(classes.level, tuple(orbits), tuple(weights))


@dataclass(frozen=True)
class TrivialZeroReport:
    pattern: SignPattern
    partition: OrbitPartition
    admissible_orbits: tuple[int, ...]
    inadmissible_orbits: tuple[int, ...]
    trivial_zero_classes: frozenset[int]
    fundamental_domain: tuple[int, ...]

    @property
    def dim(self) -> int:
        """dim of the eigencomponent with these local signs."""
        return len(self.admissible_orbits)


def admissibility(
    invs: InvolutionSet, partition: OrbitPartition, pattern: SignPattern
) -> TrivialZeroReport:
    """Classify each orbit as admissible or not for the given sign pattern.

    Parity union-find over the signed graph: a -1 edge flips the relative
    parity; a -1 loop, or any inconsistent closed walk, kills the component.
    """
    if pattern.level != invs.level:
        raise PreconditionError("pattern level does not match involutions")
    h = len(invs.sigma[0][1])
    parent = list(range(h))
    parity = [0] * h
    bad: set[int] = set()

    def find_full(x: int) -> tuple[int, int]:
        root = x
        par = 0
        while parent[root] != root:
            par ^= parity[root]
            root = parent[root]
        # path compression
        node, acc = x, par
        while parent[node] != node:
            nxt, np = parent[node], parity[node]
            parent[node], parity[node] = root, acc
            acc ^= np
            node = nxt
        return root, par

    for p, perm in invs.sigma:
        flip = 1 if pattern.at(p) == -1 else 0
        for i in range(h):
            j = perm[i]
            if j < i:
                continue
            if i == j:
                if flip:
                    bad.add(find_full(i)[0])
                continue
            ri, pi = find_full(i)
            rj, pj = find_full(j)
            if ri == rj:
                if (pi ^ pj) != flip:
                    bad.add(ri)
            else:
                parent[ri] = rj
                parity[ri] = pi ^ pj ^ flip
                if ri in bad:
                    bad.discard(ri)
                    bad.add(rj)
    admissible, inadmissible = [], []
    trivial: set[int] = set()
    for idx, orb in enumerate(partition.orbits):
        root = find_full(orb[0])[0]
        roots = {find_full(i)[0] for i in orb}
        if roots != {root}:
            raise InternalDefect("signed-graph components disagree with the orbit partition")
        if root in bad:
            inadmissible.append(idx)
            trivial.update(orb)
        else:
            admissible.append(idx)
    domain = tuple(min(partition.orbits[idx]) for idx in admissible)
    return TrivialZeroReport(
        pattern=pattern,
        partition=partition,
        admissible_orbits=tuple(admissible),
        inadmissible_orbits=tuple(inadmissible),
        trivial_zero_classes=frozenset(trivial),
        fundamental_domain=domain,
    )


def classify_zero_set(
    zero_set: Iterable[int], report: TrivialZeroReport
) -> tuple[frozenset[int], frozenset[int]]:
    """Split a zero set into (trivial, nontrivial) against the report for the
    form's own sign pattern.  A form must vanish on every inadmissible orbit;
    anything else is a defect upstream."""
    zeros = frozenset(zero_set)
    trivial = zeros & report.trivial_zero_classes
    if trivial != report.trivial_zero_classes:
        missing = report.trivial_zero_classes - zeros
        raise InternalDefect(f"eigenform fails to vanish on forced classes {sorted(missing)}")
    return trivial, zeros - trivial


def report_to_json(report: TrivialZeroReport) -> dict:
    return {
        "level": report.pattern.level,
        "pattern": report.pattern.bits(),
        "admissible_orbits": list(report.admissible_orbits),
        "inadmissible_orbits": list(report.inadmissible_orbits),
        "trivial_zero_classes": sorted(report.trivial_zero_classes),
        "fundamental_domain": list(report.fundamental_domain),
        "dim": report.dim,
    }
