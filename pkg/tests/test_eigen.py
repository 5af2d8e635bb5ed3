from fractions import Fraction

import pytest

from quatzero.eigen import (
    HeckeAction,
    split_spectrum,
    verify_orbit_bounds,
)
from quatzero.exactalg import NFElem
from quatzero.quatarith import build_algebra, ideal_classes, maximal_order
from quatzero.trivzero import (
    SignPattern,
    admissibility,
    involutions,
    orbit_structure,
)


def _split(N):
    classes = ideal_classes(maximal_order(build_algebra(N)))
    return classes, split_spectrum(classes)


def test_level11_spectrum():
    classes, split = _split(11)
    assert [o.degree for o in split.orbits] == [1, 1]
    eis = next(o for o in split.orbits if o.is_eisenstein)
    cusp = next(o for o in split.orbits if not o.is_eisenstein)
    assert all(v == eis.form.values[0] for v in eis.form.values)
    # primitive integral values orthogonal to the constants: weights {2,3}
    vals = [v.rep[0] for v in cusp.form.values]
    e = classes.weights
    assert sum(Fraction(v, w) for v, w in zip(vals, e)) == 0
    assert sorted(abs(v) for v in vals) == [2, 3]
    assert cusp.zero_set == frozenset()
    assert cusp.form.sign_pattern.bits() in ("+", "-")


def test_level11_eigenvalues_match_elliptic_curve():
    def ap(p):
        cnt = 0
        for x in range(p):
            rhs = (x**3 - x**2 - 10 * x - 20) % p
            cnt += sum(1 for y in range(p) if (y * y + y - rhs) % p == 0)
        return p + 1 - (cnt + 1)

    classes, split = _split(11)
    cusp = next(o for o in split.orbits if not o.is_eisenstein)
    for p in (2, 3, 5, 7, 13, 17, 19):
        a = cusp.form.eigenvalues[p]
        assert a.rep[0] == ap(p), p


def test_level30_cusp_form():
    classes, split = _split(30)
    assert len(split.orbits) == 2
    cusp = next(o for o in split.orbits if not o.is_eisenstein)
    assert cusp.degree == 1
    vals = [v.rep[0] for v in cusp.form.values]
    assert sorted(vals) == [-1, 1]
    assert cusp.zero_set == frozenset()
    sig = cusp.form.sign_pattern
    assert sig.at(2) == -1 and sig.at(3) == 1 and sig.at(5) == -1


def test_level154_table():
    classes, split = _split(154)
    degrees = sorted(o.degree for o in split.orbits)
    assert degrees == [1, 1, 1, 1, 2]
    eis = next(o for o in split.orbits if o.is_eisenstein)
    assert eis.degree == 1
    cusp = [o for o in split.orbits if not o.is_eisenstein]
    deg2 = next(o for o in cusp if o.degree == 2)
    # the degree-2 orbit generates Q(sqrt 5): disc of its factor is 5*square
    c = deg2.defining_factor.coeffs
    disc = c[1] * c[1] - 4 * c[0] * c[2]
    r = 1
    while disc % (r + 1) ** 2 == 0:
        r += 1
    import math

    s = math.isqrt(disc)
    squarefree_part = disc
    for q in range(2, s + 1):
        while squarefree_part % (q * q) == 0:
            squarefree_part //= q * q
    assert squarefree_part == 5
    assert deg2.zero_set == frozenset()
    # the three rational cusp forms have 4 zeroes each and +/- value pairs
    deg1 = [o for o in cusp if o.degree == 1]
    assert all(len(o.zero_set) == 4 for o in deg1)
    for o in deg1:
        nz = sorted(v.rep[0] for v in o.form.values if not v.is_zero())
        assert nz == [-1, 1]
    # sign patterns of the table rows (up to labelling of classes):
    pats = sorted(o.form.sign_pattern.bits() for o in deg1)
    assert pats == ["+--", "--+", "---"]
    assert deg2.form.sign_pattern.bits() == "+++"
    # degree-2 values follow the projective pattern (A, A, B, B, C, C) with
    # B/A = alpha a root of x^2+3x+1 and C/A = -2 alpha - 2; these relations
    # are scale- and conjugation-invariant, so they pin the row exactly:
    #     B^2 + 3AB + A^2 = 0,   C = -2B - 2A,   (2B + 3A)^2 = 5 A^2.
    groups: dict = {}
    for i, v in enumerate(deg2.form.values):
        groups.setdefault(v.rep, []).append(i)
    assert len(groups) == 3 and all(len(g) == 2 for g in groups.values())
    e = classes.weights
    by_weight = {}
    for rep, idxs in groups.items():
        ws = {e[i] for i in idxs}
        assert len(ws) == 1
        by_weight.setdefault(ws.pop(), []).append(deg2.form.values[idxs[0]])
    assert sorted(by_weight) == [1, 2]
    (C,) = by_weight[2]
    for A, B in (by_weight[1], by_weight[1][::-1]):
        if (B * B + (A * B).scale(3) + A * A).is_zero():
            break
    else:
        pytest.fail("no labelling satisfies the quadratic relation")
    assert (C + B.scale(2) + A.scale(2)).is_zero()
    t = B.scale(2) + A.scale(3)
    assert (t * t - (A * A).scale(5)).is_zero()  # values generate Q(sqrt 5)


def test_values_respect_involution_signs():
    for N in (30, 154):
        classes, split = _split(N)
        invs = involutions(classes)
        for orbit in split.orbits:
            form = orbit.form
            for p, perm in invs.sigma:
                s = form.sign_pattern.at(p)
                for i in range(classes.h):
                    lhs = form.values[perm[i]]
                    rhs = form.values[i].scale(s)
                    assert (lhs - rhs).is_zero()


def test_orthogonality_distinct_orbits():
    classes, split = _split(154)
    e = classes.weights
    for a in range(len(split.orbits)):
        for b in range(a + 1, len(split.orbits)):
            va = split.orbits[a].form.values
            vb = split.orbits[b].form.values
            da = split.orbits[a].degree
            db = split.orbits[b].degree
            # tensor-product pairing: matrix sum_i va_i (x) vb_i / e_i must vanish
            acc = [[Fraction(0)] * db for _ in range(da)]
            for i in range(classes.h):
                for s in range(da):
                    cs = va[i].rep[s]
                    if cs:
                        for t in range(db):
                            acc[s][t] += Fraction(cs, e[i]) * vb[i].rep[t]
            assert all(v == 0 for row in acc for v in row), (a, b)


def test_verify_orbit_bounds_small_levels():
    for N in (11, 30, 105, 154):
        classes, split = _split(N)
        invs = involutions(classes)
        part = orbit_structure(classes)
        report = verify_orbit_bounds(split, invs, part)
        assert report.violations == [], N
        assert report.checked_orbits == len(split.orbits)


def test_level154_all_zeroes_trivial():
    classes, split = _split(154)
    invs = involutions(classes)
    part = orbit_structure(classes)
    for orbit in split.orbits:
        rep = admissibility(invs, part, orbit.form.sign_pattern)
        triv = orbit.zero_set & rep.trivial_zero_classes
        assert triv == orbit.zero_set  # every observed zero is forced
        assert rep.trivial_zero_classes == orbit.zero_set


def test_spectrum_deterministic():
    classes1, split1 = _split(154)
    classes2, split2 = _split(154)
    assert [o.defining_factor for o in split1.orbits] == [
        o.defining_factor for o in split2.orbits
    ]
    for o1, o2 in zip(split1.orbits, split2.orbits):
        assert o1.form.values == o2.form.values
