"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured scope.  Criterion 12 (the full prime census to 4000) is gated
behind QUATZERO_RELEASE=1; criterion 10 is implemented faithfully over the
whole embeddable grid and is an expected honest failure — the conjugation /
fixed-point identities of the class map are provably false on part of that
grid (see the decisions ledger outside the package for the analysis and the
independent cross-checks).
"""

import math
import os
import time
from fractions import Fraction

import pytest

from quatzero.census import (
    cached_brandt,
    cached_classes,
    degree_histogram,
    load_or_compute,
    run_census,
    valid_levels,
    zero_free_proportion_series,
)
from quatzero.dimform import (
    dim_bias,
    no_trivial_zeroes_criterion,
    prime_level_trivial_zero_count,
)
from quatzero.eigen import HeckeAction, split_spectrum, verify_orbit_bounds
from quatzero.exactalg import is_prime, prime_factors, primes_up_to
from quatzero.periods import (
    FORCED_ZERO,
    L_NONZERO,
    IQField,
    compose_forms,
    embed,
    embeds,
    form_inverse,
    ideal_class_map,
    nonvanishing_verdict,
    period,
    _is_fundamental,
)
from quatzero.quatarith import brandt_matrix, build_algebra, eichler_mass, ideal_classes, maximal_order
from quatzero.trivzero import SignPattern, admissibility, involutions, orbit_structure

JOBS = min(2, os.cpu_count() or 1)


def _report(k, text):
    print(f"\nACCEPTANCE {k}: PASS - {text}")


@pytest.fixture(scope="session")
def full_records_500(level_cache):
    levels = valid_levels(501)
    records, failures = run_census(levels, "full", level_cache, jobs=JOBS)
    assert not failures, failures
    return {r["level"]: r for r in records}


@pytest.fixture(scope="session")
def graph_records_1000(level_cache, full_records_500):
    levels = [N for N in valid_levels(1001, odd_only=True) if N > 500]
    records, failures = run_census(levels, "graph", level_cache, jobs=JOBS)
    assert not failures, failures
    out = {r["level"]: r for r in records}
    for N in valid_levels(501, odd_only=True):
        out[N] = full_records_500[N]
    return out


# -- criterion 1: level 154 golden reproduction --------------------------------


def test_criterion_01_level154_golden():
    t0 = time.monotonic()
    classes = ideal_classes(maximal_order(build_algebra(154)))
    split = split_spectrum(classes)
    invs = involutions(classes)
    part = orbit_structure(classes)
    elapsed = time.monotonic() - t0
    assert classes.h == 6
    assert sorted(len(o) for o in part.orbits) == [2, 2, 2]
    s = {p: invs.at(p) for p in (2, 7, 11)}

    def pointwise_fixed(orbit, p):
        return all(s[p][i] == i for i in orbit)

    def swapped(orbit, p):
        return all(s[p][i] != i and s[p][i] in orbit for i in orbit)

    # cycle structures as printed: sigma_7 fixed-point-free (three 2-cycles);
    # sigma_2 fixes exactly one orbit, sigma_11 fixes exactly one other orbit
    assert all(s[7][i] != i for i in range(6))
    x1 = next(o for o in part.orbits if pointwise_fixed(o, 11))
    x3 = next(o for o in part.orbits if pointwise_fixed(o, 2))
    x2 = next(o for o in part.orbits if swapped(o, 2) and swapped(o, 7) and swapped(o, 11))
    assert {x1, x2, x3} == set(part.orbits)
    assert part.weights[part.orbits.index(x3)] == 2
    assert part.weights[part.orbits.index(x1)] == 1
    assert part.weights[part.orbits.index(x2)] == 1

    # the five nontrivial rows of the table, up to relabeling/sign/conjugation
    orbits = split.orbits
    assert sorted(o.degree for o in orbits) == [1, 1, 1, 1, 2]
    eis = next(o for o in orbits if o.is_eisenstein)
    K1 = eis.form.field
    assert all(v == eis.form.values[0] for v in eis.form.values)
    cusp = [o for o in orbits if not o.is_eisenstein]
    by_pattern = {o.form.sign_pattern.bits(): o for o in cusp if o.degree == 1}
    assert set(by_pattern) == {"+--", "--+", "---"}

    def support(o):
        return frozenset(i for i in range(6) if not o.form.values[i].is_zero())

    assert support(by_pattern["+--"]) == frozenset(x3)
    assert support(by_pattern["--+"]) == frozenset(x1)
    assert support(by_pattern["---"]) == frozenset(x2)
    for o in by_pattern.values():
        vals = sorted(v.rep[0] for v in o.form.values if not v.is_zero())
        assert vals == [-1, 1]
        assert len(o.zero_set) == 4
    deg2 = next(o for o in cusp if o.degree == 2)
    assert deg2.form.sign_pattern.bits() == "+++"
    assert deg2.zero_set == frozenset()
    vals = deg2.form.values
    for orbit in part.orbits:
        a, b = orbit
        assert vals[a] == vals[b]
    A, B, C = vals[x1[0]], vals[x2[0]], vals[x3[0]]
    # B/A is a root of y^2+3y+1 (so the values generate Q(sqrt 5)) and the
    # weight-2 orbit carries -2A-2B: exactly the printed pattern projectively
    assert (B * B + (A * B).scale(3) + A * A).is_zero()
    assert (C + A.scale(2) + B.scale(2)).is_zero()
    t = B.scale(2) + A.scale(3)
    assert (t * t - (A * A).scale(5)).is_zero()

    # every zero in the table is a trivial zero
    for o in cusp:
        rep = admissibility(invs, part, o.form.sign_pattern)
        assert o.zero_set == rep.trivial_zero_classes
    assert elapsed < 5.0, f"level 154 pipeline took {elapsed:.2f}s"
    _report(1, f"level 154 table reproduced exactly in {elapsed:.2f}s")


# -- criterion 2: level 30 -------------------------------------------------------


def test_criterion_02_level30():
    t0 = time.monotonic()
    classes = ideal_classes(maximal_order(build_algebra(30)))
    split = split_spectrum(classes)
    elapsed = time.monotonic() - t0
    cusp = [o for o in split.orbits if not o.is_eisenstein]
    assert len(cusp) == 1
    form = cusp[0].form
    assert sorted(v.rep[0] for v in form.values) == [-1, 1]
    sig = form.sign_pattern
    assert sig.at(2) == -1 and sig.at(3) == 1 and sig.at(5) == -1
    assert cusp[0].zero_set == frozenset()
    assert elapsed < 1.0, f"level 30 took {elapsed:.2f}s"
    _report(2, f"level 30 cusp form (1,-1), signs -+-, zero-free in {elapsed:.2f}s")


# -- criterion 3: structural invariants, N <= 500 ---------------------------------


@pytest.mark.slow
def test_criterion_03_structural_suite(level_cache, full_records_500):
    t0 = time.monotonic()
    levels = valid_levels(501)
    small_primes = [2, 3, 5, 7, 11, 13]
    for N in levels:
        rec = full_records_500[N]
        classes = cached_classes(rec)
        assert sum(Fraction(1, e) for e in classes.weights) == eichler_mass(N)
        mats = {}
        for p in small_primes:
            mats[p] = cached_brandt(classes, p, level_cache)
        for p in prime_factors(N):
            mats.setdefault(p, cached_brandt(classes, p, level_cache))
        e = classes.weights
        h = classes.h
        for p, T in mats.items():
            for i in range(h):
                for j in range(h):
                    assert e[j] * T.entries[i][j] == e[i] * T.entries[j][i], (N, p)
            if N % p:
                assert all(rs == p + 1 for rs in T.row_sums()), (N, p)
            else:
                assert T.is_permutation(), (N, p)
                sq = T.mul(T)
                assert all(sq[i][j] == (1 if i == j else 0) for i in range(h) for j in range(h))
        for a in range(len(small_primes)):
            for b in range(a + 1, len(small_primes)):
                Ta, Tb = mats[small_primes[a]], mats[small_primes[b]]
                assert Ta.mul(Tb) == Tb.mul(Ta), (N, small_primes[a], small_primes[b])
        # trace of the full ramified product is the sigma_N fixed count >= 1
        assert rec["sigmaN_fixed"] >= 1, N
    elapsed = time.monotonic() - t0
    assert elapsed < 1800, f"structural suite took {elapsed:.0f}s"
    _report(3, f"{len(levels)} levels <= 500 verified in {elapsed:.0f}s")


# -- criterion 4: graph <-> formula cross-check ------------------------------------


@pytest.mark.slow
def test_criterion_04_graph_formula(graph_records_1000):
    levels = valid_levels(1001, odd_only=True)
    checked = 0
    for N in levels:
        rec = graph_records_1000[N]
        assert rec["dim_bias_match"] is True, N
        for pat in SignPattern.all_patterns(N):
            bias = dim_bias(N, pat)
            assert rec["inadmissible_by_pattern"][pat.bits()] == bias, (N, pat.bits())
            if pat.bits() != "+" * len(pat.signs):
                assert no_trivial_zeroes_criterion(N, pat) == (bias == 0), (N, pat.bits())
            checked += 1
    _report(4, f"{checked} (level, pattern) pairs cross-checked for {len(levels)} odd levels <= 1000")


# -- criterion 5: prime-level fixed point counts ------------------------------------


@pytest.mark.slow
def test_criterion_05_prime_fixed_points(full_records_500):
    primes = [p for p in primes_up_to(500) if p >= 5]
    for N in primes:
        rec = full_records_500[N]
        assert rec["sigmaN_fixed"] == prime_level_trivial_zero_count(N), N
    _report(5, f"tr(sigma_N) = h(disc) b/2 for all {len(primes)} primes in [5, 500]")


# -- criterion 6: the odd omega=3 formula census --------------------------------------


def test_criterion_06_formula_census():
    t0 = time.monotonic()
    levels = valid_levels(10000, odd_only=True, omega=3)
    assert len(levels) == 820
    good_levels = set()
    good_patterns = 0
    for N in levels:
        for pat in SignPattern.all_patterns(N):
            if pat.bits() == "+++":
                continue
            ok = no_trivial_zeroes_criterion(N, pat)
            assert ok == (dim_bias(N, pat) == 0), (N, pat.bits())
            if ok:
                good_levels.add(N)
                good_patterns += 1
    elapsed = time.monotonic() - t0
    assert len(good_levels) == 465
    assert good_patterns == 559
    assert elapsed < 300, f"formula census took {elapsed:.0f}s"
    _report(6, f"465 levels / 559 patterns among 820 odd omega=3 levels < 10000 in {elapsed:.0f}s")


# -- criterion 7: Hecke eigenvalues against the conductor-11 elliptic curve -----------


def _ec11_ap(p):
    cnt = 0
    for x in range(p):
        rhs = (x**3 - x**2 - 10 * x - 20) % p
        cnt += sum(1 for y in range(p) if (y * y + y - rhs) % p == 0)
    return p + 1 - (cnt + 1)


def test_criterion_07_level11_hecke_oracle():
    classes = ideal_classes(maximal_order(build_algebra(11)))
    split = split_spectrum(classes, eigenvalue_primes=50)
    cusp = next(o for o in split.orbits if not o.is_eisenstein)
    checked = 0
    for p in primes_up_to(50):
        if p == 11:
            continue
        assert cusp.form.eigenvalues[p].rep[0] == _ec11_ap(p), p
        checked += 1
    _report(7, f"a_p matches the elliptic-curve point counts for {checked} primes <= 50")


# -- criterion 8: zero-count bounds -----------------------------------------------------


@pytest.mark.slow
def test_criterion_08_orbit_bounds(full_records_500):
    single_orbit_levels = 0
    for N, rec in sorted(full_records_500.items()):
        assert rec["bounds_violations"] == [], (N, rec["bounds_violations"])
        if rec["single_orbit_eigenspaces"]:
            single_orbit_levels += 1
            assert rec["total_nontrivial"] == 0, N
    _report(
        8,
        f"no bound violations at {len(full_records_500)} levels; "
        f"{single_orbit_levels} levels with single-orbit eigenspaces are nontrivial-zero-free",
    )


# -- criterion 9: the period verdicts at level 154 ----------------------------------------


def test_criterion_09_periods_level154(level_cache):
    classes = cached_classes(load_or_compute(154, "full", level_cache))
    split = split_spectrum(classes)
    part = orbit_structure(classes)
    cusp = [o for o in split.orbits if not o.is_eisenstein]
    deg2 = next(o for o in cusp if o.degree == 2)
    phi3 = next(o for o in cusp if o.form.sign_pattern.bits() == "+--")
    phi4 = next(o for o in cusp if o.form.sign_pattern.bits() == "--+")
    phi5 = next(o for o in cusp if o.form.sign_pattern.bits() == "---")
    for D in (4, 11, 67, 163):
        assert embeds(D, 154), D
        K = IQField(D)
        table = ideal_class_map(embed(K, classes, part), K, classes)
        chi = K.trivial_character()
        assert nonvanishing_verdict(deg2.form, K, chi, table).verdict == L_NONZERO, D
        assert nonvanishing_verdict(phi5.form, K, chi, table).verdict == FORCED_ZERO, D
        if D == 4:
            assert period(phi3.form, K, chi, table).is_zero == "nonzero"
            assert period(phi4.form, K, chi, table).is_zero == "zero"
        if D == 11:
            assert period(phi3.form, K, chi, table).is_zero == "zero"
            assert period(phi4.form, K, chi, table).is_zero == "nonzero"
    _report(9, "all verdicts of the level-154 worked example reproduced for D in {4,11,67,163}")


# -- criterion 10: class-map identities over the grid --------------------------------------


def _sigma_product(classes, d):
    perm = tuple(range(classes.h))
    for p in prime_factors(classes.level):
        if d % p == 0:
            sp = classes.sigma(p)
            perm = tuple(sp[i] for i in perm)
    return perm


@pytest.mark.slow
def test_criterion_10_class_map_grid(level_cache, full_records_500):
    fundamentals = [D for D in range(3, 101) if _is_fundamental(-D)]
    levels = valid_levels(301)
    pairs = 0
    violations = []
    for N in levels:
        classes = cached_classes(full_records_500[N])
        part = orbit_structure(classes)
        sigN = _sigma_product(classes, N)
        for D in fundamentals:
            if not embeds(D, N):
                continue
            pairs += 1
            K = IQField(D)
            emb = embed(K, classes, part)
            table = ideal_class_map(emb, K, classes)
            certified = emb.conjugator is not None
            for f, img in zip(K.forms, table.images):
                inv_img = table.images[K.forms.index(form_inverse(f))]
                if inv_img != sigN[img]:
                    violations.append((N, D, "conjugation", certified))
                    break
                if compose_forms(f, f) == K.identity and sigN[img] != img:
                    violations.append((N, D, "two-torsion-fixed", certified))
                    break
            d = D if D % 4 else D // 4
            if d > 1 and N % d == 0:
                sd = _sigma_product(classes, d)
                if any(sd[img] != img for img in table.images):
                    violations.append((N, D, "ramified-divisor-fixed", certified))
            for p in prime_factors(math.gcd(D, N)):
                jp = K.ramified_prime_class(p)
                sp = classes.sigma(p)
                for f, img in zip(K.forms, table.images):
                    if table.images[K.forms.index(compose_forms(f, jp))] != sp[img]:
                        violations.append((N, D, f"equivariance-at-{p}", certified))
                        break
    certified_violations = [v for v in violations if v[3]]
    assert not certified_violations, certified_violations
    assert not violations, (
        f"{len(violations)} of {pairs} embeddable pairs violate the stated class-map"
        f" identities; every violation occurs for a pair admitting no conjugator-certified"
        f" embedding, where the conjugation/fixed-point statements are provably false"
        f" (see the decisions ledger; minimal examples {sorted(set(v[:2] for v in violations))[:6]}...)."
        f" The local-uniformizer identities (divisor-fixed, equivariance) hold everywhere."
    )
    _report(10, f"all identities hold on {pairs} grid pairs")


# -- criterion 11: the zero-free proportion prefix -------------------------------------------


PLOTTED_PREFIX = [
    (13, 1.0), (19, 1.0), (29, 1.0), (37, 1.0), (43, 1.0), (53, 1.0), (61, 1.0),
    (71, 0.9743589743589743), (79, 0.9787234042553191), (89, 0.9830508474576272),
    (101, 0.9857142857142858), (107, 0.9879518072289156), (113, 0.9787234042553191),
    (131, 0.9819819819819819), (139, 0.9761904761904762), (151, 0.9583333333333334),
    (163, 0.9620253164556962), (173, 0.9666666666666667), (181, 0.9651741293532339),
    (193, 0.968609865470852), (199, 0.963265306122449), (223, 0.9664179104477612),
    (229, 0.9556313993174061), (239, 0.9596273291925466), (251, 0.9629629629629629),
    (263, 0.9659685863874345), (271, 0.9685990338164251), (281, 0.9638009049773756),
    (293, 0.9661016949152542),
]


@pytest.mark.slow
def test_criterion_11_zero_free_prefix(full_records_500):
    records = [r for N, r in sorted(full_records_500.items()) if is_prime(N)]
    series = zero_free_proportion_series(records, primes=True)
    by_x = {row["x"]: row["y"] for row in series}
    matched = 0
    for x, y in PLOTTED_PREFIX:
        assert x in by_x, f"no census point at X={x}"
        assert float(by_x[x]) == y, (x, by_x[x], y)
        matched += 1
    assert matched >= 5
    # the spelled-out rational at X=151
    assert by_x[151] == Fraction(46, 48)
    _report(11, f"{matched} plotted zero-free proportions matched exactly as rationals")


# -- criterion 12: the full prime census (release gate) ---------------------------------------


@pytest.mark.release
@pytest.mark.skipif(
    not os.environ.get("QUATZERO_RELEASE"),
    reason="full prime census < 4000 is release-gated (hours); set QUATZERO_RELEASE=1",
)
def test_criterion_12_table1_stretch(level_cache):
    levels = valid_levels(4000, primes_only=True)
    records, failures = run_census(levels, "deg1", level_cache, jobs=JOBS)
    assert not failures, failures[:5]
    hist = degree_histogram(records)
    idx = hist["buckets"].index("1")
    assert hist["total_orbits"][idx] == 179
    assert hist["orbits_with_nontrivial"][idx] == 152
    assert hist["nontrivial_zeroes"][idx] == 9730
    _report(12, f"degree-1 column (179, 152, 9730) reproduced over {len(records)} prime levels")
