"""Batch censuses over ranges of levels: per-level zero statistics, degree
histograms, zero-free proportions, value histograms, and the plot data
reproducing the published figures at exact-arithmetic scale.

Each level's computation is cached as one canonical JSON document keyed by
(level, code version, algebra), so censuses are resumable and reruns are
byte-identical.  Two depths exist: "full" computes every Galois orbit
exactly (the desk-scale default), "deg1" is the scalable path for prime
levels that factors the characteristic polynomial, solves only the rational
eigenvectors (modular kernel + rational reconstruction + exact
verification), and classifies their zeroes through the fixed points of the
product involution.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import BudgetExceeded, InternalDefect, PreconditionError
from .dimform import dim_bias, prime_level_trivial_zero_count
from .eigen import HeckeAction, split_spectrum
from .exactalg import (
    IntPoly,
    charpoly_if_squarefree_sparse,
    charpoly_int,
    factor_int_poly,
    is_prime,
    is_squarefree,
    is_squarefree_poly,
    prime_factors,
    primes_up_to,
    _crt_primes,
)
from .quatarith import (
    brandt_matrix,
    build_algebra,
    classes_from_json,
    classes_to_json,
    eichler_mass,
    ideal_classes,
    maximal_order,
)
from .trivzero import (
    SignPattern,
    admissibility,
    involutions,
    orbit_structure,
)

CACHE_VERSION = 5


# ---------------------------------------------------------------------------
# level enumeration
# ---------------------------------------------------------------------------


def valid_levels(
    upper: int, lower: int = 1, odd_only: bool = False, omega: Optional[int] = None,
    primes_only: bool = False,
) -> list[int]:
    """Squarefree levels with an odd number of prime factors in [lower, upper)."""
    out = []
    for N in range(max(2, lower), upper):
        if odd_only and N % 2 == 0:
            continue
        if primes_only and not is_prime(N):
            continue
        if not is_squarefree(N):
            continue
        w = len(prime_factors(N))
        if w % 2 == 0:
            continue
        if omega is not None and w != omega:
            continue
        out.append(N)
    return out


# ---------------------------------------------------------------------------
# per-level computation
# ---------------------------------------------------------------------------


def mass_estimate(N: int) -> Fraction:
    return eichler_mass(N)


def compute_level_record(
    N: int,
    depth: str = "full",
    sep_bound: int = 200,
    max_mass: Optional[Fraction] = None,
) -> dict:
    """One level's census record (pure and deterministic)."""
    if max_mass is not None and eichler_mass(N) > max_mass:
        raise BudgetExceeded(
            f"level {N} has mass {eichler_mass(N)} > budget {max_mass}"
        )
    if depth not in ("full", "graph", "deg1"):
        raise PreconditionError(f"unknown census depth {depth!r}")
    if depth == "deg1" and not is_prime(N):
        raise PreconditionError("the deg1 census path handles prime levels only")
    classes = ideal_classes(maximal_order(build_algebra(N)))
    record: dict = {
        "version": CACHE_VERSION,
        "level": N,
        "depth": depth,
        "algebra": [classes.order.algebra.a, classes.order.algebra.b],
        "h": classes.h,
        "weights": list(classes.weights),
        "classes": classes_to_json(classes),
    }
    if depth == "full":
        record.update(_graph_depth(classes))
        record.update(_full_depth(classes, sep_bound))
    elif depth == "graph":
        record.update(_graph_depth(classes))
    else:
        record.update(_deg1_depth(classes, sep_bound))
    return record


def _graph_depth(classes) -> dict:
    """Involutions, orbits, per-pattern dimensions and trivial-zero classes;
    cross-checked against the closed-form dimension bias at odd levels."""
    N = classes.level
    invs = involutions(classes)
    part = orbit_structure(classes)
    reports = {
        pat.bits(): admissibility(invs, part, pat) for pat in SignPattern.all_patterns(N)
    }
    bias_match = None
    if N % 2:
        bias_match = all(
            len(reports[pat.bits()].inadmissible_orbits) == dim_bias(N, pat)
            for pat in SignPattern.all_patterns(N)
        )
        if not bias_match:
            raise InternalDefect(f"graph/formula dimension mismatch at N={N}")
    sigmaN = invs.product(N)
    return {
        "type_number": part.type_number,
        "orbit_sizes": sorted(len(o) for o in part.orbits),
        "sigma": {str(p): list(invs.at(p)) for p in prime_factors(N)},
        "dims": {bits: rep.dim for bits, rep in reports.items()},
        "trivial_by_pattern": {
            bits: sorted(rep.trivial_zero_classes) for bits, rep in reports.items()
        },
        "inadmissible_by_pattern": {
            bits: len(rep.inadmissible_orbits) for bits, rep in reports.items()
        },
        "sigmaN_fixed": sum(1 for i, v in enumerate(sigmaN) if v == i),
        "dim_bias_match": bias_match,
    }


def _full_depth(classes, sep_bound: int) -> dict:
    from .eigen import verify_orbit_bounds

    N = classes.level
    hecke = HeckeAction(classes)
    split = split_spectrum(classes, hecke, prime_bound=sep_bound)
    invs = involutions(classes)
    part = orbit_structure(classes)
    reports = {
        pat.bits(): admissibility(invs, part, pat) for pat in SignPattern.all_patterns(N)
    }
    orbits = []
    for orbit in split.orbits:
        bits = orbit.form.sign_pattern.bits()
        rep = reports[bits]
        zero = orbit.zero_set
        trivial = zero & rep.trivial_zero_classes
        if trivial != rep.trivial_zero_classes:
            raise InternalDefect(f"missing forced zeroes at N={N}")
        nontrivial = zero - trivial
        orbits.append(
            {
                "factor": list(orbit.defining_factor.coeffs),
                "degree": orbit.degree,
                "eisenstein": orbit.is_eisenstein,
                "pattern": bits,
                "pattern_trivial_free": not rep.inadmissible_orbits,
                "zero_count": len(zero),
                "trivial": len(trivial),
                "nontrivial": len(nontrivial),
                "zero_free": not zero,
            }
        )
    # consistency: total trivial zeroes over a cusp eigenbasis two ways
    total_triv_orbits = sum(o["trivial"] * o["degree"] for o in orbits if not o["eisenstein"])
    total_triv_dims = 0
    for bits, rep in reports.items():
        dim_cusp = rep.dim - (1 if bits == SignPattern.all_plus(N).bits() else 0)
        total_triv_dims += dim_cusp * len(rep.trivial_zero_classes)
    if total_triv_orbits != total_triv_dims:
        raise InternalDefect(f"trivial zero bookkeeping mismatch at N={N}")
    h = classes.h
    total_zero_slots = sum(o["zero_count"] * o["degree"] for o in orbits if not o["eisenstein"])
    if total_zero_slots > (h - 1) ** 2:
        raise InternalDefect(f"zero count exceeds the value slots at N={N}")
    bounds = verify_orbit_bounds(split, invs, part)
    return {
        "operator": split.operator,
        "charpoly": list(split.charpoly.coeffs),
        "orbits": orbits,
        "bounds_violations": list(bounds.violations),
        "single_orbit_eigenspaces": bounds.single_orbit_eigenspaces,
        "total_trivial": total_triv_orbits,
        "total_nontrivial": sum(
            o["nontrivial"] * o["degree"] for o in orbits if not o["eisenstein"]
        ),
    }


def _kernel_mod(rows: list[list[int]], p: int) -> Optional[list[int]]:
    """Kernel vector mod p of a square matrix expected to have nullity 1."""
    import numpy as np

    n = len(rows)
    M = np.array(rows, dtype=np.int64) % p
    piv_of_col: dict[int, int] = {}
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, n):
            if M[i, c]:
                piv = i
                break
        if piv is None:
            continue
        if piv != r:
            M[[r, piv]] = M[[piv, r]]
        inv = pow(int(M[r, c]), -1, p)
        M[r] = M[r] * inv % p
        col = M[:, c].copy()
        col[r] = 0
        M = (M - np.outer(col, M[r])) % p
        piv_of_col[c] = r
        r += 1
    free = [c for c in range(n) if c not in piv_of_col]
    if len(free) != 1:
        return None
    fc = free[0]
    vec = [0] * n
    vec[fc] = 1
    for c, rr in piv_of_col.items():
        vec[c] = int(-M[rr, fc]) % p
    return vec


def _rat_reconstruct(a: int, p: int, bound: int) -> tuple[int, int]:
    """num/den = a mod p with |num| <= bound, 0 < den <= bound."""
    r0, r1 = p, a % p
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        raise ValueError("no small rational reconstruction")
    num, den = (r1, s1) if s1 > 0 else (-r1, -s1)
    if math.gcd(num, den) != 1:
        raise ValueError("reconstruction not reduced")
    return num, den


def _deg1_eigenvector(T: list[list[int]], lam: int) -> tuple[int, ...]:
    """Primitive integer eigenvector for an integer eigenvalue of nullity 1,
    via modular kernels with exact final verification."""
    n = len(T)
    M = [[T[i][j] - (lam if i == j else 0) for j in range(n)] for i in range(n)]
    for p in _crt_primes():
        vec = _kernel_mod(M, p)
        if vec is None:
            continue
        k0 = next((i for i, v in enumerate(vec) if v), None)
        if k0 is None:
            continue
        inv = pow(vec[k0], -1, p)
        vec = [v * inv % p for v in vec]
        bound = math.isqrt(p // 2)
        try:
            fracs = [_rat_reconstruct(v, p, bound) for v in vec]
        except ValueError:
            continue
        den = 1
        for _, d in fracs:
            den = den * d // math.gcd(den, d)
        ints = [num * (den // d) for num, d in fracs]
        g = 0
        for v in ints:
            g = math.gcd(g, v)
        ints = [v // g for v in ints]
        k0 = next(i for i, v in enumerate(ints) if v)
        if ints[k0] < 0:
            ints = [-v for v in ints]
        ok = all(
            sum(M[i][j] * ints[j] for j in range(n) if ints[j]) == 0 for i in range(n)
        )
        if ok:
            return tuple(ints)
    raise InternalDefect("rational eigenvector reconstruction failed")


def _deg1_depth(classes, sep_bound: int) -> dict:
    N = classes.level
    h = classes.h
    Tmat = None
    cpoly = None
    operator = ""
    for p in primes_up_to(sep_bound):
        if N % p == 0:
            continue
        T = brandt_matrix(classes, p)
        c = charpoly_if_squarefree_sparse(T.entries, p + 1)
        if c is None and h <= 60:
            # small levels: settle squarefreeness with the dense path
            c = charpoly_int(T.entries, p + 1)
            if not is_squarefree_poly(c):
                c = None
        if c is not None:
            Tmat, cpoly, operator = [list(r) for r in T.entries], c, f"T_{p}"
            eis_eigen = p + 1
            break
    if Tmat is None:
        raise InternalDefect(f"no separating prime below {sep_bound} at N={N}")
    factors = factor_int_poly(cpoly)
    degrees = sorted(f.degree for f, _ in factors)
    # strip the constant-functions eigenvalue p+1 from the cusp bookkeeping
    eis_poly = IntPoly.of([-eis_eigen, 1])
    if (eis_poly, 1) not in factors:
        raise InternalDefect("constant-function eigenvalue missing from the spectrum")
    cusp_degrees = sorted(
        f.degree for f, _ in factors if f != eis_poly
    )
    sigmaN = classes.sigma(N)
    fixed = sum(1 for i, v in enumerate(sigmaN) if v == i)
    if N > 3 and fixed != prime_level_trivial_zero_count(N):
        raise InternalDefect(f"fixed point count disagrees with the formula at N={N}")
    deg1_rows = []
    for f, _ in factors:
        if f.degree != 1 or f == eis_poly:
            continue
        lam = -f.coeffs[0]
        vec = _deg1_eigenvector(Tmat, lam)
        # the ramified involution scales the vector by the local sign
        img = [vec[sigmaN[i]] for i in range(h)]
        if img == list(vec):
            eps = 1
        elif img == [-v for v in vec]:
            eps = -1
        else:
            raise InternalDefect(f"eigenvector not sign-symmetric under sigma_N at N={N}")
        zeros = [i for i, v in enumerate(vec) if v == 0]
        if eps == -1:
            forced = {i for i, v in enumerate(sigmaN) if v == i}
            if not forced.issubset(zeros):
                raise InternalDefect("missing forced zeroes on a rational eigenform")
            trivial = len(forced)
        else:
            trivial = 0
        deg1_rows.append(
            {
                "eigenvalue": lam,
                "global_sign": eps,
                "zero_count": len(zeros),
                "trivial": trivial,
                "nontrivial": len(zeros) - trivial,
                "zero_free": not zeros,
                "max_abs_value": max(abs(v) for v in vec),
            }
        )
    return {
        "operator": operator,
        "degrees": degrees,
        "cusp_degrees": cusp_degrees,
        "sigmaN_fixed": fixed,
        "deg1": deg1_rows,
    }


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------


def cache_path(cache_dir, N: int) -> Path:
    return Path(cache_dir) / f"level_{N:06d}.json"


def canonical_dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _depth_satisfies(cached: Optional[str], requested: str) -> bool:
    return cached == requested or cached == "full"


def load_or_compute(
    N: int,
    depth: str = "full",
    cache_dir=None,
    sep_bound: int = 200,
    max_mass: Optional[Fraction] = None,
) -> dict:
    if cache_dir is not None:
        path = cache_path(cache_dir, N)
        if path.exists():
            try:
                doc = json.loads(path.read_text())
            except json.JSONDecodeError:
                doc = None
            if (
                doc
                and doc.get("version") == CACHE_VERSION
                and _depth_satisfies(doc.get("depth"), depth)
            ):
                return doc
    record = compute_level_record(N, depth, sep_bound, max_mass)
    if cache_dir is not None:
        path = cache_path(cache_dir, N)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(canonical_dumps(record))
        os.replace(tmp, path)
    return record


def cached_classes(record: dict):
    return classes_from_json(record["classes"])


def cached_brandt(classes, n: int, cache_dir=None):
    """Brandt matrix with an on-disk cache next to the level records."""
    from .quatarith import BrandtMatrix, brandt_from_json, brandt_to_json

    if cache_dir is None:
        return brandt_matrix(classes, n)
    path = Path(cache_dir) / f"brandt_{classes.level:06d}_{n:04d}.json"
    if path.exists():
        try:
            return brandt_from_json(json.loads(path.read_text()))
        except (json.JSONDecodeError, KeyError):
            pass
    mat = brandt_matrix(classes, n)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(canonical_dumps(brandt_to_json(mat)))
    os.replace(tmp, path)
    return mat


def _worker(args):
    N, depth, cache_dir, sep_bound, max_mass = args
    try:
        return N, load_or_compute(N, depth, cache_dir, sep_bound, max_mass), None
    except Exception as exc:  # recorded, never silently dropped
        return N, None, f"{type(exc).__name__}: {exc}"


def run_census(
    levels: Sequence[int],
    depth: str = "full",
    cache_dir=None,
    sep_bound: int = 200,
    max_mass: Optional[Fraction] = None,
    jobs: int = 1,
) -> tuple[list[dict], list[dict]]:
    """Census over a set of levels; returns (records, failures) with records
    ordered by level and failures recorded per level."""
    levels = sorted(set(levels))
    records: dict[int, dict] = {}
    failures: list[dict] = []
    if jobs <= 1:
        for N in levels:
            N, rec, err = _worker((N, depth, cache_dir, sep_bound, max_mass))
            if err is None:
                records[N] = rec
            else:
                failures.append({"level": N, "error": err})
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [
                pool.submit(_worker, (N, depth, cache_dir, sep_bound, max_mass))
                for N in levels
            ]
            for fut in as_completed(futs):
                N, rec, err = fut.result()
                if err is None:
                    records[N] = rec
                else:
                    failures.append({"level": N, "error": err})
    failures.sort(key=lambda f: f["level"])
    return [records[N] for N in sorted(records)], failures


# ---------------------------------------------------------------------------
# aggregations
# ---------------------------------------------------------------------------


def degree_histogram(records: Iterable[dict]) -> dict:
    """Degree-bucketed census of cuspidal Galois orbits and their nontrivial
    zeroes, in the shape of the published table (counts per degree, degree-10
    and beyond pooled).  Nontrivial-zero columns beyond degree 1 need full
    depth; with deg1 records they cover the degree-1 column exactly."""
    buckets = list(range(1, 10)) + ["10+"]
    tot = {b: 0 for b in buckets}
    with_nt = {b: 0 for b in buckets}
    nt_zeroes = {b: 0 for b in buckets}
    have_high_degree_zeroes = True
    for rec in records:
        if rec["depth"] == "full":
            for o in rec["orbits"]:
                if o["eisenstein"]:
                    continue
                b = o["degree"] if o["degree"] < 10 else "10+"
                tot[b] += 1
                if o["nontrivial"]:
                    with_nt[b] += 1
                    nt_zeroes[b] += o["nontrivial"] * o["degree"]
        else:
            for d in rec["cusp_degrees"]:
                b = d if d < 10 else "10+"
                tot[b] += 1
            for row in rec["deg1"]:
                if row["nontrivial"]:
                    with_nt[1] += 1
                    nt_zeroes[1] += row["nontrivial"]
            have_high_degree_zeroes = False
    return {
        "buckets": [str(b) for b in buckets],
        "total_orbits": [tot[b] for b in buckets],
        "orbits_with_nontrivial": [with_nt[b] for b in buckets],
        "nontrivial_zeroes": [nt_zeroes[b] for b in buckets],
        "high_degree_zero_columns_complete": have_high_degree_zeroes,
    }


def zero_free_proportion_series(records: Iterable[dict], primes: bool = True) -> list[dict]:
    """Cumulative proportion of zero-free eigenforms among eigenforms whose
    sign pattern forces no zeroes, over prime (or non-prime) levels."""
    num = den = 0
    out = []
    for rec in sorted(records, key=lambda r: r["level"]):
        N = rec["level"]
        if is_prime(N) != primes:
            continue
        if rec["depth"] != "full":
            raise PreconditionError("zero-free series needs full-depth records")
        for o in rec["orbits"]:
            if o["eisenstein"] or not o["pattern_trivial_free"]:
                continue
            den += o["degree"]
            if o["zero_free"]:
                num += o["degree"]
        if den:
            out.append(
                {
                    "x": N,
                    "num": num,
                    "den": den,
                    "y": Fraction(num, den),
                }
            )
    return out


def nontrivial_zero_series(records: Iterable[dict]) -> tuple[list[dict], list[dict]]:
    """Per-level and cumulative nontrivial zero counts over prime levels."""
    per_level = []
    cumulative = []
    acc = 0
    for rec in sorted(records, key=lambda r: r["level"]):
        if not is_prime(rec["level"]):
            continue
        if rec["depth"] == "full":
            n = rec["total_nontrivial"]
        else:
            n = sum(row["nontrivial"] for row in rec["deg1"])
            # degree >= 2 contributions unknown at this depth
        per_level.append({"x": rec["level"], "y": n})
        acc += n
        cumulative.append({"x": rec["level"], "y": acc})
    return per_level, cumulative


def degree1_share_series(records: Iterable[dict]) -> list[dict]:
    """Cumulative share of nontrivial zeroes coming from degree-1 forms."""
    d1 = tot = 0
    out = []
    for rec in sorted(records, key=lambda r: r["level"]):
        if rec["depth"] != "full" or not is_prime(rec["level"]):
            continue
        for o in rec["orbits"]:
            if o["eisenstein"]:
                continue
            cnt = o["nontrivial"] * o["degree"]
            tot += cnt
            if o["degree"] == 1:
                d1 += cnt
        if tot:
            out.append({"x": rec["level"], "num": d1, "den": tot, "y": Fraction(d1, tot)})
    return out


def degree1_zero_proportion_series(records: Iterable[dict]) -> list[dict]:
    """Cumulative proportion of degree-1 values (excluding trivial zeroes)
    that vanish, over prime levels."""
    zeros = slots = 0
    out = []
    for rec in sorted(records, key=lambda r: r["level"]):
        if not is_prime(rec["level"]):
            continue
        h = rec["h"]
        if rec["depth"] == "full":
            for o in rec["orbits"]:
                if o["eisenstein"] or o["degree"] != 1:
                    continue
                zeros += o["nontrivial"]
                slots += h - o["trivial"]
        else:
            for row in rec["deg1"]:
                zeros += row["nontrivial"]
                slots += h - row["trivial"]
        if slots:
            out.append({"x": rec["level"], "num": zeros, "den": slots, "y": Fraction(zeros, slots)})
    return out


def value_histogram(orbit) -> dict:
    """Exact value histogram of a Galois orbit: degree 1 buckets by integer
    value; degree 2 buckets by the exact field element, reported with its
    coordinates under the two real embeddings (roots in ascending order)."""
    form = orbit.form
    d = form.degree
    if d > 2:
        raise PreconditionError("value histograms are defined for degree <= 2")
    counts: dict[tuple, int] = {}
    for v in form.values:
        counts[v.rep] = counts.get(v.rep, 0) + 1
    if d == 1:
        return {
            "degree": 1,
            "buckets": sorted(
                ({"value": int(rep[0]), "count": c} for rep, c in counts.items()),
                key=lambda b: b["value"],
            ),
        }
    from .exactalg import isolate_real_roots, refine_root

    poly = form.field.modulus
    roots = [
        refine_root(poly, iv, Fraction(1, 2**40)) for iv in isolate_real_roots(poly)
    ]
    mids = [(lo + hi) / 2 for lo, hi in roots]
    buckets = []
    for rep, c in sorted(counts.items()):
        coords = []
        for mid in mids:
            acc = Fraction(0)
            for coeff in reversed(rep):
                acc = acc * mid + coeff
            coords.append(float(acc))
        buckets.append({"value": [str(x) for x in rep], "coords": coords, "count": c})
    return {"degree": 2, "buckets": buckets}


# ---------------------------------------------------------------------------
# plot data emission
# ---------------------------------------------------------------------------

PLOT_KINDS = (
    "nontrivial-per-level",
    "cumulative-nontrivial",
    "degree1-share",
    "degree1-zero-proportion",
    "zero-free-prime",
    "zero-free-nonprime",
)


def _series_for(kind: str, records: Sequence[dict]) -> list[dict]:
    if kind == "nontrivial-per-level":
        return nontrivial_zero_series(records)[0]
    if kind == "cumulative-nontrivial":
        return nontrivial_zero_series(records)[1]
    if kind == "degree1-share":
        return degree1_share_series(records)
    if kind == "degree1-zero-proportion":
        return degree1_zero_proportion_series(records)
    if kind == "zero-free-prime":
        return zero_free_proportion_series(records, primes=True)
    if kind == "zero-free-nonprime":
        return zero_free_proportion_series(records, primes=False)
    raise PreconditionError(f"unknown plot kind {kind!r}")


def emit_plot_data(
    records: Sequence[dict],
    kind: str,
    outdir,
    render_figure: bool = True,
    compare: Optional[Sequence[tuple]] = None,
) -> dict:
    """Write <kind>.csv and <kind>.coords (a plain (x, y) list) and, unless
    disabled, render <kind>.png alongside them."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    series = _series_for(kind, records)
    csv_path = outdir / f"{kind}.csv"
    with open(csv_path, "w", newline="") as fh:
        import csv as _csv

        ref = {x: y for x, y in compare} if compare else None
        cols = ["x", "y"] + (["num", "den"] if series and "num" in series[0] else [])
        if ref is not None:
            cols.append("reference_y")
        w = _csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in series:
            out = {"x": row["x"], "y": float(row["y"])}
            if "num" in row:
                out["num"], out["den"] = row["num"], row["den"]
            if ref is not None:
                out["reference_y"] = ref.get(row["x"], "")
            w.writerow(out)
    coords_path = outdir / f"{kind}.coords"
    with open(coords_path, "w") as fh:
        for row in series:
            y = row["y"]
            fh.write(f"({row['x']}, {float(y)})\n")
    out = {"kind": kind, "points": len(series), "csv": str(csv_path), "coords": str(coords_path)}
    if render_figure:
        out["png"] = str(_render(kind, series, outdir, compare))
    return out


def _render(kind: str, series: list[dict], outdir: Path, compare=None) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [row["x"] for row in series]
    ys = [float(row["y"]) for row in series]
    if kind in ("nontrivial-per-level",):
        ax.plot(xs, ys, ".", markersize=3)
    else:
        ax.plot(xs, ys, "-", linewidth=1)
    if compare:
        cx, cy = zip(*sorted(compare))
        ax.plot(cx, cy, "--", linewidth=0.8, label="reference")
        ax.legend()
    if kind.startswith("zero-free") or kind.startswith("degree1"):
        ax.set_ylim(0, 1.05)
    ax.set_xlabel("X")
    ax.set_ylabel(kind.replace("-", " "))
    ax.set_title(kind)
    fig.tight_layout()
    path = outdir / f"{kind}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
