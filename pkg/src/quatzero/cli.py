"""Command line front end.

Subcommands: brandt, eigenforms, zeroes, dims, periods, census, cache.
Global flags --config/--format/--cache-dir/--jobs/--budget; every flag has a
QUATZERO_* environment override.  Identical invocations produce byte
identical output; numbers are exact (or carry explicit interval endpoints)
in json and csv modes.

Exit codes: 0 success, 2 precondition violated, 3 budget exceeded,
4 internal defect.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import BudgetExceeded, InternalDefect, PreconditionError
from .census import (
    PLOT_KINDS,
    cache_path,
    cached_classes,
    degree_histogram,
    emit_plot_data,
    load_or_compute,
    mass_estimate,
    run_census,
    valid_levels,
)
from .dimform import dim_bias, no_trivial_zeroes_criterion, scan_rows, write_scan_csv
from .eigen import HeckeAction, split_spectrum
from .exactalg import is_prime, prime_factors
from .periods import (
    ClassCharacter,
    IQField,
    embed,
    ideal_class_map,
    nonvanishing_verdict,
    verdict_to_json,
)
from .quatarith import brandt_matrix, build_algebra, ideal_classes, maximal_order
from .trivzero import SignPattern, admissibility, involutions, orbit_structure, report_to_json


@dataclass
class Config:
    """Runtime knobs; all defaults documented here.

    separating_prime_bound: largest prime tried when splitting the spectrum.
    budget: largest permitted mass estimate (~class number / 12-units scale);
        levels whose Eichler mass exceeds it are refused with exit code 3.
    interval_prec / interval_prec_cap: starting and maximal mantissa bits for
        the rigorous interval path of period evaluation.
    cache_dir: on-disk level cache location.
    output_format: json | csv | pretty.
    jobs: worker processes for census runs.
    """

    separating_prime_bound: int = 200
    budget: int = 400
    interval_prec: int = 128
    interval_prec_cap: int = 2048
    cache_dir: str = "var/quatzero-cache"
    output_format: str = "pretty"
    jobs: int = 1


_ENV_PREFIX = "QUATZERO_"


def load_config(ns: argparse.Namespace) -> Config:
    cfg = Config()
    if ns.config:
        doc = json.loads(Path(ns.config).read_text())
        for f in fields(Config):
            if f.name in doc:
                setattr(cfg, f.name, type(getattr(cfg, f.name))(doc[f.name]))
    for f in fields(Config):
        env = os.environ.get(_ENV_PREFIX + f.name.upper())
        if env is not None:
            setattr(cfg, f.name, type(getattr(cfg, f.name))(env))
    if ns.format:
        cfg.output_format = ns.format
    if ns.cache_dir:
        cfg.cache_dir = ns.cache_dir
    if ns.jobs:
        cfg.jobs = ns.jobs
    if ns.budget:
        cfg.budget = ns.budget
    if cfg.output_format not in ("json", "csv", "pretty"):
        raise PreconditionError(f"unknown output format {cfg.output_format!r}")
    for name in ("separating_prime_bound", "budget", "interval_prec", "interval_prec_cap", "jobs"):
        if getattr(cfg, name) <= 0:
            raise PreconditionError(f"config {name} must be positive")
    return cfg


def _check_budget(cfg: Config, N: int) -> None:
    m = mass_estimate(N)
    if m > cfg.budget:
        raise BudgetExceeded(f"level {N} mass {m} exceeds budget {cfg.budget}")


def _emit(doc, cfg: Config, pretty_lines=None, csv_rows=None) -> None:
    if cfg.output_format == "json":
        print(json.dumps(doc, sort_keys=True, indent=2))
    elif cfg.output_format == "csv":
        import csv as _csv

        rows = csv_rows if csv_rows is not None else _flatten_rows(doc)
        if rows:
            w = _csv.DictWriter(sys.stdout, fieldnames=list(rows[0].keys()))
            w.writeheader()
            for r in rows:
                w.writerow(r)
    else:
        for line in pretty_lines if pretty_lines is not None else [json.dumps(doc, sort_keys=True)]:
            print(line)


def _flatten_rows(doc) -> list[dict]:
    if isinstance(doc, list):
        return [d if isinstance(d, dict) else {"value": d} for d in doc]
    return [doc]


def _level_data(cfg: Config, N: int):
    _check_budget(cfg, N)
    record = load_or_compute(
        N, "full", cfg.cache_dir, cfg.separating_prime_bound, Fraction(cfg.budget)
    )
    return cached_classes(record), record


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_brandt(ns, cfg: Config) -> int:
    N = ns.level
    classes, record = _level_data(cfg, N)
    primes = ns.primes or sorted(set([2, 3] + prime_factors(N)))[:4]
    mats = {p: brandt_matrix(classes, p) for p in primes}
    doc = {
        "level": N,
        "h": classes.h,
        "weights": list(classes.weights),
        "matrices": {str(p): [list(r) for r in mats[p].entries] for p in primes},
    }
    lines = [f"level {N}: h = {classes.h}, weights {list(classes.weights)}"]
    for p in primes:
        lines.append(f"T_{p} =")
        for row in mats[p].entries:
            lines.append("  [" + " ".join(f"{v:3d}" for v in row) + "]")
    rows = [
        {"level": N, "p": p, "i": i, "j": j, "entry": mats[p].entries[i][j]}
        for p in primes
        for i in range(classes.h)
        for j in range(classes.h)
    ]
    _emit(doc, cfg, lines, rows)
    return 0


def _orbit_doc(record: dict) -> list[dict]:
    return record["orbits"]


def cmd_eigenforms(ns, cfg: Config) -> int:
    N = ns.level
    classes, record = _level_data(cfg, N)
    hecke = HeckeAction(classes)
    split = split_spectrum(classes, hecke, prime_bound=cfg.separating_prime_bound)
    doc = {
        "level": N,
        "operator": split.operator,
        "orbits": [
            {
                "factor": str(o.defining_factor),
                "degree": o.degree,
                "eisenstein": o.is_eisenstein,
                "pattern": o.form.sign_pattern.bits(),
                "values": [str(v) for v in o.form.values],
                "eigenvalues": {str(q): str(a) for q, a in sorted(o.form.eigenvalues.items())},
            }
            for o in split.orbits
        ],
    }
    lines = [f"level {N}: {len(split.orbits)} Galois orbits (split by {split.operator})"]
    for o in split.orbits:
        kind = "eisenstein" if o.is_eisenstein else "cusp"
        lines.append(
            f"- defining polynomial {o.defining_factor} ({kind}, degree {o.degree},"
            f" signs {o.form.sign_pattern.bits()})"
        )
        lines.append("  values: " + ", ".join(str(v) for v in o.form.values))
    _emit(doc, cfg, lines, doc["orbits"])
    return 0


def cmd_zeroes(ns, cfg: Config) -> int:
    N = ns.level
    classes, record = _level_data(cfg, N)
    orbits = record["orbits"]
    all_trivial = all(o["nontrivial"] == 0 for o in orbits)
    doc = {
        "level": N,
        "h": record["h"],
        "dims": record["dims"],
        "orbits": orbits,
        "all_zeroes_trivial": all_trivial,
        "total_trivial": record["total_trivial"],
        "total_nontrivial": record["total_nontrivial"],
    }
    lines = [f"level {N}: h = {record['h']}"]
    for o in orbits:
        tag = "eisenstein" if o["eisenstein"] else f"degree {o['degree']}"
        lines.append(
            f"- orbit {IntPolyStr(o['factor'])} ({tag}, signs {o['pattern']}):"
            f" {o['zero_count']} zeroes = {o['trivial']} trivial + {o['nontrivial']} nontrivial"
            + (" [zero-free]" if o["zero_free"] else "")
        )
    lines.append(
        "all zeroes are trivial zeroes" if all_trivial else "nontrivial zeroes present"
    )
    _emit(doc, cfg, lines, orbits)
    return 0


def IntPolyStr(coeffs) -> str:
    from .exactalg import IntPoly

    return str(IntPoly.of(coeffs))


def _parse_range(spec: str) -> list[int]:
    odd = prime = False
    omega = None
    upper = None
    lower = 1
    for tok in spec.split(","):
        tok = tok.strip().lower()
        if tok == "odd":
            odd = True
        elif tok in ("prime", "primes"):
            prime = True
        elif tok.startswith("omega="):
            omega = int(tok.split("=", 1)[1])
        elif tok.startswith("<"):
            upper = int(tok[1:])
        elif tok.startswith(">="):
            lower = int(tok[2:])
        else:
            raise PreconditionError(f"cannot parse range token {tok!r}")
    if upper is None:
        raise PreconditionError("range needs an upper bound like '<10000'")
    return valid_levels(upper, lower, odd_only=odd, omega=omega, primes_only=prime)


def cmd_dims(ns, cfg: Config) -> int:
    if ns.range:
        levels = _parse_range(ns.range)
        rows = list(scan_rows(levels))
        good_levels = set()
        good_patterns = 0
        for row in rows:
            if set(row["pattern"]) != {"+"} and row["no_trivial_zeroes"]:
                good_levels.add(row["level"])
                good_patterns += 1
        doc = {
            "levels": len(levels),
            "levels_with_extra_trivial_free_pattern": len(good_levels),
            "trivial_free_patterns": good_patterns,
            "rows": rows if ns.full else None,
        }
        lines = [
            f"{len(levels)} levels scanned",
            f"{len(good_levels)} have at least one sign pattern besides all-plus with no trivial zeroes",
            f"{good_patterns} such sign patterns in total",
        ]
        if ns.out:
            write_scan_csv(levels, ns.out)
            lines.append(f"wrote scan rows to {ns.out}")
        _emit(doc, cfg, lines, rows)
        return 0
    N = ns.level
    if N is None:
        raise PreconditionError("dims needs a level or --range")
    if ns.pattern:
        patterns = [_parse_pattern(N, ns.pattern)]
    else:
        patterns = list(SignPattern.all_patterns(N))
    rows = []
    for pat in patterns:
        bias = dim_bias(N, pat)
        verdict = (
            True if pat.bits() == "+" * len(pat.signs) else no_trivial_zeroes_criterion(N, pat)
        )
        rows.append({"level": N, "pattern": pat.bits(), "dim_bias": bias, "no_trivial_zeroes": verdict})
    doc = {"level": N, "rows": rows}
    lines = [f"level {N} dimension bias by sign pattern:"] + [
        f"  {r['pattern']}: bias {r['dim_bias']}"
        + ("  (no trivial zeroes)" if r["no_trivial_zeroes"] else "")
        for r in rows
    ]
    _emit(doc, cfg, lines, rows)
    return 0


def _parse_pattern(N: int, text: str) -> SignPattern:
    ps = prime_factors(N)
    if len(text) != len(ps) or any(c not in "+-" for c in text):
        raise PreconditionError(f"pattern {text!r} does not fit level {N}")
    return SignPattern.of(N, {p: (1 if c == "+" else -1) for p, c in zip(ps, text)})


def cmd_periods(ns, cfg: Config) -> int:
    N, D = ns.level, ns.D
    classes, record = _level_data(cfg, N)
    K = IQField(D)
    part = orbit_structure(classes)
    emb = embed(K, classes, part)
    table = ideal_class_map(emb, K, classes)
    hecke = HeckeAction(classes)
    split = split_spectrum(classes, hecke, prime_bound=cfg.separating_prime_bound)
    if ns.chi:
        exps = tuple(int(x) for x in ns.chi.split(","))
        if len(exps) != len(K.orders):
            raise PreconditionError(
                f"character needs {len(K.orders)} exponents for orders {K.orders}"
            )
        L = 1
        for d in K.orders:
            L = L * d // math.gcd(L, d)
        chis = [ClassCharacter(K.orders, exps, L if K.orders else 1)]
    elif ns.all_chi:
        chis = K.characters()
    else:
        chis = [K.trivial_character()]
    verdicts = []
    for orbit in split.orbits:
        if orbit.is_eisenstein:
            continue
        for chi in chis:
            v = nonvanishing_verdict(
                orbit.form, K, chi, table, cfg.interval_prec, cfg.interval_prec_cap
            )
            verdicts.append((orbit, chi, v))
    doc = {
        "level": N,
        "D": D,
        "class_group_orders": list(K.orders),
        "embedding": {
            "orbit": emb.target_orbit,
            "class": emb.target_class,
            "certified_conjugator": emb.conjugator is not None,
        },
        "class_map_images": list(table.images),
        "verdicts": [
            {"factor": str(o.defining_factor), **verdict_to_json(v)} for o, c, v in verdicts
        ],
    }
    lines = [
        f"level {N}, D = {D}: class group orders {list(K.orders)}, "
        f"map images {list(table.images)}"
    ]
    for o, c, v in verdicts:
        period_txt = ""
        if v.period is not None and v.period.exact is not None:
            period_txt = f", period = {v.period.exact}"
        elif v.period is not None and v.period.interval is not None:
            period_txt = f", period in {v.period.interval}"
        lines.append(
            f"- orbit {o.defining_factor} (signs {o.form.sign_pattern.bits()}),"
            f" chi{c.exps}: {v.verdict}{period_txt}"
        )
    _emit(doc, cfg, lines, doc["verdicts"])
    return 0


def cmd_census(ns, cfg: Config) -> int:
    levels = _parse_range(ns.range)
    for N in levels:
        _check_budget(cfg, N)
    records, failures = run_census(
        levels,
        depth=ns.depth,
        cache_dir=cfg.cache_dir,
        sep_bound=cfg.separating_prime_bound,
        max_mass=Fraction(cfg.budget),
        jobs=cfg.jobs,
    )
    hist = degree_histogram(records)
    doc = {
        "levels_requested": len(levels),
        "levels_done": len(records),
        "failures": failures,
        "degree_histogram": hist,
    }
    lines = [
        f"census over {len(levels)} levels: {len(records)} done, {len(failures)} failed",
        "degree histogram (cusp orbits): "
        + ", ".join(f"{b}:{t}" for b, t in zip(hist["buckets"], hist["total_orbits"])),
        "with nontrivial zeroes:        "
        + ", ".join(
            f"{b}:{t}" for b, t in zip(hist["buckets"], hist["orbits_with_nontrivial"])
        ),
        "nontrivial zero counts:        "
        + ", ".join(f"{b}:{t}" for b, t in zip(hist["buckets"], hist["nontrivial_zeroes"])),
    ]
    if failures:
        for f in failures:
            lines.append(f"FAILED level {f['level']}: {f['error']}")
    if ns.out:
        outdir = Path(ns.out)
        outdir.mkdir(parents=True, exist_ok=True)
        kinds = ns.kinds.split(",") if ns.kinds else list(PLOT_KINDS)
        emitted = []
        for kind in kinds:
            if ns.depth == "deg1" and kind not in (
                "nontrivial-per-level",
                "cumulative-nontrivial",
                "degree1-zero-proportion",
            ):
                continue
            emitted.append(
                emit_plot_data(records, kind, outdir, render_figure=not ns.no_figures)
            )
        (outdir / "table1.json").write_text(json.dumps(hist, sort_keys=True, indent=2))
        with open(outdir / "failures.json", "w") as fh:
            json.dump(failures, fh, sort_keys=True, indent=2)
        doc["outputs"] = emitted
        lines.append(f"plot data written to {outdir}")
    _emit(doc, cfg, lines)
    return 0


def cmd_cache(ns, cfg: Config) -> int:
    cdir = Path(cfg.cache_dir)
    if ns.action == "info":
        files = sorted(cdir.glob("level_*.json")) if cdir.exists() else []
        doc = {"cache_dir": str(cdir), "levels": len(files)}
        _emit(doc, cfg, [f"cache {cdir}: {len(files)} level records"])
    elif ns.action == "clear":
        removed = 0
        if cdir.exists():
            for f in cdir.glob("level_*.json"):
                f.unlink()
                removed += 1
        _emit({"removed": removed}, cfg, [f"removed {removed} cached level records"])
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="quatzero",
        description="Exact quaternionic modular forms: Brandt matrices, zeroes, periods.",
    )
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--format", choices=["json", "csv", "pretty"], help="output format")
    ap.add_argument("--cache-dir", help="level cache directory")
    ap.add_argument("--jobs", type=int, help="parallel workers (census)")
    ap.add_argument("--budget", type=int, help="largest allowed level mass")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("brandt", help="Brandt matrices at a level")
    p.add_argument("level", type=int)
    p.add_argument("primes", type=int, nargs="*", help="Hecke indices (default: small primes)")
    p.set_defaults(fn=cmd_brandt)

    p = sub.add_parser("eigenforms", help="Galois orbits of eigenforms")
    p.add_argument("level", type=int)
    p.set_defaults(fn=cmd_eigenforms)

    p = sub.add_parser("zeroes", help="zero classification per orbit")
    p.add_argument("level", type=int)
    p.set_defaults(fn=cmd_zeroes)

    p = sub.add_parser("dims", help="dimension biases by sign pattern")
    p.add_argument("level", type=int, nargs="?")
    p.add_argument("--pattern", help="specific sign pattern like +-+")
    p.add_argument("--range", help="level range like 'odd,omega=3,<10000'")
    p.add_argument("--full", action="store_true", help="include all rows in json output")
    p.add_argument("--out", help="write scan rows to a CSV file")
    p.set_defaults(fn=cmd_dims)

    p = sub.add_parser("periods", help="toric periods and L-value verdicts")
    p.add_argument("level", type=int)
    p.add_argument("D", type=int, help="positive D with -D a fundamental discriminant")
    p.add_argument("--chi", help="character exponents, comma separated")
    p.add_argument("--all-chi", action="store_true")
    p.set_defaults(fn=cmd_periods)

    p = sub.add_parser("census", help="batch census over a level range")
    p.add_argument("--range", required=True, help="like 'prime,<4000' or 'odd,omega=3,<1000'")
    p.add_argument("--depth", choices=["full", "deg1"], default="full")
    p.add_argument("--out", help="directory for plot data and figures")
    p.add_argument("--kinds", help="comma separated plot kinds")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=cmd_census)

    p = sub.add_parser("cache", help="inspect or clear the level cache")
    p.add_argument("action", choices=["info", "clear"])
    p.set_defaults(fn=cmd_cache)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = load_config(ns)
        return ns.fn(ns, cfg)
    except PreconditionError as exc:
        print(f"precondition: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"budget: {exc}", file=sys.stderr)
        return 3
    except InternalDefect as exc:
        print(f"internal defect: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
