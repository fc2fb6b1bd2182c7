import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fmqubo.evaluation import (
    COMPLEXITY_FAMILIES,
    OVERLAP_COLUMNS,
    benchmark,
    extrapolation_table,
    fit_complexity,
    mean_overlap,
    median_times,
    overlap_rate,
    run_overlap_experiment,
    sample_users,
    synthetic_instance,
    write_bench_csv,
    write_overlap_csv,
)
from fmqubo.solvers import AnnealConfig


def test_overlap_examples():
    top = list(range(10))
    assert overlap_rate(top, top, 10) == 100.0
    assert overlap_rate(top, range(10, 20), 10) == 0.0
    assert overlap_rate(top, [0, 1, 2, 3, 4, 50, 60], 10) == 50.0
    with pytest.raises(ValueError):
        overlap_rate(top, top, 9)


@given(st.sets(st.integers(0, 40), min_size=1, max_size=20), st.sets(st.integers(0, 40), max_size=30))
def test_overlap_bounded(direct, sampled):
    r = overlap_rate(direct, sampled, len(direct))
    assert 0.0 <= r <= 100.0
    assert r == 100.0 * len(direct & sampled) / len(direct)


@pytest.fixture(scope="module")
def small_bench():
    return synthetic_instance(300, n_users=16, k=8, seed=1)


def test_exhaustive_backend_overlap_is_total(small_bench):
    inst = small_bench
    users = sample_users(inst.user_codebook, 4, seed=0)
    reports = run_overlap_experiment(inst.model, inst.user_codebook, inst.item_codebook, users,
                                     ks=(10, 30, 300), backend="exhaustive")
    assert len(reports) == 12
    assert all(r.overlap_rate == 100.0 for r in reports)


def test_single_shot_overlap_values(small_bench):
    inst = small_bench
    users = sample_users(inst.user_codebook, 6, seed=0)
    reports = run_overlap_experiment(inst.model, inst.user_codebook, inst.item_codebook, users,
                                     ks=(10,), config=AnnealConfig(shots=1, sweeps=20))
    assert {r.overlap_rate for r in reports} <= {0.0, 10.0}


def test_overlap_experiment_deterministic_and_csv(small_bench, tmp_path):
    inst = small_bench
    users = sample_users(inst.user_codebook, 3, seed=5)
    cfg = AnnealConfig(shots=20, sweeps=30)
    a = run_overlap_experiment(inst.model, inst.user_codebook, inst.item_codebook, users, (10, 30), cfg)
    b = run_overlap_experiment(inst.model, inst.user_codebook, inst.item_codebook, users, (10, 30), cfg)
    assert a == b
    write_overlap_csv(a, tmp_path / "o.csv")
    rows = list(csv.reader(open(tmp_path / "o.csv")))
    assert tuple(rows[0]) == OVERLAP_COLUMNS
    assert len(rows) == 1 + 6 + 2
    assert rows[-1][0] == "mean"
    means = mean_overlap(a)
    assert set(means) == {("sa", 20, 10), ("sa", 20, 30)}


def test_unknown_user(small_bench):
    inst = small_bench
    with pytest.raises(KeyError):
        run_overlap_experiment(inst.model, inst.user_codebook, inst.item_codebook, [999999], (10,))


def test_benchmark_records(tmp_path):
    insts = [synthetic_instance(n, n_users=8, k=8, seed=n) for n in (64, 256)]
    records = benchmark(insts, backends=("direct", "sa"), n_users=2, reps=5,
                        config=AnnealConfig(shots=5, sweeps=5))
    assert len(records) == 2 * 2 * 2
    assert all(r.seconds > 0 and r.reps == 5 for r in records)
    assert {(r.n_items, r.n_bits) for r in records} == {(64, 6), (256, 8)}
    assert set(median_times(records)) == {("direct", 64), ("direct", 256), ("sa", 64), ("sa", 256)}
    write_bench_csv(records, tmp_path / "b.csv")
    header = next(csv.reader(open(tmp_path / "b.csv")))
    assert header == ["n_data", "n_items", "n_bits", "backend", "seconds", "user_id", "reps"]


def test_benchmark_input_checks():
    inst = synthetic_instance(64, n_users=4, k=4)
    with pytest.raises(ValueError, match="reps"):
        benchmark([inst, synthetic_instance(128, n_users=4, k=4)], reps=0)
    with pytest.raises(ValueError, match="two distinct"):
        benchmark([inst, inst])


@pytest.mark.parametrize("family, scale, shift", [("direct", 2.5e-9, 0.01), ("qa", 3e-3, 0.02)])
def test_fit_recovers_family_coefficients(family, scale, shift):
    n = np.array([2090, 8227, 11719, 13950, 16715, 21011])
    t = scale * COMPLEXITY_FAMILIES[family](n) + shift
    fit = fit_complexity(n, t, family)
    assert fit.scale == pytest.approx(scale, rel=1e-6)
    assert fit.shift == pytest.approx(shift, rel=1e-6)
    assert max(abs(r) for r in fit.residuals) < 1e-9


def test_fit_errors():
    with pytest.raises(ValueError, match="3 points"):
        fit_complexity([10, 20], [1.0, 2.0], "direct")
    with pytest.raises(ValueError, match="degenerate"):
        fit_complexity([10, 10, 10], [1.0, 2.0, 3.0], "qa")
    with pytest.raises(ValueError, match="family"):
        fit_complexity([10, 20, 30], [1.0, 2.0, 3.0], "cubic")


def test_extrapolation_table_ceilings():
    n = np.array([1000, 4000, 16000])
    fits = [fit_complexity(n, 1e-9 * COMPLEXITY_FAMILIES["direct"](n), "direct"),
            fit_complexity(n, 1e-3 * COMPLEXITY_FAMILIES["qa"](n), "qa")]
    rows = extrapolation_table(fits, range(1, 50))
    by_e = {row["n_items"]: row for row in rows}
    assert by_e["1e43"]["qubo_size"] == 143 and by_e["1e43"]["fits_advantage"]
    assert by_e["1e44"]["qubo_size"] == 147 and not by_e["1e44"]["fits_advantage"]
    assert by_e["1e19"]["fits_dw2000q"] and not by_e["1e20"]["fits_dw2000q"]
    assert by_e["1e40"]["qa_seconds"] < by_e["1e40"]["direct_seconds"]
